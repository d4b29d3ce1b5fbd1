//! A scaled-down bias/MSE study (the shipped configs run the full grids
//! at 5000 replications; this smoke version finishes in seconds).
//!
//! ```bash
//! cargo run --release --example bias_mse_study
//! ```

use tobit_ls::lsdist::GeneratorFamily;
use tobit_ls::mcsim::{format_bias_mse_table, run_bias_mse, BiasMseConfig};

fn main() {
    let config = BiasMseConfig {
        family: GeneratorFamily::normal(),
        n_grid: vec![50, 100],
        phi_grid: vec![1.0, 3.0],
        rho_grid: vec![0.20, 0.50],
        beta_true: vec![0.2, 0.5],
        replications: 250,
        seed: 2024,
        redraw_covariates: true,
        threads: None,
    };
    let report = run_bias_mse(&config).expect("study runs");
    println!(
        "bias (MSE) per cell, {} replications:\n",
        config.replications
    );
    println!("{}", format_bias_mse_table(&report));
    println!(
        "failures: {}, redraws: {}",
        report.total_failures, report.total_redraws
    );
}
