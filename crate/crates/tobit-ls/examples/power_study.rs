//! A scaled-down size/power study for the LR and gradient tests of
//! H0: beta4 = 0 (smoke mode; the shipped configs run 5000 replications
//! over the full grid).
//!
//! ```bash
//! cargo run --release --example power_study
//! ```

use tobit_ls::lsdist::GeneratorFamily;
use tobit_ls::mcsim::{format_power_table, run_power, PowerConfig};

fn main() {
    let config = PowerConfig {
        family: GeneratorFamily::normal(),
        n_grid: vec![50],
        phi: 3.0,
        rho_grid: vec![0.20],
        beta_true: vec![1.0, 1.5, 0.5, 0.8],
        beta4_grid: vec![-1.0, 0.0, 1.0],
        nominal_levels: vec![0.01, 0.05, 0.10],
        replications: 50,
        seed: 99,
        redraw_covariates: true,
        threads: None,
    };
    let start = std::time::Instant::now();
    let report = run_power(&config).expect("study runs");
    println!(
        "rejection rates (%), {} replications, {:.1}s:\n",
        config.replications,
        start.elapsed().as_secs_f64()
    );
    println!("{}", format_power_table(&report));
}
