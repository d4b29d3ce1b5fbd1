//! Fit a tobit model with log-normal errors to simulated data and print
//! the estimates with their standard errors.
//!
//! ```bash
//! cargo run --release --example fit_simulated
//! ```

use tobit_ls::infer::{fit, FitOptions};
use tobit_ls::lsdist::GeneratorFamily;
use tobit_ls::mcsim::simulate_dataset;
use tobit_ls::rng;

fn main() {
    let family = GeneratorFamily::normal();
    let beta_true = [0.2, 0.5];
    let (phi_true, n, rho) = (1.0, 400, 0.2);

    let mut stream = rng::seeded(42);
    let data = simulate_dataset(&family, n, &beta_true, phi_true, rho, &mut stream)
        .expect("simulation is well formed");
    println!(
        "simulated n = {} with {} censored cases (gamma = {:.4})",
        data.n(),
        data.n_censored(),
        data.gamma()
    );

    let result = fit(&data, &family, &[], &FitOptions::default()).expect("fit runs");
    assert!(result.optim.converged, "{}", result.optim.message);

    println!(
        "converged in {} iterations (gradient norm {:.2e})",
        result.optim.iterations, result.optim.final_gradient_norm
    );
    println!(
        "\n{:<12} {:>10} {:>10} {:>10}",
        "parameter", "estimate", "se", "truth"
    );
    let truth = [beta_true[0], beta_true[1], phi_true];
    for ((name, est), (se, t)) in result
        .param_names
        .iter()
        .zip(&result.estimates)
        .zip(result.se.iter().zip(&truth))
    {
        println!("{name:<12} {est:>10.4} {se:>10.4} {t:>10.4}");
    }
    println!(
        "\nloglik = {:.4}   AIC = {:.2}   BIC = {:.2}",
        result.loglik, result.aic, result.bic
    );
}
