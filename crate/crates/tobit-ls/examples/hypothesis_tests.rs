//! Likelihood-ratio and gradient tests on a fitted tobit model.
//!
//! The simulated data carry a real effect on x1 and none on x2; testing
//! each coefficient against zero shows one rejection and one retention.
//!
//! ```bash
//! cargo run --release --example hypothesis_tests
//! ```

use tobit_ls::infer::{run_tests, FitOptions, Restriction, TestKind};
use tobit_ls::lsdist::GeneratorFamily;
use tobit_ls::mcsim::simulate_dataset;
use tobit_ls::rng;
use tobit_ls::tobitmodel::ParamId;

fn main() {
    let family = GeneratorFamily::normal();
    // beta = (intercept, x1, x2) with x2 inert
    let beta = [0.5, 1.2, 0.0];
    let mut stream = rng::seeded(11);
    let data = simulate_dataset(&family, 300, &beta, 1.0, 0.2, &mut stream)
        .expect("simulation is well formed");

    for (name, coord) in [("x1", 1usize), ("x2", 2usize)] {
        let restriction = Restriction::single(ParamId::Beta(coord), 0.0);
        let tests = run_tests(
            &data,
            &family,
            &[],
            &restriction,
            &[TestKind::Lr, TestKind::Gr],
            &FitOptions::default(),
        )
        .expect("tests run");
        println!("H0: beta[{name}] = 0  (truth: {})", beta[coord]);
        for t in &tests {
            let kind = match t.kind {
                TestKind::Lr => "LR",
                TestKind::Gr => "GR",
            };
            let verdict = if t.p_value < 0.05 { "reject" } else { "retain" };
            println!(
                "  {kind}: statistic = {:>8.4}, df = {}, p = {:.4}  -> {verdict} at 5%",
                t.statistic, t.df, t.p_value
            );
        }
        println!();
    }
}
