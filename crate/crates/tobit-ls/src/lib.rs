//! Tobit regression with log-symmetric error laws.
//!
//! The crate fits left-censored regression models whose log-scale errors
//! follow a symmetric law defined by a density generator (normal,
//! Student-t, power-exponential, Birnbaum-Saunders, Birnbaum-Saunders-t),
//! computes standard errors from the observed information, runs
//! likelihood-ratio and gradient tests with chi-square calibration,
//! produces generalized Cox-Snell residuals with simulated QQ envelopes,
//! and drives deterministic Monte Carlo bias/MSE and size/power studies.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --release --example fit_simulated
//! cargo run --release --example family_comparison
//! cargo run --release --example hypothesis_tests
//! cargo run --release --example residual_diagnostics
//! cargo run --release --example bias_mse_study
//! cargo run --release --example power_study
//! cargo run --release --example sampling
//! ```
//!
//! A thin `tobit-ls` binary exposes the same capabilities over CSV files;
//! see the README for the subcommand reference.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod infer;
pub mod linalg;
pub mod lsdist;
pub mod mcsim;
pub mod optimize;
pub mod quad;
pub mod rng;
pub mod special;
pub mod tobitmodel;

pub use error::{Error, Result};
pub use infer::{fit, FitOptions, FitResult, TestKind, TestResult};
pub use lsdist::{GeneratorFamily, GeneratorKind, LogSymmetricParams};
pub use tobitmodel::{ParamId, Theta, TobitDataset};
