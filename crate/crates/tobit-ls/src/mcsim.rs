//! Monte Carlo harnesses: the bias/MSE study for the ML estimators and the
//! size/power study for the LR and gradient tests.
//!
//! Every replication draws from an independent substream keyed by
//! `(seed, cell, replication)`, so reports are identical for any worker
//! count or scheduling order. Covariates are redrawn each replication by
//! default; a fixed-design mode keeps the first draw.
//!
//! The censoring mechanism sets the threshold at the empirical
//! rho-quantile of the latent responses, so each cell censors exactly
//! `round(rho * n)` cases; the fitted model receives that threshold as
//! known.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infer::{fit, fit_restricted, FitOptions, Restriction};
use crate::linalg::Mat;
use crate::lsdist::GeneratorFamily;
use crate::rng::{self, SimRng};
use crate::tobitmodel::{ParamId, TobitDataset};

/// Configuration of the bias/MSE study.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiasMseConfig {
    #[serde(flatten)]
    pub family: GeneratorFamily,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_phi_grid")]
    pub phi_grid: Vec<f64>,
    #[serde(default = "default_rho_grid")]
    pub rho_grid: Vec<f64>,
    #[serde(default = "default_beta_bias")]
    pub beta_true: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Redraw covariates each replication (the conservative reading of the
    /// study design); `false` keeps one design per cell.
    #[serde(default = "default_true")]
    pub redraw_covariates: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_n_grid() -> Vec<usize> {
    vec![50, 100, 300, 500]
}
fn default_phi_grid() -> Vec<f64> {
    vec![1.0, 3.0, 5.0]
}
fn default_rho_grid() -> Vec<f64> {
    vec![0.20, 0.50]
}
fn default_beta_bias() -> Vec<f64> {
    vec![0.2, 0.5]
}
fn default_replications() -> usize {
    5000
}
fn default_true() -> bool {
    true
}

/// Configuration of the size/power study for H0: beta4 = 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerConfig {
    #[serde(flatten)]
    pub family: GeneratorFamily,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_phi_power")]
    pub phi: f64,
    #[serde(default = "default_rho_grid")]
    pub rho_grid: Vec<f64>,
    /// Coefficients beta0..beta3; beta4 comes from `beta4_grid`.
    #[serde(default = "default_beta_power")]
    pub beta_true: Vec<f64>,
    #[serde(default = "default_beta4_grid")]
    pub beta4_grid: Vec<f64>,
    #[serde(default = "default_levels")]
    pub nominal_levels: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub redraw_covariates: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_phi_power() -> f64 {
    3.0
}
fn default_beta_power() -> Vec<f64> {
    vec![1.0, 1.5, 0.5, 0.8]
}
fn default_beta4_grid() -> Vec<f64> {
    vec![-1.0, -0.75, -0.25, 0.0, 0.25, 0.75, 1.0]
}
fn default_levels() -> Vec<f64> {
    vec![0.01, 0.05, 0.10]
}

/// One bias/MSE cell-parameter record.
#[derive(Clone, Debug, Serialize)]
pub struct BiasMseRow {
    pub n: usize,
    pub phi: f64,
    pub rho: f64,
    pub parameter: String,
    pub bias: f64,
    pub mse: f64,
    /// Monte Carlo standard error of the bias estimate.
    pub mc_standard_error: f64,
    pub failures: usize,
}

/// One power cell-level record.
#[derive(Clone, Debug, Serialize)]
pub struct PowerRow {
    pub n: usize,
    pub phi: f64,
    pub rho: f64,
    pub beta4: f64,
    pub level: f64,
    pub rejection_rate_lr: f64,
    pub rejection_rate_gr: f64,
    /// Monte Carlo standard error of a rejection rate at this level.
    pub mc_standard_error: f64,
    pub failures: usize,
}

/// Study report: rows plus the fully resolved configuration.
#[derive(Clone, Debug, Serialize)]
pub struct McReport<C: Serialize, R: Serialize> {
    pub config: C,
    pub rows: Vec<R>,
    pub total_failures: usize,
    pub total_redraws: usize,
}

pub type BiasMseReport = McReport<BiasMseConfig, BiasMseRow>;
pub type PowerReport = McReport<PowerConfig, PowerRow>;

/// Intercept plus p-1 uniform (0, 1) covariate columns.
fn draw_design(n: usize, p: usize, stream: &mut SimRng) -> Mat {
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::with_capacity(p);
        row.push(1.0);
        for _ in 1..p {
            row.push(rng::uniform_open(stream));
        }
        rows.push(row);
    }
    Mat::from_rows(rows)
}

/// Simulate responses on an existing design: errors `phi * z`, threshold at
/// the empirical rho-quantile of the latent responses so that exactly
/// `round(rho * n)` cases are censored.
fn simulate_on_design(
    family: &GeneratorFamily,
    x: &Mat,
    beta: &[f64],
    phi: f64,
    rho: f64,
    stream: &mut SimRng,
) -> Result<TobitDataset> {
    let n = x.nrows();
    let mut ystar = Vec::with_capacity(n);
    for i in 0..n {
        let mu: f64 = x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
        ystar.push(mu + phi * family.sym_draw(stream));
    }
    let m = ((n as f64) * rho).round() as usize;
    let mut sorted = ystar.clone();
    sorted.sort_by(f64::total_cmp);
    let gamma = if m == 0 {
        sorted[0] - 1.0
    } else {
        sorted[m - 1]
    };
    let censored: Vec<bool> = ystar.iter().map(|&v| v <= gamma).collect();
    let mut names = vec!["intercept".to_string()];
    for j in 1..beta.len() {
        names.push(format!("x{j}"));
    }
    TobitDataset::new(ystar, censored, x.clone(), names, gamma)
}

/// Draw a tobit dataset: uniform covariates, errors `phi * z`, and the
/// threshold at the empirical rho-quantile of the latent responses so that
/// exactly `round(rho * n)` cases are censored.
pub fn simulate_dataset(
    family: &GeneratorFamily,
    n: usize,
    beta: &[f64],
    phi: f64,
    rho: f64,
    stream: &mut SimRng,
) -> Result<TobitDataset> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "censoring proportion must be in [0, 1), got {rho}"
        )));
    }
    if n == 0 || beta.is_empty() {
        return Err(Error::InvalidParameter("empty design".into()));
    }
    let x = draw_design(n, beta.len(), stream);
    simulate_on_design(family, &x, beta, phi, rho, stream)
}

/// Attempts per replication before it is recorded as a failure.
const MAX_ATTEMPTS: usize = 3;

fn run_pool<T: Send>(threads: Option<usize>, job: impl Fn() -> T + Send) -> Result<T> {
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Optimization(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Run the bias/MSE study over the (n, phi, rho) grid.
pub fn run_bias_mse(config: &BiasMseConfig) -> Result<BiasMseReport> {
    if config.replications == 0 {
        return Err(Error::InvalidParameter("replications must be >= 1".into()));
    }
    let reps = config.replications;
    let budget = (reps / 100).max(1);
    let p = config.beta_true.len();

    let mut rows = Vec::new();
    let mut total_failures = 0usize;
    let mut total_redraws = 0usize;

    for &n in &config.n_grid {
        for &phi in &config.phi_grid {
            for &rho in &config.rho_grid {
                let cell_ids = [n as u64, phi.to_bits(), rho.to_bits()];
                // fixed-design mode draws one design per cell
                let design = if config.redraw_covariates {
                    None
                } else {
                    let mut s = rng::substream(
                        config.seed,
                        &[cell_ids[0], cell_ids[1], cell_ids[2], u64::MAX],
                    );
                    Some(draw_design(n, p, &mut s))
                };
                let results: Vec<(Option<Vec<f64>>, usize)> = run_pool(config.threads, || {
                    (0..reps)
                        .into_par_iter()
                        .map(|rep| {
                            let mut stream = rng::substream(
                                config.seed,
                                &[cell_ids[0], cell_ids[1], cell_ids[2], rep as u64],
                            );
                            replicate_bias(config, n, phi, rho, design.as_ref(), &mut stream)
                        })
                        .collect()
                })?;

                let redraws: usize = results.iter().map(|(_, r)| r).sum();
                let failures = results.iter().filter(|(e, _)| e.is_none()).count();
                total_redraws += redraws;
                total_failures += failures;
                if failures > budget {
                    return Err(Error::FailureBudget {
                        failures,
                        replications: reps,
                        budget,
                    });
                }

                // aggregate per parameter: phi first, then beta0, beta1, ...
                let ok: Vec<&Vec<f64>> = results.iter().filter_map(|(e, _)| e.as_ref()).collect();
                let r = ok.len() as f64;
                for k in 0..=p {
                    let name = if k == 0 {
                        "phi".to_string()
                    } else {
                        format!("beta{}", k - 1)
                    };
                    let errs: Vec<f64> = ok.iter().map(|e| e[k]).collect();
                    let bias = errs.iter().sum::<f64>() / r;
                    let mse = errs.iter().map(|e| e * e).sum::<f64>() / r;
                    let var = (mse - bias * bias).max(0.0);
                    rows.push(BiasMseRow {
                        n,
                        phi,
                        rho,
                        parameter: name,
                        bias,
                        mse,
                        mc_standard_error: (var / r).sqrt(),
                        failures,
                    });
                }
            }
        }
    }

    Ok(McReport {
        config: config.clone(),
        rows,
        total_failures,
        total_redraws,
    })
}

/// One bias/MSE replication: simulate, fit, return the estimation errors
/// (phi first, then the betas). The count of redraws is returned alongside.
fn replicate_bias(
    config: &BiasMseConfig,
    n: usize,
    phi: f64,
    rho: f64,
    design: Option<&Mat>,
    stream: &mut SimRng,
) -> (Option<Vec<f64>>, usize) {
    let free_extra = vec![false; config.family.extra().len()];
    for attempt in 0..MAX_ATTEMPTS {
        let data = match design {
            // fixed-design mode redraws errors only
            Some(x) => simulate_on_design(&config.family, x, &config.beta_true, phi, rho, stream),
            None => simulate_dataset(&config.family, n, &config.beta_true, phi, rho, stream),
        };
        let data = match data {
            Ok(d) => d,
            Err(_) => continue,
        };
        let fitted = fit(&data, &config.family, &free_extra, &FitOptions::default());
        if let Ok(f) = fitted {
            if f.optim.converged {
                let mut errs = vec![f.theta_hat.phi - phi];
                for (j, b) in config.beta_true.iter().enumerate() {
                    errs.push(f.theta_hat.beta[j] - b);
                }
                return (Some(errs), attempt);
            }
        }
    }
    (None, MAX_ATTEMPTS - 1)
}

/// Run the size/power study over the (n, rho, beta4) grid.
pub fn run_power(config: &PowerConfig) -> Result<PowerReport> {
    if config.replications == 0 {
        return Err(Error::InvalidParameter("replications must be >= 1".into()));
    }
    if config
        .nominal_levels
        .iter()
        .any(|d| !(0.0 < *d && *d < 1.0))
    {
        return Err(Error::InvalidParameter(
            "nominal levels must be in (0, 1)".into(),
        ));
    }
    let reps = config.replications;
    let budget = (reps / 100).max(1);

    let mut rows = Vec::new();
    let mut total_failures = 0usize;
    let mut total_redraws = 0usize;

    for &n in &config.n_grid {
        for &rho in &config.rho_grid {
            for &beta4 in &config.beta4_grid {
                let cell_ids = [n as u64, rho.to_bits(), beta4.to_bits()];
                let design = if config.redraw_covariates {
                    None
                } else {
                    let mut s = rng::substream(
                        config.seed,
                        &[cell_ids[0], cell_ids[1], cell_ids[2], u64::MAX],
                    );
                    Some(draw_design(n, config.beta_true.len() + 1, &mut s))
                };
                let results: Vec<(Option<(f64, f64)>, usize)> = run_pool(config.threads, || {
                    (0..reps)
                        .into_par_iter()
                        .map(|rep| {
                            let mut stream = rng::substream(
                                config.seed,
                                &[cell_ids[0], cell_ids[1], cell_ids[2], rep as u64],
                            );
                            replicate_power(config, n, rho, beta4, design.as_ref(), &mut stream)
                        })
                        .collect()
                })?;

                let redraws: usize = results.iter().map(|(_, r)| r).sum();
                let failures = results.iter().filter(|(e, _)| e.is_none()).count();
                total_redraws += redraws;
                total_failures += failures;
                if failures > budget {
                    return Err(Error::FailureBudget {
                        failures,
                        replications: reps,
                        budget,
                    });
                }

                let ok: Vec<&(f64, f64)> = results.iter().filter_map(|(e, _)| e.as_ref()).collect();
                let r = ok.len() as f64;
                for &level in &config.nominal_levels {
                    // reject when the upper-tail p-value falls below the level,
                    // equivalently when the statistic exceeds the critical value
                    let crit = crate::infer::chi2_upper_quantile(level, 1)?;
                    let rej_lr = ok.iter().filter(|(lr, _)| *lr > crit).count() as f64 / r;
                    let rej_gr = ok.iter().filter(|(_, gr)| *gr > crit).count() as f64 / r;
                    rows.push(PowerRow {
                        n,
                        phi: config.phi,
                        rho,
                        beta4,
                        level,
                        rejection_rate_lr: rej_lr,
                        rejection_rate_gr: rej_gr,
                        mc_standard_error: (level * (1.0 - level) / r).sqrt(),
                        failures,
                    });
                }
            }
        }
    }

    Ok(McReport {
        config: config.clone(),
        rows,
        total_failures,
        total_redraws,
    })
}

/// One power replication: simulate under beta4, fit the full and the
/// restricted (beta4 = 0) models, return (LR, GR) statistics.
fn replicate_power(
    config: &PowerConfig,
    n: usize,
    rho: f64,
    beta4: f64,
    design: Option<&Mat>,
    stream: &mut SimRng,
) -> (Option<(f64, f64)>, usize) {
    let mut beta = config.beta_true.clone();
    beta.push(beta4);
    let free_extra = vec![false; config.family.extra().len()];
    let restricted_id = ParamId::Beta(beta.len() - 1);

    for attempt in 0..MAX_ATTEMPTS {
        let data = match design {
            Some(x) => simulate_on_design(&config.family, x, &beta, config.phi, rho, stream),
            None => simulate_dataset(&config.family, n, &beta, config.phi, rho, stream),
        };
        let data = match data {
            Ok(d) => d,
            Err(_) => continue,
        };
        let opts = FitOptions::default();
        let unres = match fit(&data, &config.family, &free_extra, &opts) {
            Ok(f) if f.optim.converged => f,
            _ => continue,
        };
        let restriction = Restriction::single(restricted_id, 0.0);
        let res = match fit_restricted(&data, &unres.theta_hat, &restriction, &opts) {
            Ok(f) if f.optim.converged => f,
            _ => continue,
        };
        let lr = (2.0 * (unres.loglik - res.loglik)).max(0.0);
        // gradient statistic on the natural scale
        let layout = crate::tobitmodel::ParamLayout::of(&unres.theta_hat);
        let s = match crate::tobitmodel::score(&res.theta_hat, &data) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let hat = layout.pack(&unres.theta_hat);
        let tilde = layout.pack(&res.theta_hat);
        let gr: f64 = s
            .iter()
            .zip(hat.iter().zip(&tilde))
            .map(|(si, (a, b))| si * (a - b))
            .sum();
        return (Some((lr, gr)), attempt);
    }
    (None, MAX_ATTEMPTS - 1)
}

/// Fixed-width text table of a bias/MSE report: rows n x phi, columns
/// phi-hat and each beta, entries "bias (mse)", one block per rho.
pub fn format_bias_mse_table(report: &BiasMseReport) -> String {
    let mut out = String::new();
    let params: Vec<String> = {
        let mut v = vec!["phi".to_string()];
        for j in 0..report.config.beta_true.len() {
            v.push(format!("beta{j}"));
        }
        v
    };
    for &rho in &report.config.rho_grid {
        out.push_str(&format!("censoring proportion rho = {rho:.2}\n"));
        out.push_str(&format!("{:>5} {:>5}", "n", "phi"));
        for p in &params {
            out.push_str(&format!(" {:>22}", p));
        }
        out.push('\n');
        for &n in &report.config.n_grid {
            for &phi in &report.config.phi_grid {
                out.push_str(&format!("{n:>5} {phi:>5.2}"));
                for p in &params {
                    if let Some(row) = report
                        .rows
                        .iter()
                        .find(|r| r.n == n && r.phi == phi && r.rho == rho && &r.parameter == p)
                    {
                        out.push_str(&format!(" {:>11.4} ({:>8.4})", row.bias, row.mse));
                    }
                }
                out.push('\n');
            }
        }
        out.push('\n');
    }
    out
}

/// Fixed-width text table of a power report (%), one block per level.
pub fn format_power_table(report: &PowerReport) -> String {
    let mut out = String::new();
    for &level in &report.config.nominal_levels {
        out.push_str(&format!("nominal level = {:.0}%\n", level * 100.0));
        out.push_str(&format!("{:>5} {:>7}", "n", "beta4"));
        for &rho in &report.config.rho_grid {
            out.push_str(&format!(
                " {:>8} {:>8}",
                format!("LR({rho:.2})"),
                format!("GR({rho:.2})")
            ));
        }
        out.push('\n');
        for &n in &report.config.n_grid {
            for &beta4 in &report.config.beta4_grid {
                out.push_str(&format!("{n:>5} {beta4:>7.2}"));
                for &rho in &report.config.rho_grid {
                    if let Some(row) = report
                        .rows
                        .iter()
                        .find(|r| r.n == n && r.beta4 == beta4 && r.rho == rho && r.level == level)
                    {
                        out.push_str(&format!(
                            " {:>8.2} {:>8.2}",
                            100.0 * row.rejection_rate_lr,
                            100.0 * row.rejection_rate_gr
                        ));
                    }
                }
                out.push('\n');
            }
        }
        out.push('\n');
    }
    out
}
