//! Maximum likelihood fitting, observed-information standard errors,
//! information criteria, and the likelihood-ratio and gradient tests.
//!
//! Fits run BFGS in a working parameterization where phi and any free extra
//! parameters live on the log scale. Standard errors come from the observed
//! information in the working coordinates, mapped back to the natural scale
//! by the delta method. The LR and gradient statistics are calibrated
//! against the chi-square upper tail.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, Mat};
use crate::lsdist::GeneratorFamily;
use crate::optimize::{maximize, numerical_jacobian, starting_values, OptimOptions, OptimResult};
use crate::special;
use crate::tobitmodel::{hessian, loglik, score, ParamId, ParamLayout, Theta, TobitDataset};

/// Options controlling a fit.
#[derive(Clone, Debug)]
pub struct FitOptions {
    pub optim: OptimOptions,
    /// Optimize phi and free extras on the log scale (the default). The
    /// natural-scale mode exists to demonstrate invariance of the tests.
    pub log_scale: bool,
    /// Warm start; least-squares starting values are used when absent.
    pub start: Option<Theta>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            optim: OptimOptions::default(),
            log_scale: true,
            start: None,
        }
    }
}

/// An equality restriction on a subset of model coordinates.
#[derive(Clone, Debug, Default)]
pub struct Restriction {
    pub fixed: Vec<(ParamId, f64)>,
}

impl Restriction {
    pub fn none() -> Self {
        Restriction { fixed: Vec::new() }
    }

    pub fn single(id: ParamId, value: f64) -> Self {
        Restriction {
            fixed: vec![(id, value)],
        }
    }

    fn contains(&self, id: ParamId) -> bool {
        self.fixed.iter().any(|(fid, _)| *fid == id)
    }
}

/// Maximum likelihood fit with standard errors and information criteria.
#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub theta_hat: Theta,
    /// Names of the optimized coordinates, aligned with `estimates`/`se`.
    pub param_names: Vec<String>,
    pub estimates: Vec<f64>,
    /// Standard errors (NaN with `se_error` set when the information matrix
    /// is not positive definite).
    pub se: Vec<f64>,
    pub se_error: Option<String>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_total: usize,
    pub n_censored: usize,
    pub censored_proportion: f64,
    /// Number of freely estimated parameters.
    pub k_free: usize,
    pub optim: OptimResult,
}

/// One hypothesis-test outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Lr,
    Gr,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub warning_flags: Vec<String>,
    pub restricted: FitResult,
    pub unrestricted: FitResult,
}

/// Upper-tail chi-square probability Q(r/2, x/2).
pub fn chi2_upper_tail(x: f64, r: usize) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "chi2 statistic must be >= 0, got {x}"
        )));
    }
    if r == 0 {
        return Err(Error::Domain("chi2 degrees of freedom must be >= 1".into()));
    }
    Ok(special::gamma_q(0.5 * r as f64, 0.5 * x))
}

/// Upper quantile: the x with `chi2_upper_tail(x, r) = delta`.
pub fn chi2_upper_quantile(delta: f64, r: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "tail probability must be in (0, 1), got {delta}"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while chi2_upper_tail(hi, r)? > delta {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Domain("chi2 quantile bracket overflow".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_upper_tail(mid, r)? > delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Observed information -l''(theta) over the full free-parameter layout on
/// the natural scale. The (beta, phi) block is analytic; rows and columns
/// for free extra parameters are filled by differencing the score.
pub fn observed_information(theta: &Theta, data: &TobitDataset) -> Result<Mat> {
    let layout = ParamLayout::of(theta);
    let q = layout.len();
    let analytic = hessian(theta, data)?;
    let qa = analytic.nrows();
    if qa == q {
        let mut info = Mat::zeros(q, q);
        for a in 0..q {
            for b in 0..q {
                info[(a, b)] = -analytic[(a, b)];
            }
        }
        return Ok(info);
    }
    // free extras present: difference the score for the remaining entries
    let x0 = layout.pack(theta);
    let template = theta.clone();
    let g = |v: &[f64]| -> Option<Vec<f64>> {
        let t = layout.unpack(&template, v).ok()?;
        score(&t, data).ok()
    };
    let jac = numerical_jacobian(&g, &x0, 1e-5)?;
    let mut info = Mat::zeros(q, q);
    for a in 0..q {
        for b in 0..q {
            // symmetrized negative Jacobian of the score
            info[(a, b)] = -0.5 * (jac[(a, b)] + jac[(b, a)]);
        }
    }
    for a in 0..qa {
        for b in 0..qa {
            info[(a, b)] = -analytic[(a, b)];
        }
    }
    Ok(info)
}

/// Information in the working coordinates over a sub-layout, with the exact
/// chain-rule correction for log coordinates: for theta_k = exp(w_k),
/// d2l/dw_k2 = theta_k^2 l_kk + theta_k l_k.
fn working_information(
    theta: &Theta,
    data: &TobitDataset,
    free_idx: &[usize],
    log_scale: bool,
) -> Result<Mat> {
    let layout = ParamLayout::of(theta);
    let info = observed_information(theta, data)?;
    let grad = score(theta, data)?;
    let scale: Vec<f64> = if log_scale {
        layout.working_scale(theta)
    } else {
        vec![1.0; layout.len()]
    };
    let m = free_idx.len();
    let mut w = Mat::zeros(m, m);
    for (a, &ia) in free_idx.iter().enumerate() {
        for (b, &ib) in free_idx.iter().enumerate() {
            w[(a, b)] = scale[ia] * scale[ib] * info[(ia, ib)];
        }
        if log_scale && layout.is_log_coord(ia) {
            w[(a, a)] -= scale[ia] * grad[ia];
        }
    }
    Ok(w)
}

/// Standard errors of all free coordinates at `theta` from the observed
/// information, delta-method-corrected for log-scale coordinates.
pub fn standard_errors(theta: &Theta, data: &TobitDataset) -> Result<Vec<f64>> {
    let layout = ParamLayout::of(theta);
    let free_idx: Vec<usize> = (0..layout.len()).collect();
    standard_errors_subset(theta, data, &free_idx, true)
}

fn standard_errors_subset(
    theta: &Theta,
    data: &TobitDataset,
    free_idx: &[usize],
    log_scale: bool,
) -> Result<Vec<f64>> {
    let layout = ParamLayout::of(theta);
    let info_w = working_information(theta, data, free_idx, log_scale)?;
    let cov = spd_inverse(&info_w)?;
    let scale: Vec<f64> = if log_scale {
        layout.working_scale(theta)
    } else {
        vec![1.0; layout.len()]
    };
    Ok(free_idx
        .iter()
        .enumerate()
        .map(|(a, &ia)| scale[ia] * cov[(a, a)].sqrt())
        .collect())
}

fn param_name(id: ParamId, data: &TobitDataset) -> String {
    match id {
        ParamId::Beta(j) => data.names()[j].clone(),
        ParamId::Phi => "phi".to_string(),
        ParamId::Extra(j) => format!("xi{}", j + 1),
    }
}

/// Fit with some coordinates pinned. `template` provides the starting
/// point; restricted coordinates are overwritten with their pinned values
/// before optimization.
fn fit_constrained(
    data: &TobitDataset,
    template: &Theta,
    restriction: &Restriction,
    opts: &FitOptions,
) -> Result<FitResult> {
    let layout = ParamLayout::of(template);

    // pin restricted coordinates in the start
    let mut start_full = layout.pack(template);
    for (id, value) in &restriction.fixed {
        let k = layout.index_of(*id).ok_or_else(|| {
            Error::InvalidParameter(format!("cannot restrict {id}: not a free parameter"))
        })?;
        start_full[k] = *value;
    }
    let theta0 = layout.unpack(template, &start_full)?;

    let free_idx: Vec<usize> = (0..layout.len())
        .filter(|k| !restriction.contains(layout.ids()[*k]))
        .collect();
    if free_idx.is_empty() {
        return Err(Error::InvalidParameter(
            "restriction pins every free parameter".into(),
        ));
    }

    let log_scale = opts.log_scale;
    let to_working = |full: &[f64]| -> Vec<f64> {
        free_idx
            .iter()
            .map(|&k| {
                if log_scale && layout.is_log_coord(k) {
                    full[k].ln()
                } else {
                    full[k]
                }
            })
            .collect()
    };
    let full_at = {
        let base = start_full.clone();
        let free_idx = free_idx.clone();
        let layout = layout.clone();
        move |w: &[f64]| -> Vec<f64> {
            let mut full = base.clone();
            for (a, &k) in free_idx.iter().enumerate() {
                full[k] = if log_scale && layout.is_log_coord(k) {
                    w[a].exp()
                } else {
                    w[a]
                };
            }
            full
        }
    };

    let template_c = theta0.clone();
    let layout_f = layout.clone();
    let full_f = full_at.clone();
    let objective = move |w: &[f64]| -> f64 {
        match layout_f.unpack(&template_c, &full_f(w)) {
            Ok(t) => loglik(&t, data),
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let template_g = theta0.clone();
    let layout_g = layout.clone();
    let full_g = full_at.clone();
    let free_g = free_idx.clone();
    let gradient = move |w: &[f64]| -> Result<Vec<f64>> {
        let full = full_g(w);
        let t = layout_g.unpack(&template_g, &full)?;
        let s = score(&t, data)?;
        Ok(free_g
            .iter()
            .map(|&k| {
                if log_scale && layout_g.is_log_coord(k) {
                    s[k] * full[k]
                } else {
                    s[k]
                }
            })
            .collect())
    };

    let w0 = to_working(&start_full);
    let mut optim = maximize(&objective, &gradient, &w0, &opts.optim)?;

    // BFGS line searches stall once objective improvements fall below f64
    // resolution, which can leave the gradient above a tight tolerance.
    // The analytic Hessian is available, so finish with Newton steps that
    // need no objective comparisons.
    if !optim.converged && optim.final_gradient_norm < 1e-2 {
        let mut w = optim.x.clone();
        for _ in 0..10 {
            let theta_w = match layout.unpack(&theta0, &full_at(&w)) {
                Ok(t) => t,
                Err(_) => break,
            };
            let g_w = match gradient(&w) {
                Ok(g) => g,
                Err(_) => break,
            };
            let gnorm = g_w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if gnorm <= opts.optim.gradient_tolerance {
                optim.x = w.clone();
                optim.value = objective(&w);
                optim.converged = true;
                optim.final_gradient_norm = gnorm;
                optim.message = "gradient tolerance met after Newton polish".into();
                break;
            }
            let info_w = match working_information(&theta_w, data, &free_idx, log_scale) {
                Ok(m) => m,
                Err(_) => break,
            };
            let chol = match crate::linalg::cholesky(&info_w) {
                Ok(l) => l,
                Err(_) => break,
            };
            let delta = crate::linalg::cholesky_solve(&chol, &g_w);
            let w_new: Vec<f64> = w.iter().zip(&delta).map(|(a, b)| a + b).collect();
            let f_new = objective(&w_new);
            // tolerate sub-resolution wobble, reject real regressions
            if !f_new.is_finite() || f_new < optim.value - 1e-9 * optim.value.abs().max(1.0) {
                break;
            }
            w = w_new;
            optim.x = w.clone();
            optim.value = f_new;
            optim.final_gradient_norm = gradient(&w)
                .map(|g| g.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
                .unwrap_or(optim.final_gradient_norm);
            if optim.final_gradient_norm <= opts.optim.gradient_tolerance {
                optim.converged = true;
                optim.message = "gradient tolerance met after Newton polish".into();
                break;
            }
        }
    }

    let full_hat = full_at(&optim.x);
    let theta_hat = layout.unpack(&theta0, &full_hat)?;
    let ll = optim.value;

    let (se, se_error) = match standard_errors_subset(&theta_hat, data, &free_idx, log_scale) {
        Ok(se) => (se, None),
        Err(e) => (vec![f64::NAN; free_idx.len()], Some(e.to_string())),
    };

    let k_free = free_idx.len();
    let n = data.n();
    let fit = FitResult {
        param_names: free_idx
            .iter()
            .map(|&k| param_name(layout.ids()[k], data))
            .collect(),
        estimates: free_idx.iter().map(|&k| full_hat[k]).collect(),
        se,
        se_error,
        theta_hat,
        loglik: ll,
        aic: -2.0 * ll + 2.0 * k_free as f64,
        bic: -2.0 * ll + k_free as f64 * (n as f64).ln(),
        n_total: n,
        n_censored: data.n_censored(),
        censored_proportion: data.n_censored() as f64 / n as f64,
        k_free,
        optim,
    };
    Ok(fit)
}

/// Unrestricted maximum likelihood fit.
pub fn fit(
    data: &TobitDataset,
    family: &GeneratorFamily,
    free_extra: &[bool],
    opts: &FitOptions,
) -> Result<FitResult> {
    let template = match &opts.start {
        Some(t) => t.clone(),
        None => starting_values(data, family, free_extra)?,
    };
    fit_constrained(data, &template, &Restriction::none(), opts)
}

/// Fit under an equality restriction, warm started from `template`.
pub fn fit_restricted(
    data: &TobitDataset,
    template: &Theta,
    restriction: &Restriction,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_constrained(data, template, restriction, opts)
}

/// Run the requested tests, sharing one unrestricted and one restricted fit.
///
/// The restricted fit warm-starts from the unrestricted optimum with the
/// restricted coordinates overwritten, falling back to fresh least-squares
/// starting values if that fails.
pub fn run_tests(
    data: &TobitDataset,
    family: &GeneratorFamily,
    free_extra: &[bool],
    restriction: &Restriction,
    kinds: &[TestKind],
    opts: &FitOptions,
) -> Result<Vec<TestResult>> {
    if restriction.fixed.is_empty() {
        return Err(Error::InvalidParameter("empty restriction".into()));
    }
    let mut unrestricted = fit(data, family, free_extra, opts)?;
    if !unrestricted.optim.converged {
        return Err(Error::Optimization(format!(
            "unrestricted fit did not converge: {}",
            unrestricted.optim.message
        )));
    }

    let restricted = match fit_constrained(data, &unrestricted.theta_hat, restriction, opts) {
        Ok(f) if f.optim.converged => f,
        warm => {
            // cold restart from least squares
            let cold = starting_values(data, family, free_extra)?;
            match fit_constrained(data, &cold, restriction, opts) {
                Ok(f) if f.optim.converged => f,
                Ok(f) => {
                    // keep whichever attempt got further, but report failure
                    let best = match warm {
                        Ok(w) if w.loglik > f.loglik => w,
                        _ => f,
                    };
                    return Err(Error::Optimization(format!(
                        "restricted fit did not converge: {}",
                        best.optim.message
                    )));
                }
                Err(e) => return Err(e),
            }
        }
    };

    let mut warnings: Vec<String> = Vec::new();
    let mut gap = unrestricted.loglik - restricted.loglik;
    if gap < 0.0 {
        // the restricted optimum beat the unrestricted one; re-polish the
        // unrestricted fit from the restricted solution
        let repolish = fit_constrained(data, &restricted.theta_hat, &Restriction::none(), opts)?;
        if repolish.loglik > unrestricted.loglik {
            unrestricted = repolish;
            gap = unrestricted.loglik - restricted.loglik;
        }
    }

    let df = restriction.fixed.len();
    let layout = ParamLayout::of(&unrestricted.theta_hat);
    let mut out = Vec::new();
    for kind in kinds {
        let (statistic, mut flags) = match kind {
            TestKind::Lr => {
                let mut stat = 2.0 * gap;
                let mut flags = warnings.clone();
                if stat < 0.0 {
                    if stat >= -1e-8 {
                        stat = 0.0;
                    } else {
                        flags.push("negative_lr_statistic".into());
                    }
                }
                (stat, flags)
            }
            TestKind::Gr => {
                // score of the full model at the restricted estimate, dotted
                // with the estimate displacement, all on the natural scale
                let s = score(&restricted.theta_hat, data)?;
                let hat = layout.pack(&unrestricted.theta_hat);
                let tilde = layout.pack(&restricted.theta_hat);
                let stat: f64 = s
                    .iter()
                    .zip(hat.iter().zip(&tilde))
                    .map(|(si, (a, b))| si * (a - b))
                    .sum();
                let mut flags = warnings.clone();
                if stat < 0.0 {
                    // reported as-is; finite-sample negativity is informative
                    flags.push("negative_gr_statistic".into());
                }
                (stat, flags)
            }
        };
        warnings.clear();
        let p_value = chi2_upper_tail(statistic.max(0.0), df)?;
        if !unrestricted.optim.converged || !restricted.optim.converged {
            flags.push("non_converged_fit".into());
        }
        out.push(TestResult {
            kind: *kind,
            statistic,
            df,
            p_value,
            warning_flags: flags,
            restricted: restricted.clone(),
            unrestricted: unrestricted.clone(),
        });
    }
    Ok(out)
}

/// Likelihood-ratio test of the given restriction.
pub fn lr_test(
    data: &TobitDataset,
    family: &GeneratorFamily,
    free_extra: &[bool],
    restriction: &Restriction,
    opts: &FitOptions,
) -> Result<TestResult> {
    Ok(run_tests(data, family, free_extra, restriction, &[TestKind::Lr], opts)?.remove(0))
}

/// Gradient test of the given restriction.
pub fn gr_test(
    data: &TobitDataset,
    family: &GeneratorFamily,
    free_extra: &[bool],
    restriction: &Restriction,
    opts: &FitOptions,
) -> Result<TestResult> {
    Ok(run_tests(data, family, free_extra, restriction, &[TestKind::Gr], opts)?.remove(0))
}
