//! Quasi-Newton maximization (BFGS with backtracking line search) and the
//! numerical differentiation utilities used as oracles for the analytic
//! derivatives, plus least-squares starting values for the tobit fits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, Mat};
use crate::lsdist::GeneratorFamily;
use crate::tobitmodel::{Theta, TobitDataset};

/// Tuning knobs for the BFGS loop.
#[derive(Clone, Debug, Serialize)]
pub struct OptimOptions {
    pub max_iterations: usize,
    /// Convergence test on the max-abs gradient in the working
    /// parameterization.
    pub gradient_tolerance: f64,
    /// Stop (without declaring convergence) when steps shrink below this.
    pub step_tolerance: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Line-search contraction factor.
    pub backtrack: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            max_iterations: 500,
            gradient_tolerance: 1e-8,
            step_tolerance: 1e-12,
            armijo_c: 1e-4,
            backtrack: 0.5,
        }
    }
}

/// Outcome of one maximization.
#[derive(Clone, Debug, Serialize)]
pub struct OptimResult {
    /// Best iterate found.
    pub x: Vec<f64>,
    /// Objective value at `x`.
    pub value: f64,
    pub iterations: usize,
    /// True only when the gradient tolerance was met.
    pub converged: bool,
    pub final_gradient_norm: f64,
    /// BFGS updates skipped because the curvature condition failed.
    pub skipped_updates: usize,
    /// Human-readable termination reason.
    pub message: String,
}

#[inline]
fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Maximize `f` by BFGS with an identity initial inverse-Hessian and an
/// Armijo backtracking line search. Accepted steps never decrease the
/// objective. `grad` failures and line-search failures end the run with
/// `converged = false`; only a non-finite objective at `x0` is an error.
pub fn maximize<F, G>(f: F, grad: G, x0: &[f64], opts: &OptimOptions) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(Error::Optimization(format!(
            "objective is not finite at the starting point (f = {fx})"
        )));
    }
    let mut g = match grad(&x) {
        Ok(g) => g,
        Err(e) => {
            return Err(Error::Optimization(format!(
                "gradient failed at the starting point: {e}"
            )))
        }
    };

    let mut h = Mat::identity(n);
    let mut skipped = 0usize;
    let mut iterations = 0usize;
    let mut message = String::from("max iterations reached");

    for iter in 0..opts.max_iterations {
        iterations = iter;
        let gnorm = max_abs(&g);
        if gnorm <= opts.gradient_tolerance {
            return Ok(OptimResult {
                x,
                value: fx,
                iterations: iter,
                converged: true,
                final_gradient_norm: gnorm,
                skipped_updates: skipped,
                message: "gradient tolerance met".into(),
            });
        }

        // ascent direction d = H g
        let d = h.matvec(&g);
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if !(slope > 0.0) {
            // H lost positive definiteness numerically; restart from identity
            h = Mat::identity(n);
            skipped += 1;
            continue;
        }

        // backtracking Armijo search; once the demanded increase drops
        // below the objective's floating-point resolution, any step that
        // does not decrease the objective is acceptable (progress near the
        // optimum is then driven by the gradient alone)
        let eps_flat = 1e-12 * fx.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let ft = f(&xt);
            let demanded = opts.armijo_c * t * slope;
            if ft.is_finite() && (ft >= fx + demanded || (demanded <= eps_flat && ft >= fx)) {
                accepted = Some((xt, ft));
                break;
            }
            t *= opts.backtrack;
        }
        let (x_new, f_new) = match accepted {
            Some(v) => v,
            None => {
                message =
                    format!("line search failed at iteration {iter} (gradient norm {gnorm:.3e})");
                break;
            }
        };

        let g_new = match grad(&x_new) {
            Ok(g) => g,
            Err(e) => {
                message = format!("gradient failed at iteration {iter}: {e}");
                break;
            }
        };

        // curvature pair: s = step, y = g_old - g_new (positive s'y keeps
        // the inverse approximation positive definite)
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        if sy > 1e-10 {
            let rho = 1.0 / sy;
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            let hy = h.matvec(&yv);
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += rho * rho * yhy * s[i] * s[j] + rho * s[i] * s[j]
                        - rho * (s[i] * hy[j] + hy[i] * s[j]);
                }
            }
        } else {
            skipped += 1;
        }

        let step_size = max_abs(&s);
        if std::env::var_os("TOBITLS_OPT_TRACE").is_some() {
            eprintln!(
                "iter {iter}: f {:.12e} gnorm {:.3e} step {:.3e} t {:.3e} slope {:.3e} sy {:.3e}",
                f_new,
                max_abs(&g_new),
                step_size,
                t,
                slope,
                sy
            );
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        if step_size <= opts.step_tolerance * max_abs(&x).max(1.0) {
            message = format!("step size below tolerance at iteration {iter}");
            break;
        }
    }

    let gnorm = max_abs(&g);
    Ok(OptimResult {
        x,
        value: fx,
        iterations,
        converged: false,
        final_gradient_norm: gnorm,
        skipped_updates: skipped,
        message,
    })
}

/// Central-difference gradient with per-coordinate step h * max(1, |x_j|).
pub fn numerical_gradient<F>(f: &F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut out = Vec::with_capacity(x.len());
    let mut xt = x.to_vec();
    for j in 0..x.len() {
        let hj = h * x[j].abs().max(1.0);
        xt[j] = x[j] + hj;
        let fp = f(&xt);
        xt[j] = x[j] - hj;
        let fm = f(&xt);
        xt[j] = x[j];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite evaluation inside the difference stencil at coordinate {j}"
            )));
        }
        out.push((fp - fm) / (2.0 * hj));
    }
    Ok(out)
}

/// Central-difference Jacobian of a vector map; entry (i, j) holds
/// d g_i / d x_j.
pub fn numerical_jacobian<G>(g: &G, x: &[f64], h: f64) -> Result<Mat>
where
    G: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let mut xt = x.to_vec();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let hj = h * x[j].abs().max(1.0);
        xt[j] = x[j] + hj;
        let gp = g(&xt);
        xt[j] = x[j] - hj;
        let gm = g(&xt);
        xt[j] = x[j];
        match (gp, gm) {
            (Some(gp), Some(gm)) => {
                cols.push(
                    gp.iter()
                        .zip(&gm)
                        .map(|(a, b)| (a - b) / (2.0 * hj))
                        .collect(),
                );
            }
            _ => {
                return Err(Error::Domain(format!(
                    "vector map failed inside the difference stencil at coordinate {j}"
                )))
            }
        }
    }
    let rows = cols[0].len();
    let mut jac = Mat::zeros(rows, x.len());
    for (j, col) in cols.iter().enumerate() {
        for i in 0..rows {
            jac[(i, j)] = col[i];
        }
    }
    Ok(jac)
}

/// Minimum dispersion used when the least-squares residuals are degenerate.
const PHI_FLOOR: f64 = 1e-3;

/// Starting values: least squares on the uncensored subset for beta, the
/// residual standard deviation for phi (floored), family extras as given.
pub fn starting_values(
    data: &TobitDataset,
    family: &GeneratorFamily,
    free_extra: &[bool],
) -> Result<Theta> {
    let p = data.p();
    let idx: Vec<usize> = (0..data.n()).filter(|&i| !data.censored()[i]).collect();
    if idx.len() < p + 1 {
        return Err(Error::Data(format!(
            "need at least {} uncensored cases for starting values, found {}",
            p + 1,
            idx.len()
        )));
    }
    let xu = Mat::from_rows(idx.iter().map(|&i| data.x().row(i).to_vec()).collect());
    let yu: Vec<f64> = idx.iter().map(|&i| data.y()[i]).collect();
    let beta = least_squares(&xu, &yu)?;
    let fitted = xu.matvec(&beta);
    let ssr: f64 = yu.iter().zip(&fitted).map(|(y, f)| (y - f) * (y - f)).sum();
    let sd = (ssr / idx.len() as f64).sqrt();
    let phi = match family.fixed_phi() {
        Some(fp) => fp,
        None => sd.max(PHI_FLOOR),
    };
    Theta::new(beta, phi, family.clone(), free_extra.to_vec())
}
