//! Adaptive Gauss-Kronrod quadrature.
//!
//! A 7-15 point Gauss-Kronrod rule with recursive bisection, plus tangent
//! maps for half-line and whole-line integrals. Used for the density
//! normalization self-checks at family construction and as the independent
//! oracle throughout the test suites.

/// Kronrod abscissae (positive half, including the center at 0).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_27,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the embedded 7-point rule (odd-index abscissae of `XGK`).
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod panel on [a, b]: returns (estimate, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut result_kronrod = WGK[7] * fc;
    let mut result_gauss = WG[3] * fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = f(center - x) + f(center + x);
        result_kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * fsum;
        }
    }
    let err = (half * (result_kronrod - result_gauss)).abs();
    (half * result_kronrod, err)
}

/// Adaptive integral of `f` on the finite interval [a, b] to absolute
/// tolerance `tol`. Non-finite panel estimates propagate into the result
/// rather than being split forever; total work is bounded by a panel
/// budget.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut total = 0.0;
    let mut budget: u32 = 20_000;
    // (lo, hi, remaining depth)
    let mut stack = vec![(a, b, 52u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (est, err) = gk15(&f, lo, hi);
        // Tolerance shares out proportionally to width, floored at the
        // roundoff level of the panel estimate.
        let local_tol = (tol * ((hi - lo) / (b - a)).abs()).max(1e-14 * est.abs());
        let converged = err <= local_tol.max(1e-300);
        if converged || depth == 0 || budget == 0 || !est.is_finite() {
            total += est;
        } else {
            budget -= 1;
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth - 1));
            stack.push((mid, hi, depth - 1));
        }
    }
    total
}

/// Integral of `f` over the whole real line via the map x = tan(theta).
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    let g = move |theta: f64| {
        let c = theta.cos();
        f(theta.tan()) / (c * c)
    };
    integrate(
        g,
        -std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        tol,
    )
}

/// Integral of `f` over (-inf, upper] via the same tangent map.
pub fn integrate_to<F: Fn(f64) -> f64>(f: F, upper: f64, tol: f64) -> f64 {
    let g = move |theta: f64| {
        let c = theta.cos();
        f(theta.tan()) / (c * c)
    };
    integrate(g, -std::f64::consts::FRAC_PI_2, upper.atan(), tol)
}

/// Integral of `f` over [lower, inf).
pub fn integrate_from<F: Fn(f64) -> f64>(f: F, lower: f64, tol: f64) -> f64 {
    let g = move |theta: f64| {
        let c = theta.cos();
        f(theta.tan()) / (c * c)
    };
    integrate(g, lower.atan(), std::f64::consts::FRAC_PI_2, tol)
}
