//! Statistical special functions implemented in-repo.
//!
//! Log-gamma (Lanczos), regularized incomplete gamma (series + continued
//! fraction), regularized incomplete beta (continued fraction), and the
//! normal / Student-t CDFs built on top of them. Target accuracy is 1e-12
//! or better over the ranges the models exercise; the unit tests check the
//! implementations against adaptive quadrature of the defining integrals.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

/// ln(2 * sqrt(e / pi))
const LN_2_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_2;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Lanczos g constant matching `LANCZOS_COEFFS`.
const LANCZOS_R: f64 = 10.900511;

/// Lanczos coefficients (g = 10.900511, n = 11), accurate to ~1e-14 relative.
const LANCZOS_COEFFS: [f64; 11] = [
    2.485_740_891_387_535_5e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_5,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412_2e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];

/// Natural log of the gamma function for x > 0 (reflection below 1/2).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s: f64 = LANCZOS_COEFFS
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_COEFFS[0], |acc, (i, &c)| acc + c / (i as f64 - x));
        LN_PI
            - (PI * x).sin().ln()
            - (LN_2_SQRT_E_OVER_PI
                + (0.5 - x) * ((0.5 - x + LANCZOS_R) / std::f64::consts::E).ln()
                + s.ln())
    } else {
        let s: f64 = LANCZOS_COEFFS
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_COEFFS[0], |acc, (i, &c)| {
                acc + c / (x + i as f64 - 1.0)
            });
        LN_2_SQRT_E_OVER_PI
            + (x - 0.5) * ((x - 0.5 + LANCZOS_R) / std::f64::consts::E).ln()
            + s.ln()
    }
}

/// ln(Gamma(x + 1/2) / Gamma(x)). The direct difference loses absolute
/// accuracy for large x (each term grows like x ln x), so an asymptotic
/// expansion takes over where it is already accurate to ~1e-20.
pub fn ln_gamma_half_ratio(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 1e5 {
        ln_gamma(x + 0.5) - ln_gamma(x)
    } else {
        let inv = 1.0 / x;
        // Gamma(x+1/2)/Gamma(x) = sqrt(x) (1 - 1/(8x) + 1/(128x^2) + 5/(1024x^3) - ...)
        let series = -0.125 * inv + inv * inv / 128.0 + 5.0 * inv * inv * inv / 1024.0;
        0.5 * x.ln() + series.ln_1p()
    }
}

const SF_EPS: f64 = 1e-16;
const SF_MAX_ITER: usize = 600;

/// Series expansion of the regularized lower incomplete gamma P(a, x).
/// Converges well for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..SF_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * SF_EPS {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Continued fraction (modified Lentz) for the regularized upper incomplete
/// gamma Q(a, x). Converges well for x >= a + 1.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=SF_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < SF_EPS {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Continued-fraction factor for the regularized incomplete beta.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=SF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < SF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn beta_inc(x: f64, a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0 && (0.0..=1.0).contains(&x));
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    (-0.5 * z * z).exp() * INV_SQRT_2PI
}

/// Standard normal CDF via the incomplete gamma, accurate in both tails:
/// Phi(z) = Q(1/2, z^2/2) / 2 for z < 0 and 1 - Q(1/2, z^2/2) / 2 otherwise.
/// Saturates beyond |z| = 40, where the tail is below the f64 minimum.
pub fn normal_cdf(z: f64) -> f64 {
    if z == 0.0 {
        return 0.5;
    }
    if z <= -40.0 {
        return 0.0;
    }
    if z >= 40.0 {
        return 1.0;
    }
    let q = gamma_q(0.5, 0.5 * z * z);
    if z < 0.0 {
        0.5 * q
    } else {
        1.0 - 0.5 * q
    }
}

/// Student-t CDF with `df` degrees of freedom, via the incomplete beta.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    debug_assert!(df > 0.0);
    if t == 0.0 {
        return 0.5;
    }
    let x = df / (df + t * t);
    let p = 0.5 * beta_inc(x, 0.5 * df, 0.5);
    if t > 0.0 {
        1.0 - p
    } else {
        p
    }
}
