//! Chi-square distribution: density, CDF and upper-tail quantile.
//!
//! The CDF goes through the regularized incomplete gamma function (series
//! below `a + 1`, Lentz continued fraction above). For two degrees of
//! freedom everything has a closed form and the closed form is used.

use crate::error::{DtaError, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const EPS: f64 = 1e-16;
const MAX_TERMS: usize = 10_000;

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_TERMS {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized lower and upper incomplete gamma `(P(a, x), Q(a, x))`.
fn gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x < a + 1.0 {
        let p = gamma_p_series(a, x);
        (p, 1.0 - p)
    } else {
        let q = gamma_q_fraction(a, x);
        (1.0 - q, q)
    }
}

pub fn cdf(x: f64, k: u32) -> f64 {
    if k == 2 {
        return if x <= 0.0 { 0.0 } else { -(-0.5 * x).exp_m1() };
    }
    gamma_pq(0.5 * k as f64, 0.5 * x).0
}

/// Upper tail `P(χ²_k > x)`.
pub fn sf(x: f64, k: u32) -> f64 {
    if k == 2 {
        return if x <= 0.0 { 1.0 } else { (-0.5 * x).exp() };
    }
    gamma_pq(0.5 * k as f64, 0.5 * x).1
}

pub fn pdf(x: f64, k: u32) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let half = 0.5 * k as f64;
    if x == 0.0 {
        return match k {
            1 => f64::INFINITY,
            2 => 0.5,
            _ => 0.0,
        };
    }
    ((half - 1.0) * x.ln() - 0.5 * x - half * std::f64::consts::LN_2 - ln_gamma(half)).exp()
}

/// Standard normal quantile (Acklam's rational approximation, relative error
/// about 1e-9). Only used as a starting value.
#[allow(clippy::excessive_precision)]
fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let tail = |q: f64| {
        let q = (-2.0 * q.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < 0.02425 {
        tail(p)
    } else if p > 1.0 - 0.02425 {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Upper `alpha` point of `χ²_k`: the `x` with `P(χ²_k > x) = alpha`.
pub fn chi2_quantile(alpha: f64, k: u32) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DtaError::InvalidArgument(format!("alpha = {alpha} is not in (0, 1)")));
    }
    if k == 0 {
        return Err(DtaError::InvalidArgument("degrees of freedom must be at least 1".into()));
    }
    if k == 2 {
        return Ok(-2.0 * alpha.ln());
    }

    let kf = k as f64;
    let z = normal_quantile(1.0 - alpha);
    let c = 2.0 / (9.0 * kf);
    let mut x = (kf * (1.0 - c + z * c.sqrt()).powi(3)).max(1e-8);

    // Newton on sf(x) − alpha, kept inside a shrinking bracket.
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for _ in 0..200 {
        let g = sf(x, k) - alpha;
        if g > 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let dens = pdf(x, k);
        let mut next = if dens > 0.0 { x + g / dens } else { f64::NAN };
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(1.0) };
        }
        let step = (next - x).abs();
        x = next;
        if step < 1e-13 * x.max(1.0) {
            break;
        }
    }
    Ok(x)
}
