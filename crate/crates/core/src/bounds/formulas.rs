//! Scalar kernels behind the bounds. Every power of `r`, `1 - r^2` and `2`
//! goes through logarithms so that `d` in the hundreds neither underflows nor
//! overflows before the final combination.

use std::f64::consts::LN_2;

/// `ln(r^d)`; `-inf` at `r = 0`.
pub fn ln_r_pow(r: f64, d: f64) -> f64 {
    if r == 0.0 {
        f64::NEG_INFINITY
    } else {
        d * r.ln()
    }
}

/// `ln((1 - r^2)^(d/2))`.
pub fn ln_cap_pow(r: f64, d: f64) -> f64 {
    0.5 * d * (-r * r).ln_1p()
}

/// `1 - r^d` without cancellation for `r` near 1.
pub fn one_minus_r_pow(r: f64, d: f64) -> f64 {
    -ln_r_pow(r, d).exp_m1()
}

/// `ln(1 - r^d)`.
pub fn ln_one_minus_r_pow(r: f64, d: f64) -> f64 {
    (-ln_r_pow(r, d).exp()).ln_1p()
}

/// `1 - n 2^-d`.
pub fn linear_point_raw(d: f64, n: f64) -> f64 {
    1.0 - n * (-d).exp2()
}

/// `1 - n (n - 1) 2^-d`.
pub fn linear_set_raw(d: f64, n: f64) -> f64 {
    if n <= 1.0 {
        return 1.0;
    }
    1.0 - n * (n - 1.0) * (-d).exp2()
}

/// `(1 - r^d) (1 - (1 - r^2)^(d/2) / 2)^n`.
pub fn fisher_point(r: f64, d: f64, n: f64) -> f64 {
    ln_fisher_point(r, d, n).exp()
}

pub fn ln_fisher_point(r: f64, d: f64, n: f64) -> f64 {
    let half_cap = 0.5 * ln_cap_pow(r, d).exp();
    ln_one_minus_r_pow(r, d) + n * (-half_cap).ln_1p()
}

/// Inner factor `(1 - r^d)(1 - (n - 1)(1 - r^2)^(d/2) / 2)` of the set bound.
pub fn fisher_set_base(r: f64, d: f64, n: f64) -> f64 {
    let t = 0.5 * (n - 1.0).max(0.0) * ln_cap_pow(r, d).exp();
    one_minus_r_pow(r, d) * (1.0 - t)
}

/// `ln` of the set bound `[(1 - r^d)(1 - (n-1)(1-r^2)^(d/2)/2)]^n`, or `None`
/// when the inner factor is not positive.
pub fn ln_fisher_set(r: f64, d: f64, n: f64) -> Option<f64> {
    if n == 0.0 {
        return Some(0.0);
    }
    let t = 0.5 * (n - 1.0).max(0.0) * ln_cap_pow(r, d).exp();
    if t >= 1.0 || r == 1.0 {
        return None;
    }
    let ln_base = ln_one_minus_r_pow(r, d) + (-t).ln_1p();
    if ln_base == f64::NEG_INFINITY {
        return None;
    }
    Some(n * ln_base)
}

/// `1 - [(1 - r^d)(1 - (n-1)(1-r^2)^(d/2)/2)]^n` computed as `-expm1(...)`,
/// accurate when the gap is tiny.
pub fn fisher_set_gap(r: f64, d: f64, n: f64) -> Option<f64> {
    ln_fisher_set(r, d, n).map(|l| -l.exp_m1())
}

/// `ln` of the right-hand side of the Fisher admissible-count bound, in the
/// cancellation-free form `2 theta / (r^d (sqrt(1 + 2 theta z^d) + 1))` with
/// `z = sqrt(1 - r^2) / r^2`.
pub fn ln_eq1(r: f64, theta: f64, d: f64) -> f64 {
    let ln_two_theta = (2.0 * theta).ln();
    let ln_z = 0.5 * (-r * r).ln_1p() - 2.0 * r.ln();
    let ln_w = ln_two_theta + d * ln_z;
    // ln(sqrt(1 + w) + 1)
    let ln_den = if ln_w > 0.0 {
        0.5 * ln_w + (-0.5 * ln_w).exp().asinh()
    } else {
        (1.0 + ln_w.exp()).sqrt().ln_1p()
    };
    ln_two_theta - d * r.ln() - ln_den
}

pub fn eq1_stabilized(r: f64, theta: f64, d: f64) -> f64 {
    ln_eq1(r, theta, d).exp()
}

/// The bound exactly as printed, `(r / sqrt(1-r^2))^d (sqrt(1 + 2 theta (1-r^2)^(d/2) / r^(2d)) - 1)`.
/// Loses all precision once the square-root term is close to 1.
pub fn eq1_literal(r: f64, theta: f64, d: f64) -> f64 {
    let s = (1.0 - r * r).sqrt();
    (r / s).powf(d) * ((1.0 + 2.0 * theta * (1.0 - r * r).powf(d / 2.0) / r.powf(2.0 * d)).sqrt() - 1.0)
}

/// `theta / (1 - r^2)^(d/2)`.
pub fn n1_fisher(r: f64, theta: f64, d: f64) -> f64 {
    ln_n1_fisher(r, theta, d).exp()
}

pub fn ln_n1_fisher(r: f64, theta: f64, d: f64) -> f64 {
    theta.ln() - ln_cap_pow(r, d)
}

/// `sqrt(theta) / (1 - r^2)^(d/4)`.
pub fn n_fisher(r: f64, theta: f64, d: f64) -> f64 {
    ln_n_fisher(r, theta, d).exp()
}

pub fn ln_n_fisher(r: f64, theta: f64, d: f64) -> f64 {
    0.5 * theta.ln() - 0.5 * ln_cap_pow(r, d)
}

/// `theta 2^d`.
pub fn n1_linear(theta: f64, d: f64) -> f64 {
    ln_n1_linear(theta, d).exp()
}

pub fn ln_n1_linear(theta: f64, d: f64) -> f64 {
    theta.ln() + d * LN_2
}

/// `sqrt(theta 2^d)`.
pub fn n_linear(theta: f64, d: f64) -> f64 {
    ln_n_linear(theta, d).exp()
}

pub fn ln_n_linear(theta: f64, d: f64) -> f64 {
    0.5 * theta.ln() + 0.5 * d * LN_2
}

/// Largest integer strictly below `v`, or `None` when no nonnegative integer is.
pub fn largest_integer_below(v: f64) -> Option<f64> {
    if v.is_finite() && v > 0.0 {
        Some(v.ceil() - 1.0)
    } else if v == f64::INFINITY {
        Some(f64::INFINITY)
    } else {
        None
    }
}
