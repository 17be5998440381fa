//! Scalar special functions and log-space helpers.

use std::f64::consts::PI;

/// Exponent below which `exp` is flushed to exactly zero.
pub const EXP_FLOOR: f64 = -745.0;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Euler's Gamma function.
pub fn gamma_fn(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `exp(x)`, flushed to 0 below `EXP_FLOOR`.
#[inline]
pub fn exp_flush(x: f64) -> f64 {
    if x < EXP_FLOOR {
        0.0
    } else {
        x.exp()
    }
}

/// ln of the d-dimensional heat kernel at squared radius `r2` and time `t`.
#[inline]
pub fn ln_heat(d: usize, r2: f64, t: f64) -> f64 {
    -0.5 * d as f64 * (4.0 * PI * t).ln() - r2 / (4.0 * t)
}

/// ln(e^a - e^b) for a ≥ b; -inf when equal.
#[inline]
pub fn ln_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    let d = b - a;
    if d >= 0.0 {
        return f64::NEG_INFINITY;
    }
    a + (-(d.exp())).ln_1p()
}

/// Poisson normalisation c_N = π^{-N/2} Γ(N/2).
pub fn poisson_constant(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    gamma_fn(half) / PI.powf(half)
}

/// Surface area of the unit sphere in ℝ^d (|S^{d-1}|).
pub fn sphere_area(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    2.0 * PI.powf(half) / gamma_fn(half)
}
