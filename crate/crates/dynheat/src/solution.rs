//! Solutions u(x, t) of the dynamical boundary problem and of its limit problems,
//! obtained by convolving the kernels with the closed data family.
//!
//! Tangential integrals are eliminated analytically: every datum has a closed-form
//! heat convolution, which enters the kernels' τ-integrals as a log-factor
//! `ln_unit(x′, σ)`. What remains is a 1D τ-integral (boundary data, or interior
//! data whose normal profile is an interval indicator, integrated in y_N exactly)
//! or a 2D (y_N, τ) integral for Gaussian normal profiles.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BoundaryData, Field, InitialData, InteriorData, NormalProfile};
use crate::dynamic::{h_layer, h_tilde_layer, hhat_integral, layer, subordinate};
use crate::error::{domain, Error, Result};
use crate::kernel::{g0_radial, poisson_radial, HalfSpacePoint, Params, Tangential};
use crate::quadrature::{integrate, integrate_2d, integrate_breakpoints, integrate_log, QuadResult, QuadSpec};
use crate::special::{erf, exp_flush, ln_heat, ln_sub_exp};

/// Which initial(-boundary) value problem to solve.
#[allow(non_camel_case_types, clippy::upper_case_acronyms)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProblemTag {
    /// Heat equation, diffusive dynamical boundary condition.
    HDD,
    /// Same with k = 0.
    HD,
    /// Laplace equation, diffusive dynamical boundary condition (ψ only).
    LDD,
    /// Laplace equation, dynamical boundary condition (ψ only).
    LD,
    /// Heat equation, diffusive Neumann condition (φ only).
    HDN,
    /// Heat equation, homogeneous Neumann condition (φ only).
    HhN,
    /// Heat equation, homogeneous Dirichlet condition (φ only).
    HD0,
    /// Heat equation with Dirichlet data u = ψ for all t > 0.
    HDpsi,
    /// Heat equation with Dirichlet data u = Ψ(t), the surface heat flow of ψ at rate θ.
    HDPsi,
    /// Harmonic extension of ψ (time independent).
    LDpsi,
    /// Harmonic extension of Ψ(t).
    LDPsi,
}

impl ProblemTag {
    pub const ALL: [ProblemTag; 11] = [
        ProblemTag::HDD,
        ProblemTag::HD,
        ProblemTag::LDD,
        ProblemTag::LD,
        ProblemTag::HDN,
        ProblemTag::HhN,
        ProblemTag::HD0,
        ProblemTag::HDpsi,
        ProblemTag::HDPsi,
        ProblemTag::LDpsi,
        ProblemTag::LDPsi,
    ];

    pub fn needs_theta(self) -> bool {
        matches!(self, ProblemTag::HDPsi | ProblemTag::LDPsi)
    }
}

/// Interior datum after validation.
enum Interior {
    None,
    Sep { tan: Field, normal: NormalProfile },
    Power(f64),
}

fn interior(phi: &InteriorData, dim: usize) -> Result<Interior> {
    Ok(match phi {
        InteriorData::Zero => Interior::None,
        InteriorData::Constant { c } if *c == 0.0 => Interior::None,
        InteriorData::Constant { c } => Interior::Sep { tan: Field::Const(*c), normal: NormalProfile::One },
        InteriorData::Separable { weight, tangential, normal } => {
            check_normal(normal)?;
            let tan = Field::from_tangential(tangential, *weight, dim)?;
            if tan.is_zero() {
                Interior::None
            } else {
                Interior::Sep { tan, normal: normal.clone() }
            }
        }
        InteriorData::PowerCutoff { alpha } => {
            if dim != 2 {
                return Err(Error::Unsupported("power_cutoff data require N = 2".into()));
            }
            if !(*alpha < 2.0) {
                return Err(Error::Unsupported(format!("power_cutoff needs alpha < N, got {alpha}")));
            }
            Interior::Power(*alpha)
        }
    })
}

fn check_normal(n: &NormalProfile) -> Result<()> {
    let ok = match n {
        NormalProfile::One => true,
        NormalProfile::HeatGaussian1d { m, b } => m.is_finite() && *b > 0.0,
        NormalProfile::Indicator { lo, hi } => *lo >= 0.0 && hi.is_none_or(|h| h > *lo),
        NormalProfile::NormalDerivative { b } => *b > 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("invalid normal profile {n:?}")))
    }
}

/// [lo, hi) when the normal profile is an interval indicator.
fn normal_interval(n: &NormalProfile) -> Option<(f64, Option<f64>)> {
    match n {
        NormalProfile::One => Some((0.0, None)),
        NormalProfile::Indicator { lo, hi } => Some((*lo, *hi)),
        _ => None,
    }
}

fn normal_density(n: &NormalProfile, y: f64) -> f64 {
    match n {
        NormalProfile::HeatGaussian1d { m, b } => exp_flush(ln_heat(1, (y - m) * (y - m), *b)),
        NormalProfile::NormalDerivative { b } => y / (2.0 * b) * exp_flush(ln_heat(1, y * y, *b)),
        _ => unreachable!("interval profiles are integrated in closed form"),
    }
}

/// Breakpoints covering the numerical support of a Gaussian normal profile, plus
/// the points of `extra` that fall inside it.
fn normal_points(n: &NormalProfile, extra: &[f64]) -> Vec<f64> {
    let (lo, peak, hi) = match n {
        NormalProfile::HeatGaussian1d { m, b } => {
            let w = (280.0 * b).sqrt();
            ((m - w).max(0.0), *m, m + w)
        }
        NormalProfile::NormalDerivative { b } => (0.0, (2.0 * b).sqrt(), (300.0 * b).sqrt()),
        _ => unreachable!("interval profiles are integrated in closed form"),
    };
    if hi <= 0.0 {
        return Vec::new();
    }
    let mut pts = vec![lo, hi];
    for &p in std::iter::once(&peak).chain(extra) {
        if p > lo && p < hi {
            pts.push(p);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Breakpoints resolving a boundary layer of squared width `w2` in y_N.
fn near_boundary(w2: f64) -> [f64; 3] {
    let w = w2.sqrt();
    [w, 4.0 * w, 16.0 * w]
}

/// ∫ f(y) dy over the support of a Gaussian normal profile with density weighting,
/// where each f(y) is itself a quadrature result.
fn outer<F: FnMut(f64) -> Result<QuadResult>>(
    mut inner: F,
    n: &NormalProfile,
    points: &[f64],
    spec: &QuadSpec,
) -> Result<QuadResult> {
    if points.len() < 2 {
        return Ok(QuadResult::zero());
    }
    let mut failure = None;
    let mut worst: f64 = 0.0;
    let mut all = true;
    let mut r = integrate_breakpoints(
        |y| {
            if failure.is_some() {
                return 0.0;
            }
            let d = normal_density(n, y);
            if d == 0.0 {
                return 0.0;
            }
            match inner(y) {
                Ok(q) => {
                    worst = worst.max(d * q.error_estimate);
                    all &= q.converged;
                    d * q.value
                }
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        points,
        spec,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    r.error_estimate += (points[points.len() - 1] - points[0]) * worst;
    r.converged &= all;
    Ok(r)
}

/// ∫_Ω [Γ_N(x−y, b) + reflect·Γ_N(x−y*, b)] φ(y) dy; reflect = −1 gives G₀, +1 gives G_N.
fn heat_term(
    b: f64,
    reflect: f64,
    tan: &Field,
    normal: &NormalProfile,
    xp: &[f64],
    xn: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    let tv = tan.conv(xp, b);
    if tv == 0.0 {
        return Ok(QuadResult::zero());
    }
    let nv = match normal_interval(normal) {
        Some((lo, hi)) => {
            let s = 2.0 * b.sqrt();
            let up = |h: Option<f64>, z: f64| h.map_or(1.0, |h| erf((h + z) / s));
            let direct = 0.5 * (up(hi, -xn) - erf((lo - xn) / s));
            let mirror = 0.5 * (up(hi, xn) - erf((lo + xn) / s));
            QuadResult::exact(direct + reflect * mirror)
        }
        None => {
            // the kernel has width √b around y = x_N
            let w = b.sqrt();
            let pts = normal_points(normal, &[xn, xn - 4.0 * w, xn + 4.0 * w, xn - 17.0 * w, xn + 17.0 * w]);
            if pts.len() < 2 {
                return Ok(QuadResult::zero());
            }
            integrate_breakpoints(
                |y| {
                    let base = exp_flush(ln_heat(1, (xn - y) * (xn - y), b));
                    let e = -(xn * y) / b;
                    let factor = if reflect < 0.0 { -e.exp_m1() } else { 1.0 + e.exp() };
                    normal_density(normal, y) * base * factor
                },
                &pts,
                spec,
            )?
        }
    };
    Ok(nv.scaled(tv))
}

/// ∫_Ω H(x, y, t) φ(y) dy.
fn h_interior(p: &Params, tan: &Field, normal: &NormalProfile, xp: &[f64], xn: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    let ln_t = |sigma: f64| tan.ln_unit(xp, sigma);
    let r = match normal_interval(normal) {
        Some((lo, hi)) => {
            // ∫ g dy_N = 2[Γ₁(a_lo, u/ε) − Γ₁(a_hi, u/ε)] since g = −2∂_aΓ₁(a, u/ε).
            let (eps, inv_d, kd) = (p.epsilon, 1.0 / p.delta, p.kappa / p.delta);
            let a0 = xn + lo;
            let c = eps * (a0 + 0.5 * t * inv_d).powi(2) / 4.0;
            layer(
                t,
                c,
                |u| {
                    let v = u / eps;
                    let shift = (t - u) * inv_d;
                    let a = a0 + shift;
                    let upper = hi.map_or(f64::NEG_INFINITY, |h| {
                        let ah = xn + h + shift;
                        ln_heat(1, ah * ah, v)
                    });
                    ln_t(v + kd * (t - u)) + LN_2 + ln_sub_exp(ln_heat(1, a * a, v), upper)
                },
                spec,
            )?
        }
        None => {
            let pts = normal_points(normal, &near_boundary(t / p.epsilon + (t / p.delta).powi(2)));
            outer(|y| h_layer(p, xn + y, t, ln_t, spec), normal, &pts, spec)?
        }
    };
    Ok(r.scaled(tan.weight()))
}

/// ∫_Ω Ĥ(x, y, t) φ(y) dy.
#[allow(clippy::too_many_arguments)]
fn hhat_interior(
    eps: f64,
    kappa: f64,
    tan: &Field,
    normal: &NormalProfile,
    xp: &[f64],
    xn: f64,
    t: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    let ln_t = |sigma: f64| tan.ln_unit(xp, sigma);
    let r = match normal_interval(normal) {
        Some((lo, hi)) => {
            let b = t / eps;
            let a0 = xn + lo;
            let tau_max = (a0 * a0 + 180.0 * b).sqrt() - a0;
            let pts: Vec<f64> = (0..=4).map(|i| tau_max * i as f64 / 4.0).collect();
            integrate_breakpoints(
                |tau| {
                    let a = a0 + tau;
                    let upper = hi.map_or(f64::NEG_INFINITY, |h| {
                        let ah = xn + h + tau;
                        ln_heat(1, ah * ah, b)
                    });
                    exp_flush(ln_t(b + kappa * tau) + LN_2 + ln_sub_exp(ln_heat(1, a * a, b), upper))
                },
                &pts,
                spec,
            )?
        }
        None => outer(
            |y| hhat_integral(eps, kappa, xn + y, t, ln_t, spec),
            normal,
            &normal_points(normal, &near_boundary(t / eps)),
            spec,
        )?,
    };
    Ok(r.scaled(tan.weight()))
}

/// (1/ε) ∫_{∂Ω} H(x, y, t) ψ(y) dσ.
fn h_boundary(p: &Params, f: &Field, xp: &[f64], xn: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    if f.is_zero() {
        return Ok(QuadResult::zero());
    }
    let r = h_layer(p, xn, t, |sigma| f.ln_unit(xp, sigma), spec)?;
    Ok(r.scaled(f.weight() / p.epsilon))
}

/// (1/ε) ∫_{∂Ω} H̃(x, y, t) ψ(y) dσ with 1/θ = `inv_theta`.
fn h_tilde_boundary(eps: f64, inv_theta: f64, f: &Field, xp: &[f64], xn: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    if f.is_zero() {
        return Ok(QuadResult::zero());
    }
    let r = h_tilde_layer(eps, inv_theta, xn, t, |sigma| f.ln_unit(xp, sigma), spec)?;
    Ok(r.scaled(f.weight() / eps))
}

/// ∫ P(x′ − y′, a) (Γ_{N-1}(·, shift) ∗ ψ)(y′) dy′, by subordination; a = 0 returns the trace.
fn poisson_boundary(a: f64, shift: f64, f: &Field, xp: &[f64], spec: &QuadSpec) -> Result<QuadResult> {
    if f.is_zero() {
        return Ok(QuadResult::zero());
    }
    if a == 0.0 {
        return Ok(QuadResult::exact(f.conv(xp, shift)));
    }
    let r = subordinate(a, shift, f.scale(xp), f.unit_at_infinity(), |sigma| f.ln_unit(xp, sigma), spec)?;
    Ok(r.scaled(f.weight()))
}

/// ∫_{B₁⁺} G(x, y, t) |y|^{-α} dy in polar coordinates around the origin (N = 2).
fn power_cutoff(p: &Params, alpha: f64, xp: &[f64], xn: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    let x1 = xp[0];
    let b = t / p.epsilon;
    let g = |y1: f64, yn: f64| -> Result<f64> {
        let r = (x1 - y1).abs();
        let h = h_layer(p, xn + yn, t, |sigma| ln_heat(1, r * r, sigma), spec)?;
        Ok(g0_radial(2, r, xn, yn, b) + h.value / p.delta)
    };
    // the kernel is even in y₁ when x′ = 0
    let (w_hi, fold) = if x1 == 0.0 { (0.5 * PI, 2.0) } else { (PI, 1.0) };
    let mut failure = None;
    let mut all = true;
    let mut angular = |rho: f64| -> f64 {
        if failure.is_some() {
            return 0.0;
        }
        let q = integrate(
            |w: f64| match g(rho * w.cos(), rho * w.sin()) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            w_hi,
            spec,
        );
        match q {
            Ok(q) => {
                all &= q.converged;
                fold * q.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let rho_lo = 1e-6 * b.sqrt().min(1.0);
    let core = PI * g(0.0, 0.0)? * rho_lo.powf(2.0 - alpha) / (2.0 - alpha);
    let mut r = integrate_log(|rho| (1.0 - alpha) * rho.ln() + angular(rho).ln(), rho_lo, 1.0, 1.0, spec)?;
    if let Some(e) = failure {
        return Err(e);
    }
    r.converged &= all;
    Ok(r.shifted(core))
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("time {t} must be positive"));
    }
    Ok(())
}

fn theta_of(tag: ProblemTag, theta: Option<f64>) -> Result<f64> {
    match theta {
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(Error::Config(format!("{tag:?} needs a positive theta"))),
    }
}

/// u(x, t) for the problem `tag` with data (φ, ψ).
///
/// Laplace-type problems (LDD, LD, LDpsi, LDPsi) use ψ only, the heat problems
/// without a dynamical boundary (HDN, HhN, HD0) use φ only, and HDpsi/HDPsi use
/// φ together with ψ as Dirichlet data. HD is HDD with k forced to 0.
pub fn solve(
    tag: ProblemTag,
    p: &Params,
    theta: Option<f64>,
    data: &InitialData,
    x: &HalfSpacePoint,
    t: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    p.validate()?;
    spec.validate()?;
    check_time(t)?;
    let dim = p.dim;
    let xp = x.tangential_vec(dim)?;
    let xn = x.normal;
    let phi = || interior(&data.interior, dim);
    let psi = || Field::from_boundary(&data.boundary, dim);
    let b = t / p.epsilon;
    let dirichlet = |phi: &Interior, tag: ProblemTag| -> Result<QuadResult> {
        match phi {
            Interior::None => Ok(QuadResult::zero()),
            Interior::Sep { tan, normal } => heat_term(b, -1.0, tan, normal, &xp, xn, spec),
            Interior::Power(_) => Err(Error::Unsupported(format!("power_cutoff data are not supported for {tag:?}"))),
        }
    };
    match tag {
        ProblemTag::HDD | ProblemTag::HD => {
            let q = if tag == ProblemTag::HD { p.with_kappa(0.0) } else { *p };
            let bulk = match phi()? {
                Interior::None => QuadResult::zero(),
                Interior::Sep { tan, normal } => {
                    let h = h_interior(&q, &tan, &normal, &xp, xn, t, spec)?;
                    heat_term(b, -1.0, &tan, &normal, &xp, xn, spec)?.plus(h.scaled(1.0 / q.delta))
                }
                Interior::Power(alpha) => power_cutoff(&q, alpha, &xp, xn, t, spec)?,
            };
            Ok(bulk.plus(h_boundary(&q, &psi()?, &xp, xn, t, spec)?))
        }
        ProblemTag::HD0 => dirichlet(&phi()?, tag),
        ProblemTag::HhN => match phi()? {
            Interior::Sep { tan, normal } => heat_term(b, 1.0, &tan, &normal, &xp, xn, spec),
            other => dirichlet(&other, tag),
        },
        ProblemTag::HDN => match phi()? {
            Interior::Sep { tan, normal } => {
                let h = hhat_interior(p.epsilon, p.kappa, &tan, &normal, &xp, xn, t, spec)?;
                Ok(heat_term(b, -1.0, &tan, &normal, &xp, xn, spec)?.plus(h))
            }
            other => dirichlet(&other, tag),
        },
        ProblemTag::HDpsi | ProblemTag::HDPsi => {
            let inv_theta = if tag == ProblemTag::HDPsi { 1.0 / theta_of(tag, theta)? } else { 0.0 };
            let bulk = dirichlet(&phi()?, tag)?;
            Ok(bulk.plus(h_tilde_boundary(p.epsilon, inv_theta, &psi()?, &xp, xn, t, spec)?))
        }
        ProblemTag::LDD => poisson_boundary(xn + t / p.delta, p.kappa * t / p.delta, &psi()?, &xp, spec),
        ProblemTag::LD => poisson_boundary(xn + t / p.delta, 0.0, &psi()?, &xp, spec),
        ProblemTag::LDpsi => poisson_boundary(xn, 0.0, &psi()?, &xp, spec),
        ProblemTag::LDPsi => poisson_boundary(xn, t / theta_of(tag, theta)?, &psi()?, &xp, spec),
    }
}

/// `solve` on every (point, time) pair, row-major in the points.
pub fn solve_grid(
    tag: ProblemTag,
    p: &Params,
    theta: Option<f64>,
    data: &InitialData,
    points: &[HalfSpacePoint],
    ts: &[f64],
    spec: &QuadSpec,
) -> Result<Vec<QuadResult>> {
    let n = ts.len();
    (0..points.len() * n)
        .into_par_iter()
        .map(|i| solve(tag, p, theta, data, &points[i / n], ts[i % n], spec))
        .collect()
}

/// u(x′, 0, t), the boundary trace.
pub fn boundary_trace(
    tag: ProblemTag,
    p: &Params,
    theta: Option<f64>,
    data: &InitialData,
    xprime: Tangential,
    t: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    let x = HalfSpacePoint { tangential: xprime, normal: 0.0 };
    solve(tag, p, theta, data, &x, t, spec)
}

/// φ(x) for interior data (the pointwise value of the datum itself).
pub fn interior_value(phi: &InteriorData, x: &HalfSpacePoint, dim: usize) -> Result<f64> {
    let xp = x.tangential_vec(dim)?;
    let xn = x.normal;
    Ok(match interior(phi, dim)? {
        Interior::None => 0.0,
        Interior::Sep { tan, normal } => {
            let n = match normal {
                NormalProfile::One => 1.0,
                NormalProfile::Indicator { lo, hi } => {
                    if xn >= lo && hi.is_none_or(|h| xn < h) {
                        1.0
                    } else {
                        0.0
                    }
                }
                other => normal_density(&other, xn),
            };
            tan.conv(&xp, 0.0) * n
        }
        Interior::Power(alpha) => {
            let r = (xp[0] * xp[0] + xn * xn).sqrt();
            if xn > 0.0 && r < 1.0 {
                r.powf(-alpha)
            } else {
                0.0
            }
        }
    })
}

/// ψ(x′) for boundary data.
pub fn boundary_value(psi: &BoundaryData, xprime: &[f64], dim: usize) -> Result<f64> {
    if xprime.len() + 1 != dim {
        return domain("x′ has wrong dimension");
    }
    Ok(match psi {
        BoundaryData::Zero => 0.0,
        BoundaryData::Constant { c } => *c,
        BoundaryData::HeatGaussian { .. } => Field::from_boundary(psi, dim)?.conv(xprime, 0.0),
        BoundaryData::Indicator { radius, weight } => {
            if xprime[0].abs() < *radius {
                *weight
            } else {
                0.0
            }
        }
        BoundaryData::ComplementIndicator { radius, weight } => {
            if xprime[0].abs() >= *radius {
                *weight
            } else {
                0.0
            }
        }
    })
}

/// φ(x, t) = −∂_{x_N} Γ_N(x, t/ε) = (ε x_N / 2t) Γ_N(x, t/ε).
pub fn witness_phi(epsilon: f64, x: &HalfSpacePoint, t: f64, dim: usize) -> Result<f64> {
    check_time(t)?;
    if !(epsilon > 0.0) {
        return domain(format!("epsilon = {epsilon} must be positive"));
    }
    let xp = x.tangential_vec(dim)?;
    let r2 = xp.iter().map(|v| v * v).sum::<f64>() + x.normal * x.normal;
    let b = t / epsilon;
    Ok(x.normal / (2.0 * b) * exp_flush(ln_heat(dim, r2, b)))
}

/// The witness φ(·, s) as interior data (ψ = 0).
pub fn witness_data(epsilon: f64, s: f64, dim: usize) -> InitialData {
    let b = s / epsilon;
    InitialData::interior_only(InteriorData::Separable {
        weight: 1.0,
        tangential: crate::data::TangentialProfile::HeatGaussian { center: vec![0.0; dim - 1], a: b },
        normal: NormalProfile::NormalDerivative { b },
    })
}

/// ∫ P(x′ − y′, a) ψ(y′) dy′ evaluated directly (no subordination), for N ∈ {2, 3}.
pub fn poisson_extension(psi: &BoundaryData, xprime: &[f64], a: f64, dim: usize, spec: &QuadSpec) -> Result<QuadResult> {
    if !(a > 0.0) {
        return domain(format!("normal offset {a} must be positive"));
    }
    if xprime.len() + 1 != dim {
        return domain("x′ has wrong dimension");
    }
    let ball = |x: f64, rho: f64| ((rho - x) / a).atan() / PI + ((rho + x) / a).atan() / PI;
    match Field::from_boundary(psi, dim)? {
        Field::Zero => Ok(QuadResult::zero()),
        Field::Const(c) => Ok(QuadResult::exact(c)),
        Field::Ball { radius, w } => Ok(QuadResult::exact(w * ball(xprime[0], radius))),
        Field::Outside { radius, w } => Ok(QuadResult::exact(w * (1.0 - ball(xprime[0], radius)))),
        Field::Gauss { center, a: g, w } => {
            let d2: f64 = xprime.iter().zip(&center).map(|(p, q)| (p - q) * (p - q)).sum();
            let d = d2.sqrt();
            let width = (280.0 * g).sqrt();
            let r = match dim {
                2 => {
                    let mut pts = vec![-width, 0.0, width];
                    if d < width {
                        pts.push(d);
                        pts.push(-d);
                    }
                    pts.sort_by(f64::total_cmp);
                    pts.dedup();
                    integrate_breakpoints(
                        |z| poisson_radial(2, (d - z).abs(), a) * exp_flush(ln_heat(1, z * z, g)),
                        &pts,
                        spec,
                    )?
                }
                3 => integrate_2d(
                    |rho, phi| {
                        let r2 = d * d + rho * rho - 2.0 * d * rho * phi.cos();
                        2.0 * rho * poisson_radial(3, r2.max(0.0).sqrt(), a) * exp_flush(ln_heat(2, rho * rho, g))
                    },
                    (0.0, width),
                    (0.0, PI),
                    spec,
                )?,
                _ => return Err(Error::Unsupported("direct Poisson extension is implemented for N ≤ 3".into())),
            };
            Ok(r.scaled(w))
        }
    }
}
