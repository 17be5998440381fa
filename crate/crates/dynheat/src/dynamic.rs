//! Kernels of the dynamical boundary problem: H, G, H̃, Ĥ, G_LDD, G_HDN,
//! their marginal masses, and the region/envelope description of H.
//!
//! Every τ-integral is written in the variable u = t − τ (or τ itself for the
//! semi-infinite kernels) and integrated in z = ln u. The integrands behave like
//! u^{-m} exp(−c/u) at small u, which becomes a smooth double-exponential cliff in
//! z; the lower limit is placed where exp(−c/u) < e^{-700}.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernel::{g0_radial, tangential_distance, HalfSpacePoint, Params};
use crate::quadrature::{integrate, integrate_breakpoints, integrate_log, QuadResult, QuadSpec};
use crate::special::{erf, exp_flush, ln_heat, sphere_area};

/// Panel width (in ln u) for log-substituted integrals.
const LOG_PANEL: f64 = 2.5;

/// Arguments of a kernel after radial reduction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub r: f64,
    pub x_n: f64,
    pub y_n: f64,
    pub t: f64,
}

impl KernelPoint {
    pub fn new(r: f64, x_n: f64, y_n: f64, t: f64) -> Result<Self> {
        if !(r >= 0.0 && x_n >= 0.0 && y_n >= 0.0) {
            return domain("kernel point needs r, x_N, y_N ≥ 0");
        }
        if !(t > 0.0 && t.is_finite()) {
            return domain(format!("time {t} must be positive"));
        }
        Ok(KernelPoint { r, x_n, y_n, t })
    }

    pub fn from_points(x: &HalfSpacePoint, y: &HalfSpacePoint, t: f64, dim: usize) -> Result<Self> {
        Self::new(tangential_distance(x, y, dim)?, x.normal, y.normal, t)
    }

    pub fn s(&self) -> f64 {
        self.x_n + self.y_n
    }
}

/// ∫₀ᵗ exp(ln_f(u)) du where ln_f(u) ≲ −c/u as u → 0.
pub(crate) fn layer<F: FnMut(f64) -> f64>(t: f64, c: f64, ln_f: F, spec: &QuadSpec) -> Result<QuadResult> {
    let lo = (c / 700.0).min(1e-3 * t).max(1e-32 * t);
    integrate_log(ln_f, lo, t, LOG_PANEL, spec)
}

/// ∫₀ᵗ T(σ(u)) g(u; s) du with σ(u) = u/ε + (k/δ)(t − u) and
/// g = ε a/u · Γ₁(a, u/ε), a = s + (t − u)/δ.
/// `ln_tan` returns ln T(σ). With T = Γ_{N-1}(r, ·) this is H(x, y, t).
pub(crate) fn h_layer<T: Fn(f64) -> f64>(p: &Params, s: f64, t: f64, ln_tan: T, spec: &QuadSpec) -> Result<QuadResult> {
    let (eps, inv_d, kd) = (p.epsilon, 1.0 / p.delta, p.kappa / p.delta);
    let a_min = s + 0.5 * t * inv_d;
    let c = eps * a_min * a_min / 4.0;
    let ln_eps = eps.ln();
    layer(
        t,
        c,
        |u| {
            let a = s + (t - u) * inv_d;
            let sigma = u / eps + kd * (t - u);
            ln_tan(sigma) + ln_eps + a.ln() - u.ln() + ln_heat(1, a * a, u / eps)
        },
        spec,
    )
}

/// ∫₀ᵗ T(u/ε + (t − u)/θ) · ε x_N/u · Γ₁(x_N, u/ε) du (the H̃ integrand); `inv_theta` may be 0.
pub(crate) fn h_tilde_layer<T: Fn(f64) -> f64>(
    eps: f64,
    inv_theta: f64,
    x_n: f64,
    t: f64,
    ln_tan: T,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    if x_n == 0.0 {
        return Ok(QuadResult::zero());
    }
    let c = eps * x_n * x_n / 4.0;
    let base = eps.ln() + x_n.ln();
    layer(
        t,
        c,
        |u| {
            let sigma = u / eps + inv_theta * (t - u);
            ln_tan(sigma) + base - u.ln() + ln_heat(1, x_n * x_n, u / eps)
        },
        spec,
    )
}

/// ∫₀^∞ T(shift + τ) (a/τ) Γ₁(a, τ) dτ, the subordination of the Poisson kernel.
/// `scale` is a length² beyond which T is in its algebraic regime; `t_inf` = lim T.
pub(crate) fn subordinate<T: Fn(f64) -> f64>(
    a: f64,
    shift: f64,
    scale: f64,
    t_inf: f64,
    ln_tan: T,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    if !(a > 0.0) {
        return Err(Error::Singular(format!("normal offset {a} must be positive")));
    }
    let lo = a * a / 2800.0;
    let hi = 1e13 * (a * a).max(scale).max(shift);
    let ln_a = a.ln();
    let mut r = integrate_log(|tau| ln_tan(shift + tau) + ln_a - tau.ln() + ln_heat(1, a * a, tau), lo, hi, 3.0, spec)?;
    // ∫_hi^∞ (a/τ) Γ₁(a, τ) dτ = erf(a / 2√hi); T is nearly constant there.
    let mass = erf(a / (2.0 * hi.sqrt()));
    let t_hi = exp_flush(ln_tan(shift + hi));
    r.value += t_hi * mass;
    r.error_estimate += (t_hi - t_inf).abs() * mass;
    Ok(r)
}

/// ∫₀^∞ T(t/ε + kτ) · (s + τ)(ε/t) Γ₁(s + τ, t/ε) dτ (the Ĥ integrand).
pub(crate) fn hhat_integral<T: Fn(f64) -> f64>(
    eps: f64,
    kappa: f64,
    s: f64,
    t: f64,
    ln_tan: T,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    let b = t / eps;
    // beyond tau_max the Gaussian factor is e^{-45} below its value at τ = 0
    let tau_max = (s * s + 180.0 * b).sqrt() - s;
    let pts: Vec<f64> = (0..=4).map(|i| tau_max * i as f64 / 4.0).collect();
    integrate_breakpoints(
        |tau| {
            let w = s + tau;
            let l = ln_tan(b + kappa * tau) + (w / b).ln() + ln_heat(1, w * w, b);
            exp_flush(l)
        },
        &pts,
        spec,
    )
}

/// ln Γ_{N-1}(r, σ).
#[inline]
fn ln_gauss(dim: usize, r: f64) -> impl Fn(f64) -> f64 {
    let r2 = r * r;
    move |sigma| ln_heat(dim - 1, r2, sigma)
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("time {t} must be positive"));
    }
    Ok(())
}

/// H at radial arguments (r = |x′ − y′|, s = x_N + y_N).
pub fn h_kernel_radial(p: &Params, r: f64, s: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    p.validate()?;
    check_t(t)?;
    h_layer(p, s, t, ln_gauss(p.dim, r), spec)
}

/// H(x, y, t).
pub fn h_kernel(p: &Params, x: &HalfSpacePoint, y: &HalfSpacePoint, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    let k = KernelPoint::from_points(x, y, t, p.dim)?;
    h_kernel_radial(p, k.r, k.s(), t, spec)
}

/// G = G₀(x, y, t/ε) + H/δ at radial arguments.
pub fn g_kernel_radial(p: &Params, k: &KernelPoint, spec: &QuadSpec) -> Result<QuadResult> {
    let h = h_kernel_radial(p, k.r, k.s(), k.t, spec)?;
    Ok(h.scaled(1.0 / p.delta).shifted(g0_radial(p.dim, k.r, k.x_n, k.y_n, k.t / p.epsilon)))
}

/// G(x, y, t).
pub fn g_kernel(p: &Params, x: &HalfSpacePoint, y: &HalfSpacePoint, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    g_kernel_radial(p, &KernelPoint::from_points(x, y, t, p.dim)?, spec)
}

/// H̃ at radial arguments; `inv_theta = 1/θ`, and 0 gives the θ = ∞ kernel.
pub fn h_tilde_radial(eps: f64, inv_theta: f64, dim: usize, r: f64, x_n: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    check_t(t)?;
    if !(eps > 0.0 && inv_theta >= 0.0) {
        return domain("h_tilde needs epsilon > 0 and theta > 0");
    }
    h_tilde_layer(eps, inv_theta, x_n, t, ln_gauss(dim, r), spec)
}

/// H̃(x, y, t) for boundary points y (y_N is ignored).
pub fn h_tilde_kernel(
    p: &Params,
    theta: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    t: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    if !(theta > 0.0) {
        return domain(format!("theta = {theta} must be positive"));
    }
    let r = tangential_distance(x, y, p.dim)?;
    h_tilde_radial(p.epsilon, 1.0 / theta, p.dim, r, x.normal, t, spec)
}

/// G_LDD at radial arguments; t = 0 is allowed when x_N + y_N > 0.
pub fn g_ldd_radial(delta: f64, kappa: f64, dim: usize, r: f64, s: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    if !(delta > 0.0 && kappa >= 0.0 && t >= 0.0) {
        return domain("g_ldd needs delta > 0, kappa ≥ 0, t ≥ 0");
    }
    let a = s + t / delta;
    if !(a > 0.0) {
        return Err(Error::Singular("x_N + y_N + t/δ = 0: the kernel is a boundary Dirac mass".into()));
    }
    subordinate(a, kappa * t / delta, r * r, 0.0, ln_gauss(dim, r), spec)
}

/// G_LDD(x, y, t).
pub fn g_ldd_kernel(
    delta: f64,
    kappa: f64,
    dim: usize,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    t: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    let r = tangential_distance(x, y, dim)?;
    g_ldd_radial(delta, kappa, dim, r, x.normal + y.normal, t, spec)
}

/// Ĥ at radial arguments.
pub fn h_hat_radial(eps: f64, kappa: f64, dim: usize, r: f64, s: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    check_t(t)?;
    if !(eps > 0.0 && kappa >= 0.0) {
        return domain("h_hat needs epsilon > 0, kappa ≥ 0");
    }
    hhat_integral(eps, kappa, s, t, ln_gauss(dim, r), spec)
}

/// G_HDN = G₀(x, y, t/ε) + Ĥ at radial arguments.
pub fn g_hdn_radial(eps: f64, kappa: f64, dim: usize, k: &KernelPoint, spec: &QuadSpec) -> Result<QuadResult> {
    let h = h_hat_radial(eps, kappa, dim, k.r, k.s(), k.t, spec)?;
    Ok(h.shifted(g0_radial(dim, k.r, k.x_n, k.y_n, k.t / eps)))
}

/// G_HDN(x, y, t).
pub fn g_hdn_kernel(
    eps: f64,
    kappa: f64,
    dim: usize,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    t: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    g_hdn_radial(eps, kappa, dim, &KernelPoint::from_points(x, y, t, dim)?, spec)
}

/// ∫_Ω G₀(x, y, t/ε) dy = erf(x_N / 2√(t/ε)).
pub fn g0_mass(eps: f64, x_n: f64, t: f64) -> f64 {
    erf(x_n / (2.0 * (t / eps).sqrt()))
}

/// (1/δ)∫_Ω H dy in closed 1D form: (2/δ)∫₀ᵗ Γ₁(x_N + τ/δ, (t−τ)/ε) dτ.
pub fn bulk_marginal_closed(p: &Params, x_n: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    p.validate()?;
    check_t(t)?;
    let (eps, inv_d) = (p.epsilon, 1.0 / p.delta);
    let a_min = x_n + 0.5 * t * inv_d;
    let base = (2.0 * inv_d).ln();
    layer(
        t,
        eps * a_min * a_min / 4.0,
        |u| {
            let a = x_n + (t - u) * inv_d;
            base + ln_heat(1, a * a, u / eps)
        },
        spec,
    )
}

/// (1/ε)∫_{∂Ω} H dσ in closed 1D form: −(2/ε)∫₀ᵗ ∂_{x_N}Γ₁(x_N + τ/δ, (t−τ)/ε) dτ.
pub fn boundary_marginal_closed(p: &Params, x_n: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    p.validate()?;
    check_t(t)?;
    let (eps, inv_d) = (p.epsilon, 1.0 / p.delta);
    let a_min = x_n + 0.5 * t * inv_d;
    layer(
        t,
        eps * a_min * a_min / 4.0,
        |u| {
            let a = x_n + (t - u) * inv_d;
            a.ln() - u.ln() + ln_heat(1, a * a, u / eps)
        },
        spec,
    )
}

/// (1/δ)∫_Ω H dy by 2D quadrature in (y_N, τ); the tangential integral of the
/// Gaussian factor is 1.
pub fn bulk_marginal_quadrature(p: &Params, x_n: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    p.validate()?;
    check_t(t)?;
    let b = t / p.epsilon;
    let y_max = (x_n * x_n + 160.0 * b).sqrt() - x_n + t / p.delta;
    let mut failure = None;
    let r = integrate(
        |y| match h_layer(p, x_n + y, t, |_| 0.0, spec) {
            Ok(v) => v.value,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        y_max,
        spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.scaled(1.0 / p.delta))
}

/// (1/ε)∫_{∂Ω} H dσ by 2D quadrature in (|y′|, τ) with the full kernel.
pub fn boundary_marginal_quadrature(p: &Params, x_n: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    p.validate()?;
    check_t(t)?;
    let sigma_max = (t / p.epsilon).max(p.kappa * t / p.delta);
    let r_max = (4.0 * sigma_max * 50.0).sqrt();
    let area = sphere_area(p.dim - 1);
    let m = p.dim as i32 - 2;
    let mut failure = None;
    let res = integrate(
        |r| match h_kernel_radial(p, r, x_n, t, spec) {
            Ok(v) => v.value * r.powi(m),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        r_max,
        spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(res?.scaled(area / p.epsilon))
}

/// ∫_Ω G₀(x, y, t/ε) dy by quadrature in y_N.
pub fn g0_mass_quadrature(p: &Params, x_n: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    let b = t / p.epsilon;
    if x_n == 0.0 {
        return Ok(QuadResult::zero());
    }
    let w = (4.0 * b * 45.0).sqrt();
    let lo = (x_n - w).max(0.0);
    let pts = if lo > 0.0 { vec![0.0, lo, x_n, x_n + w] } else { vec![0.0, x_n, x_n + w] };
    integrate_breakpoints(
        |y| exp_flush(ln_heat(1, (x_n - y) * (x_n - y), b)) * -(-(x_n * y) / b).exp_m1(),
        &pts,
        spec,
    )
}

/// Total mass ∫_Ω G dy + (δ/ε)∫_{∂Ω} G dσ, every piece by quadrature.
pub fn total_mass(p: &Params, x_n: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    let g0 = g0_mass_quadrature(p, x_n, t, spec)?;
    let bulk = bulk_marginal_quadrature(p, x_n, t, spec)?;
    let bdry = boundary_marginal_quadrature(p, x_n, t, spec)?;
    Ok(g0.plus(bulk).plus(bdry))
}

/// ∫_{∂Ω} G_LDD(x, y, t) dσ(y) by radial quadrature with a mapped tail.
pub fn ldd_mass(delta: f64, kappa: f64, dim: usize, x_n: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    let area = sphere_area(dim - 1);
    let m = dim as i32 - 2;
    let mut failure = None;
    let r = crate::quadrature::integrate_semi_infinite(
        |r| match g_ldd_radial(delta, kappa, dim, r, x_n, t, spec) {
            Ok(v) => v.value * r.powi(m),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        spec,
        crate::quadrature::Tail::Map,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.scaled(area))
}

/// ∫_Ω G_HDN(x, y, t) dy. The y_N-integral of the Ĥ integrand is done in closed
/// form (−2∂Γ₁ integrates to 2Γ₁) and the tangential one by radial quadrature.
pub fn hdn_mass(eps: f64, kappa: f64, dim: usize, x_n: f64, t: f64, spec: &QuadSpec) -> Result<QuadResult> {
    let p = Params::new(eps, 1.0, kappa, dim)?;
    let g0 = g0_mass_quadrature(&p, x_n, t, spec)?;
    let b = t / eps;
    let tau_max = (x_n * x_n + 180.0 * b).sqrt() - x_n;
    let sigma_max = b + kappa * tau_max;
    let r_max = (4.0 * sigma_max * 50.0).sqrt();
    let area = sphere_area(dim - 1);
    let m = dim as i32 - 2;
    let pts: Vec<f64> = (0..=4).map(|i| tau_max * i as f64 / 4.0).collect();
    let mut failure = None;
    let res = integrate(
        |r| {
            let r2 = r * r;
            let inner = integrate_breakpoints(
                |tau| {
                    let w = x_n + tau;
                    2.0 * exp_flush(ln_heat(dim - 1, r2, b + kappa * tau) + ln_heat(1, w * w, b))
                },
                &pts,
                spec,
            );
            match inner {
                Ok(v) => v.value * r.powi(m),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        r_max,
        spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(g0.plus(res?.scaled(area)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionTag {
    D1,
    D2,
    D3,
    D4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub tag: RegionTag,
    pub lambda_big: f64,
    pub lambda_small: f64,
}

/// Upper and lower envelopes of H; the log fields survive underflow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub upper: f64,
    pub lower: f64,
    pub ln_upper: f64,
    pub ln_lower: f64,
}

fn check_region_params(p: &Params, t: f64) -> Result<()> {
    p.validate()?;
    check_t(t)?;
    if p.kappa == 0.0 {
        return Err(Error::Unsupported("region decomposition requires kappa > 0".into()));
    }
    Ok(())
}

/// Region from (s = x_N + y_N, t).
pub fn classify_region_radial(p: &Params, s: f64, t: f64) -> Result<Region> {
    check_region_params(p, t)?;
    let (eps, delta) = (p.epsilon, p.delta);
    let near = eps * s * s < 6.0 * t;
    let tag = if near && t < 12.0 * delta * delta / eps {
        RegionTag::D1
    } else if near {
        RegionTag::D2
    } else if s + t / delta < delta / eps {
        RegionTag::D3
    } else {
        RegionTag::D4
    };
    Ok(Region { tag, lambda_big: delta.max(p.kappa * eps), lambda_small: delta.min(p.kappa * eps) })
}

pub fn classify_region(p: &Params, x: &HalfSpacePoint, y: &HalfSpacePoint, t: f64) -> Result<Region> {
    classify_region_radial(p, x.normal + y.normal, t)
}

pub fn envelope_radial(p: &Params, r: f64, s: f64, t: f64) -> Result<Envelope> {
    let reg = classify_region_radial(p, s, t)?;
    let (eps, delta, d) = (p.epsilon, p.delta, p.dim);
    let ln_profile = |time: f64| match reg.tag {
        RegionTag::D1 => 0.0,
        RegionTag::D2 | RegionTag::D4 => ln_heat(1, s * s, time),
        RegionTag::D3 => (s + t / delta).ln() + ln_heat(1, s * s, time),
    };
    let ln_upper = ln_profile(t / eps) + ln_heat(d - 1, r * r, reg.lambda_big * t / (eps * delta));
    let ln_lower = ln_profile(t / (2.0 * eps)) + ln_heat(d - 1, r * r, reg.lambda_small * t / (eps * delta));
    Ok(Envelope { upper: exp_flush(ln_upper), lower: exp_flush(ln_lower), ln_upper, ln_lower })
}

pub fn envelope(p: &Params, x: &HalfSpacePoint, y: &HalfSpacePoint, t: f64) -> Result<Envelope> {
    let r = tangential_distance(x, y, p.dim)?;
    envelope_radial(p, r, x.normal + y.normal, t)
}

/// H on an (x_N, t) grid at fixed (r, y_N); row-major in x_N. Parallel, with
/// output identical to sequential evaluation.
pub fn h_kernel_grid(p: &Params, r: f64, y_n: f64, x_ns: &[f64], ts: &[f64], spec: &QuadSpec) -> Result<Vec<QuadResult>> {
    let jobs: Vec<(f64, f64)> = x_ns.iter().flat_map(|&x| ts.iter().map(move |&t| (x, t))).collect();
    jobs.par_iter().map(|&(x, t)| h_kernel_radial(p, r, x + y_n, t, spec)).collect()
}

/// G on an (x_N, t) grid at fixed (r, y_N); row-major in x_N.
pub fn g_kernel_grid(p: &Params, r: f64, y_n: f64, x_ns: &[f64], ts: &[f64], spec: &QuadSpec) -> Result<Vec<QuadResult>> {
    let jobs: Vec<(f64, f64)> = x_ns.iter().flat_map(|&x| ts.iter().map(move |&t| (x, t))).collect();
    jobs.par_iter()
        .map(|&(x, t)| g_kernel_radial(p, &KernelPoint::new(r, x, y_n, t)?, spec))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{gn_radial, poisson_radial};
    use std::f64::consts::PI;

    fn tight() -> QuadSpec {
        QuadSpec::new(1e-12, 1e-300)
    }

    #[test]
    fn marginals_match_closed_forms() {
        let p = Params::new(1.0, 1.0, 1.0, 2).unwrap();
        let s = tight();
        let bq = bulk_marginal_quadrature(&p, 0.3, 0.5, &s).unwrap().value;
        let bc = bulk_marginal_closed(&p, 0.3, 0.5, &s).unwrap().value;
        assert!((bq - bc).abs() < 1e-8 * bc, "{bq} {bc}");
        let sq = boundary_marginal_quadrature(&p, 0.3, 0.5, &s).unwrap().value;
        let sc = boundary_marginal_closed(&p, 0.3, 0.5, &s).unwrap().value;
        assert!((sq - sc).abs() < 1e-8 * sc, "{sq} {sc}");
        assert!((g0_mass(1.0, 0.3, 0.5) + bc + sc - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mass_example_point() {
        let p = Params::new(2.0, 0.5, 1.0, 2).unwrap();
        let m = total_mass(&p, 0.7, 1.3, &tight()).unwrap();
        assert!((m.value - 1.0).abs() < 1e-8, "{}", m.value);
    }

    #[test]
    fn ldd_reduces_to_poisson() {
        let v = g_ldd_radial(1.0, 0.0, 2, 0.0, 1.0, 1.0, &tight()).unwrap().value;
        assert!((v - 0.159_154_9).abs() < 1e-7);
        assert!((v - 0.5 / PI).abs() < 1e-11);
        let v = g_ldd_radial(0.7, 0.0, 3, 1.3, 0.4, 0.2, &tight()).unwrap().value;
        let e = poisson_radial(3, 1.3, 0.4 + 0.2 / 0.7);
        assert!((v - e).abs() < 1e-10 * e);
        assert!(matches!(g_ldd_radial(1.0, 1.0, 2, 0.0, 0.0, 0.0, &tight()), Err(Error::Singular(_))));
    }

    #[test]
    fn ldd_and_hdn_masses() {
        let m = ldd_mass(1.0, 1.0, 2, 0.5, 0.8, &tight()).unwrap().value;
        assert!((m - 1.0).abs() < 1e-8, "{m}");
        let m = hdn_mass(1.0, 1.0, 2, 0.5, 1.0, &tight()).unwrap().value;
        assert!((m - 1.0).abs() < 1e-8, "{m}");
    }

    #[test]
    fn hdn_reduces_to_neumann() {
        let k = KernelPoint::new(0.4, 0.3, 1.1, 0.6).unwrap();
        let v = g_hdn_radial(1.5, 0.0, 2, &k, &tight()).unwrap().value;
        let e = gn_radial(2, 0.4, 0.3, 1.1, 0.6 / 1.5);
        assert!((v - e).abs() < 1e-10 * e, "{v} {e}");
    }

    #[test]
    fn h_tilde_decays() {
        let v = h_tilde_radial(1.0, 1.0, 2, 0.0, 50.0, 1.0, &QuadSpec::default()).unwrap().value;
        assert!((0.0..1e-12).contains(&v));
    }

    #[test]
    fn regions_and_envelope() {
        let p = Params::new(1.0, 1.0, 1.0, 2).unwrap();
        assert_eq!(classify_region_radial(&p, 0.0, 1.0).unwrap().tag, RegionTag::D1);
        assert_eq!(classify_region_radial(&p, 0.0, 13.0).unwrap().tag, RegionTag::D2);
        assert_eq!(classify_region_radial(&p, 10.0, 1.0).unwrap().tag, RegionTag::D4);
        let q = Params::new(1.0, 100.0, 1.0, 2).unwrap();
        assert_eq!(classify_region_radial(&q, 3.0, 1.0).unwrap().tag, RegionTag::D3);
        assert!(classify_region_radial(&p.with_kappa(0.0), 0.0, 1.0).is_err());
        let e = envelope_radial(&p, 0.0, 0.0, 13.0).unwrap();
        let gauss = (4.0 * PI * 13.0f64).powf(-0.5);
        assert!((e.upper / gauss - (52.0 * PI).powf(-0.5)).abs() < 1e-15);
        assert!(((52.0 * PI).powf(-0.5) - 0.078_233).abs() < 1e-5);
        let e1 = envelope_radial(&p, 0.3, 0.1, 1.0).unwrap();
        assert!((e1.upper - (4.0 * PI).powf(-0.5) * (-0.09f64 / 4.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn grid_matches_pointwise() {
        let p = Params::new(1.0, 1.0, 1.0, 2).unwrap();
        let xs = [0.0, 0.5];
        let ts = [0.3, 1.0];
        let g = h_kernel_grid(&p, 0.2, 0.1, &xs, &ts, &QuadSpec::default()).unwrap();
        let v = h_kernel_radial(&p, 0.2, 0.6, 0.3, &QuadSpec::default()).unwrap();
        assert_eq!(g[2], v);
    }
}
