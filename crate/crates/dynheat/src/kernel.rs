//! Elementary closed-form kernels on the half-space Ω = ℝ^{N-1} × (0, ∞).

use serde::{Deserialize, Serialize};

use crate::data::{BoundaryData, Field};
use crate::error::{domain, Error, Result};
use crate::special::{exp_flush, ln_heat, poisson_constant};

/// (ε, δ, k, N). `kappa = 0` selects the boundary condition without surface diffusion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub epsilon: f64,
    pub delta: f64,
    pub kappa: f64,
    pub dim: usize,
}

impl Params {
    pub fn new(epsilon: f64, delta: f64, kappa: f64, dim: usize) -> Result<Self> {
        let p = Params { epsilon, delta, kappa, dim };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return domain(format!("epsilon = {} must be positive", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return domain(format!("delta = {} must be positive", self.delta));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return domain(format!("kappa = {} must be nonnegative", self.kappa));
        }
        if self.dim < 2 {
            return domain(format!("dim = {} must be at least 2", self.dim));
        }
        Ok(())
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }
}

/// Tangential coordinate. `Radius(r)` stands for the point (r, 0, …, 0) of ℝ^{N-1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tangential {
    Vector(Vec<f64>),
    Radius(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpacePoint {
    pub tangential: Tangential,
    pub normal: f64,
}

impl HalfSpacePoint {
    pub fn new(tangential: Vec<f64>, normal: f64) -> Result<Self> {
        if tangential.iter().any(|v| !v.is_finite()) {
            return domain("tangential coordinates must be finite");
        }
        check_normal(normal)?;
        Ok(Self { tangential: Tangential::Vector(tangential), normal })
    }

    pub fn radial(r: f64, normal: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return domain(format!("radius {r} must be nonnegative"));
        }
        check_normal(normal)?;
        Ok(Self { tangential: Tangential::Radius(r), normal })
    }

    /// Point of the 2D half-plane.
    pub fn planar(x: f64, normal: f64) -> Result<Self> {
        Self::new(vec![x], normal)
    }

    /// Tangential coordinates as a vector of length `dim - 1`.
    pub fn tangential_vec(&self, dim: usize) -> Result<Vec<f64>> {
        match &self.tangential {
            Tangential::Vector(v) => {
                if v.len() != dim - 1 {
                    return domain(format!("tangential vector has {} components, expected {}", v.len(), dim - 1));
                }
                Ok(v.clone())
            }
            Tangential::Radius(r) => {
                let mut v = vec![0.0; dim - 1];
                v[0] = *r;
                Ok(v)
            }
        }
    }
}

fn check_normal(normal: f64) -> Result<()> {
    if !(normal >= 0.0 && normal.is_finite()) {
        return domain(format!("normal coordinate {normal} must be nonnegative"));
    }
    Ok(())
}

/// |x′ − y′|.
pub fn tangential_distance(x: &HalfSpacePoint, y: &HalfSpacePoint, dim: usize) -> Result<f64> {
    if dim < 2 {
        return domain("dim must be at least 2");
    }
    if let (Tangential::Radius(a), Tangential::Radius(b)) = (&x.tangential, &y.tangential) {
        return Ok((a - b).abs());
    }
    let u = x.tangential_vec(dim)?;
    let v = y.tangential_vec(dim)?;
    Ok(u.iter().zip(&v).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("time {t} must be positive"));
    }
    Ok(())
}

/// Γ_d(x, t) = (4πt)^{-d/2} exp(−|x|²/4t).
pub fn gamma(d: usize, x: &[f64], t: f64) -> Result<f64> {
    if x.len() != d {
        return domain(format!("point has {} components, expected {d}", x.len()));
    }
    check_time(t)?;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok(exp_flush(ln_heat(d, r2, t)))
}

/// Γ_d at radius r.
pub fn gamma_radial(d: usize, r: f64, t: f64) -> Result<f64> {
    if d == 0 {
        return domain("d must be at least 1");
    }
    check_time(t)?;
    Ok(exp_flush(ln_heat(d, r * r, t)))
}

#[inline]
pub(crate) fn g0_radial(dim: usize, r: f64, xn: f64, yn: f64, t: f64) -> f64 {
    let base = exp_flush(ln_heat(dim - 1, r * r, t) + ln_heat(1, (xn - yn) * (xn - yn), t));
    base * -(-(xn * yn) / t).exp_m1()
}

#[inline]
pub(crate) fn gn_radial(dim: usize, r: f64, xn: f64, yn: f64, t: f64) -> f64 {
    let base = exp_flush(ln_heat(dim - 1, r * r, t) + ln_heat(1, (xn - yn) * (xn - yn), t));
    base * (1.0 + (-(xn * yn) / t).exp())
}

/// Dirichlet heat kernel Γ_N(x−y,t) − Γ_N(x−y*,t) in factored form.
pub fn dirichlet_kernel_g0(x: &HalfSpacePoint, y: &HalfSpacePoint, t: f64, dim: usize) -> Result<f64> {
    check_time(t)?;
    let r = tangential_distance(x, y, dim)?;
    Ok(g0_radial(dim, r, x.normal, y.normal, t))
}

/// Neumann heat kernel Γ_N(x−y,t) + Γ_N(x−y*,t).
pub fn neumann_kernel_gn(x: &HalfSpacePoint, y: &HalfSpacePoint, t: f64, dim: usize) -> Result<f64> {
    check_time(t)?;
    let r = tangential_distance(x, y, dim)?;
    Ok(gn_radial(dim, r, x.normal, y.normal, t))
}

#[inline]
pub(crate) fn poisson_radial(dim: usize, r: f64, xn: f64) -> f64 {
    poisson_constant(dim) * xn * (r * r + xn * xn).powf(-(dim as f64) / 2.0)
}

/// Half-space Poisson kernel c_N x_N |x|^{-N}.
pub fn poisson_kernel(offset: &Tangential, x_n: f64, dim: usize) -> Result<f64> {
    if dim < 2 {
        return domain("dim must be at least 2");
    }
    if !(x_n > 0.0) {
        return domain(format!("x_N = {x_n} must be positive"));
    }
    let r = match offset {
        Tangential::Radius(r) => *r,
        Tangential::Vector(v) => {
            if v.len() != dim - 1 {
                return domain("offset has wrong dimension");
            }
            v.iter().map(|a| a * a).sum::<f64>().sqrt()
        }
    };
    Ok(poisson_radial(dim, r, x_n))
}

/// Ψ(x′, t) = (Γ_{N-1}(·, t/θ) ∗ ψ)(x′).
pub fn surface_psi(psi: &BoundaryData, xprime: &[f64], t: f64, theta: f64, dim: usize) -> Result<f64> {
    check_time(t)?;
    if !(theta > 0.0) {
        return domain(format!("theta = {theta} must be positive"));
    }
    if xprime.len() != dim - 1 {
        return Err(Error::Domain("x′ has wrong dimension".into()));
    }
    let f = Field::from_boundary(psi, dim)?;
    Ok(f.conv(xprime, t / theta))
}

/// Rate law f_p of the k → ∞ limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateLaw {
    /// r^{-exponent}
    Power { exponent: f64 },
    /// r^{-exponent} log r
    PowerLog { exponent: f64 },
}

impl RateLaw {
    /// f_p for data in L^p, dimension N; threshold p_N = (N−1)/2.
    pub fn for_lp(p: f64, dim: usize) -> Self {
        let pn = (dim as f64 - 1.0) / 2.0;
        if (p - pn).abs() < 1e-12 {
            RateLaw::PowerLog { exponent: 1.0 }
        } else if p < pn {
            RateLaw::Power { exponent: 1.0 }
        } else {
            RateLaw::Power { exponent: (dim as f64 - 1.0) / (2.0 * p) }
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RateLaw::Power { exponent } => r.powf(-exponent),
            RateLaw::PowerLog { exponent } => r.powf(-exponent) * r.ln(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pt(x: f64, n: f64) -> HalfSpacePoint {
        HalfSpacePoint::planar(x, n).unwrap()
    }

    #[test]
    fn gamma_values() {
        assert!((gamma(1, &[0.0], 1.0).unwrap() - 0.282_094_791_8).abs() < 1e-10);
        assert!((gamma(2, &[0.0, 0.0], 0.25).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!(gamma(1, &[0.0], 0.0).is_err());
        assert!(gamma(1, &[0.0], -1.0).is_err());
    }

    #[test]
    fn dirichlet_and_neumann_values() {
        let x = pt(0.0, 1.0);
        let g0 = dirichlet_kernel_g0(&x, &x, 1.0, 2).unwrap();
        assert!((g0 - (1.0 - (-1.0f64).exp()) / (4.0 * PI)).abs() < 1e-15);
        assert!((g0 - 0.050_303_3).abs() < 1e-6);
        let gn = neumann_kernel_gn(&x, &x, 1.0, 2).unwrap();
        assert!((gn - (1.0 + (-1.0f64).exp()) / (4.0 * PI)).abs() < 1e-15);
        assert!((gn - 0.108_851_7).abs() < 1e-6);
        assert_eq!(dirichlet_kernel_g0(&pt(0.3, 0.0), &x, 0.7, 2).unwrap(), 0.0);
        let b1 = pt(0.2, 0.0);
        let b2 = pt(-0.5, 0.0);
        let two_gamma = 2.0 * gamma(2, &[0.7, 0.0], 0.4).unwrap();
        assert!((neumann_kernel_gn(&b1, &b2, 0.4, 2).unwrap() - two_gamma).abs() < 1e-16);
    }

    #[test]
    fn dirichlet_plus_neumann_is_twice_gamma() {
        for &(x1, xn, y1, yn, t) in &[(0.1, 0.4, -0.3, 1.2, 0.3), (2.0, 3.0, 0.0, 0.1, 5.0), (0.0, 0.01, 0.0, 0.02, 1e-3)] {
            let x = pt(x1, xn);
            let y = pt(y1, yn);
            let lhs = dirichlet_kernel_g0(&x, &y, t, 2).unwrap() + neumann_kernel_gn(&x, &y, t, 2).unwrap();
            let rhs = 2.0 * gamma(2, &[x1 - y1, xn - yn], t).unwrap();
            assert!((lhs - rhs).abs() <= 1e-14 * rhs);
        }
    }

    #[test]
    fn radial_and_vector_forms_agree() {
        let x = HalfSpacePoint::new(vec![0.3, 0.4], 0.2).unwrap();
        let y = HalfSpacePoint::radial(0.0, 0.7).unwrap();
        let r = tangential_distance(&x, &y, 3).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        let xr = HalfSpacePoint::radial(0.5, 0.2).unwrap();
        let a = dirichlet_kernel_g0(&x, &y, 0.9, 3).unwrap();
        let b = dirichlet_kernel_g0(&xr, &y, 0.9, 3).unwrap();
        assert!((a - b).abs() < 1e-16);
        assert!(tangential_distance(&x, &y, 2).is_err());
    }

    #[test]
    fn poisson_values() {
        assert!((poisson_kernel(&Tangential::Radius(0.0), 1.0, 2).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((poisson_kernel(&Tangential::Radius(0.0), 2.0, 2).unwrap() - 0.5 / PI).abs() < 1e-15);
        assert!(poisson_kernel(&Tangential::Radius(0.0), 0.0, 2).is_err());
    }

    #[test]
    fn surface_psi_values() {
        let one = BoundaryData::Constant { c: 1.0 };
        assert_eq!(surface_psi(&one, &[3.0], 2.0, 0.1, 2).unwrap(), 1.0);
        let g = BoundaryData::gaussian(vec![0.5], 0.3);
        let v = surface_psi(&g, &[0.1], 1.0, 2.0, 2).unwrap();
        assert!((v - gamma(1, &[-0.4], 0.8).unwrap()).abs() < 1e-16);
        let ind = BoundaryData::Indicator { radius: 1.0, weight: 1.0 };
        assert!((surface_psi(&ind, &[0.0], 1e-10, 1.0, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(surface_psi(&ind, &[0.0, 0.0], 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn rate_law_branches() {
        assert_eq!(RateLaw::for_lp(1.0, 2), RateLaw::Power { exponent: 0.5 });
        assert_eq!(RateLaw::for_lp(1.0, 3), RateLaw::PowerLog { exponent: 1.0 });
        assert_eq!(RateLaw::for_lp(1.5, 4), RateLaw::PowerLog { exponent: 1.0 });
        assert_eq!(RateLaw::for_lp(1.0, 4), RateLaw::Power { exponent: 1.0 });
        assert!((RateLaw::for_lp(2.0, 3).eval(16.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(1.0, 1.0, 0.0, 2).is_ok());
        assert!(Params::new(0.0, 1.0, 1.0, 2).is_err());
        assert!(Params::new(1.0, -1.0, 1.0, 2).is_err());
        assert!(Params::new(1.0, 1.0, -1.0, 2).is_err());
        assert!(Params::new(1.0, 1.0, 1.0, 1).is_err());
    }
}
