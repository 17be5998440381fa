//! Closed family of admissible initial data (φ, ψ).
//!
//! Every member has a closed-form tangential heat convolution, so solution
//! integrals over ℝ^{N-1} never need quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{erf, erfc, exp_flush, ln_heat};

fn one() -> f64 {
    1.0
}

/// Tangential factor φ′(y′) of a separable interior datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TangentialProfile {
    Uniform,
    /// Γ_{N-1}(y′ − center, a).
    HeatGaussian { center: Vec<f64>, a: f64 },
}

/// Normal factor n(y_N) of a separable interior datum, y_N > 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormalProfile {
    One,
    /// Γ₁(y_N − m, b).
    HeatGaussian1d { m: f64, b: f64 },
    /// χ_{[lo, hi)}(y_N); `hi = None` means +∞.
    Indicator { lo: f64, hi: Option<f64> },
    /// −∂_y Γ₁(y_N, b) = (y_N / 2b) Γ₁(y_N, b), the normal factor of the witness.
    NormalDerivative { b: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteriorData {
    Zero,
    Constant {
        c: f64,
    },
    /// weight · φ′(y′) · n(y_N).
    Separable {
        #[serde(default = "one")]
        weight: f64,
        tangential: TangentialProfile,
        normal: NormalProfile,
    },
    /// |y|^{-α} χ_{B₁⁺}(y), N = 2 only.
    PowerCutoff { alpha: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryData {
    Zero,
    Constant {
        c: f64,
    },
    /// weight · Γ_{N-1}(y′ − center, a).
    HeatGaussian {
        center: Vec<f64>,
        a: f64,
        #[serde(default = "one")]
        weight: f64,
    },
    /// weight · χ_{|y′| < radius}, N = 2 only.
    Indicator {
        radius: f64,
        #[serde(default = "one")]
        weight: f64,
    },
    /// weight · χ_{|y′| ≥ radius}, N = 2 only.
    ComplementIndicator {
        radius: f64,
        #[serde(default = "one")]
        weight: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub interior: InteriorData,
    pub boundary: BoundaryData,
}

impl InitialData {
    pub fn new(interior: InteriorData, boundary: BoundaryData) -> Self {
        Self { interior, boundary }
    }

    pub fn zero() -> Self {
        Self::new(InteriorData::Zero, BoundaryData::Zero)
    }

    pub fn constants(phi: f64, psi: f64) -> Self {
        Self::new(InteriorData::Constant { c: phi }, BoundaryData::Constant { c: psi })
    }

    pub fn boundary_only(psi: BoundaryData) -> Self {
        Self::new(InteriorData::Zero, psi)
    }

    pub fn interior_only(phi: InteriorData) -> Self {
        Self::new(phi, BoundaryData::Zero)
    }
}

impl InteriorData {
    /// Γ_{N-1}(y′ − center, a) · Γ₁(y_N − m, b).
    pub fn gaussian(center: Vec<f64>, a: f64, m: f64, b: f64) -> Self {
        InteriorData::Separable {
            weight: 1.0,
            tangential: TangentialProfile::HeatGaussian { center, a },
            normal: NormalProfile::HeatGaussian1d { m, b },
        }
    }
}

impl BoundaryData {
    pub fn gaussian(center: Vec<f64>, a: f64) -> Self {
        BoundaryData::HeatGaussian { center, a, weight: 1.0 }
    }
}

/// A tangential field with closed-form heat convolution.
#[derive(Clone, Debug)]
pub(crate) enum Field {
    Zero,
    Const(f64),
    Gauss { center: Vec<f64>, a: f64, w: f64 },
    Ball { radius: f64, w: f64 },
    Outside { radius: f64, w: f64 },
}

impl Field {
    pub(crate) fn from_boundary(psi: &BoundaryData, dim: usize) -> Result<Self> {
        Ok(match psi {
            BoundaryData::Zero => Field::Zero,
            BoundaryData::Constant { c } => Field::Const(*c),
            BoundaryData::HeatGaussian { center, a, weight } => {
                check_center(center, *a, dim)?;
                Field::Gauss { center: center.clone(), a: *a, w: *weight }
            }
            BoundaryData::Indicator { radius, weight } => {
                check_line(dim, *radius)?;
                Field::Ball { radius: *radius, w: *weight }
            }
            BoundaryData::ComplementIndicator { radius, weight } => {
                check_line(dim, *radius)?;
                Field::Outside { radius: *radius, w: *weight }
            }
        })
    }

    pub(crate) fn from_tangential(profile: &TangentialProfile, weight: f64, dim: usize) -> Result<Self> {
        Ok(match profile {
            TangentialProfile::Uniform => Field::Const(weight),
            TangentialProfile::HeatGaussian { center, a } => {
                check_center(center, *a, dim)?;
                Field::Gauss { center: center.clone(), a: *a, w: weight }
            }
        })
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.weight() == 0.0
    }

    /// Overall factor w, so that conv = w · exp(ln_unit).
    pub(crate) fn weight(&self) -> f64 {
        match self {
            Field::Zero => 0.0,
            Field::Const(c) => *c,
            Field::Gauss { w, .. } | Field::Ball { w, .. } | Field::Outside { w, .. } => *w,
        }
    }

    /// Heat convolution (Γ_{N-1}(·, σ) ∗ field)(x′); σ = 0 returns the field itself.
    pub(crate) fn conv(&self, x: &[f64], sigma: f64) -> f64 {
        match self {
            Field::Zero => 0.0,
            _ => self.weight() * exp_flush(self.ln_unit(x, sigma)),
        }
    }

    /// ln(conv / w).
    pub(crate) fn ln_unit(&self, x: &[f64], sigma: f64) -> f64 {
        match self {
            Field::Zero => f64::NEG_INFINITY,
            Field::Const(_) => 0.0,
            Field::Gauss { center, a, .. } => {
                let r2: f64 = x.iter().zip(center).map(|(p, q)| (p - q) * (p - q)).sum();
                ln_heat(center.len(), r2, sigma + a)
            }
            Field::Ball { radius, .. } => ball_conv(x[0], *radius, sigma).ln(),
            Field::Outside { radius, .. } => outside_conv(x[0], *radius, sigma).ln(),
        }
    }

    /// Limit of conv / w as σ → ∞.
    pub(crate) fn unit_at_infinity(&self) -> f64 {
        match self {
            Field::Const(_) | Field::Outside { .. } => 1.0,
            _ => 0.0,
        }
    }

    /// Squared length beyond which the convolution at x′ is in its far-field regime.
    pub(crate) fn scale(&self, x: &[f64]) -> f64 {
        match self {
            Field::Zero | Field::Const(_) => 0.0,
            Field::Gauss { center, a, .. } => {
                x.iter().zip(center).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() + a
            }
            Field::Ball { radius, .. } | Field::Outside { radius, .. } => (x[0].abs() + radius).powi(2),
        }
    }
}

fn ball_conv(x: f64, radius: f64, sigma: f64) -> f64 {
    let x = x.abs();
    if sigma == 0.0 {
        return if x < radius { 1.0 } else { 0.0 };
    }
    let s = 2.0 * sigma.sqrt();
    if x > radius {
        0.5 * (erfc((x - radius) / s) - erfc((x + radius) / s))
    } else {
        0.5 * (erf((radius - x) / s) + erf((radius + x) / s))
    }
}

fn outside_conv(x: f64, radius: f64, sigma: f64) -> f64 {
    let x = x.abs();
    if sigma == 0.0 {
        return if x < radius { 0.0 } else { 1.0 };
    }
    let s = 2.0 * sigma.sqrt();
    if x > radius {
        1.0 - ball_conv(x, radius, sigma)
    } else {
        0.5 * (erfc((radius - x) / s) + erfc((radius + x) / s))
    }
}

fn check_center(center: &[f64], a: f64, dim: usize) -> Result<()> {
    if center.len() != dim - 1 {
        return Err(Error::Unsupported(format!(
            "gaussian center has {} components, expected {}",
            center.len(),
            dim - 1
        )));
    }
    if !(a > 0.0) {
        return Err(Error::Unsupported(format!("gaussian parameter a = {a} must be positive")));
    }
    Ok(())
}

fn check_line(dim: usize, radius: f64) -> Result<()> {
    if dim != 2 {
        return Err(Error::Unsupported("indicator data require N = 2".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::Unsupported("indicator radius must be positive".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_unknown_keys() {
        let d = InitialData::new(
            InteriorData::gaussian(vec![0.0], 0.5, 1.0, 0.25),
            BoundaryData::ComplementIndicator { radius: 1.0, weight: 1.0 },
        );
        let s = serde_json::to_string(&d).unwrap();
        let back: InitialData = serde_json::from_str(&s).unwrap();
        assert_eq!(d, back);
        let bad = r#"{"interior":{"kind":"constant","c":1,"extra":2},"boundary":{"kind":"zero"}}"#;
        assert!(serde_json::from_str::<InitialData>(bad).is_err());
        let bad2 = r#"{"interior":{"kind":"zero"},"boundary":{"kind":"zero"},"x":1}"#;
        assert!(serde_json::from_str::<InitialData>(bad2).is_err());
    }

    #[test]
    fn ball_convolution_limits() {
        let f = Field::Ball { radius: 1.0, w: 1.0 };
        assert!((f.conv(&[0.0], 1e-12) - 1.0).abs() < 1e-12);
        assert!(f.conv(&[0.0], 1e8) < 1e-3);
        let g = Field::Outside { radius: 1.0, w: 1.0 };
        for &(x, s) in &[(0.3, 0.7), (2.5, 0.01), (-4.0, 3.0), (0.999, 1e-6)] {
            assert!((f.conv(&[x], s) + g.conv(&[x], s) - 1.0).abs() < 1e-15);
        }
        // far tails keep relative accuracy
        let far = f.conv(&[8.0], 0.5);
        let exact = 0.5 * (libm::erfc(7.0 / 2f64.sqrt()) - libm::erfc(9.0 / 2f64.sqrt()));
        assert!((far / exact - 1.0).abs() < 1e-10, "{far} vs {exact}");
        let inner = g.conv(&[0.0], 1e-3);
        assert!(inner > 0.0 && inner < 1e-100);
    }
}
