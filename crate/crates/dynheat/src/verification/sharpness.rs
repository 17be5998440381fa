//! Boundary trace of u for the singular datum φ = |x|^{-α} χ_{B₁⁺}, ψ = 0, N = 2.
//! For α > 1 the trace blows up like t^{-(α-1)/2}; for α < 1 it returns to ψ = 0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BoundaryData, InitialData, InteriorData};
use crate::error::{domain, Result};
use crate::kernel::{Params, Tangential};
use crate::quadrature::QuadSpec;
use crate::solution::{boundary_trace, ProblemTag};
use crate::verification::rates::{fit_rate, RateFit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceConfig {
    pub params: Params,
    /// Blow-up exponent case, α > 1.
    pub alpha_blowup: f64,
    pub blowup_times: Vec<f64>,
    pub slope_tolerance: f64,
    /// Vanishing case, α < 1.
    pub alpha_vanish: f64,
    pub vanish_time: f64,
    pub vanish_threshold: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            params: Params { epsilon: 1.0, delta: 1.0, kappa: 1.0, dim: 2 },
            alpha_blowup: 1.5,
            blowup_times: vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
            slope_tolerance: 0.1,
            alpha_vanish: 0.5,
            vanish_time: 1e-3,
            vanish_threshold: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub rows: Vec<(f64, f64)>,
    pub fit: RateFit,
    /// −(α − 1)/2
    pub predicted_slope: f64,
    pub blowup_pass: bool,
    pub vanish_value: f64,
    pub vanish_pass: bool,
    pub flagged: bool,
}

fn power(alpha: f64) -> InitialData {
    InitialData::new(InteriorData::PowerCutoff { alpha }, BoundaryData::Zero)
}

/// u(0, 0, t) for φ = |x|^{-α} χ_{B₁⁺}.
pub fn power_trace(p: &Params, alpha: f64, t: f64, spec: &QuadSpec) -> Result<crate::QuadResult> {
    boundary_trace(ProblemTag::HDD, p, None, &power(alpha), Tangential::Vector(vec![0.0]), t, spec)
}

pub fn trace_sharpness(cfg: &TraceConfig, spec: &QuadSpec) -> Result<TraceReport> {
    if cfg.params.dim != 2 {
        return domain("the power-cutoff datum is defined for N = 2");
    }
    if !(cfg.alpha_blowup > 1.0 && cfg.alpha_blowup < 2.0 && cfg.alpha_vanish > 0.0 && cfg.alpha_vanish < 1.0) {
        return domain("need 1 < alpha_blowup < 2 and 0 < alpha_vanish < 1");
    }
    let vals: Vec<_> = cfg
        .blowup_times
        .par_iter()
        .map(|&t| power_trace(&cfg.params, cfg.alpha_blowup, t, spec))
        .collect::<Result<_>>()?;
    let rows: Vec<(f64, f64)> = cfg.blowup_times.iter().zip(&vals).map(|(&t, q)| (t, q.value)).collect();
    let fit = fit_rate(&rows)?;
    let predicted_slope = -(cfg.alpha_blowup - 1.0) / 2.0;
    let vanish = power_trace(&cfg.params, cfg.alpha_vanish, cfg.vanish_time, spec)?;
    Ok(TraceReport {
        blowup_pass: (fit.slope - predicted_slope).abs() <= cfg.slope_tolerance,
        rows,
        fit,
        predicted_slope,
        vanish_value: vanish.value,
        vanish_pass: vanish.value.abs() < cfg.vanish_threshold,
        flagged: !vanish.converged || vals.iter().any(|q| !q.converged),
    })
}
