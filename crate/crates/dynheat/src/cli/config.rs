//! JSON run configuration. Every block is optional and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{BoundaryData, InitialData};
use crate::error::{Error, Result};
use crate::fd::{FdGrid, Window};
use crate::kernel::Params;
use crate::quadrature::QuadSpec;
use crate::solution::ProblemTag;
use crate::verification::{Identity, IdentityGrid, LimitExperiment, LimitKind, SandwichConfig, TraceConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    /// Full kernel G of the dynamic problem.
    G,
    /// Boundary-interaction part H.
    H,
    /// Dirichlet heat kernel at time t/ε.
    G0,
    /// Neumann heat kernel at time t/ε.
    Gn,
    /// Poisson kernel P(r, x_N).
    Poisson,
    #[value(name = "g_ldd")]
    GLdd,
    #[value(name = "g_hdn")]
    GHdn,
    #[value(name = "h_hat")]
    HHat,
    #[value(name = "h_tilde")]
    HTilde,
}

impl KernelName {
    pub fn name(self) -> &'static str {
        match self {
            KernelName::G => "g",
            KernelName::H => "h",
            KernelName::G0 => "g0",
            KernelName::Gn => "gn",
            KernelName::Poisson => "poisson",
            KernelName::GLdd => "g_ldd",
            KernelName::GHdn => "g_hdn",
            KernelName::HHat => "h_hat",
            KernelName::HTilde => "h_tilde",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelQuery {
    pub kernel: KernelName,
    /// Tangential distance |x′ − y′|.
    pub r: f64,
    pub x_n: f64,
    pub y_n: f64,
    pub t: f64,
}

impl Default for KernelQuery {
    fn default() -> Self {
        KernelQuery { kernel: KernelName::G, r: 0.0, x_n: 1.0, y_n: 0.0, t: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub x: Vec<f64>,
    pub x_n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveBlock {
    pub tag: ProblemTag,
    pub data: InitialData,
    pub points: Vec<PointSpec>,
    pub times: Vec<f64>,
}

impl Default for SolveBlock {
    fn default() -> Self {
        SolveBlock {
            tag: ProblemTag::HDD,
            data: InitialData::boundary_only(BoundaryData::gaussian(vec![0.0], 0.5)),
            points: vec![PointSpec { x: vec![0.0], x_n: 0.5 }],
            times: vec![0.25, 0.5, 1.0],
        }
    }
}

/// A limit experiment by name (defaults) or spelled out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LimitEntry {
    Kind(LimitKind),
    Full(Box<LimitExperiment>),
}

impl LimitEntry {
    pub fn experiment(&self) -> LimitExperiment {
        match self {
            LimitEntry::Kind(k) => LimitExperiment::default_for(*k),
            LimitEntry::Full(e) => (**e).clone(),
        }
    }
}

/// (p, q) exponents; a missing value means ∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormPair {
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
}

impl NormPair {
    pub fn exponents(&self) -> (f64, f64) {
        (self.p.unwrap_or(f64::INFINITY), self.q.unwrap_or(f64::INFINITY))
    }

    pub fn label(&self) -> String {
        let f = |v: Option<f64>| v.map_or("inf".to_string(), |x| format!("{x}"));
        format!("({},{})", f(self.p), f(self.q))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpnormBlock {
    pub cases: Vec<NormPair>,
    pub t_ladder: Vec<f64>,
    pub slope_tolerance: f64,
    pub constant_tolerance: f64,
    pub witness_tolerance: f64,
}

impl Default for OpnormBlock {
    fn default() -> Self {
        OpnormBlock {
            cases: vec![
                NormPair { p: None, q: None },
                NormPair { p: Some(2.0), q: Some(2.0) },
                NormPair { p: Some(1.0), q: None },
                NormPair { p: Some(1.0), q: Some(2.0) },
            ],
            t_ladder: vec![1.0, 2.0, 4.0, 8.0],
            slope_tolerance: 0.1,
            constant_tolerance: 1e-6,
            witness_tolerance: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefinementBlock {
    pub base: FdGrid,
    pub levels: usize,
    pub t: f64,
    pub order_min: f64,
    pub order_max: f64,
}

impl Default for RefinementBlock {
    fn default() -> Self {
        RefinementBlock {
            base: FdGrid { nx: 64, nz: 64, dt: 4e-3, ..FdGrid::default() },
            levels: 3,
            t: 1.0,
            order_min: 1.7,
            order_max: 2.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleBlock {
    pub grid: FdGrid,
    pub window: Window,
    pub times: Vec<f64>,
    pub data: InitialData,
    pub tolerance: f64,
    pub refinement: RefinementBlock,
}

impl Default for OracleBlock {
    fn default() -> Self {
        OracleBlock {
            grid: FdGrid::default(),
            window: Window::default(),
            times: vec![0.25, 0.5, 1.0],
            data: InitialData::boundary_only(BoundaryData::gaussian(vec![0.0], 0.5)),
            tolerance: 2e-2,
            refinement: RefinementBlock::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: Params,
    pub theta: Option<f64>,
    pub quad: QuadSpec,
    pub kernel: KernelQuery,
    pub identities: IdentityGrid,
    /// Subset for identity-suite; empty means all.
    pub identity_list: Vec<Identity>,
    pub solve: SolveBlock,
    pub sandwich: SandwichConfig,
    pub trace: TraceConfig,
    /// Experiments for limit-rate; empty means every default experiment.
    pub limits: Vec<LimitEntry>,
    pub opnorm: OpnormBlock,
    pub oracle: OracleBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: Params { epsilon: 1.0, delta: 1.0, kappa: 1.0, dim: 2 },
            theta: None,
            quad: QuadSpec::default(),
            kernel: KernelQuery::default(),
            identities: IdentityGrid::default(),
            identity_list: Vec::new(),
            solve: SolveBlock::default(),
            sandwich: SandwichConfig::default(),
            trace: TraceConfig::default(),
            limits: Vec::new(),
            opnorm: OpnormBlock::default(),
            oracle: OracleBlock::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                RunConfig::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.quad.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(th) = self.theta {
            if !(th > 0.0) {
                return Err(Error::Config(format!("theta = {th} must be positive")));
            }
        }
        for l in &self.limits {
            l.experiment().validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        self.oracle.grid.validate()?;
        self.oracle.refinement.base.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"paramz": {}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"kernel": {"kernel": "g", "rr": 1}}"#).is_err());
    }

    #[test]
    fn limits_by_name_or_in_full() {
        let full = serde_json::to_string(&LimitExperiment::default_for(LimitKind::KTo0)).unwrap();
        let cfg = RunConfig::from_json(&format!(r#"{{"limits": ["eps_to_0", {full}]}}"#)).unwrap();
        assert_eq!(cfg.limits.len(), 2);
        assert_eq!(cfg.limits[1].experiment().which, LimitKind::KTo0);
        cfg.validate().unwrap();
    }

    #[test]
    fn default_round_trips() {
        let text = serde_json::to_string(&RunConfig::default()).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), RunConfig::default());
    }
}
