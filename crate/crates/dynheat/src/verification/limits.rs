//! Diffusion-limit experiments: sup over a probe set of |u_A − u_B| along a
//! parameter ladder, then a rate fit (or a plain limit check).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BoundaryData, InitialData, InteriorData, NormalProfile, TangentialProfile};
use crate::error::{Error, Result};
use crate::kernel::{HalfSpacePoint, Params, RateLaw};
use crate::quadrature::QuadSpec;
use crate::solution::{interior_value, solve, ProblemTag};

use super::rates::{fit_rate, log_corrected_spread, RateFit};

/// Minimum R² of an accepted rate fit.
pub const MIN_R_SQUARED: f64 = 0.98;
/// Relative noise allowed when checking that errors decrease along a ladder.
pub const LADDER_NOISE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LimitKind {
    #[serde(rename = "eps_to_0")]
    EpsTo0,
    #[serde(rename = "eps_to_inf")]
    EpsToInf,
    #[serde(rename = "k_to_0")]
    KTo0,
    #[serde(rename = "delta_to_0")]
    DeltaTo0,
    #[serde(rename = "delta_to_inf")]
    DeltaToInf,
    #[serde(rename = "k_to_inf_fp")]
    KToInfFp,
    #[serde(rename = "k_to_inf_theta")]
    KToInfTheta,
    #[serde(rename = "ldd_delta_to_0")]
    LddDeltaTo0,
    #[serde(rename = "ldd_k_to_inf")]
    LddKToInf,
    #[serde(rename = "ldd_delta_to_inf")]
    LddDeltaToInf,
    #[serde(rename = "hdn_eps_to_0")]
    HdnEpsTo0,
    #[serde(rename = "hdn_k_to_inf")]
    HdnKToInf,
    #[serde(rename = "hdn_k_to_0")]
    HdnKTo0,
    #[serde(rename = "hdpsi_eps_to_0")]
    HdpsiEpsTo0,
    #[serde(rename = "hdpsi_flow_theta_to_0")]
    FlowThetaTo0,
    #[serde(rename = "hdpsi_flow_theta_to_inf")]
    FlowThetaToInf,
    #[serde(rename = "hdpsi_flow_eps_to_0")]
    FlowEpsTo0,
    #[serde(rename = "hdpsi_flow_eps_to_inf")]
    FlowEpsToInf,
}

/// Parameter moved along the ladder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Varied {
    Epsilon,
    Delta,
    Kappa,
    /// k with δ = kθ.
    KappaCoupled,
    Theta,
}

/// What u_A is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reference {
    Tag(ProblemTag),
    Zero,
    /// The interior datum φ(x).
    Datum,
}

impl LimitKind {
    pub const ALL: [LimitKind; 18] = [
        LimitKind::EpsTo0,
        LimitKind::EpsToInf,
        LimitKind::KTo0,
        LimitKind::DeltaTo0,
        LimitKind::DeltaToInf,
        LimitKind::KToInfFp,
        LimitKind::KToInfTheta,
        LimitKind::LddDeltaTo0,
        LimitKind::LddKToInf,
        LimitKind::LddDeltaToInf,
        LimitKind::HdnEpsTo0,
        LimitKind::HdnKToInf,
        LimitKind::HdnKTo0,
        LimitKind::HdpsiEpsTo0,
        LimitKind::FlowThetaTo0,
        LimitKind::FlowThetaToInf,
        LimitKind::FlowEpsTo0,
        LimitKind::FlowEpsToInf,
    ];

    pub fn name(self) -> &'static str {
        use LimitKind::*;
        match self {
            EpsTo0 => "eps_to_0",
            EpsToInf => "eps_to_inf",
            KTo0 => "k_to_0",
            DeltaTo0 => "delta_to_0",
            DeltaToInf => "delta_to_inf",
            KToInfFp => "k_to_inf_fp",
            KToInfTheta => "k_to_inf_theta",
            LddDeltaTo0 => "ldd_delta_to_0",
            LddKToInf => "ldd_k_to_inf",
            LddDeltaToInf => "ldd_delta_to_inf",
            HdnEpsTo0 => "hdn_eps_to_0",
            HdnKToInf => "hdn_k_to_inf",
            HdnKTo0 => "hdn_k_to_0",
            HdpsiEpsTo0 => "hdpsi_eps_to_0",
            FlowThetaTo0 => "hdpsi_flow_theta_to_0",
            FlowThetaToInf => "hdpsi_flow_theta_to_inf",
            FlowEpsTo0 => "hdpsi_flow_eps_to_0",
            FlowEpsToInf => "hdpsi_flow_eps_to_inf",
        }
    }

    /// The statement being tested, in plain notation.
    pub fn claim(self) -> &'static str {
        use LimitKind::*;
        match self {
            EpsTo0 => "sup |u_HDD - u_LDD| over Omega_L x I = O(eps^1/2), eps -> 0",
            EpsToInf => "sup |u_HDD - phi| over K x (0,T) -> 0, eps -> inf",
            KTo0 => "sup |u_HDD - u_HD| over x_N + t/delta >= R, t <= T = O(k), k -> 0",
            DeltaTo0 => "sup |u_HDD - u_HDN| over Q(R) = O(delta), delta -> 0",
            DeltaToInf => "sup |u_HDD - u_HDpsi| over Omega_L^c x (0,T) = O(1/delta), delta -> inf",
            KToInfFp => "sup |u_HDD - u_HD0| over Q(R) = O(f_p(k)), k -> inf",
            KToInfTheta => "sup |u_HDD - u_HDPsi| over Omega x (0,T) = O(1/k), k -> inf, delta = k theta",
            LddDeltaTo0 => "sup |u_LDD| over Omega x (T,inf) = O(delta^((N-1)/p)), delta -> 0",
            LddKToInf => "sup |u_LDD| over Omega x (T,inf) = O(k^(-(N-1)/2p)), k -> inf",
            LddDeltaToInf => "sup |u_LDD - u_LDpsi| over Omega_L^c x (0,T) -> 0, delta -> inf",
            HdnEpsTo0 => "sup |u_HDN| over Omega x (T,inf) = O(eps^(N/2p)), eps -> 0",
            HdnKToInf => "sup |u_HDN - u_HD0| over Q(R) = O(f_p(k)), k -> inf",
            HdnKTo0 => "sup |u_HDN - u_HhN| over Q(R) = O(k), k -> 0",
            HdpsiEpsTo0 => "sup |u_HDpsi - u_LDpsi| over Omega_L x [T,inf) = O(eps^1/2), eps -> 0",
            FlowThetaTo0 => "sup |u_HDPsi - u_HD0| over Q(R) = O(f_p(1/theta)), theta -> 0",
            FlowThetaToInf => "sup |u_HDPsi - u_HDpsi| over Omega_L^c x (0,T) = O(1/theta), theta -> inf",
            FlowEpsTo0 => "sup |u_HDPsi - u_LDPsi| over Omega_L x (T,inf) = O(eps^1/2), eps -> 0",
            FlowEpsToInf => "sup |u_HDPsi - phi| over K x (0,T) -> 0, eps -> inf",
        }
    }

    pub fn varied(self) -> Varied {
        use LimitKind::*;
        match self {
            EpsTo0 | EpsToInf | HdnEpsTo0 | HdpsiEpsTo0 | FlowEpsTo0 | FlowEpsToInf => Varied::Epsilon,
            DeltaTo0 | DeltaToInf | LddDeltaTo0 | LddDeltaToInf => Varied::Delta,
            KTo0 | KToInfFp | LddKToInf | HdnKToInf | HdnKTo0 => Varied::Kappa,
            KToInfTheta => Varied::KappaCoupled,
            FlowThetaTo0 | FlowThetaToInf => Varied::Theta,
        }
    }

    /// (u_A, u_B).
    pub fn pair(self) -> (ProblemTag, Reference) {
        use LimitKind::*;
        use ProblemTag as P;
        use Reference::*;
        match self {
            EpsTo0 => (P::HDD, Tag(P::LDD)),
            EpsToInf => (P::HDD, Datum),
            KTo0 => (P::HDD, Tag(P::HD)),
            DeltaTo0 => (P::HDD, Tag(P::HDN)),
            DeltaToInf => (P::HDD, Tag(P::HDpsi)),
            KToInfFp => (P::HDD, Tag(P::HD0)),
            KToInfTheta => (P::HDD, Tag(P::HDPsi)),
            LddDeltaTo0 | LddKToInf => (P::LDD, Zero),
            LddDeltaToInf => (P::LDD, Tag(P::LDpsi)),
            HdnEpsTo0 => (P::HDN, Zero),
            HdnKToInf => (P::HDN, Tag(P::HD0)),
            HdnKTo0 => (P::HDN, Tag(P::HhN)),
            HdpsiEpsTo0 => (P::HDpsi, Tag(P::LDpsi)),
            FlowThetaTo0 => (P::HDPsi, Tag(P::HD0)),
            FlowThetaToInf => (P::HDPsi, Tag(P::HDpsi)),
            FlowEpsTo0 => (P::HDPsi, Tag(P::LDPsi)),
            FlowEpsToInf => (P::HDPsi, Datum),
        }
    }

    /// Whether the statement assumes L^p data with a finite p.
    pub fn needs_lp(self) -> bool {
        use LimitKind::*;
        matches!(self, KToInfFp | LddDeltaTo0 | LddKToInf | HdnEpsTo0 | HdnKToInf | FlowThetaTo0)
    }

    fn needs_theta(self) -> bool {
        matches!(self.varied(), Varied::KappaCoupled) || matches!(self.pair().0, ProblemTag::HDPsi)
    }
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LimitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LimitKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown limit experiment '{s}'")))
    }
}

/// Extra restriction of the probe grid coupling x_N and t.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeRegion {
    #[default]
    All,
    /// x_N + t > r.
    SumAbove { r: f64 },
    /// x_N + t/δ ≥ r, with δ of the current rung.
    ScaledSumAtLeast { r: f64 },
}

/// Grid of (|x′|, x_N, t) probes; the sup is a max over it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSet {
    pub radii: Vec<f64>,
    pub normals: Vec<f64>,
    pub times: Vec<f64>,
    #[serde(default)]
    pub region: ProbeRegion,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub r: f64,
    pub x_n: f64,
    pub t: f64,
}

impl ProbeSet {
    pub fn new(radii: &[f64], normals: &[f64], times: &[f64], region: ProbeRegion) -> Self {
        ProbeSet { radii: radii.to_vec(), normals: normals.to_vec(), times: times.to_vec(), region }
    }

    /// Probes in (r, x_N, t) lexicographic order.
    pub fn probes(&self, delta: f64) -> Vec<Probe> {
        let mut out = Vec::new();
        for &r in &self.radii {
            for &x_n in &self.normals {
                for &t in &self.times {
                    let keep = match self.region {
                        ProbeRegion::All => true,
                        ProbeRegion::SumAbove { r: big } => x_n + t > big,
                        ProbeRegion::ScaledSumAtLeast { r: big } => x_n + t / delta >= big,
                    };
                    if keep {
                        out.push(Probe { r, x_n, t });
                    }
                }
            }
        }
        out
    }

    /// Same extent with every axis' gaps bisected.
    pub fn refined(&self) -> Self {
        fn bisect(v: &[f64]) -> Vec<f64> {
            let mut out = Vec::with_capacity(2 * v.len());
            for (i, &x) in v.iter().enumerate() {
                if i > 0 {
                    out.push(0.5 * (v[i - 1] + x));
                }
                out.push(x);
            }
            out
        }
        ProbeSet {
            radii: bisect(&self.radii),
            normals: bisect(&self.normals),
            times: bisect(&self.times),
            region: self.region,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.normals.is_empty() || self.times.is_empty() {
            return Err(Error::Config("probe set has an empty axis".into()));
        }
        if self.radii.iter().chain(&self.normals).any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config("probe radii and normals must be nonnegative".into()));
        }
        if self.times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Config("probe times must be positive".into()));
        }
        Ok(())
    }
}

/// Acceptance rule of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expectation {
    /// log-log slope in the ladder parameter.
    Rate { slope: f64, tolerance: f64 },
    /// e / (r^{-a} ln r) constant within `factor`, r = h or 1/h.
    LogCorrected { exponent: f64, invert: bool, factor: f64 },
    /// Error at the last rung below `threshold`.
    Limit { threshold: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitExperiment {
    pub which: LimitKind,
    pub base: Params,
    #[serde(default)]
    pub theta: Option<f64>,
    pub data: InitialData,
    pub ladder: Vec<f64>,
    pub probes: ProbeSet,
    /// Exponent p of the L^p hypothesis for statements with L^p rates.
    #[serde(default)]
    pub lp: Option<f64>,
    /// Also evaluate the last rung on a bisected probe grid.
    #[serde(default)]
    pub refine: bool,
}

const OMEGA_L: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 2.0];
const RADII: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
const EPS_DOWN: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
const EPS_DOWN_FINE: [f64; 4] = [0.04, 0.02, 0.01, 0.005];
const SMALL_K: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
const DOUBLING: [f64; 4] = [4.0, 8.0, 16.0, 32.0];
const LARGE_K: [f64; 4] = [10.0, 20.0, 40.0, 80.0];
const DECADES: [f64; 4] = [10.0, 100.0, 1000.0, 1e4];

fn bump() -> InteriorData {
    InteriorData::gaussian(vec![0.0], 0.5, 1.0, 0.25)
}

fn spot() -> BoundaryData {
    BoundaryData::gaussian(vec![0.0], 0.25)
}

impl LimitExperiment {
    /// The default configuration of each experiment (N = 2, base (ε, δ, k) = (1, 1, 1)).
    pub fn default_for(which: LimitKind) -> Self {
        use LimitKind::*;
        use ProbeRegion::*;
        let base = Params { epsilon: 1.0, delta: 1.0, kappa: 1.0, dim: 2 };
        let q_r = ProbeSet::new(&[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0, 2.0], &[0.5, 1.0, 2.0], SumAbove { r: 1.0 });
        let outer = ProbeSet::new(&RADII, &[0.75, 1.0, 2.0], &[0.25, 0.5, 1.0], All);
        let compact = ProbeSet::new(&[0.0, 0.5, 1.0], &[0.5, 1.0, 2.0], &[0.25, 0.5, 1.0], All);
        let late = ProbeSet::new(&[0.0, 0.5], &[0.0, 0.5, 1.0], &[1.0, 2.0, 4.0], All);
        let (data, ladder, probes, lp, theta) = match which {
            EpsTo0 => (
                // the error carries a −Bε correction with B ∝ (x_N + t/δ)/√t;
                // δ = 4 and L = 1/2 keep the ladder in the √ε regime
                InitialData::boundary_only(BoundaryData::Constant { c: 1.0 }),
                EPS_DOWN,
                ProbeSet::new(&RADII, &[0.0, 0.125, 0.25, 0.375, 0.5], &[0.5, 0.75, 1.0], All),
                None,
                None,
            ),
            EpsToInf => (InitialData::new(bump(), spot()), DECADES, compact, None, None),
            KTo0 => (
                InitialData::boundary_only(BoundaryData::ComplementIndicator { radius: 1.0, weight: 1.0 }),
                SMALL_K,
                ProbeSet::new(&RADII, &[0.0, 0.25, 0.5, 1.0], &[0.25, 0.5, 1.0], ScaledSumAtLeast { r: 1.0 }),
                None,
                None,
            ),
            DeltaTo0 => (InitialData::interior_only(bump()), EPS_DOWN, q_r, None, None),
            DeltaToInf => (
                InitialData::interior_only(InteriorData::Constant { c: 1.0 }),
                DOUBLING,
                ProbeSet::new(&[0.0], &[0.75, 1.0, 2.0], &[0.25, 0.5, 1.0], All),
                None,
                None,
            ),
            KToInfFp => (InitialData::boundary_only(spot()), LARGE_K, q_r, Some(1.0), None),
            KToInfTheta => (
                InitialData::interior_only(InteriorData::Constant { c: 1.0 }),
                DOUBLING,
                ProbeSet::new(&[0.0], &OMEGA_L, &[0.25, 0.5, 1.0], All),
                None,
                Some(1.0),
            ),
            LddDeltaTo0 => (InitialData::boundary_only(spot()), EPS_DOWN, late, Some(1.0), None),
            LddKToInf => (InitialData::boundary_only(spot()), LARGE_K, late, Some(1.0), None),
            LddDeltaToInf => (
                InitialData::boundary_only(BoundaryData::Indicator { radius: 1.0, weight: 1.0 }),
                DECADES,
                outer,
                None,
                None,
            ),
            HdnEpsTo0 => (
                // tangentially much wider than every √(t/ε) on the ladder: the
                // decay is that of the normal profile alone
                InitialData::interior_only(InteriorData::gaussian(vec![0.0], 1e6, 1.0, 0.25)),
                EPS_DOWN,
                ProbeSet::new(&[0.0], &[0.0, 0.5, 1.0, 2.0], &[1.0, 2.0, 4.0], All),
                Some(2.0),
                None,
            ),
            HdnKToInf => (InitialData::interior_only(bump()), LARGE_K, q_r, Some(1.0), None),
            HdnKTo0 => (InitialData::interior_only(bump()), SMALL_K, q_r, None, None),
            HdpsiEpsTo0 => (
                InitialData::boundary_only(BoundaryData::Constant { c: 1.0 }),
                EPS_DOWN_FINE,
                ProbeSet::new(&[0.0], &[0.25, 0.5, 1.0, 2.0], &[1.0, 2.0, 4.0], All),
                None,
                None,
            ),
            FlowThetaTo0 => (InitialData::boundary_only(spot()), EPS_DOWN, q_r, Some(1.0), None),
            FlowThetaToInf => (
                InitialData::boundary_only(spot()),
                DOUBLING,
                ProbeSet::new(&[0.0, 0.5, 1.0], &[0.75, 1.0, 2.0], &[0.25, 0.5, 1.0], All),
                None,
                Some(1.0),
            ),
            FlowEpsTo0 => (
                InitialData::boundary_only(BoundaryData::ComplementIndicator { radius: 1.0, weight: 1.0 }),
                EPS_DOWN_FINE,
                ProbeSet::new(&[0.0, 0.5, 1.0], &[0.25, 0.5, 1.0, 2.0], &[1.0, 2.0, 4.0], All),
                None,
                Some(1.0),
            ),
            FlowEpsToInf => (InitialData::new(bump(), spot()), DECADES, compact, None, Some(1.0)),
        };
        let theta = theta.or(if which.needs_theta() { Some(1.0) } else { None });
        let base = if which == EpsTo0 { base.with_delta(4.0) } else { base };
        LimitExperiment { which, base, theta, data, ladder: ladder.to_vec(), probes, lp, refine: false }
    }

    pub fn expectation(&self) -> Result<Expectation> {
        use LimitKind::*;
        let n = self.base.dim as f64;
        let p = || self.lp.ok_or_else(|| Error::Config(format!("{} needs the L^p exponent `lp`", self.which)));
        let rate = |slope: f64, tolerance: f64| Expectation::Rate { slope, tolerance };
        let law = |invert: bool| -> Result<Expectation> {
            Ok(match RateLaw::for_lp(p()?, self.base.dim) {
                RateLaw::Power { exponent } => rate(if invert { exponent } else { -exponent }, 0.1),
                RateLaw::PowerLog { exponent } => Expectation::LogCorrected { exponent, invert, factor: 1.3 },
            })
        };
        Ok(match self.which {
            EpsTo0 | HdpsiEpsTo0 | FlowEpsTo0 => rate(0.5, 0.1),
            KTo0 | DeltaTo0 | HdnKTo0 => rate(1.0, 0.15),
            DeltaToInf | KToInfTheta | FlowThetaToInf => rate(-1.0, 0.15),
            KToInfFp | HdnKToInf => law(false)?,
            FlowThetaTo0 => law(true)?,
            LddDeltaTo0 => rate((n - 1.0) / p()?, 0.15),
            LddKToInf => rate(-(n - 1.0) / (2.0 * p()?), 0.1),
            HdnEpsTo0 => rate(n / (2.0 * p()?), 0.1),
            EpsToInf | LddDeltaToInf | FlowEpsToInf => Expectation::Limit { threshold: 1e-2 },
        })
    }

    /// (Params, θ) at ladder value h.
    pub fn rung(&self, h: f64) -> (Params, Option<f64>) {
        let mut p = self.base;
        let mut theta = self.theta;
        match self.which.varied() {
            Varied::Epsilon => p.epsilon = h,
            Varied::Delta => p.delta = h,
            Varied::Kappa => p.kappa = h,
            Varied::KappaCoupled => {
                p.kappa = h;
                p.delta = h * self.theta.unwrap_or(1.0);
            }
            Varied::Theta => theta = Some(h),
        }
        (p, theta)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.probes.validate()?;
        let expectation = self.expectation()?;
        if self.ladder.len() < 4 && !matches!(expectation, Expectation::Limit { .. }) {
            return Err(Error::Config(format!("{}: a rate ladder needs at least 4 rungs", self.which)));
        }
        if self.ladder.is_empty() || self.ladder.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::Config(format!("{}: ladder values must be positive", self.which)));
        }
        if self.which.needs_theta() && !self.theta.is_some_and(|t| t > 0.0) {
            return Err(Error::Config(format!("{} needs theta > 0", self.which)));
        }
        if let Some(p) = self.lp {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::Config(format!("lp = {p} must be in [1, inf)")));
            }
        }
        if self.which.needs_lp() && !in_lp(&self.data) {
            return Err(Error::Config(format!("{} assumes L^p data with p < inf", self.which)));
        }
        if matches!(self.which.pair().1, Reference::Datum) && !bounded_continuous(&self.data.interior) {
            return Err(Error::Config(format!("{} assumes bounded continuous phi", self.which)));
        }
        if matches!(self.data.interior, InteriorData::PowerCutoff { .. }) {
            return Err(Error::Config("power_cutoff data are not used in limit experiments".into()));
        }
        Ok(())
    }
}

fn in_lp(data: &InitialData) -> bool {
    let interior = match &data.interior {
        InteriorData::Zero => true,
        InteriorData::Constant { c } => *c == 0.0,
        InteriorData::Separable { tangential, normal, .. } => {
            matches!(tangential, TangentialProfile::HeatGaussian { .. })
                && !matches!(normal, NormalProfile::One | NormalProfile::Indicator { hi: None, .. })
        }
        InteriorData::PowerCutoff { .. } => false,
    };
    let boundary = match &data.boundary {
        BoundaryData::Zero | BoundaryData::HeatGaussian { .. } | BoundaryData::Indicator { .. } => true,
        BoundaryData::Constant { c } => *c == 0.0,
        BoundaryData::ComplementIndicator { .. } => false,
    };
    interior && boundary
}

fn bounded_continuous(phi: &InteriorData) -> bool {
    match phi {
        InteriorData::Separable { normal, .. } => !matches!(normal, NormalProfile::Indicator { .. }),
        InteriorData::PowerCutoff { .. } => false,
        _ => true,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub h: f64,
    pub params: Params,
    pub theta: Option<f64>,
    pub sup_error: f64,
    pub argmax: Probe,
    /// Some quadrature on this rung reported non-convergence.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub which: LimitKind,
    pub claim: String,
    pub expectation: Expectation,
    pub rows: Vec<LimitRow>,
    pub fit: Option<RateFit>,
    pub log_spread: Option<f64>,
    pub monotone: bool,
    /// |sup(refined) / sup − 1| on the last rung.
    pub refinement_change: Option<f64>,
    pub flagged: bool,
    pub pass: bool,
}

struct Sup {
    value: f64,
    at: Probe,
    flagged: bool,
}

fn sup_error(exp: &LimitExperiment, p: &Params, theta: Option<f64>, probes: &ProbeSet, spec: &QuadSpec) -> Result<Sup> {
    let (tag, reference) = exp.which.pair();
    let list = probes.probes(p.delta);
    if list.is_empty() {
        return Err(Error::Config(format!("{}: the probe region is empty", exp.which)));
    }
    let vals: Vec<(f64, bool)> = list
        .par_iter()
        .map(|pr| -> Result<(f64, bool)> {
            let x = HalfSpacePoint::radial(pr.r, pr.x_n)?;
            let a = solve(tag, p, theta, &exp.data, &x, pr.t, spec)?;
            let (b, ok) = match reference {
                Reference::Zero => (0.0, true),
                Reference::Datum => (interior_value(&exp.data.interior, &x, p.dim)?, true),
                Reference::Tag(t) => {
                    let b = solve(t, p, theta, &exp.data, &x, pr.t, spec)?;
                    (b.value, b.converged)
                }
            };
            Ok(((a.value - b).abs(), !(a.converged && ok)))
        })
        .collect::<Result<_>>()?;
    let mut best = Sup { value: -1.0, at: list[0], flagged: false };
    for (pr, (v, f)) in list.iter().zip(vals) {
        best.flagged |= f;
        if v > best.value {
            best.value = v;
            best.at = *pr;
        }
    }
    Ok(best)
}

/// Runs the ladder and applies the experiment's acceptance rule.
pub fn run_limit(exp: &LimitExperiment, spec: &QuadSpec) -> Result<LimitReport> {
    exp.validate()?;
    spec.validate()?;
    let expectation = exp.expectation()?;
    let mut rows = Vec::with_capacity(exp.ladder.len());
    for &h in &exp.ladder {
        let (p, theta) = exp.rung(h);
        let s = sup_error(exp, &p, theta, &exp.probes, spec)?;
        rows.push(LimitRow { h, params: p, theta, sup_error: s.value, argmax: s.at, flagged: s.flagged });
    }
    let monotone = rows.windows(2).all(|w| w[1].sup_error <= w[0].sup_error * (1.0 + LADDER_NOISE));
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.sup_error)).collect();
    let positive = points.iter().all(|&(_, e)| e > 0.0);
    let fit = if points.len() >= 4 && positive { Some(fit_rate(&points)?) } else { None };
    let mut log_spread = None;
    let pass = monotone
        && match expectation {
            Expectation::Rate { slope, tolerance } => {
                fit.as_ref().is_some_and(|f| (f.slope - slope).abs() <= tolerance && f.r_squared >= MIN_R_SQUARED)
            }
            Expectation::LogCorrected { exponent, invert, factor } => {
                let s = if positive { Some(log_corrected_spread(&points, exponent, invert)?) } else { None };
                log_spread = s;
                s.is_some_and(|s| s <= factor)
            }
            Expectation::Limit { threshold } => rows.last().is_some_and(|r| r.sup_error < threshold),
        };
    let refinement_change = if exp.refine {
        let last = rows.last().expect("nonempty ladder");
        let s = sup_error(exp, &last.params, last.theta, &exp.probes.refined(), spec)?;
        Some(if last.sup_error > 0.0 { (s.value / last.sup_error - 1.0).abs() } else { 0.0 })
    } else {
        None
    };
    let flagged = rows.iter().any(|r| r.flagged);
    Ok(LimitReport {
        which: exp.which,
        claim: exp.which.claim().to_string(),
        expectation,
        rows,
        fit,
        log_spread,
        monotone,
        refinement_change,
        flagged,
        pass,
    })
}

/// First-order k-dependence of u_LDD at one point: the difference quotient
/// (u_LDD − u_LD)/k against its predicted leading term −(t/δ) ∂²_{x_N} u_LD.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderCheck {
    pub quotient: f64,
    pub predicted: f64,
    /// Same sign and neither vanishes.
    pub pass: bool,
}

/// Qualitative check that the k-error of u_LDD is of exact order k: sign and
/// nonvanishing of the leading term at `x` (needs x_N ≥ 0.02).
pub fn ldd_first_order_in_k(delta: f64, psi: &BoundaryData, x: &HalfSpacePoint, t: f64, k: f64, spec: &QuadSpec) -> Result<FirstOrderCheck> {
    const H: f64 = 1e-2;
    if x.normal < 2.0 * H {
        return Err(Error::Domain(format!("x_N = {} is too close to the boundary for the stencil", x.normal)));
    }
    let dim = match &x.tangential {
        crate::kernel::Tangential::Vector(v) => v.len() + 1,
        crate::kernel::Tangential::Radius(_) => 2,
    };
    let data = InitialData::boundary_only(psi.clone());
    let p = Params::new(1.0, delta, k, dim)?;
    let at = |tag: ProblemTag, xn: f64| -> Result<f64> {
        let y = HalfSpacePoint { tangential: x.tangential.clone(), normal: xn };
        Ok(solve(tag, &p, None, &data, &y, t, spec)?.value)
    };
    let ld = at(ProblemTag::LD, x.normal)?;
    let quotient = (at(ProblemTag::LDD, x.normal)? - ld) / k;
    let f: Vec<f64> = (-2..=2).map(|i| at(ProblemTag::LD, x.normal + i as f64 * H)).collect::<Result<_>>()?;
    let d2 = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * H * H);
    let predicted = -(t / delta) * d2;
    let pass = quotient != 0.0 && predicted != 0.0 && quotient.signum() == predicted.signum();
    Ok(FirstOrderCheck { quotient, predicted, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in LimitKind::ALL {
            assert_eq!(k.name().parse::<LimitKind>().unwrap(), k);
            let js = serde_json::to_string(&k).unwrap();
            assert_eq!(js, format!("\"{}\"", k.name()));
        }
        assert!("eps_to_zero".parse::<LimitKind>().is_err());
    }

    #[test]
    fn defaults_validate() {
        for k in LimitKind::ALL {
            let e = LimitExperiment::default_for(k);
            e.validate().unwrap_or_else(|err| panic!("{k}: {err}"));
        }
    }

    #[test]
    fn probe_regions() {
        let q = ProbeSet::new(&[0.0], &[0.0, 0.5, 1.0], &[0.25, 0.5, 1.0], ProbeRegion::SumAbove { r: 1.0 });
        assert!(q.probes(1.0).iter().all(|p| p.x_n + p.t > 1.0));
        assert_eq!(q.probes(1.0).len(), 4);
        let s = ProbeSet::new(&[0.0], &[0.0, 0.5], &[0.5, 1.0], ProbeRegion::ScaledSumAtLeast { r: 1.0 });
        assert_eq!(s.probes(0.5).len(), 4);
        assert_eq!(s.probes(1.0).len(), 3);
        let r = q.refined();
        assert_eq!(r.normals, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn coupled_rung() {
        let e = LimitExperiment::default_for(LimitKind::KToInfTheta);
        let (p, th) = e.rung(8.0);
        assert_eq!((p.kappa, p.delta, th), (8.0, 8.0, Some(1.0)));
    }

    #[test]
    fn incompatible_data_rejected() {
        let mut e = LimitExperiment::default_for(LimitKind::LddDeltaTo0);
        e.data = InitialData::constants(0.0, 1.0);
        assert!(matches!(e.validate(), Err(Error::Config(_))));
        let mut e = LimitExperiment::default_for(LimitKind::KToInfFp);
        e.lp = None;
        assert!(e.validate().is_err());
    }

    #[test]
    fn indicator_datum_reaches_half_rate() {
        let mut e = LimitExperiment::default_for(LimitKind::EpsTo0);
        e.base = Params { epsilon: 1.0, delta: 1.0, kappa: 1.0, dim: 2 };
        e.data = InitialData::interior_only(InteriorData::Separable {
            weight: 1.0,
            tangential: TangentialProfile::Uniform,
            normal: NormalProfile::Indicator { lo: 1.0, hi: None },
        });
        e.ladder = vec![1e-3, 1e-4, 1e-5, 1e-6];
        e.probes = ProbeSet::new(&[0.0], &[1.0], &[1.0], ProbeRegion::All);
        let r = run_limit(&e, &QuadSpec::new(1e-8, 1e-14)).unwrap();
        let f = r.fit.unwrap();
        assert!((f.slope - 0.5).abs() < 0.02, "{}", f.slope);
    }

    #[test]
    fn log_law_at_threshold_dimension() {
        let mut e = LimitExperiment::default_for(LimitKind::KToInfFp);
        e.base.dim = 3;
        assert!(matches!(e.expectation().unwrap(), Expectation::LogCorrected { invert: false, .. }));
    }

    #[test]
    fn ldd_error_is_first_order_in_k() {
        let psi = BoundaryData::gaussian(vec![0.0], 0.25);
        let x = HalfSpacePoint::planar(0.0, 0.5).unwrap();
        let c = ldd_first_order_in_k(1.0, &psi, &x, 1.0, 1e-4, &QuadSpec::default()).unwrap();
        assert!(c.pass, "{c:?}");
        // the leading term is exact as k -> 0
        assert!((c.quotient / c.predicted - 1.0).abs() < 1e-2, "{c:?}");
    }
}
