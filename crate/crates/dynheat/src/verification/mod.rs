//! Executable checks: kernel identities, diffusion-limit rates, envelope
//! sandwich, operator-norm decay and boundary-trace sharpness.

pub mod bounds;
pub mod identities;
pub mod limits;
pub mod rates;
pub mod sharpness;

pub use bounds::{opnorm_decay, sandwich_check, witness_norm, witness_sup_decay, OpnormReport, OpnormRow, RegionStats, SandwichConfig, SandwichReport};
pub use identities::{check_identity, identity_suite, Identity, IdentityGrid, IdentityReport};
pub use limits::{ldd_first_order_in_k, run_limit, Expectation, FirstOrderCheck, LimitExperiment, LimitKind, LimitReport, LimitRow, Probe, ProbeRegion, ProbeSet};
pub use rates::{fit_rate, log_corrected_spread, RateFit};
pub use sharpness::{power_trace, trace_sharpness, TraceConfig, TraceReport};
