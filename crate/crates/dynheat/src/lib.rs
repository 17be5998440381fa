// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dynamic;
pub mod cli;
pub mod error;
pub mod fd;
pub mod kernel;
pub mod quadrature;
pub mod solution;
pub mod special;
pub mod verification;

pub use data::{BoundaryData, InitialData, InteriorData, NormalProfile, TangentialProfile};
pub use error::{Error, Result};
pub use kernel::{HalfSpacePoint, Params, RateLaw, Tangential};
pub use quadrature::{QuadResult, QuadSpec};
