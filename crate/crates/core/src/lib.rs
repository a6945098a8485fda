pub mod error;
pub mod numerics;

pub use error::{Error, Result};
pub mod copula;
pub mod dependence;
pub mod families;
pub mod model;
pub mod prescribed;
pub mod probit;
pub mod profile;
pub mod sampling;
pub mod separable;
pub mod stats;
pub mod support;
pub mod validation;

/// Distance kept from the edges of the unit square in every evaluation.
pub const EPSILON: f64 = 1e-11;
