//! Numerical laboratory for magnetic geodesic flows: chart-based geometry,
//! high-order integration, period detection, drift fitting and linear
//! spectral classification.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod drift;
pub mod dynamics;
pub mod geometry;
pub mod periods;
pub mod sampling;
pub mod scenarios;
pub mod spectral;

pub use error::{Error, Result};
