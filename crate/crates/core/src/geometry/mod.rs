//! Pointwise geometry of chart-based manifolds.

pub mod builtin;
pub mod chart;
pub mod connection;
pub mod curvature;
pub mod manifold;
pub mod z0;

pub use builtin::{builtin, BUILTIN_MANIFOLDS, MANIFOLD_INFO};
pub use chart::{Axis, Chart, Transition};
pub use connection::{
    chern_connection, christoffel, curvature_tensor, gaussian_curvature, lorentz_endomorphism,
    riemann, sectional_curvature, Christoffel, ConnectionKind, CurvatureTensor,
};
pub use curvature::{
    chern_audit, khat, khat_fiber_spread, khat_horizontal_differential,
    khat_vertical_differential, nijenhuis, nijenhuis_tensor, ChernAudit, CurvatureSample,
    KhatContext,
};
pub use manifold::{ChartManifold, ChartPoint, LocalFields, Region, StructureReport};
pub use z0::{verify_z0_identity, Z0Check};
