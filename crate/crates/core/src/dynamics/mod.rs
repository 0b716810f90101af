//! Integration of the magnetic geodesic flow and the model bundle flow.

pub mod dop853;
pub mod system;
mod tableau;

pub use dop853::{
    integrate_system, ChartCheck, DenseStep, FlowSystem, IntegratorOptions, IntegratorStats,
    Sample, Trajectory,
};
pub use system::{
    integrate, integrate_model, magnetic_vector_field, model_bundle_vector_field,
    MagneticSystem, ModelBundleSystem, TangentState,
};
