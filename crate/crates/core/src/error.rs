use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("metric is degenerate at chart {chart} (min eigenvalue {min_eigenvalue:e})")]
    DegenerateMetric { chart: usize, min_eigenvalue: f64 },

    #[error("point is {distance:e} from the boundary of chart {chart}; the stencil needs {required:e}")]
    Stencil { chart: usize, distance: f64, required: f64 },

    #[error("manifold `{manifold}` has no {structure}")]
    MissingStructure { manifold: String, structure: &'static str },

    #[error("structure check failed: {0}")]
    IncompatibleStructure(String),

    #[error("tangent vector has g-norm {norm}, expected 1")]
    Normalization { norm: f64 },

    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("no chart covers the point {q:?} (left chart {chart})")]
    ChartTransition { chart: usize, q: Vec<f64> },

    #[error("unknown chart id {0}")]
    UnknownChart(usize),

    #[error("trajectory too short: {actual:.3} available, {required:.3} required")]
    ShortTrajectory { actual: f64, required: f64 },

    #[error("time {t} lies outside the integrated range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("fiber-form matrix is singular")]
    SingularForm,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
