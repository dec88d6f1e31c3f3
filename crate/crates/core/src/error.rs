use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes across the simulation and inversion pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry violation: {0}")]
    GeometryViolation(String),

    #[error("numeric blow-up at step {step}: max |u| = {max_abs:e}")]
    NumericBlowup { step: usize, max_abs: f64 },

    #[error("sensor {index} at radius {radius} lies outside the interpolation region of the grid")]
    SensorOutsideGrid { index: usize, radius: f64 },

    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("sensor layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("coincident points: evaluation point equals a source location")]
    CoincidentPoints,

    #[error("u^(2) is not constant across sensors: std/|mean| = {ratio:e} exceeds {tolerance:e}")]
    NotConstant { ratio: f64, tolerance: f64 },

    #[error("degenerate B = {value:e} (threshold {threshold:e})")]
    DegenerateB { value: f64, threshold: f64 },

    #[error("Hankel rank ambiguous: singular-value gap {gap:.3} below 10 (singular values {singular_values:?})")]
    RankAmbiguous { gap: f64, singular_values: Vec<f64> },

    #[error("projection collision unresolved after {retries} rotation retries")]
    CollisionUnresolved { retries: usize },

    #[error("inconsistent mass {mass:e} for inclusion {index}: implied 1/b^2 = {inv_speed_sq:e} is not positive")]
    InconsistentMass { index: usize, mass: f64, inv_speed_sq: f64 },

    #[error("time-reversal horizon {horizon} too short: need T > {required}")]
    HorizonTooShort { horizon: f64, required: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Innermost error, skipping stage annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Non-fatal diagnostics accumulated by operations that can still produce a result.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Warning {
    /// An inclusion radius spans fewer than three grid spacings.
    GridTooCoarse { inclusion: usize, radius: f64, spacing: f64 },
    /// The trailing window of a time-moment integrand has not decayed.
    TailWarning { order: usize, tail_ratio: f64, tolerance: f64 },
    /// Generic diagnostic.
    Note(String),
}
