use thiserror::Error;

/// Errors produced by planner construction and I/O surfaces.
///
/// Numeric evaluation paths (propagation, projection, constraint
/// evaluation) are total functions and do not allocate error values;
/// failures there surface as solver statuses instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polyline: {0}")]
    InvalidPolyline(String),

    #[error("invalid quadrature order {0}: must be in 1..=32")]
    InvalidOrder(usize),

    #[error("invalid steering angle {0} rad: |alpha| must be < pi/2")]
    InvalidSteering(f64),

    #[error("boundary smoothing did not converge after {iterations} iterations (step change {residual:.3e})")]
    SmoothingFailed { iterations: usize, residual: f64 },

    #[error("decision vector layout error: {0}")]
    LayoutError(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("scenario file {path}: {message}")]
    ScenarioParse { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
