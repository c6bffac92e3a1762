use thiserror::Error;

/// Errors produced by the connectivity toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Dihedral or solid angle outside the range where a closed form is defined.
    #[error("angle {angle} rad outside the admissible range ({min}, {max}]")]
    AngleOutOfRange { angle: f64, min: f64, max: f64 },

    /// The requested closed form is only registered for other link models.
    #[error("no closed form registered for {0}; use the numeric quadrature pipeline")]
    UnsupportedModel(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}, target {target:e}")]
    Quadrature {
        estimate: f64,
        error: f64,
        target: f64,
    },

    #[error("divergent integral: {0}")]
    Divergent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
