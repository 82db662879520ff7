use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum M3Error {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("orientation norm {0:e} is too small to normalize")]
    DegenerateOrientation(f64),
    #[error("not a rotation: |RᵀR - I| = {orth:e}, det = {det}")]
    InvalidRotation { orth: f64, det: f64 },
    #[error("matrix is not skew-symmetric: |A + Aᵀ| = {0:e}")]
    NotSkew(f64),
    #[error("tangent vectors live at different base points (offset {0:e})")]
    BaseMismatch(f64),
    #[error("frame seed is within {0:e} rad of the orientation")]
    DegenerateSeed(f64),
    #[error("rotation angle {0:e} is too small for a finite center of rotation")]
    PureTranslation(f64),
    #[error("weights violate the positivity constraints: {0:?}")]
    NotPositive([f64; 5]),
}

pub type Result<T> = std::result::Result<T, M3Error>;
