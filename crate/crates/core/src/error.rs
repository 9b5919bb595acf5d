use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Laplace transform undefined at λ = {lambda}: base 1 + Tλ/n lies on the branch cut")]
    BranchCut { lambda: Complex64 },

    #[error("a point-mass kernel has no finite density")]
    NoDensity,

    #[error("quadrature order {requested} is not supported (maximum {max})")]
    QuadratureOrder { requested: usize, max: usize },

    #[error("frequency half-width must be positive for this operation")]
    ZeroWidth,

    #[error("no Hopf point found with |β| ≤ {bound}; enlarge the search bound")]
    SearchBound { bound: f64 },

    #[error("characteristic root at k̄ = {kbar} is not simple (|D| = {modulus:e})")]
    Degenerate { kbar: f64, modulus: f64 },

    #[error("normal-form coefficient a = {formula} disagrees with root derivative {finite_difference}")]
    Inconsistent {
        formula: Complex64,
        finite_difference: Complex64,
    },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("mean-field amplitude left the unit disc (|α| = {modulus} at t = {time}); halve dt")]
    ManifoldEscape { time: f64, modulus: f64 },

    #[error("root tracking failed to converge: {0}")]
    NoConvergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
