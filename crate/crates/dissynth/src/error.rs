/// Errors produced by the library.
///
/// `Hypothesis` marks a violated theorem hypothesis (rank condition, missing
/// positive eigenvalue, supply inertia, Π-class membership). Callers that
/// report verdicts must keep it distinct from infeasibility: a hypothesis
/// failure means the question was never posed to the solver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not symmetric: max |A_ij - A_ji| = {max_asym:.3e} exceeds tolerance {tol:.3e}")]
    NotSymmetric { max_asym: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("hypothesis failed: {0}")]
    Hypothesis(String),

    #[error("solver undecided: {0}")]
    Undecided(String),

    #[error("constraint '{0}' is not affine in the declared variables")]
    NonAffine(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
