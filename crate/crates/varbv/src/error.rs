use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("multi-index length {got} does not match base dimension {dim}")]
    DimensionMismatch { got: usize, dim: usize },
    #[error("jet order cap {cap} exceeded")]
    JetCapExceeded { cap: u32 },
    #[error("forms belong to different theories")]
    CrossTheory,
    #[error("form is not homogeneous in {0}")]
    Inhomogeneous(&'static str),
    #[error("{op} rejects vertical degree 0 input")]
    VerticalDegreeZero { op: &'static str },
    #[error("iteration cap exceeded in {0} (convention bug, not a user error)")]
    NilpotencyBound(&'static str),
    #[error("no Hamiltonian vector field: {0}")]
    NotHamiltonian(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}
