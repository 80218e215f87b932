use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bloch vector has norm {norm:.6e} > 1: not a physical state")]
    NotAState { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidMatrix(String),

    #[error("symbol count k = {k} out of range for n = {n}")]
    CountOutOfRange { k: u64, n: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("typicality window of (n = {n}, eps = {eps}, q = {q}) contains no achievable frequency k/n")]
    EmptyWindow { n: u64, eps: f64, q: f64 },

    #[error("n = {n} exceeds the dense backend cap of {cap} qubits")]
    Capacity { n: usize, cap: usize },

    #[error("criterion not met for any n <= {limit}")]
    SearchExhausted { limit: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
