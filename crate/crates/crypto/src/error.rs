use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("not enough shares: have {have}, need {need}")]
    NotEnoughShares { have: usize, need: usize },
    #[error("duplicate share index {0}")]
    DuplicateShareIndex(u32),
    #[error("share verification failed for index {0}")]
    BadShare(u32),
    #[error("signature verification failed")]
    BadSignature,
    #[error("malformed point encoding")]
    BadPoint,
    #[error("malformed scalar encoding")]
    BadScalar,
    #[error("ciphertext too short or not block-aligned")]
    BadCiphertext,
    #[error("invalid padding")]
    BadPadding,
    #[error("discrete log not found in [0, {0}]")]
    DlogOutOfRange(u64),
    #[error("commitment opening does not match")]
    BadOpening,
    #[error("proof rejected")]
    BadProof,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}
