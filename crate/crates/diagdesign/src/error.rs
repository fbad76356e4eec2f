use num::BigUint;

/// Errors shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An enumeration would visit more canonical classes than the caller allowed.
    #[error("enumeration budget exceeded: {required} classes required, budget is {budget}")]
    BudgetExceeded { required: BigUint, budget: u64 },

    /// Two values that must share a shape (width, tuple length, dimension) do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
