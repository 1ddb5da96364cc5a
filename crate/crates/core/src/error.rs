use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mode index {index:?} out of range 1..={modes} for a {dim}-d domain")]
    IndexOutOfRange {
        index: Vec<usize>,
        modes: usize,
        dim: usize,
    },
    #[error("configuration error: {0}")]
    Config(String),
    /// Several independent configuration problems found in one pass.
    #[error("invalid model: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("value {value} outside tabulated range [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },
    #[error("non-finite state after step {step} (t = {t})")]
    Divergence { step: usize, t: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
