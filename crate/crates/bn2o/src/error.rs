//! Error type shared by every module in the crate.

use std::path::PathBuf;
use thiserror::Error;

/// Errors raised by network construction, inference, reduction and sweeps.
#[derive(Debug, Error)]
pub enum Bn2oError {
    /// A probability parameter is outside `[0, 1]` or not finite.
    #[error("invalid probability for {what}: {value}")]
    InvalidProbability { what: &'static str, value: f64 },

    /// A structural constraint on a model or config is violated.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A disease or finding index is out of range.
    #[error("{kind} index {index} out of range (len {len})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        len: usize,
    },

    /// A vector or matrix dimension does not match the owning network.
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// An enumeration would exceed the configured cap or budget.
    #[error("{what} ({size}) exceeds the configured cap ({cap})")]
    CapExceeded {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    /// The evidence has probability zero (or indistinguishable from zero)
    /// under the model it was evaluated against.
    #[error("impossible evidence under {model}: P(E) = {value:e}")]
    ImpossibleEvidence { model: &'static str, value: f64 },

    /// A selection policy produced an empty base-state set.
    #[error("policy selects no base states")]
    EmptyBaseSet,

    /// A base-state set is inconsistent with the network it is paired with.
    #[error("inconsistent base-state set: {0}")]
    InconsistentBaseSet(String),

    /// Integer overflow in a counting operation.
    #[error("integer overflow computing {0}")]
    Overflow(&'static str),

    /// I/O failure, with the path that was being read or written.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed JSON in a network, evidence, model or config file.
    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Bn2oError>;

impl Bn2oError {
    /// `true` for errors caused by an enumeration cap or sweep budget,
    /// as opposed to invalid input.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Bn2oError::CapExceeded { .. } | Bn2oError::Overflow(_))
    }

    /// `true` when the evidence has zero probability under the queried model.
    pub fn is_impossible_evidence(&self) -> bool {
        matches!(self, Bn2oError::ImpossibleEvidence { .. })
    }
}
