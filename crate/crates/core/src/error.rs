//! Error type shared across the solver library.

use thiserror::Error;

use crate::model::ValidationReport;

/// Unified error for every fallible operation in the crate.
///
/// Validation problems carry the full report so callers can print every
/// violation instead of the first one; numerical failures carry the measured
/// residual next to the bound it broke.
#[derive(Debug, Error)]
pub enum CsgError {
    /// A game specification failed validation.
    #[error("invalid game specification:\n{0}")]
    InvalidSpec(ValidationReport),

    /// A player index outside `0..n`.
    #[error("player index {player} out of range (game has {players} players)")]
    PlayerIndex { player: usize, players: usize },

    /// A caller-supplied argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A countable model cannot support the requested construction.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A direct linear solve exceeded its residual bound.
    #[error("numerical failure in {context}: residual {residual:.3e} exceeds bound {bound:.3e}")]
    NumericalFailure {
        context: &'static str,
        residual: f64,
        bound: f64,
    },

    /// The simplex solver hit its iteration guard or failed its own
    /// primal-dual certificate.
    #[error("linear program solver failure: {0}")]
    SolverFailure(String),
}
