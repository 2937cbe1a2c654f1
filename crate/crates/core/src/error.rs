//! Error types shared by the solver and model modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A configuration invariant was violated (non-positive noise power,
    /// K > N, bad geometry, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Path loss requested inside the exclusion radius. The model is only
    /// defined for distances of at least `min_distance`; a closer point
    /// indicates a sampler bug upstream, so it is surfaced instead of clamped.
    #[error("distance {distance:.3} m is inside the minimum distance {min_distance:.3} m")]
    InsideMinDistance { distance: f64, min_distance: f64 },

    /// A fixed-point iteration ran out of its iteration budget. Carries the
    /// last iterate and the final relative step so callers can diagnose or
    /// warm-restart.
    #[error("fixed point did not converge within {iterations} iterations (relative step {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    /// The regularized Gram matrix was not positive definite, so the
    /// Cholesky-based direction solve cannot proceed.
    #[error("regularized Gram matrix is not positive definite")]
    NotPositiveDefinite,

    /// SINR targets unreachable with the given beamforming directions:
    /// the power-coupling system is singular or yields a non-positive power.
    #[error("power allocation infeasible: {0}")]
    Infeasible(String),

    /// The load term `gain^2 * load_feedback` reached one, so the derivative
    /// of the asymptotic gain (and every quantity built on it) is undefined.
    #[error("degenerate load: gain^2 * load_feedback = {0:.6} >= 1")]
    DegenerateLoad(f64),

    /// Restarting the optimal-gain fixed point from different initial values
    /// produced different solutions, so the result cannot be trusted.
    #[error("optimal-gain fixed point is ambiguous: restarts disagree ({0:.6e} vs {1:.6e})")]
    AmbiguousFixedPoint(f64, f64),
}
