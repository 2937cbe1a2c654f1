//! Power-minimizing linear precoding for a single-cell multi-user MIMO downlink.
//!
//! A base station with `N` antennas serves `K` single-antenna users, each with
//! an SINR target `gamma_k = 2^{r_k} - 1` derived from a rate target `r_k`.
//! The crate provides:
//!
//! * [`model`] — cell geometry, path loss, and Rayleigh channel generation
//!   with a reproducible counter-based randomness contract;
//! * [`exact`] — the finite-`N` optimal linear precoder (fixed-point Lagrange
//!   multipliers plus SINR-equality power allocation), the regularized
//!   zero-forcing heuristic family, and a zero-forcing baseline;
//! * [`asympt`] — closed-form large-system (deterministic-equivalent)
//!   counterparts of the multipliers, powers, and total power, and the
//!   power-minimizing regularization parameter for the heuristic family.
//!
//! All solvers are pure functions of their inputs and safe to call from many
//! threads with distinct random streams.

// Validation guards use negated comparisons (`!(x > 0.0)`) so NaN fails them
// along with out-of-range values. The triangular-solve kernels index across
// two offsets at once; iterator forms obscure them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod asympt;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod model;

pub use error::{Error, Result};
pub use exact::{PrecoderSolution, SolverOptions};
pub use model::{ChannelRealization, SystemConfig, UserState};
