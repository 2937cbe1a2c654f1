//! Monte Carlo experiment harness for the downlink precoding schemes.
//!
//! Sweeps the per-user rate or the antenna count over a grid, runs seeded
//! parallel trials at every grid point, and compares the optimal precoder
//! against its asymptotic shortcut and the regularized zero-forcing family:
//!
//! * `OLP`     — exact fixed-point optimal precoder;
//! * `A-OLP`   — closed-form multipliers with exact power allocation;
//! * `RZF`     — unit weights at the asymptotically optimal ridge;
//! * `PA-RZF`  — inverse-attenuation weights at their optimal ridge;
//! * `ZF`      — zero-forcing baseline.
//!
//! Trials derive independent counter-based random streams from one master
//! seed, so results are identical for any worker count and any execution
//! order. Failed or infeasible trials are counted and excluded from the
//! averages, never fatal to a sweep.

// Validation guards use negated comparisons (`!(x > 0.0)`) so NaN fails them
// along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod plot;
mod sweep;
mod table;
mod validate;

pub use config::{
    apply_config_text, ExperimentConfig, RateSpec, Scheme, SimError, Sweep, ALL_SCHEMES,
};
pub use plot::emit_plot;
pub use sweep::{draw_users, run_sweep, run_sweep_detailed, SweepOutput, MIN_FEASIBILITY_MARGIN};
pub use table::{ResultsRow, ResultsTable};
pub use validate::{
    concentration_ladder, pure_asymptotic_violation_rate, validate, LadderPoint, SchemeReport,
    ValidationReport,
};
