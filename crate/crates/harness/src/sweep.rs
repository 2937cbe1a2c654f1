//! Seeded parallel Monte Carlo sweeps.
//!
//! Every `(grid point, trial)` pair owns the counter-based random stream
//! `grid_index << 32 | trial_index`, and all aggregation runs in trial order,
//! so a sweep's output is bit-identical for any rayon worker count. Draw
//! order within a trial is fixed: positions (unless frozen), then per-user
//! rates (when drawn from an interval), then the channel matrix.

use rand::Rng;
use rayon::prelude::*;

use precoding::exact::{self, SolverOptions};
use precoding::model::{draw_channel, pathloss, sample_positions, trial_rng, UserState};
use precoding::{asympt, ChannelRealization, SystemConfig};

use crate::config::{ExperimentConfig, RateSpec, Scheme, SimError, Sweep};
use crate::table::{ResultsRow, ResultsTable};

/// Stream reserved for the one-off position draw of frozen-position runs.
const FROZEN_POSITIONS_STREAM: u64 = u64::MAX;

/// Relative slack below which an achieved SINR counts as violating its target.
const VIOLATION_SLACK: f64 = 1e-6;

/// A draw whose targets sit closer than this to the feasibility boundary of a
/// scheme's directions counts as failed for that scheme: the allocated powers
/// scale like the margin's inverse, so such draws carry no information about
/// average behavior and would otherwise dominate the means.
pub const MIN_FEASIBILITY_MARGIN: f64 = 0.05;

/// Sweep results plus the per-trial powers they were aggregated from,
/// indexed `[grid point][scheme][trial]` with `None` marking infeasible
/// trials. The table's averages must be recomputable from these.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub table: ResultsTable,
    pub trial_powers: Vec<Vec<Vec<Option<f64>>>>,
}

struct SchemeOutcome {
    power: f64,
    rate_sq_err_sum: f64,
    rate_terms: usize,
    violations: usize,
    users: usize,
}

/// Builds one scheme's precoder on a drawn channel. `Err` means the trial is
/// infeasible for that scheme (it is counted, never fatal).
pub(crate) fn scheme_solution(
    scheme: Scheme,
    channel: &ChannelRealization,
    noise_power: f64,
) -> precoding::Result<exact::PrecoderSolution> {
    let targets = channel.sinr_targets();
    let antennas = channel.antennas();
    match scheme {
        Scheme::Olp => exact::optimal(channel, &targets, noise_power, &SolverOptions::default()),
        Scheme::AOlp => {
            let eq = asympt::optimal_equivalents(&channel.users, noise_power, antennas)?;
            exact::heuristic(channel, &eq.multipliers, 1.0, &targets, noise_power)
        }
        Scheme::Rzf => {
            let opt = asympt::rzf_ridge(&channel.users, antennas)?;
            let ones = vec![1.0; channel.user_count()];
            exact::heuristic(channel, &ones, opt.ridge, &targets, noise_power)
        }
        Scheme::PaRzf => {
            let load = channel.user_count() as f64 / antennas as f64;
            let opt = asympt::pa_rzf_ridge(&targets, load)?;
            let weights: Vec<f64> = channel.users.iter().map(|u| 1.0 / u.attenuation).collect();
            exact::heuristic(channel, &weights, opt.ridge, &targets, noise_power)
        }
        Scheme::Zf => exact::zero_forcing(channel, &targets, noise_power),
    }
}

fn measure(solution: &exact::PrecoderSolution, users: &[UserState]) -> SchemeOutcome {
    let mut rate_sq_err_sum = 0.0;
    let mut rate_terms = 0;
    let mut violations = 0;
    for (user, &sinr) in users.iter().zip(&solution.sinr) {
        if user.rate_target > 0.0 {
            let achieved = (1.0 + sinr).log2();
            let rel = (achieved - user.rate_target) / user.rate_target;
            rate_sq_err_sum += rel * rel;
            rate_terms += 1;
        }
        if sinr < user.sinr_target * (1.0 - VIOLATION_SLACK) {
            violations += 1;
        }
    }
    SchemeOutcome {
        power: solution.total_power,
        rate_sq_err_sum,
        rate_terms,
        violations,
        users: users.len(),
    }
}

/// Builds the users of one trial: positions (fresh or frozen), then rates.
/// Draw order is part of the reproducibility contract.
pub fn draw_users<R: Rng + ?Sized>(
    rng: &mut R,
    system: &SystemConfig,
    rate_spec: &RateSpec,
    frozen: Option<&[[f64; 2]]>,
) -> Vec<UserState> {
    let positions: Vec<[f64; 2]> = match frozen {
        Some(p) => p.to_vec(),
        None => sample_positions(rng, system.users, system),
    };
    let rates: Vec<f64> = match *rate_spec {
        RateSpec::Fixed(r) => vec![r; system.users],
        RateSpec::Uniform { lo, hi } => (0..system.users)
            .map(|_| lo + (hi - lo) * rng.random::<f64>())
            .collect(),
    };
    positions
        .into_iter()
        .zip(rates)
        .map(|(x, rate)| {
            let attenuation =
                pathloss(x, system).expect("sampled positions stay outside the exclusion radius");
            UserState::from_rate(x, attenuation, rate)
        })
        .collect()
}

fn run_trial(
    cfg: &ExperimentConfig,
    grid_idx: usize,
    trial: usize,
    frozen: Option<&[[f64; 2]]>,
) -> Vec<Option<SchemeOutcome>> {
    let stream = ((grid_idx as u64) << 32) | trial as u64;
    let mut rng = trial_rng(cfg.seed, stream);

    let mut system = cfg.system.clone();
    let rate_spec = match &cfg.sweep {
        Sweep::Rate(grid) => RateSpec::Fixed(grid[grid_idx]),
        Sweep::Antennas(grid) => {
            system.antennas = grid[grid_idx];
            cfg.rate_spec.clone()
        }
    };
    let users = draw_users(&mut rng, &system, &rate_spec, frozen);
    let channel = draw_channel(&mut rng, &users, system.antennas);

    cfg.schemes
        .iter()
        .map(|&scheme| {
            scheme_solution(scheme, &channel, system.noise_power)
                .ok()
                .filter(|sol| sol.feasibility_margin >= MIN_FEASIBILITY_MARGIN)
                .map(|sol| measure(&sol, &users))
        })
        .collect()
}

/// Runs the configured sweep and returns the aggregated table together with
/// the retained per-trial powers.
pub fn run_sweep_detailed(cfg: &ExperimentConfig) -> Result<SweepOutput, SimError> {
    cfg.validate()?;
    let frozen: Option<Vec<[f64; 2]>> = cfg.freeze_positions.then(|| {
        sample_positions(
            &mut trial_rng(cfg.seed, FROZEN_POSITIONS_STREAM),
            cfg.system.users,
            &cfg.system,
        )
    });

    let mut rows = Vec::new();
    let mut trial_powers = Vec::with_capacity(cfg.sweep.len());
    for grid_idx in 0..cfg.sweep.len() {
        let outcomes: Vec<Vec<Option<SchemeOutcome>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| run_trial(cfg, grid_idx, trial, frozen.as_deref()))
            .collect();

        let mut powers_by_scheme = vec![Vec::with_capacity(cfg.trials); cfg.schemes.len()];
        for (scheme_idx, &scheme) in cfg.schemes.iter().enumerate() {
            let mut powers: Vec<f64> = Vec::with_capacity(cfg.trials);
            let mut rate_sq_err_sum = 0.0;
            let mut rate_terms = 0usize;
            let mut violations = 0usize;
            let mut opportunities = 0usize;
            for trial_outcomes in &outcomes {
                match &trial_outcomes[scheme_idx] {
                    Some(out) => {
                        powers.push(out.power);
                        powers_by_scheme[scheme_idx].push(Some(out.power));
                        rate_sq_err_sum += out.rate_sq_err_sum;
                        rate_terms += out.rate_terms;
                        violations += out.violations;
                        opportunities += out.users;
                    }
                    None => powers_by_scheme[scheme_idx].push(None),
                }
            }
            let used = powers.len();
            let (avg, std) = mean_std(&powers);
            rows.push(ResultsRow {
                sweep_param: cfg.sweep.param_name().to_string(),
                value: cfg.sweep.value_at(grid_idx),
                scheme,
                avg_power_watt: avg,
                std_power_watt: std,
                trials: used,
                infeasible: cfg.trials - used,
                violation_rate: if opportunities > 0 {
                    violations as f64 / opportunities as f64
                } else {
                    0.0
                },
                rate_mse: if rate_terms > 0 {
                    rate_sq_err_sum / rate_terms as f64
                } else {
                    0.0
                },
            });
        }
        trial_powers.push(powers_by_scheme);
    }

    Ok(SweepOutput {
        table: ResultsTable::new(rows),
        trial_powers,
    })
}

/// Runs the configured sweep; identical configuration gives an identical
/// table regardless of thread count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ResultsTable, SimError> {
    run_sweep_detailed(cfg).map(|out| out.table)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
