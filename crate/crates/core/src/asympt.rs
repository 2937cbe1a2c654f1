//! Large-system (deterministic-equivalent) counterparts of the exact solver.
//!
//! As the antenna and user counts grow with a fixed ratio, the Lagrange
//! multipliers, the per-user powers, and the total power of the optimal
//! precoder all concentrate around closed forms that depend only on the SINR
//! targets and the large-scale attenuations. The same machinery yields, for
//! the weighted regularized heuristic family, the asymptotic power at any
//! ridge and the ridge that minimizes it.
//!
//! Scalar conventions used throughout:
//!
//! * `headroom` — `1 - (1/N) * sum_i target_i / (1 + target_i)`, the fraction
//!   of array resolution left once every demand is served;
//! * `mean_demand` — `(1/K) * sum_i target_i / attenuation_i`;
//! * `gain` — the positive solution `g` of
//!   `g = 1 / ((1/N) * sum_i w_i l_i / (1 + w_i l_i g) + ridge)`, the
//!   asymptotic beamforming gain of the regularized precoder;
//! * `gain_derivative` — `g^2 / (1 - g^2 * load_feedback)`, the magnitude of
//!   the gain's sensitivity to the ridge (the gain itself decreases as the
//!   ridge grows).

use crate::error::{Error, Result};
use crate::model::UserState;

/// Relative tolerance of the scalar fixed points.
const GAIN_TOL: f64 = 1e-12;
/// Iteration budget of the scalar fixed points.
const GAIN_MAX_ITER: usize = 10_000;

/// Closed-form equivalents of the optimal precoder's multipliers and powers.
#[derive(Debug, Clone)]
pub struct OptimalEquivalents {
    /// `1 - (1/N) * sum_i target_i / (1 + target_i)`, in (0, 1].
    pub headroom: f64,
    /// Mean target-to-attenuation ratio `(1/K) * sum_i target_i / l_i`.
    pub mean_demand: f64,
    /// Closed-form multipliers, `target_k / (l_k * headroom)`.
    pub multipliers: Vec<f64>,
    /// Closed-form per-user powers in Watts.
    pub powers: Vec<f64>,
    /// Closed-form total transmit power in Watts.
    pub total_power: f64,
}

/// Asymptotic state of a weighted regularized heuristic at a given ridge.
#[derive(Debug, Clone)]
pub struct HeuristicEquivalents {
    /// Fixed-point beamforming gain at this ridge.
    pub gain: f64,
    /// Magnitude of the gain's derivative with respect to the ridge.
    pub gain_derivative: f64,
    /// Second moment `(1/N) * sum_i (w_i l_i)^2 / (1 + w_i l_i g)^2`.
    pub load_feedback: f64,
    /// Demand moment `(1/K) * sum_i target_i / (1 + w_i l_i g)^2`.
    pub target_residual: f64,
    /// Asymptotic per-user powers in Watts.
    pub powers: Vec<f64>,
    /// SINRs re-predicted from `powers` (must reproduce the targets).
    pub sinr: Vec<f64>,
    /// Asymptotic total transmit power in Watts.
    pub total_power: f64,
}

/// The power-minimizing ridge and the gain it induces.
#[derive(Debug, Clone, Copy)]
pub struct RidgeOptimum {
    pub ridge: f64,
    pub gain: f64,
}

/// Position-aware RZF optimum: the ridge depends only on the mean target.
#[derive(Debug, Clone, Copy)]
pub struct PaRzfOptimum {
    pub ridge: f64,
    /// Mean SINR target across users.
    pub mean_target: f64,
}

/// `1 - (1/N) * sum_i target_i / (1 + target_i)`.
pub fn headroom(users: &[UserState], antennas: usize) -> f64 {
    let served: f64 = users
        .iter()
        .map(|u| u.sinr_target / (1.0 + u.sinr_target))
        .sum();
    1.0 - served / antennas as f64
}

/// `(1/K) * sum_i target_i / attenuation_i`; zero for no users.
pub fn mean_demand(users: &[UserState]) -> f64 {
    if users.is_empty() {
        return 0.0;
    }
    users
        .iter()
        .map(|u| u.sinr_target / u.attenuation)
        .sum::<f64>()
        / users.len() as f64
}

/// Closed-form deterministic equivalents of the optimal precoder's
/// multipliers, per-user powers, and total power.
pub fn optimal_equivalents(
    users: &[UserState],
    noise_power: f64,
    antennas: usize,
) -> Result<OptimalEquivalents> {
    if users.len() > antennas {
        return Err(Error::Config(
            "load K/N must stay within (0, 1] for the large-system formulas".into(),
        ));
    }
    let xi = headroom(users, antennas);
    if !(xi > 0.0) {
        // Unreachable when the load is at most one, since every demand term
        // stays below one; kept as a defensive guard.
        return Err(Error::Config(format!("non-positive headroom {xi}")));
    }
    let demand = mean_demand(users);
    let load = users.len() as f64 / antennas as f64;
    let total_power = load * demand * noise_power / xi;
    let multipliers: Vec<f64> = users
        .iter()
        .map(|u| u.sinr_target / (u.attenuation * xi))
        .collect();
    let powers: Vec<f64> = users
        .iter()
        .map(|u| {
            let boost = (1.0 + u.sinr_target).powi(2);
            u.sinr_target / (u.attenuation * xi * xi)
                * (total_power + noise_power / u.attenuation * boost)
        })
        .collect();
    Ok(OptimalEquivalents {
        headroom: xi,
        mean_demand: demand,
        multipliers,
        powers,
        total_power,
    })
}

/// Damped fixed-point driver shared by the scalar gain equations. Applies a
/// 0.5 damping factor only when the iterates start oscillating.
fn damped_fixed_point<F: Fn(f64) -> f64>(map: F, start: f64) -> Result<f64> {
    let mut current = start;
    let mut previous_step = 0.0f64;
    let mut residual = f64::INFINITY;
    for _ in 0..GAIN_MAX_ITER {
        let mut next = map(current);
        let step = next - current;
        if step * previous_step < 0.0 {
            next = current + 0.5 * step;
        }
        previous_step = next - current;
        residual = (next - current).abs() / next.abs().max(f64::MIN_POSITIVE);
        current = next;
        if residual <= GAIN_TOL {
            return Ok(current);
        }
    }
    Err(Error::NoConvergence {
        iterations: GAIN_MAX_ITER,
        residual,
        last: vec![current],
    })
}

/// Solves the scalar fixed point
/// `g = 1 / ((1/N) * sum_i w_i l_i / (1 + w_i l_i g) + ridge)`
/// for the beamforming gain at the given ridge, starting from `1 / ridge`.
pub fn solve_gain(
    weights: &[f64],
    users: &[UserState],
    ridge: f64,
    antennas: usize,
) -> Result<f64> {
    assert_eq!(weights.len(), users.len(), "one weight per user");
    if !(ridge > 0.0) {
        return Err(Error::Config(
            "gain fixed point needs a positive ridge".into(),
        ));
    }
    let n = antennas as f64;
    let map = |g: f64| {
        let mut acc = 0.0;
        for (u, &w) in users.iter().zip(weights) {
            let wl = w * u.attenuation;
            acc += wl / (1.0 + wl * g);
        }
        1.0 / (acc / n + ridge)
    };
    damped_fixed_point(map, 1.0 / ridge)
}

/// Second moment `(1/N) * sum_i (w_i l_i)^2 / (1 + w_i l_i gain)^2`.
pub fn load_feedback(weights: &[f64], users: &[UserState], gain: f64, antennas: usize) -> f64 {
    assert_eq!(weights.len(), users.len());
    let acc: f64 = users
        .iter()
        .zip(weights)
        .map(|(u, &w)| {
            let wl = w * u.attenuation;
            (wl / (1.0 + wl * gain)).powi(2)
        })
        .sum();
    acc / antennas as f64
}

/// Demand moment `(1/K) * sum_i target_i / (1 + w_i l_i gain)^2`.
pub fn target_residual(weights: &[f64], users: &[UserState], gain: f64) -> f64 {
    assert_eq!(weights.len(), users.len());
    if users.is_empty() {
        return 0.0;
    }
    let acc: f64 = users
        .iter()
        .zip(weights)
        .map(|(u, &w)| {
            let wl = w * u.attenuation;
            u.sinr_target / (1.0 + wl * gain).powi(2)
        })
        .sum();
    acc / users.len() as f64
}

/// Magnitude of the gain's ridge sensitivity, `gain^2 / (1 - gain^2 * feedback)`.
/// The gain decreases as the ridge grows, so the signed derivative is the
/// negative of this value.
pub fn gain_derivative(gain: f64, feedback: f64) -> Result<f64> {
    let coupling = gain * gain * feedback;
    if coupling >= 1.0 {
        return Err(Error::DegenerateLoad(coupling));
    }
    Ok(gain * gain / (1.0 - coupling))
}

/// Asymptotic SINR of one user under the heuristic family, given its power,
/// the total power, and the gain.
pub fn predicted_sinr(
    power: f64,
    attenuation: f64,
    weight: f64,
    gain: f64,
    total_power: f64,
    noise_power: f64,
) -> f64 {
    let boost = (1.0 + weight * attenuation * gain).powi(2);
    power * attenuation * gain * gain / (total_power + noise_power / attenuation * boost)
}

/// Deterministic equivalents of the weighted regularized heuristic at a given
/// ridge: gain, moments, per-user powers that meet the targets, and the total
/// power. Fails with an infeasible-load error when the power balance has no
/// positive solution.
pub fn heuristic_equivalents(
    weights: &[f64],
    users: &[UserState],
    ridge: f64,
    noise_power: f64,
    antennas: usize,
) -> Result<HeuristicEquivalents> {
    let gain = solve_gain(weights, users, ridge, antennas)?;
    let feedback = load_feedback(weights, users, gain, antennas);
    let derivative = gain_derivative(gain, feedback)?;
    let residual = target_residual(weights, users, gain);
    let load = users.len() as f64 / antennas as f64;
    let denominator = 1.0 - gain * gain * feedback - load * residual;
    if !(denominator > 0.0) {
        return Err(Error::Infeasible(format!(
            "asymptotic power balance has denominator {denominator:.3e}: load too heavy for these targets"
        )));
    }
    let total_power = load * mean_demand(users) * noise_power / denominator;
    let powers: Vec<f64> = users
        .iter()
        .zip(weights)
        .map(|(u, &w)| {
            let boost = (1.0 + w * u.attenuation * gain).powi(2);
            u.sinr_target * (total_power + noise_power / u.attenuation * boost)
                / (u.attenuation * gain * gain)
        })
        .collect();
    let sinr: Vec<f64> = users
        .iter()
        .zip(weights)
        .zip(&powers)
        .map(|((u, &w), &p)| predicted_sinr(p, u.attenuation, w, gain, total_power, noise_power))
        .collect();
    Ok(HeuristicEquivalents {
        gain,
        gain_derivative: derivative,
        load_feedback: feedback,
        target_residual: residual,
        powers,
        sinr,
        total_power,
    })
}

/// Solves the fixed point for the power-minimizing gain,
/// `g = sum_i w_i l_i target_i / (1 + w_i l_i g)^3  /  sum_i (w_i l_i)^2 / (1 + w_i l_i g)^3`,
/// starting from the mean target. Uniqueness is not guaranteed a priori, so
/// the solve restarts from 0.1x and 10x the default start and fails loudly if
/// the solutions disagree.
pub fn solve_optimal_gain(weights: &[f64], users: &[UserState]) -> Result<f64> {
    assert_eq!(weights.len(), users.len(), "one weight per user");
    if users.is_empty() || users.iter().all(|u| u.sinr_target == 0.0) {
        return Err(Error::Config(
            "optimal gain needs at least one non-zero SINR target".into(),
        ));
    }
    for (u, &w) in users.iter().zip(weights) {
        if !(w * u.attenuation > 0.0) {
            return Err(Error::Config(
                "optimal gain needs strictly positive weighted attenuations".into(),
            ));
        }
    }
    let map = |g: f64| {
        let mut num = 0.0;
        let mut den = 0.0;
        for (u, &w) in users.iter().zip(weights) {
            let wl = w * u.attenuation;
            let cube = (1.0 + wl * g).powi(3);
            num += wl * u.sinr_target / cube;
            den += wl * wl / cube;
        }
        num / den
    };
    let start = users.iter().map(|u| u.sinr_target).sum::<f64>() / users.len() as f64;
    let solution = damped_fixed_point(map, start)?;
    for restart in [0.1 * start, 10.0 * start] {
        let other = damped_fixed_point(map, restart)?;
        if (other - solution).abs() > 1e-6 * solution.abs() {
            return Err(Error::AmbiguousFixedPoint(solution, other));
        }
    }
    Ok(solution)
}

/// The ridge minimizing the asymptotic total power of the weighted heuristic,
/// `1 / g* - (1/N) * sum_i w_i l_i / (1 + w_i l_i g*)`, together with `g*`.
/// Solving the gain fixed point at the returned ridge reproduces `g*`.
pub fn optimal_ridge(
    weights: &[f64],
    users: &[UserState],
    antennas: usize,
) -> Result<RidgeOptimum> {
    let gain = solve_optimal_gain(weights, users)?;
    let n = antennas as f64;
    let mut acc = 0.0;
    for (u, &w) in users.iter().zip(weights) {
        let wl = w * u.attenuation;
        acc += wl / (1.0 + wl * gain);
    }
    Ok(RidgeOptimum {
        ridge: 1.0 / gain - acc / n,
        gain,
    })
}

/// Power-minimizing ridge for the plain RZF precoder (all weights one).
pub fn rzf_ridge(users: &[UserState], antennas: usize) -> Result<RidgeOptimum> {
    optimal_ridge(&vec![1.0; users.len()], users, antennas)
}

/// Power-minimizing ridge for the position-aware RZF precoder (weights
/// `1 / attenuation`): closed form `1 / beta - load / (1 + beta)` with `beta`
/// the mean SINR target.
pub fn pa_rzf_ridge(targets: &[f64], load: f64) -> Result<PaRzfOptimum> {
    if targets.is_empty() {
        return Err(Error::Config(
            "mean SINR target of zero users is undefined".into(),
        ));
    }
    if !(load > 0.0 && load <= 1.0) {
        return Err(Error::Config(format!("load {load} outside (0, 1]")));
    }
    let mean_target = targets.iter().sum::<f64>() / targets.len() as f64;
    if !(mean_target > 0.0) {
        return Err(Error::Config("mean SINR target must be positive".into()));
    }
    Ok(PaRzfOptimum {
        ridge: 1.0 / mean_target - load / (1.0 + mean_target),
        mean_target,
    })
}

/// Closed-form asymptotic total power of the position-aware RZF precoder at
/// its optimal ridge.
pub fn pa_rzf_total_power(users: &[UserState], noise_power: f64, antennas: usize) -> f64 {
    if users.is_empty() {
        return 0.0;
    }
    let load = users.len() as f64 / antennas as f64;
    let beta = users.iter().map(|u| u.sinr_target).sum::<f64>() / users.len() as f64;
    load * mean_demand(users) * noise_power / (1.0 - load * beta / (1.0 + beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{self, SolverOptions};
    use crate::model::{dbm_to_watt, draw_channel, trial_rng, UserState};

    fn user(l: f64, target: f64) -> UserState {
        UserState {
            position: [50.0, 0.0],
            attenuation: l,
            rate_target: (1.0 + target).log2(),
            sinr_target: target,
        }
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn headroom_uniform_targets() {
        let users: Vec<UserState> = (0..8).map(|_| user(1.0, 1.0)).collect();
        assert!((headroom(&users, 10) - 0.6).abs() <= 1e-15);
    }

    #[test]
    fn optimal_equivalents_reference_instance() {
        let users = vec![user(1e-8, 1.0), user(4e-8, 3.0)];
        let eq = optimal_equivalents(&users, 1e-13, 4).unwrap();
        assert!((eq.headroom - 0.6875).abs() <= 1e-15);
        assert!(rel_err(eq.mean_demand, 8.75e7) <= 1e-14);
        assert!(rel_err(eq.multipliers[0], 1e8 / 0.6875) <= 1e-14);
        assert!(rel_err(eq.multipliers[1], 0.75e8 / 0.6875) <= 1e-14);
        assert!(rel_err(eq.total_power, 6.363636363636364e-6) <= 1e-12);
    }

    #[test]
    fn optimal_equivalents_zero_demand() {
        let users = vec![user(1e-8, 0.0), user(2e-8, 0.0)];
        let eq = optimal_equivalents(&users, 1e-13, 4).unwrap();
        assert_eq!(eq.headroom, 1.0);
        assert_eq!(eq.mean_demand, 0.0);
        assert!(eq.multipliers.iter().all(|&l| l == 0.0));
        assert!(eq.powers.iter().all(|&p| p == 0.0));
        assert_eq!(eq.total_power, 0.0);
    }

    #[test]
    fn optimal_equivalents_monotone_in_demand() {
        let base = vec![user(1e-8, 1.0), user(2e-8, 2.0), user(5e-9, 0.5)];
        let eq = optimal_equivalents(&base, 1e-13, 6).unwrap();
        let mut bumped = base.clone();
        bumped[1].sinr_target = 2.5;
        let eq2 = optimal_equivalents(&bumped, 1e-13, 6).unwrap();
        assert!(eq2.multipliers[1] > eq.multipliers[1]);
        assert!(eq2.total_power > eq.total_power);
    }

    #[test]
    fn gain_uniform_unit_load_is_golden_ratio_conjugate() {
        // All weighted attenuations one at unit load and unit ridge turn the
        // fixed point into g^2 + g - 1 = 0.
        let users: Vec<UserState> = (0..6).map(|_| user(1.0, 1.0)).collect();
        let weights = vec![1.0; 6];
        let gain = solve_gain(&weights, &users, 1.0, 6).unwrap();
        let oracle = (5f64.sqrt() - 1.0) / 2.0;
        assert!(rel_err(gain, oracle) <= 1e-12, "gain {gain}");
    }

    #[test]
    fn gain_with_zero_weights_is_inverse_ridge() {
        let users: Vec<UserState> = (0..3).map(|_| user(1e-8, 2.0)).collect();
        let gain = solve_gain(&[0.0, 0.0, 0.0], &users, 0.25, 8).unwrap();
        assert!(rel_err(gain, 4.0) <= 1e-12);
    }

    #[test]
    fn gain_at_optimal_weights_is_headroom() {
        let users = vec![user(1e-8, 1.0), user(4e-8, 3.0), user(2e-8, 0.5)];
        let eq = optimal_equivalents(&users, 1e-13, 6).unwrap();
        let gain = solve_gain(&eq.multipliers, &users, 1.0, 6).unwrap();
        assert!(rel_err(gain, eq.headroom) <= 1e-11);
    }

    #[test]
    fn gain_derivative_reference_values() {
        // Decoupled case.
        assert!((gain_derivative(0.3, 0.0).unwrap() - 0.09).abs() <= 1e-15);
        // Uniform unit-load case.
        let gain = (5f64.sqrt() - 1.0) / 2.0;
        let feedback = 1.0 / (1.0 + gain).powi(2);
        let derivative = gain_derivative(gain, feedback).unwrap();
        assert!(rel_err(derivative, 0.44721359549995804) <= 1e-12);
        // Degenerate load rejected.
        assert!(matches!(
            gain_derivative(1.0, 1.0),
            Err(Error::DegenerateLoad(_))
        ));
    }

    #[test]
    fn gain_derivative_matches_finite_difference() {
        let users = vec![user(1e-8, 1.0), user(3e-8, 2.0), user(6e-9, 0.4)];
        let weights = vec![0.9e8, 0.4e8, 2.1e8];
        let ridge = 0.8;
        let antennas = 6;
        let gain = solve_gain(&weights, &users, ridge, antennas).unwrap();
        let feedback = load_feedback(&weights, &users, gain, antennas);
        let derivative = gain_derivative(gain, feedback).unwrap();
        let h = 1e-5;
        let up = solve_gain(&weights, &users, ridge + h, antennas).unwrap();
        let down = solve_gain(&weights, &users, ridge - h, antennas).unwrap();
        // The gain decreases in the ridge; the derivative is its magnitude.
        let fd = (down - up) / (2.0 * h);
        assert!(
            (derivative - fd).abs() <= 1e-4 * derivative,
            "derivative {derivative} vs finite difference {fd}"
        );
    }

    #[test]
    fn heuristic_equivalents_match_optimal_at_unit_ridge() {
        let users = vec![user(1e-8, 1.0), user(4e-8, 3.0), user(2e-8, 0.5)];
        let noise = 1e-13;
        let eq = optimal_equivalents(&users, noise, 6).unwrap();
        let heq = heuristic_equivalents(&eq.multipliers, &users, 1.0, noise, 6).unwrap();
        assert!(rel_err(heq.gain, eq.headroom) <= 1e-11);
        assert!(rel_err(heq.total_power, eq.total_power) <= 1e-10);
        // Moment identity behind the match: g^2 F2 + c B = 1 - headroom.
        let load = 3.0 / 6.0;
        let combined = heq.gain * heq.gain * heq.load_feedback + load * heq.target_residual;
        assert!(rel_err(combined, 1.0 - eq.headroom) <= 1e-10);
    }

    #[test]
    fn heuristic_equivalents_round_trip_sinr() {
        let users = vec![user(1e-8, 1.0), user(3e-8, 2.5), user(7e-9, 0.7)];
        let weights = vec![1.0; 3];
        let heq = heuristic_equivalents(&weights, &users, 0.3, 1e-13, 6).unwrap();
        for (s, u) in heq.sinr.iter().zip(&users) {
            assert!(rel_err(*s, u.sinr_target) <= 1e-10);
        }
    }

    #[test]
    fn heuristic_equivalents_empty_users() {
        let heq = heuristic_equivalents(&[], &[], 0.5, 1e-13, 8).unwrap();
        assert_eq!(heq.total_power, 0.0);
        assert!(heq.powers.is_empty());
        assert!(rel_err(heq.gain, 2.0) <= 1e-12);
    }

    #[test]
    fn total_power_consistent_with_gain_derivative_route() {
        // Independent of the closed form, the total power must equal
        // load * derivative * mean(p_i l_i / (1 + w_i l_i g)^2).
        let users = vec![user(1e-8, 1.2), user(5e-8, 2.0), user(2e-8, 0.3)];
        let weights = vec![2e7, 9e7, 4e7];
        let heq = heuristic_equivalents(&weights, &users, 0.6, 1e-13, 9).unwrap();
        let load = 3.0 / 9.0;
        let mean: f64 = users
            .iter()
            .zip(&weights)
            .zip(&heq.powers)
            .map(|((u, &w), &p)| p * u.attenuation / (1.0 + w * u.attenuation * heq.gain).powi(2))
            .sum::<f64>()
            / users.len() as f64;
        let alternate = load * heq.gain_derivative * mean;
        assert!(rel_err(alternate, heq.total_power) <= 1e-11);
    }

    #[test]
    fn optimal_gain_proportional_targets() {
        // Targets proportional to attenuations collapse the fixed point to
        // the proportionality constant.
        let zeta = 2.0;
        let users = vec![user(0.5, zeta * 0.5), user(1.0, zeta * 1.0)];
        let gain = solve_optimal_gain(&[1.0, 1.0], &users).unwrap();
        assert!(rel_err(gain, zeta) <= 1e-10);
    }

    #[test]
    fn optimal_gain_inverse_weights_give_mean_target() {
        let users = vec![user(1e-8, 1.0), user(4e-8, 1.0), user(2e-8, 1.0)];
        let weights: Vec<f64> = users.iter().map(|u| 1.0 / u.attenuation).collect();
        let gain = solve_optimal_gain(&weights, &users).unwrap();
        assert!(rel_err(gain, 1.0) <= 1e-12);
    }

    #[test]
    fn optimal_gain_single_user_ratio() {
        let users = vec![user(2e-8, 3.0)];
        let gain = solve_optimal_gain(&[5e7], &users).unwrap();
        assert!(rel_err(gain, 3.0 / (5e7 * 2e-8)) <= 1e-11);
    }

    #[test]
    fn optimal_ridge_inverse_weights_uniform_targets() {
        // Weights 1/l with uniform unit targets at load one half.
        let users = vec![user(1e-8, 1.0), user(4e-8, 1.0)];
        let weights: Vec<f64> = users.iter().map(|u| 1.0 / u.attenuation).collect();
        let opt = optimal_ridge(&weights, &users, 4).unwrap();
        assert!(rel_err(opt.gain, 1.0) <= 1e-12);
        assert!(rel_err(opt.ridge, 0.75) <= 1e-12);
    }

    #[test]
    fn optimal_ridge_round_trips_through_gain_solve() {
        let users = vec![user(1e-8, 1.3), user(3e-8, 0.6), user(8e-9, 2.2)];
        let weights = vec![0.7e8, 1.8e8, 0.2e8];
        let opt = optimal_ridge(&weights, &users, 7).unwrap();
        let gain = solve_gain(&weights, &users, opt.ridge, 7).unwrap();
        assert!(rel_err(gain, opt.gain) <= 1e-9);
    }

    #[test]
    fn rzf_ridge_reference_instance() {
        // Targets 2 * attenuation with attenuations (0.5, 1) at N = 4.
        let users = vec![user(0.5, 1.0), user(1.0, 2.0)];
        let opt = rzf_ridge(&users, 4).unwrap();
        assert!(rel_err(opt.gain, 2.0) <= 1e-10);
        assert!(rel_err(opt.ridge, 17.0 / 48.0) <= 1e-10);
        // Same thing through the proportionality shortcut: ridge = headroom / 2.
        assert!(rel_err(opt.ridge, headroom(&users, 4) / 2.0) <= 1e-10);
    }

    #[test]
    fn rzf_ridge_single_user() {
        let users = vec![user(2e-8, 1.5)];
        let opt = rzf_ridge(&users, 5).unwrap();
        let expected = 2e-8 * headroom(&users, 5) / 1.5;
        assert!(rel_err(opt.ridge, expected) <= 1e-11);
    }

    #[test]
    fn rzf_and_pa_rzf_ridges_agree_up_to_attenuation_for_uniform_cells() {
        // With a common attenuation the two precoder families coincide after
        // rescaling the ridge by that attenuation.
        let l = 3e-8;
        let users = vec![user(l, 0.8), user(l, 2.1), user(l, 1.4)];
        let rzf = rzf_ridge(&users, 6).unwrap();
        let pa = pa_rzf_ridge(&[0.8, 2.1, 1.4], 0.5).unwrap();
        assert!(rel_err(rzf.ridge, pa.ridge * l) <= 1e-9);
    }

    #[test]
    fn pa_rzf_reference_values() {
        let opt = pa_rzf_ridge(&[1.0; 8], 0.8).unwrap();
        assert!(rel_err(opt.ridge, 0.6) <= 1e-15);
        assert_eq!(opt.mean_target, 1.0);

        let users: Vec<UserState> = (0..8).map(|_| user(1e-8, 1.0)).collect();
        let power = pa_rzf_total_power(&users, dbm_to_watt(-104.0), 10);
        assert!(rel_err(power, 5.308095607379959e-6) <= 1e-12);
    }

    #[test]
    fn pa_rzf_ridge_matches_headroom_rule_for_uniform_targets() {
        // Uniform targets make the position-aware ridge headroom / target,
        // the same weights the optimal multipliers induce.
        let gamma = 2.5;
        let users: Vec<UserState> = (0..5).map(|i| user(1e-8 * (i + 1) as f64, gamma)).collect();
        let pa = pa_rzf_ridge(&[gamma; 5], 5.0 / 8.0).unwrap();
        assert!(rel_err(pa.ridge, headroom(&users, 8) / gamma) <= 1e-12);
    }

    #[test]
    fn pa_rzf_ridge_light_load_limit() {
        let pa = pa_rzf_ridge(&[2.0, 4.0], 1e-9).unwrap();
        assert!(rel_err(pa.ridge, 1.0 / 3.0) <= 1e-8);
    }

    #[test]
    fn asymptotic_power_is_stationary_at_optimal_ridge() {
        let users = vec![user(1e-8, 1.0), user(3e-8, 2.0), user(9e-9, 0.8)];
        let weights = vec![0.9e8, 0.5e8, 1.5e8];
        let noise = 1e-13;
        let antennas = 6;
        let opt = optimal_ridge(&weights, &users, antennas).unwrap();
        let power_at = |ridge: f64| {
            heuristic_equivalents(&weights, &users, ridge, noise, antennas)
                .unwrap()
                .total_power
        };
        let center = power_at(opt.ridge);
        let h = 1e-4 * opt.ridge;
        let slope = (power_at(opt.ridge + h) - power_at(opt.ridge - h)).abs() / (2.0 * h);
        assert!(slope <= 1e-6 * center, "slope {slope} vs power {center}");
        assert!(center <= power_at(1.05 * opt.ridge));
        assert!(center <= power_at(0.95 * opt.ridge));
    }

    #[test]
    fn uniform_targets_make_pa_rzf_the_optimal_precoder() {
        // Finite-N identity: with uniform targets, the position-aware RZF at
        // its optimal ridge equals the precoder built from the closed-form
        // multipliers, channel draw by channel draw.
        let gamma = 1.7;
        let users = vec![
            user(1e-8, gamma),
            user(4e-8, gamma),
            user(6e-9, gamma),
            user(2e-8, gamma),
        ];
        let antennas = 8;
        let noise = dbm_to_watt(-104.0);
        let ch = draw_channel(&mut trial_rng(31, 0), &users, antennas);
        let targets = ch.sinr_targets();

        let eq = optimal_equivalents(&users, noise, antennas).unwrap();
        let reference = exact::heuristic(&ch, &eq.multipliers, 1.0, &targets, noise).unwrap();

        let inv_l: Vec<f64> = users.iter().map(|u| 1.0 / u.attenuation).collect();
        let pa = pa_rzf_ridge(&targets, users.len() as f64 / antennas as f64).unwrap();
        let candidate = exact::heuristic(&ch, &inv_l, pa.ridge, &targets, noise).unwrap();

        let scale = reference.precoder.max_abs();
        assert!(candidate.precoder.max_abs_diff(&reference.precoder) <= 1e-10 * scale);
    }

    #[test]
    fn proportional_targets_make_rzf_the_optimal_precoder() {
        // Finite-N identity: with targets proportional to attenuations, plain
        // RZF at its optimal ridge equals the closed-form-multiplier precoder.
        let zeta = 0.9;
        let attenuations = [1e-8, 4e-8, 6e-9, 2e-8, 3e-8];
        let users: Vec<UserState> = attenuations
            .iter()
            .map(|&l| user(l, zeta * l / 1e-8))
            .collect();
        let antennas = 10;
        let noise = dbm_to_watt(-104.0);
        let ch = draw_channel(&mut trial_rng(37, 0), &users, antennas);
        let targets = ch.sinr_targets();

        let eq = optimal_equivalents(&users, noise, antennas).unwrap();
        let reference = exact::heuristic(&ch, &eq.multipliers, 1.0, &targets, noise).unwrap();

        let rzf = rzf_ridge(&users, antennas).unwrap();
        let expected_ridge = eq.headroom / (zeta / 1e-8);
        assert!(rel_err(rzf.ridge, expected_ridge) <= 1e-10);
        let ones = vec![1.0; users.len()];
        let candidate = exact::heuristic(&ch, &ones, rzf.ridge, &targets, noise).unwrap();

        let scale = reference.precoder.max_abs();
        assert!(candidate.precoder.max_abs_diff(&reference.precoder) <= 1e-10 * scale);
    }

    #[test]
    fn multipliers_concentrate_with_array_size() {
        // Sanity-scale concentration check: the exact multipliers approach
        // the closed forms as the array grows at fixed load.
        let noise = dbm_to_watt(-104.0);
        let mut medians = Vec::new();
        for &(antennas, trials) in &[(16usize, 20usize), (64, 20)] {
            let users_count = antennas / 2;
            let mut errs = Vec::new();
            for t in 0..trials {
                let users: Vec<UserState> = (0..users_count)
                    .map(|i| user(1e-8 * (1.0 + (i as f64) / users_count as f64), 1.0))
                    .collect();
                let ch = draw_channel(
                    &mut trial_rng(900 + antennas as u64, t as u64),
                    &users,
                    antennas,
                );
                let targets = ch.sinr_targets();
                let solve =
                    exact::solve_multipliers(&ch, &targets, &SolverOptions::default()).unwrap();
                let eq = optimal_equivalents(&users, noise, antennas).unwrap();
                let err = solve
                    .multipliers
                    .iter()
                    .zip(&eq.multipliers)
                    .map(|(&a, &b)| (a - b).abs() / b)
                    .fold(0.0f64, f64::max);
                errs.push(err);
            }
            errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push(errs[errs.len() / 2]);
        }
        assert!(
            medians[1] < medians[0],
            "multiplier error should shrink with N: {medians:?}"
        );
    }
}
