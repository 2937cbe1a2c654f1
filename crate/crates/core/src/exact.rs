//! Finite-`N` precoder construction.
//!
//! Every scheme here has the same shape: a direction matrix obtained from a
//! regularized-Gram solve, followed by the power allocation that meets all
//! SINR targets with equality. The optimal scheme finds its per-user Gram
//! weights (the Lagrange multipliers of the power-minimization problem) as
//! the positive fixed point of a standard interference-function iteration;
//! the heuristic family takes the weights and the ridge as inputs instead.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{herm_dot, lu_solve_in_place, mat_mul, weighted_gram, CMat, Cholesky};
use crate::model::ChannelRealization;

/// Starting point for the multiplier fixed point.
#[derive(Debug, Clone, PartialEq)]
pub enum MultiplierInit {
    /// `target_k / N` for each user: positive and order-correct.
    TargetsOverAntennas,
    /// Every multiplier starts at the same positive value.
    Uniform(f64),
    /// Warm start, e.g. from the closed-form large-system multipliers.
    Warm(Vec<f64>),
}

/// Stopping rule for the multiplier fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Relative sup-norm tolerance on successive multiplier iterates.
    pub tol: f64,
    /// Iteration budget. The plain iteration contracts roughly like
    /// `max_k target_k / (1 + target_k)` per step, so high targets need a
    /// budget in the low thousands to reach tight tolerances.
    pub max_iter: usize,
    /// Initial multipliers.
    pub init: MultiplierInit,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 2000,
            init: MultiplierInit::TargetsOverAntennas,
        }
    }
}

/// Outcome of the multiplier fixed point.
#[derive(Debug, Clone)]
pub struct MultiplierSolve {
    pub multipliers: Vec<f64>,
    pub iterations: usize,
}

/// A fully assembled precoder together with its diagnostics.
#[derive(Debug, Clone)]
pub struct PrecoderSolution {
    /// `N x K` precoding matrix; column `k` serves user `k`.
    pub precoder: CMat,
    /// Lagrange multipliers, present only for the optimal scheme (heuristics
    /// fix them implicitly through their weights and ridge).
    pub multipliers: Option<Vec<f64>>,
    /// Allocated per-user powers.
    pub powers: Vec<f64>,
    /// Achieved SINR per user.
    pub sinr: Vec<f64>,
    /// Total transmit power `tr(V V^H)` in Watts.
    pub total_power: f64,
    /// Fixed-point iterations spent (zero for non-iterative schemes).
    pub iterations: usize,
    /// Whether the multiplier iteration met its tolerance.
    pub converged: bool,
    /// Distance of the target set from the feasibility boundary of these
    /// directions, `1 - spectral_radius(coupling)`; allocated powers diverge
    /// like its inverse as it closes.
    pub feasibility_margin: f64,
}

fn check_targets(channel: &ChannelRealization, targets: &[f64]) -> Result<()> {
    if targets.len() != channel.user_count() {
        return Err(Error::Config(format!(
            "{} SINR targets for {} users",
            targets.len(),
            channel.user_count()
        )));
    }
    if channel.user_count() > channel.antennas() {
        return Err(Error::Config(
            "more users than antennas: targets are not jointly achievable".into(),
        ));
    }
    Ok(())
}

/// One Jacobi update of the multiplier fixed point: every multiplier is
/// recomputed from the same regularized Gram matrix
/// `sum_i current_i h_i h_i^H + N I`, factored once and reused for all `K`
/// quadratic forms.
pub fn multiplier_step(
    channel: &ChannelRealization,
    targets: &[f64],
    current: &[f64],
) -> Result<Vec<f64>> {
    let n = channel.antennas() as f64;
    let gram = weighted_gram(&channel.matrix, current, n);
    let chol = Cholesky::factor(&gram)?;
    let mut next = Vec::with_capacity(targets.len());
    for (k, &target) in targets.iter().enumerate() {
        let q = chol.quadratic_form(channel.matrix.col(k));
        next.push(target / (1.0 + target) / q);
    }
    Ok(next)
}

/// Solves for the positive fixed point of the multiplier equations by plain
/// iteration of [`multiplier_step`], stopping once the relative sup-norm step
/// drops below `opts.tol`.
///
/// The update is a standard interference function, so from a small positive
/// start the iterates increase monotonically to the unique fixed point.
/// Non-convergence within the budget returns [`Error::NoConvergence`] carrying
/// the last iterate and the final relative step.
pub fn solve_multipliers(
    channel: &ChannelRealization,
    targets: &[f64],
    opts: &SolverOptions,
) -> Result<MultiplierSolve> {
    check_targets(channel, targets)?;
    if targets.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::Config(
            "multiplier fixed point needs strictly positive SINR targets".into(),
        ));
    }
    let n = channel.antennas() as f64;
    let mut current: Vec<f64> = match &opts.init {
        MultiplierInit::TargetsOverAntennas => targets.iter().map(|&g| g / n).collect(),
        MultiplierInit::Uniform(v) => {
            if !(*v > 0.0) {
                return Err(Error::Config(
                    "uniform multiplier init must be positive".into(),
                ));
            }
            vec![*v; targets.len()]
        }
        MultiplierInit::Warm(w) => {
            if w.len() != targets.len() || w.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Config(
                    "warm-start multipliers must be positive, one per user".into(),
                ));
            }
            w.clone()
        }
    };

    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        let next = multiplier_step(channel, targets, &current)?;
        residual = next
            .iter()
            .zip(&current)
            .map(|(&a, &b)| (a - b).abs() / a)
            .fold(0.0, f64::max);
        current = next;
        if residual <= opts.tol {
            return Ok(MultiplierSolve {
                multipliers: current,
                iterations: iteration,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
        last: current,
    })
}

/// Beamforming directions for the weighted regularized-Gram family: column
/// `k` solves `(sum_i weights_i h_i h_i^H + N * ridge * I) a_k = h_k`. One
/// Cholesky factorization serves all `K` right-hand sides; the inverse is
/// never formed.
pub fn directions(channel: &ChannelRealization, weights: &[f64], ridge: f64) -> Result<CMat> {
    assert_eq!(weights.len(), channel.user_count(), "one weight per user");
    let n = channel.antennas() as f64;
    let gram = weighted_gram(&channel.matrix, weights, n * ridge);
    let chol = Cholesky::factor(&gram)?;
    Ok(chol.solve_mat(&channel.matrix))
}

/// Power allocation meeting every SINR target with equality.
///
/// Builds the real coupling matrix with diagonal `|h_k^H a_k|^2 / target_k`
/// and off-diagonal `-|h_k^H a_i|^2`, then solves it against the constant
/// noise-power vector. A singular system or a non-positive power means the
/// targets are unreachable with the given directions and is reported as
/// [`Error::Infeasible`].
pub fn power_allocation(
    channel: &ChannelRealization,
    dirs: &CMat,
    targets: &[f64],
    noise_power: f64,
) -> Result<Vec<f64>> {
    let k = channel.user_count();
    assert_eq!(dirs.cols(), k, "one direction per user");
    assert_eq!(targets.len(), k, "one target per user");
    if targets.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::Infeasible(
            "power allocation needs strictly positive SINR targets".into(),
        ));
    }

    let mut coupling = vec![0.0f64; k * k];
    for i in 0..k {
        let ai = dirs.col(i);
        for row in 0..k {
            let gain = herm_dot(channel.matrix.col(row), ai).norm_sqr();
            coupling[i * k + row] = if row == i { gain / targets[row] } else { -gain };
        }
    }
    let mut powers = vec![noise_power; k];
    lu_solve_in_place(&mut coupling, k, &mut powers).map_err(|_| {
        Error::Infeasible(
            "singular power-coupling matrix (duplicate or degenerate channel columns)".into(),
        )
    })?;
    for (user, &p) in powers.iter().enumerate() {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Infeasible(format!(
                "non-positive power {p:.3e} for user {user}: targets unreachable with these directions"
            )));
        }
    }
    Ok(powers)
}

/// Feasibility margin of a target set under given directions:
/// `1 - spectral_radius(C)` with `C[k][i] = target_k |h_k^H a_i|^2 / |h_k^H a_k|^2`
/// for `i != k`. Positive margin means positive powers exist; they scale like
/// the margin's inverse, so a vanishing margin marks a near-singular draw.
pub fn feasibility_margin(channel: &ChannelRealization, dirs: &CMat, targets: &[f64]) -> f64 {
    let k = channel.user_count();
    if k <= 1 {
        return 1.0;
    }
    let mut coupling = vec![0.0f64; k * k];
    for row in 0..k {
        let h = channel.matrix.col(row);
        let own = herm_dot(h, dirs.col(row)).norm_sqr();
        for i in 0..k {
            if i != row {
                coupling[i * k + row] = targets[row] * herm_dot(h, dirs.col(i)).norm_sqr() / own;
            }
        }
    }
    // Power iteration on the nonnegative coupling matrix.
    let mut x = vec![1.0 / k as f64; k];
    let mut radius = 0.0f64;
    for _ in 0..500 {
        let mut y = vec![0.0f64; k];
        for col in 0..k {
            let xc = x[col];
            if xc != 0.0 {
                for row in 0..k {
                    y[row] += coupling[col * k + row] * xc;
                }
            }
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        let next = norm;
        for v in &mut y {
            *v /= norm;
        }
        x = y;
        if (next - radius).abs() <= 1e-12 * next.max(1.0) {
            radius = next;
            break;
        }
        radius = next;
    }
    1.0 - radius
}

/// Achieved SINRs and total transmit power of an arbitrary precoder.
pub fn evaluate(
    channel: &ChannelRealization,
    precoder: &CMat,
    noise_power: f64,
) -> (Vec<f64>, f64) {
    let k = channel.user_count();
    assert_eq!(precoder.rows(), channel.antennas(), "shape mismatch");
    assert_eq!(precoder.cols(), k, "shape mismatch");
    let mut sinr = Vec::with_capacity(k);
    for user in 0..k {
        let h = channel.matrix.col(user);
        let mut signal = 0.0;
        let mut interference = 0.0;
        for i in 0..k {
            let gain = herm_dot(h, precoder.col(i)).norm_sqr();
            if i == user {
                signal = gain;
            } else {
                interference += gain;
            }
        }
        sinr.push(signal / (interference + noise_power));
    }
    (sinr, precoder.frobenius_sq())
}

fn assemble(
    channel: &ChannelRealization,
    dirs: CMat,
    targets: &[f64],
    noise_power: f64,
    multipliers: Option<Vec<f64>>,
    iterations: usize,
) -> Result<PrecoderSolution> {
    let powers = power_allocation(channel, &dirs, targets, noise_power)?;
    let feasibility_margin = feasibility_margin(channel, &dirs, targets);
    let mut precoder = dirs;
    for (k, &p) in powers.iter().enumerate() {
        precoder.scale_col(k, p.sqrt());
    }
    let (sinr, total_power) = evaluate(channel, &precoder, noise_power);
    Ok(PrecoderSolution {
        precoder,
        multipliers,
        powers,
        sinr,
        total_power,
        iterations,
        converged: true,
        feasibility_margin,
    })
}

/// The power-minimizing linear precoder: fixed-point multipliers, unit-ridge
/// directions, SINR-equality power allocation.
pub fn optimal(
    channel: &ChannelRealization,
    targets: &[f64],
    noise_power: f64,
    opts: &SolverOptions,
) -> Result<PrecoderSolution> {
    let solve = solve_multipliers(channel, targets, opts)?;
    let dirs = directions(channel, &solve.multipliers, 1.0)?;
    let iterations = solve.iterations;
    assemble(
        channel,
        dirs,
        targets,
        noise_power,
        Some(solve.multipliers),
        iterations,
    )
}

/// A heuristic precoder from the weighted regularized family: fixed per-user
/// weights, a free ridge, and the usual SINR-equality power allocation.
/// Weights of all ones give the classical regularized zero-forcing precoder;
/// weights `1 / attenuation_k` give its position-aware variant.
pub fn heuristic(
    channel: &ChannelRealization,
    weights: &[f64],
    ridge: f64,
    targets: &[f64],
    noise_power: f64,
) -> Result<PrecoderSolution> {
    check_targets(channel, targets)?;
    if !(ridge > 0.0) {
        return Err(Error::Config("heuristic ridge must be positive".into()));
    }
    let dirs = directions(channel, weights, ridge)?;
    assemble(channel, dirs, targets, noise_power, None, 0)
}

/// Zero-forcing baseline: directions `H (H^H H)^{-1}`, per-user power set so
/// the interference-free received SNR equals the target.
pub fn zero_forcing(
    channel: &ChannelRealization,
    targets: &[f64],
    noise_power: f64,
) -> Result<PrecoderSolution> {
    check_targets(channel, targets)?;
    let k = channel.user_count();
    // Gram of the channel columns.
    let mut gram = CMat::zeros(k, k);
    for j in 0..k {
        for i in j..k {
            let v = herm_dot(channel.matrix.col(i), channel.matrix.col(j));
            gram.set(i, j, v);
        }
    }
    let chol = Cholesky::factor(&gram)
        .map_err(|_| Error::Infeasible("zero-forcing needs a full-column-rank channel".into()))?;
    let mut identity = CMat::zeros(k, k);
    for d in 0..k {
        identity.set(d, d, Complex64::new(1.0, 0.0));
    }
    let gram_inv = chol.solve_mat(&identity);
    let dirs = mat_mul(&channel.matrix, &gram_inv);
    let feasibility_margin = feasibility_margin(channel, &dirs, targets);

    let mut precoder = dirs;
    let mut powers = Vec::with_capacity(k);
    for (user, &target) in targets.iter().enumerate() {
        if !(target > 0.0) {
            return Err(Error::Infeasible(
                "zero-forcing power scaling needs strictly positive SINR targets".into(),
            ));
        }
        let received = herm_dot(channel.matrix.col(user), precoder.col(user)).norm_sqr();
        let p = target * noise_power / received;
        powers.push(p);
        precoder.scale_col(user, p.sqrt());
    }
    let (sinr, total_power) = evaluate(channel, &precoder, noise_power);
    Ok(PrecoderSolution {
        precoder,
        multipliers: None,
        powers,
        sinr,
        total_power,
        iterations: 0,
        converged: true,
        feasibility_margin,
    })
}
