//! Cell geometry, large-scale fading, and random channel generation.
//!
//! Users live on an annulus around the base station; their average channel
//! attenuation follows the power-law path loss `d0 / ||x||^kappa`, and the
//! small-scale fading is i.i.d. circularly-symmetric complex Gaussian with
//! unit variance per entry (real and imaginary parts of variance 1/2 each).
//!
//! Randomness contract: one master seed; every Monte Carlo trial derives its
//! own counter-based stream via [`trial_rng`], so parallel execution order
//! cannot change any drawn value.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Static description of the cell and the array.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of base-station antennas (`N`).
    pub antennas: usize,
    /// Number of single-antenna users (`K`), at most `antennas`.
    pub users: usize,
    /// Noise power at each receiver, in Watts.
    pub noise_power: f64,
    /// Cell radius in meters.
    pub cell_radius: f64,
    /// Minimum user distance from the array, in meters.
    pub min_distance: f64,
    /// Path-loss exponent, at least 2.
    pub pathloss_exponent: f64,
    /// Path-loss constant fixing the attenuation scale (dimensionless).
    pub pathloss_const: f64,
    /// Transmission bandwidth in Hz. Reporting only; never enters the math.
    pub bandwidth: f64,
}

impl SystemConfig {
    /// Urban macro-cell defaults: 250 m cell, 15 m exclusion radius,
    /// exponent 3.76, constant `10^-3.53`, 10 MHz bandwidth with a total
    /// noise power of -104 dBm.
    pub fn default_cell(antennas: usize, users: usize) -> Self {
        Self {
            antennas,
            users,
            noise_power: dbm_to_watt(-104.0),
            cell_radius: 250.0,
            min_distance: 15.0,
            pathloss_exponent: 3.76,
            pathloss_const: 10f64.powf(-3.53),
            bandwidth: 10e6,
        }
    }

    /// Checks every structural invariant, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::Config("user count must be positive".into()));
        }
        if self.antennas < self.users {
            return Err(Error::Config(format!(
                "user count {} exceeds antenna count {}; the load K/N must stay within (0, 1]",
                self.users, self.antennas
            )));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::Config("noise power must be positive".into()));
        }
        if !(self.min_distance > 0.0 && self.min_distance < self.cell_radius) {
            return Err(Error::Config(format!(
                "need 0 < min_distance < cell_radius, got {} and {}",
                self.min_distance, self.cell_radius
            )));
        }
        if !(self.pathloss_exponent >= 2.0) {
            return Err(Error::Config(
                "path-loss exponent must be at least 2".into(),
            ));
        }
        if !(self.pathloss_const > 0.0) {
            return Err(Error::Config("path-loss constant must be positive".into()));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::Config("bandwidth must be positive".into()));
        }
        Ok(())
    }

    /// Load `c = K / N`.
    pub fn load(&self) -> f64 {
        self.users as f64 / self.antennas as f64
    }
}

/// One user: where it sits, how much the channel attenuates on average, and
/// what it asks for.
#[derive(Debug, Clone, PartialEq)]
pub struct UserState {
    /// Position relative to the base station, in meters.
    pub position: [f64; 2],
    /// Large-scale attenuation `l(x)` at that position (dimensionless).
    pub attenuation: f64,
    /// Rate target in bit/s/Hz.
    pub rate_target: f64,
    /// SINR target `2^rate - 1`.
    pub sinr_target: f64,
}

impl UserState {
    /// Builds a user from a rate target, deriving the SINR target.
    pub fn from_rate(position: [f64; 2], attenuation: f64, rate: f64) -> Self {
        Self {
            position,
            attenuation,
            rate_target: rate,
            sinr_target: 2f64.powf(rate) - 1.0,
        }
    }
}

/// One draw of the downlink channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `N x K` channel matrix; column `k` is user `k`'s channel.
    pub matrix: CMat,
    /// The users the columns belong to, in column order.
    pub users: Vec<UserState>,
}

impl ChannelRealization {
    pub fn antennas(&self) -> usize {
        self.matrix.rows()
    }

    pub fn user_count(&self) -> usize {
        self.matrix.cols()
    }

    /// SINR targets in user order.
    pub fn sinr_targets(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.sinr_target).collect()
    }

    /// Large-scale attenuations in user order.
    pub fn attenuations(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.attenuation).collect()
    }
}

/// Derives the counter-based random stream for one Monte Carlo trial from the
/// master seed. Streams are independent, so trials can run in any order on
/// any number of threads without changing a single drawn value.
pub fn trial_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Samples `count` user positions uniformly (in area) on the annulus between
/// the exclusion radius and the cell edge. For each point the radius comes
/// from the inverse CDF `sqrt(r_min^2 + u * (r_max^2 - r_min^2))` and the
/// angle is uniform.
pub fn sample_positions<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    cfg: &SystemConfig,
) -> Vec<[f64; 2]> {
    let r_min_sq = cfg.min_distance * cfg.min_distance;
    let r_max_sq = cfg.cell_radius * cfg.cell_radius;
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let radius = (r_min_sq + u * (r_max_sq - r_min_sq)).sqrt();
            let angle = std::f64::consts::TAU * rng.random::<f64>();
            [radius * angle.cos(), radius * angle.sin()]
        })
        .collect()
}

/// Power-law path loss `d0 / ||x||^kappa`. Defined only outside the exclusion
/// radius; a closer point is an error rather than a clamp so that sampler
/// bugs surface immediately.
pub fn pathloss(position: [f64; 2], cfg: &SystemConfig) -> Result<f64> {
    let distance = (position[0] * position[0] + position[1] * position[1]).sqrt();
    // Tiny relative slack so points sampled exactly on the boundary pass.
    if distance < cfg.min_distance * (1.0 - 1e-12) {
        return Err(Error::InsideMinDistance {
            distance,
            min_distance: cfg.min_distance,
        });
    }
    Ok(cfg.pathloss_const / distance.powf(cfg.pathloss_exponent))
}

/// Draws the Rayleigh-fading channel `h_k = sqrt(l_k) * w_k` for every user,
/// with `w_k` i.i.d. circularly-symmetric complex Gaussian of unit variance
/// per entry. Entries are drawn column by column in user order.
pub fn draw_channel<R: Rng + ?Sized>(
    rng: &mut R,
    users: &[UserState],
    antennas: usize,
) -> ChannelRealization {
    assert!(!users.is_empty(), "draw_channel needs at least one user");
    let mut matrix = CMat::zeros(antennas, users.len());
    for (k, user) in users.iter().enumerate() {
        let scale = user.attenuation.sqrt();
        let col = matrix.col_mut(k);
        for entry in col.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *entry = Complex64::new(re, im) * (scale * std::f64::consts::FRAC_1_SQRT_2);
        }
    }
    ChannelRealization {
        matrix,
        users: users.to_vec(),
    }
}

/// dBm to Watts: `10^((p - 30) / 10)`.
pub fn dbm_to_watt(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_sq;

    fn cell() -> SystemConfig {
        SystemConfig::default_cell(10, 8)
    }

    #[test]
    fn config_invariants_enforced() {
        assert!(cell().validate().is_ok());
        let mut bad = cell();
        bad.users = 11;
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let mut bad = cell();
        bad.min_distance = 300.0;
        assert!(bad.validate().is_err());
        let mut bad = cell();
        bad.noise_power = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = cell();
        bad.pathloss_exponent = 1.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn positions_stay_on_annulus() {
        let cfg = cell();
        let mut rng = trial_rng(1, 0);
        for p in sample_positions(&mut rng, 10_000, &cfg) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!(r >= cfg.min_distance - 1e-9 && r <= cfg.cell_radius + 1e-9);
        }
    }

    #[test]
    fn positions_uniform_in_area() {
        // Fraction inside radius 125 over 1e5 draws; the annulus-area formula
        // gives (125^2 - 15^2) / (250^2 - 15^2).
        let cfg = cell();
        let expected = (125.0f64.powi(2) - 15.0f64.powi(2)) / (250.0f64.powi(2) - 15.0f64.powi(2));
        let n = 100_000usize;
        let mut rng = trial_rng(42, 0);
        let inside = sample_positions(&mut rng, n, &cfg)
            .iter()
            .filter(|p| p[0] * p[0] + p[1] * p[1] <= 125.0 * 125.0)
            .count();
        let frac = inside as f64 / n as f64;
        let mc_error = 5.0 * (expected * (1.0 - expected) / n as f64).sqrt();
        assert!(
            (frac - expected).abs() <= mc_error,
            "fraction {frac} vs expected {expected} +- {mc_error}"
        );
    }

    #[test]
    fn squared_radius_is_uniform() {
        // Kolmogorov-Smirnov on (r^2 - r_min^2) / (r_max^2 - r_min^2).
        let cfg = cell();
        let n = 2000usize;
        let mut rng = trial_rng(7, 3);
        let mut u: Vec<f64> = sample_positions(&mut rng, n, &cfg)
            .iter()
            .map(|p| {
                (p[0] * p[0] + p[1] * p[1] - cfg.min_distance.powi(2))
                    / (cfg.cell_radius.powi(2) - cfg.min_distance.powi(2))
            })
            .collect();
        u.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks = 0.0f64;
        for (i, &v) in u.iter().enumerate() {
            ks = ks.max(((i + 1) as f64 / n as f64 - v).abs());
            ks = ks.max((v - i as f64 / n as f64).abs());
        }
        let critical = 1.63 / (n as f64).sqrt(); // alpha = 0.01
        assert!(ks <= critical, "KS statistic {ks} above {critical}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = cell();
        let a = sample_positions(&mut trial_rng(9, 5), 64, &cfg);
        let b = sample_positions(&mut trial_rng(9, 5), 64, &cfg);
        assert_eq!(a, b);
        let c = sample_positions(&mut trial_rng(9, 6), 64, &cfg);
        assert_ne!(a, c);
    }

    #[test]
    fn pathloss_reference_values() {
        let cfg = cell();
        // Hand-evaluated 10^-3.53 / 15^3.76.
        let at_edge = pathloss([15.0, 0.0], &cfg).unwrap();
        assert!((at_edge - 1.1165980522548526e-8).abs() <= 1e-3 * at_edge);

        // Doubling the distance multiplies by 2^-3.76.
        let near = pathloss([0.0, 40.0], &cfg).unwrap();
        let far = pathloss([0.0, 80.0], &cfg).unwrap();
        assert!((far / near - 0.07381204133934566).abs() <= 1e-12);

        // Unit case.
        let unit = SystemConfig {
            pathloss_exponent: 2.0,
            pathloss_const: 1.0,
            min_distance: 0.5,
            ..cell()
        };
        assert_eq!(pathloss([1.0, 0.0], &unit).unwrap(), 1.0);
    }

    #[test]
    fn pathloss_rejects_points_inside_exclusion() {
        let cfg = cell();
        match pathloss([3.0, 4.0], &cfg) {
            Err(Error::InsideMinDistance { distance, .. }) => {
                assert!((distance - 5.0).abs() < 1e-12)
            }
            other => panic!("expected InsideMinDistance, got {other:?}"),
        }
    }

    fn unit_user(l: f64) -> UserState {
        UserState::from_rate([100.0, 0.0], l, 1.0)
    }

    #[test]
    fn sinr_target_from_rate() {
        let u = UserState::from_rate([50.0, 0.0], 1e-8, 3.0);
        assert_eq!(u.sinr_target, 7.0);
        assert_eq!(
            UserState::from_rate([50.0, 0.0], 1e-8, 0.0).sinr_target,
            0.0
        );
    }

    #[test]
    fn channel_norm_concentrates() {
        let mut rng = trial_rng(11, 0);
        let users = vec![unit_user(1.0)];
        for _ in 0..5 {
            let ch = draw_channel(&mut rng, &users, 1000);
            let scaled = norm_sq(ch.matrix.col(0)) / 1000.0;
            assert!((0.9..=1.1).contains(&scaled), "||h||^2/N = {scaled}");
        }
    }

    #[test]
    fn channel_entries_have_zero_mean() {
        let mut rng = trial_rng(13, 0);
        let users = vec![unit_user(1.0)];
        let n = 100_000usize;
        let ch = draw_channel(&mut rng, &users, n);
        let (mut re, mut im) = (0.0, 0.0);
        for v in ch.matrix.col(0) {
            re += v.re;
            im += v.im;
        }
        // Each part has variance 1/2, so the standard error is sqrt(1/(2n)).
        let bound = 5.0 * (0.5 / n as f64).sqrt();
        assert!((re / n as f64).abs() <= bound);
        assert!((im / n as f64).abs() <= bound);
    }

    #[test]
    fn attenuation_scales_columns_exactly() {
        let users_weak = vec![unit_user(1.0)];
        let users_strong = vec![unit_user(4.0)];
        let a = draw_channel(&mut trial_rng(17, 2), &users_weak, 32);
        let b = draw_channel(&mut trial_rng(17, 2), &users_strong, 32);
        for (x, y) in a.matrix.col(0).iter().zip(b.matrix.col(0)) {
            assert_eq!(x * 2.0, *y);
        }
    }

    #[test]
    fn channel_mean_power_matches_attenuation() {
        // E ||h_k||^2 = N * l within 3 standard errors over 1e4 draws.
        let l = 0.5;
        let n = 16usize;
        let draws = 10_000usize;
        let users = vec![unit_user(l)];
        let mut rng = trial_rng(19, 0);
        let mut mean = 0.0;
        for _ in 0..draws {
            mean += norm_sq(draw_channel(&mut rng, &users, n).matrix.col(0));
        }
        mean /= (draws * n) as f64 * l;
        // ||h||^2/(N l) averages n*draws unit-mean exponentials.
        let se = 1.0 / ((n * draws) as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se, "normalized mean {mean}");
    }

    #[test]
    fn channel_draw_is_reproducible() {
        let users = vec![unit_user(1.0), unit_user(2e-8)];
        let a = draw_channel(&mut trial_rng(23, 40), &users, 8);
        let b = draw_channel(&mut trial_rng(23, 40), &users, 8);
        assert_eq!(a, b);
    }

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watt(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watt(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watt(-104.0) - 3.9810717055349693e-14).abs() < 1e-27);
    }
}
