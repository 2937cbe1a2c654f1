//! Experiment configuration: the sweep description, the scheme set, and the
//! `key = value` config-file format that mirrors it.

use std::fmt;
use std::str::FromStr;

use precoding::model::dbm_to_watt;
use precoding::SystemConfig;

/// Harness-level error, mapped onto process exit codes by the CLI.
#[derive(Debug)]
pub enum SimError {
    /// Bad configuration (exit code 2).
    Config(String),
    /// Numerical failure surfaced from the solvers (exit code 3 in `single` mode).
    Numerical(precoding::Error),
    /// File I/O failure, annotated with the path involved.
    Io(String, std::io::Error),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Config(msg) => write!(f, "configuration error: {msg}"),
            SimError::Numerical(err) => write!(f, "numerical failure: {err}"),
            SimError::Io(path, err) => write!(f, "I/O error on {path}: {err}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<precoding::Error> for SimError {
    fn from(err: precoding::Error) -> Self {
        match err {
            precoding::Error::Config(msg) => SimError::Config(msg),
            other => SimError::Numerical(other),
        }
    }
}

/// Precoding scheme selector. Labels match the figure legends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Olp,
    AOlp,
    Rzf,
    PaRzf,
    Zf,
}

/// Every scheme, in label order.
pub const ALL_SCHEMES: [Scheme; 5] = [
    Scheme::AOlp,
    Scheme::Olp,
    Scheme::PaRzf,
    Scheme::Rzf,
    Scheme::Zf,
];

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Olp => "OLP",
            Scheme::AOlp => "A-OLP",
            Scheme::Rzf => "RZF",
            Scheme::PaRzf => "PA-RZF",
            Scheme::Zf => "ZF",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s.trim().to_ascii_uppercase().as_str() {
            "OLP" => Ok(Scheme::Olp),
            "A-OLP" | "AOLP" => Ok(Scheme::AOlp),
            "RZF" => Ok(Scheme::Rzf),
            "PA-RZF" | "PARZF" => Ok(Scheme::PaRzf),
            "ZF" => Ok(Scheme::Zf),
            other => Err(SimError::Config(format!(
                "unknown scheme '{other}' (expected OLP, A-OLP, RZF, PA-RZF, or ZF)"
            ))),
        }
    }
}

/// What the sweep varies, and over which grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Common per-user rate in bit/s/Hz. Overrides the rate spec point by point.
    Rate(Vec<f64>),
    /// Antenna count at fixed user count.
    Antennas(Vec<usize>),
}

impl Sweep {
    pub fn param_name(&self) -> &'static str {
        match self {
            Sweep::Rate(_) => "rate",
            Sweep::Antennas(_) => "antennas",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::Rate(g) => g.len(),
            Sweep::Antennas(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value_at(&self, idx: usize) -> f64 {
        match self {
            Sweep::Rate(g) => g[idx],
            Sweep::Antennas(g) => g[idx] as f64,
        }
    }
}

/// Per-user rate targets for trials where the sweep does not pin them.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSpec {
    /// Every user gets the same rate.
    Fixed(f64),
    /// Each user's rate is drawn uniformly from `[lo, hi]`, fresh every trial.
    Uniform { lo: f64, hi: f64 },
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub sweep: Sweep,
    pub rate_spec: RateSpec,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// Reuse one position draw for every trial (variance-reduction studies).
    pub freeze_positions: bool,
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

impl ExperimentConfig {
    /// Rate sweep defaults: 8 users, 10 antennas, 15 grid points on
    /// [0.1, 5] bit/s/Hz, 500 trials per point.
    pub fn default_rate_sweep() -> Self {
        Self {
            system: SystemConfig::default_cell(10, 8),
            sweep: Sweep::Rate(linspace(0.1, 5.0, 15)),
            rate_spec: RateSpec::Fixed(3.0),
            trials: 500,
            seed: 1,
            schemes: ALL_SCHEMES.to_vec(),
            freeze_positions: false,
        }
    }

    /// Antenna sweep defaults: 8 users, ladder from 8 to 32 antennas,
    /// per-user rates uniform on [2, 3] bit/s/Hz, 500 trials per point.
    pub fn default_antenna_sweep() -> Self {
        Self {
            system: SystemConfig::default_cell(10, 8),
            sweep: Sweep::Antennas(vec![8, 10, 12, 14, 16, 20, 24, 28, 32]),
            rate_spec: RateSpec::Uniform { lo: 2.0, hi: 3.0 },
            trials: 500,
            seed: 1,
            schemes: ALL_SCHEMES.to_vec(),
            freeze_positions: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.system.validate()?;
        if self.trials == 0 {
            return Err(SimError::Config("trials must be at least 1".into()));
        }
        if self.sweep.is_empty() {
            return Err(SimError::Config("sweep grid must be nonempty".into()));
        }
        if self.schemes.is_empty() {
            return Err(SimError::Config("at least one scheme is required".into()));
        }
        match &self.sweep {
            Sweep::Rate(grid) => {
                if grid.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
                    return Err(SimError::Config(
                        "rate grid values must be positive and finite".into(),
                    ));
                }
            }
            Sweep::Antennas(grid) => {
                if grid.iter().any(|&n| n < self.system.users) {
                    return Err(SimError::Config(format!(
                        "antenna grid must stay at or above the user count {}",
                        self.system.users
                    )));
                }
            }
        }
        match self.rate_spec {
            RateSpec::Fixed(r) => {
                if !(r > 0.0) || !r.is_finite() {
                    return Err(SimError::Config("fixed rate must be positive".into()));
                }
            }
            RateSpec::Uniform { lo, hi } => {
                if !(lo > 0.0) || !(lo <= hi) || !hi.is_finite() {
                    return Err(SimError::Config(format!(
                        "rate interval needs 0 < lo <= hi, got [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_number(key: &str, value: &str) -> Result<f64, SimError> {
    value
        .parse::<f64>()
        .map_err(|_| SimError::Config(format!("key '{key}': expected a number, got '{value}'")))
}

fn parse_positive_int(key: &str, value: &str) -> Result<usize, SimError> {
    value
        .parse::<usize>()
        .map_err(|_| SimError::Config(format!("key '{key}': expected an integer, got '{value}'")))
}

fn parse_grid(value: &str) -> Result<Vec<f64>, SimError> {
    if let Some((range, count)) = value
        .rsplit_once(':')
        .and_then(|(head, count)| head.split_once(':').map(|(lo, hi)| ((lo, hi), count)))
    {
        let lo = parse_number("grid", range.0)?;
        let hi = parse_number("grid", range.1)?;
        let count = parse_positive_int("grid", count)?;
        if count == 0 {
            return Err(SimError::Config("grid count must be at least 1".into()));
        }
        return Ok(linspace(lo, hi, count));
    }
    value
        .split(',')
        .map(|v| parse_number("grid", v.trim()))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, SimError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(SimError::Config(format!(
            "key '{key}': expected true/false, got '{other}'"
        ))),
    }
}

/// Applies a `key = value` config text to an existing configuration.
/// Lines starting with `#` and blank lines are ignored; unknown keys are
/// rejected so typos surface instead of silently using defaults.
pub fn apply_config_text(cfg: &mut ExperimentConfig, text: &str) -> Result<(), SimError> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(SimError::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "antennas" => cfg.system.antennas = parse_positive_int(key, value)?,
            "users" => cfg.system.users = parse_positive_int(key, value)?,
            "noise_dbm" => cfg.system.noise_power = dbm_to_watt(parse_number(key, value)?),
            "noise_watt" => cfg.system.noise_power = parse_number(key, value)?,
            "cell_radius" => cfg.system.cell_radius = parse_number(key, value)?,
            "min_distance" => cfg.system.min_distance = parse_number(key, value)?,
            "pathloss_exponent" => cfg.system.pathloss_exponent = parse_number(key, value)?,
            "pathloss_const" => cfg.system.pathloss_const = parse_number(key, value)?,
            "pathloss_const_log10" => {
                cfg.system.pathloss_const = 10f64.powf(parse_number(key, value)?)
            }
            "bandwidth" => cfg.system.bandwidth = parse_number(key, value)?,
            "sweep" => match value.to_ascii_lowercase().as_str() {
                "rate" => {
                    if !matches!(cfg.sweep, Sweep::Rate(_)) {
                        cfg.sweep = Sweep::Rate(linspace(0.1, 5.0, 15));
                    }
                }
                "antennas" => {
                    if !matches!(cfg.sweep, Sweep::Antennas(_)) {
                        cfg.sweep = Sweep::Antennas(vec![8, 10, 12, 14, 16, 20, 24, 28, 32]);
                    }
                }
                other => {
                    return Err(SimError::Config(format!(
                        "key 'sweep': expected rate or antennas, got '{other}'"
                    )))
                }
            },
            "grid" => {
                let grid = parse_grid(value)?;
                cfg.sweep = match cfg.sweep {
                    Sweep::Rate(_) => Sweep::Rate(grid),
                    Sweep::Antennas(_) => Sweep::Antennas(
                        grid.iter()
                            .map(|&v| {
                                if v.fract() == 0.0 && v >= 1.0 {
                                    Ok(v as usize)
                                } else {
                                    Err(SimError::Config(format!(
                                        "antenna grid entries must be positive integers, got {v}"
                                    )))
                                }
                            })
                            .collect::<Result<Vec<_>, _>>()?,
                    ),
                };
            }
            "rate" => cfg.rate_spec = RateSpec::Fixed(parse_number(key, value)?),
            "rate_interval" => {
                let parts: Vec<&str> = value.split(',').collect();
                if parts.len() != 2 {
                    return Err(SimError::Config(
                        "key 'rate_interval': expected 'lo,hi'".into(),
                    ));
                }
                cfg.rate_spec = RateSpec::Uniform {
                    lo: parse_number(key, parts[0].trim())?,
                    hi: parse_number(key, parts[1].trim())?,
                };
            }
            "trials" => cfg.trials = parse_positive_int(key, value)?,
            "seed" => {
                cfg.seed = value.parse::<u64>().map_err(|_| {
                    SimError::Config(format!("key 'seed': expected a u64, got '{value}'"))
                })?
            }
            "schemes" => {
                cfg.schemes = value
                    .split(',')
                    .map(Scheme::from_str)
                    .collect::<Result<Vec<_>, _>>()?;
            }
            "freeze_positions" => cfg.freeze_positions = parse_bool(key, value)?,
            other => {
                return Err(SimError::Config(format!(
                    "line {}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(ExperimentConfig::default_rate_sweep().validate().is_ok());
        assert!(ExperimentConfig::default_antenna_sweep().validate().is_ok());
    }

    #[test]
    fn scheme_labels_round_trip() {
        for scheme in ALL_SCHEMES {
            assert_eq!(scheme.label().parse::<Scheme>().unwrap(), scheme);
        }
        assert!("dpc".parse::<Scheme>().is_err());
    }

    #[test]
    fn config_text_overrides_fields() {
        let mut cfg = ExperimentConfig::default_rate_sweep();
        let text = "
            # a comment
            antennas = 16
            users = 4
            noise_dbm = -100
            sweep = rate
            grid = 1:3:5
            trials = 7
            seed = 99
            schemes = ZF, OLP
            freeze_positions = yes
        ";
        apply_config_text(&mut cfg, text).unwrap();
        assert_eq!(cfg.system.antennas, 16);
        assert_eq!(cfg.system.users, 4);
        assert!((cfg.system.noise_power - 1e-13).abs() < 1e-20);
        assert_eq!(cfg.sweep, Sweep::Rate(vec![1.0, 1.5, 2.0, 2.5, 3.0]));
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.schemes, vec![Scheme::Zf, Scheme::Olp]);
        assert!(cfg.freeze_positions);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn antenna_grid_from_list() {
        let mut cfg = ExperimentConfig::default_antenna_sweep();
        apply_config_text(&mut cfg, "sweep = antennas\ngrid = 8,16,32").unwrap();
        assert_eq!(cfg.sweep, Sweep::Antennas(vec![8, 16, 32]));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut cfg = ExperimentConfig::default_rate_sweep();
        assert!(matches!(
            apply_config_text(&mut cfg, "antenas = 12"),
            Err(SimError::Config(_))
        ));
        assert!(matches!(
            apply_config_text(&mut cfg, "trials = many"),
            Err(SimError::Config(_))
        ));
        assert!(matches!(
            apply_config_text(&mut cfg, "rate_interval = 2"),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn validation_rejects_bad_experiments() {
        let mut cfg = ExperimentConfig::default_rate_sweep();
        cfg.system.users = 12; // more users than antennas
        assert!(matches!(cfg.validate(), Err(SimError::Config(_))));

        let mut cfg = ExperimentConfig::default_rate_sweep();
        cfg.sweep = Sweep::Rate(vec![]);
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default_antenna_sweep();
        cfg.sweep = Sweep::Antennas(vec![4]); // below the 8 users
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default_rate_sweep();
        cfg.rate_spec = RateSpec::Uniform { lo: 3.0, hi: 2.0 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rate_interval_parses() {
        let mut cfg = ExperimentConfig::default_rate_sweep();
        apply_config_text(&mut cfg, "rate_interval = 2, 3").unwrap();
        assert_eq!(cfg.rate_spec, RateSpec::Uniform { lo: 2.0, hi: 3.0 });
    }
}
