//! Command-line front end for the Monte Carlo precoding harness.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure
//! (solver divergence in `single` mode), 1 file I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use precoding::exact::{self, SolverOptions};
use precoding::model::{draw_channel, trial_rng};
use precoding::{asympt, SystemConfig};
use precoding_sim::{
    apply_config_text, draw_users, emit_plot, run_sweep, validate, ExperimentConfig, ResultsTable,
    Scheme, SimError, Sweep,
};

const USAGE: &str = "\
precoding-sim: Monte Carlo comparison of downlink precoding schemes

USAGE:
  precoding-sim <COMMAND> [FLAGS]

COMMANDS:
  sweep-rate       average transmit power vs. the common per-user rate
  sweep-antennas   average transmit power vs. the antenna count
  validate         closed-form validation report (rate MSE, gap ladder,
                   pure closed-form allocation violation rate)
  single           solve one drawn instance and print every scheme

FLAGS:
  --config FILE        key = value experiment file (see README)
  --seed U64           master seed (default 1)
  --trials N           Monte Carlo trials per grid point (default 500)
  --out FILE           write the results table (or report) to FILE
  --plot FILE          write an SVG of average power vs. the sweep variable
  --schemes LIST       comma-separated subset of ZF,RZF,PA-RZF,A-OLP,OLP
  --freeze-positions   reuse one position draw for every trial
  --help               show this text

CONFIG KEYS:
  antennas, users, noise_dbm | noise_watt, cell_radius, min_distance,
  pathloss_exponent, pathloss_const | pathloss_const_log10, bandwidth,
  sweep (rate|antennas), grid (lo:hi:count or comma list),
  rate | rate_interval (lo,hi), trials, seed, schemes, freeze_positions
";

#[derive(Debug, Clone, Copy, PartialEq)]
enum Command {
    SweepRate,
    SweepAntennas,
    Validate,
    Single,
}

#[derive(Debug)]
struct CliArgs {
    command: Command,
    config: Option<PathBuf>,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
    plot: Option<PathBuf>,
    schemes: Option<Vec<Scheme>>,
    freeze_positions: bool,
}

fn parse_args(mut argv: impl Iterator<Item = String>) -> Result<CliArgs, SimError> {
    let command = match argv.next().as_deref() {
        Some("sweep-rate") => Command::SweepRate,
        Some("sweep-antennas") => Command::SweepAntennas,
        Some("validate") => Command::Validate,
        Some("single") => Command::Single,
        Some("--help") | Some("-h") => {
            println!("{USAGE}");
            std::process::exit(0);
        }
        Some(other) => {
            return Err(SimError::Config(format!("unknown command '{other}'")));
        }
        None => {
            return Err(SimError::Config("missing command".into()));
        }
    };

    let mut args = CliArgs {
        command,
        config: None,
        seed: None,
        trials: None,
        out: None,
        plot: None,
        schemes: None,
        freeze_positions: false,
    };

    let next_value = |argv: &mut dyn Iterator<Item = String>,
                      flag: &str,
                      inline: Option<String>|
     -> Result<String, SimError> {
        match inline {
            Some(v) => Ok(v),
            None => argv
                .next()
                .ok_or_else(|| SimError::Config(format!("missing value for {flag}"))),
        }
    };

    while let Some(arg) = argv.next() {
        let (flag, inline) = match arg.split_once('=') {
            Some((f, v)) => (f.to_string(), Some(v.to_string())),
            None => (arg.clone(), None),
        };
        match flag.as_str() {
            "--help" | "-h" => {
                println!("{USAGE}");
                std::process::exit(0);
            }
            "--config" => {
                args.config = Some(PathBuf::from(next_value(&mut argv, "--config", inline)?))
            }
            "--seed" => {
                let v = next_value(&mut argv, "--seed", inline)?;
                args.seed =
                    Some(v.parse::<u64>().map_err(|_| {
                        SimError::Config(format!("--seed expects a u64, got '{v}'"))
                    })?);
            }
            "--trials" => {
                let v = next_value(&mut argv, "--trials", inline)?;
                args.trials = Some(v.parse::<usize>().map_err(|_| {
                    SimError::Config(format!("--trials expects an integer, got '{v}'"))
                })?);
            }
            "--out" => args.out = Some(PathBuf::from(next_value(&mut argv, "--out", inline)?)),
            "--plot" => args.plot = Some(PathBuf::from(next_value(&mut argv, "--plot", inline)?)),
            "--schemes" => {
                let v = next_value(&mut argv, "--schemes", inline)?;
                args.schemes = Some(
                    v.split(',')
                        .map(Scheme::from_str)
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
            "--freeze-positions" => args.freeze_positions = true,
            other => return Err(SimError::Config(format!("unknown flag '{other}'"))),
        }
    }
    Ok(args)
}

fn build_config(args: &CliArgs) -> Result<ExperimentConfig, SimError> {
    let mut cfg = match args.command {
        Command::SweepRate | Command::Single => ExperimentConfig::default_rate_sweep(),
        Command::SweepAntennas | Command::Validate => ExperimentConfig::default_antenna_sweep(),
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| {
            SimError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        apply_config_text(&mut cfg, &text)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(schemes) = &args.schemes {
        cfg.schemes = schemes.clone();
    }
    if args.freeze_positions {
        cfg.freeze_positions = true;
    }
    // The subcommand pins the sweep variable even when a config file set the
    // other kind; the grid then falls back to the built-in default.
    match args.command {
        Command::SweepRate | Command::Single => {
            if !matches!(cfg.sweep, Sweep::Rate(_)) {
                cfg.sweep = ExperimentConfig::default_rate_sweep().sweep;
            }
        }
        Command::SweepAntennas => {
            if !matches!(cfg.sweep, Sweep::Antennas(_)) {
                cfg.sweep = ExperimentConfig::default_antenna_sweep().sweep;
            }
        }
        Command::Validate => {}
    }
    Ok(cfg)
}

fn print_summary(table: &ResultsTable) {
    println!(
        "{:<10} {:>9} {:<7} {:>13} {:>13} {:>7} {:>10} {:>12} {:>12}",
        "sweep",
        "value",
        "scheme",
        "avg power [W]",
        "std [W]",
        "trials",
        "infeasible",
        "violations",
        "rate MSE"
    );
    for r in &table.rows {
        println!(
            "{:<10} {:>9.4} {:<7} {:>13.5e} {:>13.5e} {:>7} {:>10} {:>12.4e} {:>12.4e}",
            r.sweep_param,
            r.value,
            r.scheme.label(),
            r.avg_power_watt,
            r.std_power_watt,
            r.trials,
            r.infeasible,
            r.violation_rate,
            r.rate_mse,
        );
    }
}

fn vec_line(values: &[f64]) -> String {
    let entries: Vec<String> = values.iter().map(|v| format!("{v:.5e}")).collect();
    format!("[{}]", entries.join(", "))
}

/// Solves one drawn instance and prints every configured scheme.
fn run_single(cfg: &ExperimentConfig) -> Result<(), SimError> {
    cfg.validate()?;
    let system: &SystemConfig = &cfg.system;
    let mut rng = trial_rng(cfg.seed, 0);
    let users = draw_users(&mut rng, system, &cfg.rate_spec, None);
    let channel = draw_channel(&mut rng, &users, system.antennas);
    let targets = channel.sinr_targets();

    println!(
        "instance: N = {}, K = {}, seed = {}, noise = {:.4e} W",
        system.antennas, system.users, cfg.seed, system.noise_power
    );
    for (k, u) in users.iter().enumerate() {
        println!(
            "  user {k}: distance {:>7.2} m  attenuation {:.4e}  rate {:.3}  target SINR {:.4}",
            (u.position[0].powi(2) + u.position[1].powi(2)).sqrt(),
            u.attenuation,
            u.rate_target,
            u.sinr_target
        );
    }

    let eq = asympt::optimal_equivalents(&users, system.noise_power, system.antennas)?;
    println!(
        "closed forms: headroom {:.6}, mean demand {:.4e}, asymptotic total power {:.5e} W",
        eq.headroom, eq.mean_demand, eq.total_power
    );
    if let Ok(rzf) = asympt::rzf_ridge(&users, system.antennas) {
        println!(
            "  RZF optimal ridge    {:.6e} (gain {:.6e})",
            rzf.ridge, rzf.gain
        );
    }
    if let Ok(pa) = asympt::pa_rzf_ridge(&targets, system.load()) {
        println!(
            "  PA-RZF optimal ridge {:.6e} (mean target {:.4})",
            pa.ridge, pa.mean_target
        );
    }

    for &scheme in &cfg.schemes {
        let solution = build_scheme(scheme, &channel, system)?;
        println!("scheme {}:", scheme.label());
        println!(
            "  total power {:.6e} W   iterations {}   converged {}",
            solution.total_power, solution.iterations, solution.converged
        );
        println!("  powers {}", vec_line(&solution.powers));
        println!("  sinr   {}", vec_line(&solution.sinr));
        if let Some(multipliers) = &solution.multipliers {
            println!("  multipliers {}", vec_line(multipliers));
        }
    }
    Ok(())
}

fn build_scheme(
    scheme: Scheme,
    channel: &precoding::ChannelRealization,
    system: &SystemConfig,
) -> Result<exact::PrecoderSolution, SimError> {
    let targets = channel.sinr_targets();
    let noise = system.noise_power;
    let sol = match scheme {
        Scheme::Olp => exact::optimal(channel, &targets, noise, &SolverOptions::default())?,
        Scheme::AOlp => {
            let eq = asympt::optimal_equivalents(&channel.users, noise, channel.antennas())?;
            exact::heuristic(channel, &eq.multipliers, 1.0, &targets, noise)?
        }
        Scheme::Rzf => {
            let opt = asympt::rzf_ridge(&channel.users, channel.antennas())?;
            exact::heuristic(
                channel,
                &vec![1.0; targets.len()],
                opt.ridge,
                &targets,
                noise,
            )?
        }
        Scheme::PaRzf => {
            let load = channel.user_count() as f64 / channel.antennas() as f64;
            let opt = asympt::pa_rzf_ridge(&targets, load)?;
            let weights: Vec<f64> = channel.users.iter().map(|u| 1.0 / u.attenuation).collect();
            exact::heuristic(channel, &weights, opt.ridge, &targets, noise)?
        }
        Scheme::Zf => exact::zero_forcing(channel, &targets, noise)?,
    };
    Ok(sol)
}

fn run(args: &CliArgs) -> Result<(), SimError> {
    let cfg = build_config(args)?;
    match args.command {
        Command::SweepRate | Command::SweepAntennas => {
            let table = run_sweep(&cfg)?;
            print_summary(&table);
            if let Some(path) = &args.out {
                table.write_csv(path)?;
                println!("wrote {}", path.display());
            }
            if let Some(path) = &args.plot {
                emit_plot(&table, path)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Validate => {
            let report = validate(&cfg)?;
            print!("{report}");
            if let Some(path) = &args.out {
                std::fs::write(path, report.to_string())
                    .map_err(|e| SimError::Io(path.display().to_string(), e))?;
                println!("wrote {}", path.display());
            }
        }
        Command::Single => run_single(&cfg)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match parse_args(std::env::args().skip(1)) {
        Ok(args) => args,
        Err(err) => {
            eprintln!("{err}\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ SimError::Config(_)) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
        Err(err @ SimError::Numerical(_)) => {
            eprintln!("{err}");
            ExitCode::from(3)
        }
        Err(err @ SimError::Io(..)) => {
            eprintln!("{err}");
            ExitCode::from(1)
        }
    }
}
