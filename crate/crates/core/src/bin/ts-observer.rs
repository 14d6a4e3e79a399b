//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 configuration error, 3 unsupported instance.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ts_observer::diagnostics::{
    bayes_regret_estimate, counterexample_report, enumerate_exact, martingale_check, Plan,
};
use ts_observer::harness::{
    parse_config, render_counterexample, render_enumeration, render_martingale, render_regret, run_experiment,
    with_jobs, ExperimentConfig, OutputFormat,
};
use ts_observer::model::ModelSpec;
use ts_observer::policies::PolicyKind;
use ts_observer::{Error, Result};

const MARTINGALE_TOLERANCE: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "ts-observer", version, about = "Thompson sampling diagnostics and the action-frequency observer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write summary, regret, curves and traces.
    Simulate(Common),
    /// Print every history of a small Bernoulli instance with its exact probability.
    Enumerate(Common),
    /// Check the tower identity of the optimal-action posterior exactly.
    MartingaleCheck(Common),
    /// Estimate Bayesian regret at the configured checkpoints.
    Regret(Common),
    /// Run the square-step composite and report regret and forced plays.
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// Action forced on perfect-square steps (one-based). Ignored when the
        /// config already sets `policy = square-step`.
        #[arg(long, default_value_t = 2)]
        fixed_action: usize,
    },
    /// Parse and validate a config without running it.
    ValidateConfig(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (line format or JSON). Defaults to the two-arm instance.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory; diagnostics print to stdout when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    replications: Option<usize>,
    #[arg(long, value_name = "T")]
    horizon: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads. Results do not depend on this value.
    #[arg(long, value_name = "N", env = "TS_OBSERVER_JOBS")]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

impl Common {
    /// Load the config (or the built-in default) and apply flag overrides.
    fn load(&self, default_horizon: usize) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::Config(vec![ts_observer::harness::ConfigError {
                        line: None,
                        field: None,
                        message: format!("cannot read {}: {e}", path.display()),
                    }])
                })?;
                parse_config(&text)?
            }
            None => parse_config(&format!("horizon = {default_horizon}\n"))?,
        };
        if let Some(h) = self.horizon {
            config.horizon = h;
            if self.config.is_none() {
                config.checkpoints = ExperimentConfig::default_checkpoints(h);
            }
        }
        if let Some(n) = self.replications {
            config.replications = n;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(dir) = &self.out {
            config.output.dir = dir.clone();
        }
        if let Some(f) = self.format {
            config.output.format = f.into();
        }
        config.revalidate()?;
        Ok(config)
    }

    fn emit(&self, name: &str, format: OutputFormat, body: &str) -> Result<()> {
        match &self.out {
            None => {
                print!("{body}");
                Ok(())
            }
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                let ext = match format {
                    OutputFormat::Csv => "csv",
                    OutputFormat::Json => "json",
                };
                let path = dir.join(format!("{name}.{ext}"));
                write_atomic(&path, body)
            }
        }
    }
}

fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    std::io::Write::write_all(&mut tmp, body.as_bytes()).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn grid_of(config: &ExperimentConfig) -> Result<&ts_observer::model::ParameterGrid> {
    match &config.model {
        ModelSpec::Grid { grid, .. } => Ok(grid),
        ModelSpec::BetaBernoulli { .. } => Err(Error::UnsupportedInstance(
            "exact enumeration needs a finite parameter grid (model = grid)".into(),
        )),
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Simulate(c)
        | Command::Enumerate(c)
        | Command::MartingaleCheck(c)
        | Command::Regret(c)
        | Command::ValidateConfig(c)
        | Command::Counterexample { common: c, .. } => c,
    };
    let jobs = common.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    with_jobs(jobs, || dispatch(&cli.command))?
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(c) => {
            let config = c.load(1000)?;
            let outcome = run_experiment(&config)?;
            let s = &outcome.summary;
            eprintln!(
                "wrote {}: {} replications, T = {}, point-estimate accuracy {:.4}, mean optimal frequency {:.4}",
                config.output.dir.display(),
                s.replications,
                s.horizon,
                s.accuracy,
                s.mean_optimal_frequency
            );
            Ok(())
        }
        Command::Enumerate(c) => {
            let config = c.load(3)?;
            let tree = enumerate_exact(grid_of(&config)?, &config.policy, config.horizon)?;
            let format = config.output.format;
            c.emit("enumeration", format, &render_enumeration(&tree, format))
        }
        Command::MartingaleCheck(c) => {
            let config = c.load(3)?;
            let tree = enumerate_exact(grid_of(&config)?, &config.policy, config.horizon)?;
            let report = martingale_check(&tree);
            let format = config.output.format;
            c.emit("martingale", format, &render_martingale(&report, format))?;
            eprintln!(
                "T = {}: {} nodes, {} subsets, max residual {:.3e}, max per-action residual {:.3e}, max depth mass error {:.3e}",
                report.horizon,
                report.nodes.len(),
                report.subsets_checked,
                report.max_residual,
                report.max_action_residual,
                report.max_depth_mass_error
            );
            if report.max_residual < MARTINGALE_TOLERANCE {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "tower residual {:.3e} exceeds {MARTINGALE_TOLERANCE:e}",
                    report.max_residual
                )))
            }
        }
        Command::Regret(c) => {
            let config = c.load(1000)?;
            let plan = Plan::new(config.horizon, config.replications, config.seed);
            let report = bayes_regret_estimate(&config.model, &config.policy, &plan)?;
            let format = config.output.format;
            c.emit("regret", format, &render_regret(&report, &config.checkpoints, format)?)
        }
        Command::Counterexample { common: c, fixed_action } => {
            let config = c.load(10_000)?;
            let (fixed, inner) = match &config.policy {
                PolicyKind::SquareStep { fixed_action, inner } => (*fixed_action, (**inner).clone()),
                other => {
                    if *fixed_action == 0 || *fixed_action > config.model.num_actions() {
                        return Err(Error::Config(vec![ts_observer::harness::ConfigError {
                            line: None,
                            field: Some("fixed-action".into()),
                            message: format!("action {fixed_action} out of range"),
                        }]));
                    }
                    (fixed_action - 1, other.clone())
                }
            };
            let plan = Plan::new(config.horizon, config.replications, config.seed);
            let report = counterexample_report(&config.model, &inner, fixed, &plan, &config.checkpoints)?;
            let format = config.output.format;
            c.emit("counterexample", format, &render_counterexample(&report, format))?;
            eprintln!(
                "forced plays {}, regret/T decreasing: {}, fixed-action count strictly increasing: {}, point-estimate accuracy {:.4}",
                report.forced_plays,
                report.regret_per_t_decreasing,
                report.fixed_count_strictly_increasing,
                report.point_estimate_accuracy
            );
            Ok(())
        }
        Command::ValidateConfig(c) => {
            let config = c.load(1000)?;
            println!("{}", serde_json::to_string_pretty(&config).expect("config serializes"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = match &e {
                Error::Config(errors) => {
                    for err in errors {
                        eprintln!("config error: {err}");
                    }
                    return ExitCode::from(2);
                }
                Error::UnsupportedInstance(_) => 3,
                _ => 1,
            };
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
