use caloric_lab::config::canonical_key;
use caloric_lab::{
    convergence_study, emit_report, parse_config, run_experiment, run_sweep, sweep_configs, Experiment, ExperimentConfig, Format,
    LabError, RunOutcome,
};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "CALORIC_OUT_DIR";

#[derive(Parser)]
#[command(name = "caloric-lab", version, about = "Run caloric-gauge wave map experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(Common),
    /// Run an experiment over a grid of parameter values.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `key=v1,v2,...`; repeat for a Cartesian product.
        #[arg(long, value_name = "KEY=VALUES", required = true)]
        vary: Vec<String>,
        /// Number of parallel workers.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Refinement study of an experiment's residual.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Number of refinement levels (at least 3).
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// List the registered experiments.
    List,
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default: output.path, then $CALORIC_OUT_DIR, then `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, default_value = "csv")]
    format: Format,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, LabError> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path).map_err(|source| LabError::Read { path: path.clone(), source })?,
            None => String::new(),
        };
        let mut cfg = parse_config(&text)?;
        // An experiment override first, so the other overrides land on its defaults.
        let pairs: Vec<(&str, &str)> = self.set.iter().map(|s| split_pair(s)).collect::<Result<_, _>>()?;
        let (exp, rest): (Vec<_>, Vec<_>) = pairs.into_iter().partition(|(k, _)| canonical_key(k).ok() == Some("experiment"));
        for (k, v) in exp.into_iter().chain(rest) {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

fn split_pair(s: &str) -> Result<(&str, &str), LabError> {
    s.split_once('=').map(|(k, v)| (k.trim(), v.trim())).ok_or_else(|| LabError::Malformed { line: 0, text: s.into() })
}

fn finish(outcome: &RunOutcome, dir: &Path, stem: &str, format: Format) -> Result<ExitCode, LabError> {
    let path = emit_report(&outcome.records, format, &dir.join(format!("{stem}.{}", format.extension())))?;
    println!("wrote {}", path.display());
    if outcome.violations.is_empty() {
        println!("all thresholds met");
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &outcome.violations {
            eprintln!("threshold violated: {v}");
        }
        Ok(ExitCode::from(2))
    }
}

fn run(cli: Cli) -> Result<ExitCode, LabError> {
    match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                let tag = if e.refinable() { " [refinable]" } else { "" };
                println!("{:<24} {}{tag}", e.name(), e.summary());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(common) => {
            let cfg = common.config()?;
            let outcome = run_experiment(&cfg)?;
            finish(&outcome, &common.out_dir(&cfg), cfg.experiment.name(), common.format)
        }
        Command::Sweep { common, vary, jobs } => {
            let cfg = common.config()?;
            let vary = vary
                .iter()
                .map(|s| {
                    let (k, v) = split_pair(s)?;
                    Ok((k.to_string(), v.split(',').map(|x| x.trim().to_string()).collect()))
                })
                .collect::<Result<Vec<_>, LabError>>()?;
            let outcome = run_sweep(&sweep_configs(&cfg, &vary)?, jobs)?;
            finish(&outcome, &common.out_dir(&cfg), &format!("{}-sweep", cfg.experiment.name()), common.format)
        }
        Command::Converge { common, levels } => {
            let cfg = common.config()?;
            let outcome = convergence_study(&cfg, levels)?;
            finish(&outcome, &common.out_dir(&cfg), &format!("{}-converge", cfg.experiment.name()), common.format)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
