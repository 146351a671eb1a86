use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swipt_relay::channel::CsiMode;
use swipt_relay::cli::{self, CorrSpec, Grid, Method, Overrides, SweepConfig};
use swipt_relay::mc::Metric;
use swipt_relay::verify::acceptance::{self, Level};
use swipt_relay::{Error, Result};

#[derive(Parser)]
#[command(name = "swipt-relay", version, about = "Outage and capacity of energy-harvesting multi-antenna AF relays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a metric over an SNR grid and write CSV.
    Sweep(SweepArgs),
    /// Run the acceptance suite; exits nonzero if any check fails.
    Verify {
        #[arg(long, default_value = "fast")]
        level: String,
    },
    /// Power-splitting ratio maximizing the capacity upper bound.
    OptimizeTheta(SweepArgs),
    /// Eigenvalues and partial-fraction weights of the correlation matrices.
    CorrInfo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        r_rx: Option<f64>,
        #[arg(long)]
        r_tx: Option<f64>,
        /// TOML file with `rx` and `tx` matrices.
        #[arg(long)]
        matrix_file: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// TOML configuration; flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `dB` or `start:stop:step`.
    #[arg(long)]
    rho_db: Option<String>,
    /// Comma-separated CSI modes.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    /// File (or defaults) with flag overrides applied, not yet validated.
    fn load(&self) -> Result<SweepConfig> {
        let mut c = match &self.config {
            Some(path) => SweepConfig::from_file(path)?,
            None => SweepConfig::default(),
        };
        let modes = self
            .mode
            .as_deref()
            .map(|m| {
                m.split(',')
                    .map(|s| s.trim().parse::<CsiMode>().map_err(|_| Error::Config { field: "mode".into(), reason: format!("unknown mode `{s}`") }))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let metric = self
            .metric
            .as_deref()
            .map(|m| m.parse::<Metric>().map_err(|_| Error::Config { field: "metric".into(), reason: format!("unknown metric `{m}`") }))
            .transpose()?;
        Overrides {
            rho_db: self.rho_db.as_deref().map(str::parse::<Grid>).transpose()?,
            modes,
            metric,
            method: self.method.as_deref().map(str::parse::<Method>).transpose()?,
            samples: self.samples,
            seed: self.seed,
            workers: self.workers,
        }
        .apply(&mut c);
        Ok(c)
    }

    /// Writes `bytes` to `--out` or standard output; nothing is created on error paths.
    fn emit(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, bytes)?,
            None => std::io::stdout().write_all(bytes)?,
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep(args) => {
            let config = args.load()?;
            config.validate()?;
            let mut buf = Vec::new();
            cli::run_sweep(&config, &mut buf, &mut std::io::stderr())?;
            args.emit(&buf)?;
            Ok(true)
        }
        Command::OptimizeTheta(args) => {
            let mut config = args.load()?;
            if args.mode.is_none() && args.config.is_none() {
                config.modes = vec![CsiMode::Instantaneous, CsiMode::Statistical];
            }
            let mut buf = Vec::new();
            cli::run_optimize_theta(&config, &mut buf)?;
            args.emit(&buf)?;
            Ok(true)
        }
        Command::Verify { level } => {
            let level: Level = level.parse()?;
            let results = acceptance::run_all(level, |r| {
                println!("{r}");
            });
            Ok(results.iter().all(|r| r.passed))
        }
        Command::CorrInfo {
            config,
            n,
            r_rx,
            r_tx,
            matrix_file,
        } => {
            let mut c = match &config {
                Some(path) => SweepConfig::from_file(path)?,
                None => SweepConfig::default(),
            };
            if let Some(f) = matrix_file {
                c.corr = cli::read_matrix_file(&f)?;
            } else if r_rx.is_some() || r_tx.is_some() {
                let (dr, dt) = match c.corr {
                    CorrSpec::Exponential { r_rx, r_tx } => (r_rx, r_tx),
                    CorrSpec::Matrices { .. } => (0.5, 0.8),
                };
                c.corr = CorrSpec::Exponential {
                    r_rx: r_rx.unwrap_or(dr),
                    r_tx: r_tx.unwrap_or(dt),
                };
            }
            let n = n.unwrap_or(c.params.n);
            cli::corr_info(&c.corr, n, std::io::stdout().lock())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
