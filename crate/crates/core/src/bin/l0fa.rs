use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use l0fa::harness::{self, RunConfig};
use l0fa::FaError;

#[derive(Parser)]
#[command(name = "l0fa", version, about = "ℓ0-regularized factor analysis by an interior-point method")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic factor model and write samples and ground truth.
    Generate(Common),
    /// Run the interior-point solver and write L*, S* and the trace.
    Solve(Common),
    /// Run the solver and the block-coordinate baseline on the same instance.
    Compare(Common),
    /// Grid-search C and mu by k-fold held-out likelihood.
    Cv(CvArgs),
}

#[derive(Args)]
struct Common {
    /// TOML config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Samples CSV (one observation per row).
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Sample covariance CSV; takes precedence over --samples.
    #[arg(long)]
    covariance: Option<PathBuf>,
    /// Output directory (the L0FA_RUN_DIR environment variable wins).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long = "C-grid", value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    mu_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
}

impl Common {
    fn config(&self) -> Result<RunConfig, FaError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.p, cfg.data.p);
        set!(self.r, cfg.data.r);
        set!(self.n, cfg.data.n);
        set!(self.snr, cfg.data.snr);
        set!(self.seed, cfg.data.seed);
        set!(self.c, cfg.problem.c);
        set!(self.mu, cfg.problem.mu);
        set!(self.gamma, cfg.newton.gamma);
        set!(self.theta, cfg.ipm.theta);
        set!(self.tau0, cfg.ipm.tau0);
        set!(self.eps, cfg.ipm.epsilon);
        if self.trace_out.is_some() {
            cfg.paths.trace_out = self.trace_out.clone();
        }
        if self.samples.is_some() {
            cfg.paths.samples = self.samples.clone();
        }
        if self.covariance.is_some() {
            cfg.paths.covariance = self.covariance.clone();
        }
        if self.out_dir.is_some() {
            cfg.paths.out_dir = self.out_dir.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn run(cli: Cli) -> Result<i32, FaError> {
    match cli.command {
        Command::Generate(args) => {
            let cfg = args.config()?;
            let report = harness::cli_generate(&cfg, &cfg.run_dir())?;
            print_json(&report);
            Ok(0)
        }
        Command::Solve(args) => {
            let cfg = args.config()?;
            let report = harness::cli_solve(&cfg, &cfg.run_dir())?;
            print_json(&report.summary);
            Ok(report.exit_code())
        }
        Command::Compare(args) => {
            let cfg = args.config()?;
            let report = harness::cli_compare(&cfg, &cfg.run_dir())?;
            print_json(&report.summary);
            Ok(if report.ipm.status == l0fa::IpmStatus::Converged { 0 } else { 4 })
        }
        Command::Cv(args) => {
            let mut cfg = args.common.config()?;
            if let Some(k) = args.folds {
                cfg.cv.folds = k;
            }
            if let Some(g) = args.c_grid {
                cfg.cv.c_grid = g;
            }
            if let Some(g) = args.mu_grid {
                cfg.cv.mu_grid = g;
            }
            if let Some(g) = args.gamma_grid {
                cfg.cv.gamma_grid = g;
            }
            cfg.validate()?;
            let report = harness::cli_cv(&cfg, &cfg.run_dir())?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            print_json(&report.best);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
