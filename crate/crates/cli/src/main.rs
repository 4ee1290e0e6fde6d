//! `ldpd` — experiment runner and audit front end for the locally private
//! density estimation library.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 runtime error
//! (including audited bounds violated beyond tolerance).

use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ldp_density::adaptive::GlConstants;
use ldp_density::densities::TestDensity;
use ldp_density::kde::{KdeConfig, Kernel};
use ldp_density::pde::{pde_channel, Basis};
use ldp_density::privacy::{verify_dp_ratio, PrivacyBudget};
use ldp_density::simulation::{
    audit_bernstein, audit_laplace_tail, audit_petrov, mc_risk, write_rate_csv, write_risk_csv,
    AuditDist, EstimatorKind, ExperimentGrid, TailAuditRow, TuningSpec,
};

#[derive(Parser)]
#[command(name = "ldpd", version, about = "Locally private density estimation experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment grid from a JSON config and emit CSV reports.
    Run {
        config: PathBuf,
        /// Worker threads for grid cells/replications (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// One-shot audits of the privacy and concentration guarantees.
    Audit {
        #[command(subcommand)]
        sub: AuditCmd,
    },
}

#[derive(Subcommand)]
enum AuditCmd {
    /// Certify the channel's log-ratio on evaluation grids.
    Privacy(PrivacyArgs),
    /// Empirical Bernstein tail bound for bounded summands.
    Bernstein(BernsteinArgs),
    /// Empirical tail bound for means of Laplace noise.
    LaplaceTail(LaplaceTailArgs),
    /// Moment-ratio audit of Petrov's inequality.
    Petrov(PetrovArgs),
}

#[derive(Args)]
struct PrivacyArgs {
    /// Total privacy budget alpha in (0,1).
    #[arg(long)]
    alpha: f64,
    /// kde | pde
    #[arg(long)]
    mechanism: String,
    /// Bandwidth (kde only).
    #[arg(long)]
    h: Option<f64>,
    /// Dimension (pde only).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value = "rectangular")]
    kernel: String,
    #[arg(long, default_value = "trigonometric")]
    basis: String,
    /// Number of per-holder releases the budget is split across.
    #[arg(long, default_value_t = 1)]
    splits: usize,
    #[arg(long, default_value_t = 0.5)]
    t: f64,
}

#[derive(Args)]
struct BernsteinArgs {
    /// uniform | rademacher | degenerate
    #[arg(long)]
    dist: String,
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct LaplaceTailArgs {
    #[arg(long)]
    b: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct PetrovArgs {
    /// Even moment order >= 2.
    #[arg(long)]
    m: u32,
    /// rademacher | uniform | laplace
    #[arg(long)]
    dist: String,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Admissible constant to compare the ratio against.
    #[arg(long, default_value_t = 4.0)]
    c: f64,
}

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    schema_version: String,
    density: DensityCfg,
    estimator: EstimatorCfg,
    #[serde(default = "default_t")]
    t: f64,
    ns: Vec<usize>,
    alphas: Vec<f64>,
    tuning: TuningCfg,
    replications: usize,
    seed: u64,
    /// Optional scale applied to the selector constants (c1, c2); 1.0 keeps
    /// the theory values.
    #[serde(default)]
    constants_scale: Option<f64>,
    output: OutputCfg,
}

fn default_t() -> f64 {
    0.5
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum DensityCfg {
    Uniform01,
    Normal { mu: f64, sigma: f64 },
    BetaMixture { weights: Vec<f64>, params: Vec<(f64, f64)> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum EstimatorCfg {
    Kde {
        kernel: String,
        #[serde(default = "default_true")]
        private: bool,
    },
    Pde {
        basis: String,
        #[serde(default)]
        bins: Option<usize>,
        #[serde(default = "default_true")]
        private: bool,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum TuningCfg {
    Fixed { values: Vec<f64> },
    Oracle { beta: f64 },
    Adaptive {
        #[serde(default)]
        values: Option<Vec<f64>>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputCfg {
    risk_csv: PathBuf,
    #[serde(default)]
    rate_csv: Option<PathBuf>,
    #[serde(default)]
    trace_csv: Option<PathBuf>,
}

fn parse_kernel(name: &str) -> anyhow::Result<Kernel> {
    match name {
        "rectangular" => Ok(Kernel::Rectangular),
        "triangular" => Ok(Kernel::Triangular),
        "epanechnikov" => Ok(Kernel::Epanechnikov),
        other => bail!("unknown kernel {other:?} (rectangular|triangular|epanechnikov)"),
    }
}

fn parse_basis(name: &str, bins: Option<usize>) -> anyhow::Result<Basis> {
    match (name, bins) {
        ("trigonometric", None) => Ok(Basis::Trigonometric),
        ("trigonometric", Some(_)) => bail!("bins only applies to the histogram basis"),
        ("histogram", Some(bins)) if bins >= 1 => Ok(Basis::Histogram { bins }),
        ("histogram", _) => bail!("histogram basis needs bins >= 1"),
        (other, _) => bail!("unknown basis {other:?} (trigonometric|histogram)"),
    }
}

fn build_grid(cfg: &Config, seed_override: Option<u64>) -> anyhow::Result<ExperimentGrid> {
    if cfg.schema_version != "1" {
        bail!("unsupported schema_version {:?} (expected \"1\")", cfg.schema_version);
    }
    let (density, density_name) = match &cfg.density {
        DensityCfg::Uniform01 => (TestDensity::uniform01(), "uniform01".to_string()),
        DensityCfg::Normal { mu, sigma } => {
            (TestDensity::normal(*mu, *sigma)?, format!("normal({mu},{sigma})"))
        }
        DensityCfg::BetaMixture { weights, params } => (
            TestDensity::beta_mixture(weights.clone(), params.clone())?,
            format!("beta_mixture({}comp)", params.len()),
        ),
    };
    let estimator = match &cfg.estimator {
        EstimatorCfg::Kde { kernel, private } => {
            EstimatorKind::Kde { kernel: parse_kernel(kernel)?, private: *private }
        }
        EstimatorCfg::Pde { basis, bins, private } => {
            EstimatorKind::Pde { basis: parse_basis(basis, *bins)?, private: *private }
        }
    };
    let tuning = match &cfg.tuning {
        TuningCfg::Fixed { values } => TuningSpec::Fixed(values.clone()),
        TuningCfg::Oracle { beta } => TuningSpec::Oracle { beta: *beta },
        TuningCfg::Adaptive { values } => TuningSpec::Adaptive { values: values.clone() },
    };
    if estimator.is_private() {
        for &a in &cfg.alphas {
            if !(a > 0.0 && a < 1.0) {
                bail!("alphas: privacy parameter must lie in (0,1), got {a}");
            }
        }
    }
    Ok(ExperimentGrid {
        density,
        density_name,
        estimator,
        t: cfg.t,
        ns: cfg.ns.clone(),
        alphas: cfg.alphas.clone(),
        tuning,
        replications: cfg.replications,
        base_seed: seed_override.unwrap_or(cfg.seed),
        constants: match cfg.constants_scale {
            Some(s) if s != 1.0 => GlConstants::scaled(s),
            _ => GlConstants::theory(),
        },
    })
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_run(config: &Path, jobs: Option<usize>, seed: Option<u64>) -> anyhow::Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("failed to size the worker pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    if jobs.is_some() {
        log::warn!("--jobs ignored: built without the parallel feature");
    }

    let text = std::fs::read_to_string(config)
        .with_context(|| format!("cannot read config {}", config.display()))?;
    let cfg: Config = serde_json::from_str(&text)
        .map_err(|e| ValidationError(format!("{}: {e}", config.display())))?;
    let grid = build_grid(&cfg, seed)
        .map_err(|e| ValidationError(format!("{}: {e}", config.display())))?;

    log::info!(
        "running {} on {} ({} cells minimum, R = {})",
        grid.estimator.label(),
        grid.density_name,
        grid.ns.len() * grid.alphas.len(),
        grid.replications
    );
    let report = mc_risk(&grid)?;

    let f = File::create(&cfg.output.risk_csv)
        .with_context(|| format!("cannot create {}", cfg.output.risk_csv.display()))?;
    write_risk_csv(&report.cells, f)?;
    println!("wrote {} ({} cells)", cfg.output.risk_csv.display(), report.cells.len());

    if let Some(path) = &cfg.output.rate_csv {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_rate_csv(&report.rates, f)?;
        println!("wrote {} ({} series)", path.display(), report.rates.len());
    }
    if let Some(path) = &cfg.output.trace_csv {
        let mut f =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        for (label, trace) in &report.traces {
            writeln!(f, "# {label}")?;
            trace.write_csv(&mut f)?;
        }
        println!("wrote {} ({} traces)", path.display(), report.traces.len());
    }
    Ok(())
}

fn cmd_audit_privacy(args: &PrivacyArgs) -> anyhow::Result<()> {
    let budget = PrivacyBudget::new(args.alpha, args.splits)
        .map_err(|e| ValidationError(e.to_string()))?;
    let spec = match args.mechanism.as_str() {
        "kde" => {
            let h = args.h.ok_or(ValidationError("kde audit needs --h".into()))?;
            if args.d.is_some() {
                return Err(ValidationError("--d does not apply to kde".into()).into());
            }
            let kernel = parse_kernel(&args.kernel).map_err(|e| ValidationError(e.to_string()))?;
            KdeConfig::new(args.t, h, kernel, budget)
                .map_err(|e| ValidationError(e.to_string()))?
                .channel()
        }
        "pde" => {
            let d = args.d.ok_or(ValidationError("pde audit needs --d".into()))?;
            if args.h.is_some() {
                return Err(ValidationError("--h does not apply to pde".into()).into());
            }
            let basis = parse_basis(&args.basis, None)
                .or_else(|_| parse_basis(&args.basis, Some(d.max(2))))
                .map_err(|e| ValidationError(e.to_string()))?;
            pde_channel(basis, d, args.t, &budget)
        }
        other => {
            return Err(ValidationError(format!("unknown mechanism {other:?} (kde|pde)")).into())
        }
    };

    let x_grid: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
    let g_max = x_grid.iter().map(|&x| (spec.g)(x).abs()).fold(0.0f64, f64::max);
    let z_grid: Vec<f64> = (0..=400)
        .map(|i| -g_max - 4.0 * spec.b + (2.0 * g_max + 8.0 * spec.b) * i as f64 / 400.0)
        .collect();
    let ratio = verify_dp_ratio(&spec, &x_grid, &z_grid);
    let per_release = budget.per_release_alpha();
    println!(
        "max log-ratio {ratio:.6} (per-release alpha {per_release:.6}, tight {:.6})",
        spec.tight_log_ratio()
    );
    if ratio > per_release + 1e-9 {
        bail!("privacy certificate violated: log-ratio {ratio} exceeds alpha' {per_release}");
    }
    Ok(())
}

fn parse_dist(name: &str, b: f64) -> anyhow::Result<AuditDist> {
    match name {
        "uniform" => Ok(AuditDist::UniformSym),
        "rademacher" => Ok(AuditDist::Rademacher),
        "degenerate" => Ok(AuditDist::Degenerate),
        "laplace" => Ok(AuditDist::Laplace { b }),
        other => bail!("unknown distribution {other:?} (uniform|rademacher|degenerate|laplace)"),
    }
}

fn print_tail_rows(rows: &[TailAuditRow]) -> bool {
    println!("eps,empirical,bound,se,ok");
    let mut all_ok = true;
    for r in rows {
        println!("{},{},{},{},{}", r.eps, r.empirical, r.bound, r.se, r.ok as u8);
        all_ok &= r.ok;
    }
    all_ok
}

fn cmd_audit_bernstein(args: &BernsteinArgs) -> anyhow::Result<()> {
    let dist = parse_dist(&args.dist, 1.0).map_err(|e| ValidationError(e.to_string()))?;
    let rows = audit_bernstein(dist, args.n, &args.eps, args.reps, args.seed)
        .map_err(|e| ValidationError(e.to_string()))?;
    if !print_tail_rows(&rows) {
        bail!("Bernstein bound violated beyond 3 SE");
    }
    Ok(())
}

fn cmd_audit_laplace_tail(args: &LaplaceTailArgs) -> anyhow::Result<()> {
    if !(args.b > 0.0) {
        return Err(ValidationError(format!("--b must be positive, got {}", args.b)).into());
    }
    let rows = audit_laplace_tail(args.b, args.n, &args.eps, args.reps, args.seed);
    if !print_tail_rows(&rows) {
        bail!("Laplace tail bound violated beyond 3 SE");
    }
    Ok(())
}

fn cmd_audit_petrov(args: &PetrovArgs) -> anyhow::Result<()> {
    let dist = parse_dist(&args.dist, 1.0).map_err(|e| ValidationError(e.to_string()))?;
    let rows = audit_petrov(dist, &args.n, args.m, args.reps, args.seed)
        .map_err(|e| ValidationError(e.to_string()))?;
    println!("n,ratio,se");
    let mut worst: f64 = 0.0;
    for r in &rows {
        println!("{},{},{}", r.n, r.ratio, r.se);
        worst = worst.max(r.ratio - 3.0 * r.se);
    }
    if worst > args.c {
        bail!("Petrov ratio {worst} exceeds the admissible constant {}", args.c);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Marker for errors that should exit with code 2 rather than 3.
#[derive(Debug)]
struct ValidationError(String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for ValidationError {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LDPD_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run { config, jobs, seed } => cmd_run(config, *jobs, *seed),
        Cmd::Audit { sub } => match sub {
            AuditCmd::Privacy(args) => cmd_audit_privacy(args),
            AuditCmd::Bernstein(args) => cmd_audit_bernstein(args),
            AuditCmd::LaplaceTail(args) => cmd_audit_laplace_tail(args),
            AuditCmd::Petrov(args) => cmd_audit_petrov(args),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e.is::<ValidationError>()
                || e.downcast_ref::<ldp_density::Error>().is_some_and(|err| {
                    matches!(
                        err,
                        ldp_density::Error::Config(_)
                            | ldp_density::Error::InvalidAlpha(_)
                            | ldp_density::Error::InvalidBandwidth(_)
                            | ldp_density::Error::InvalidCollection(_)
                    )
                });
            ExitCode::from(if validation { 2 } else { 3 })
        }
    }
}
