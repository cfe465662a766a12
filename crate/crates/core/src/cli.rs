//! Command-line front end: JSON configs in, JSON or CSV out.
//!
//! Exit codes: 0 success, 1 computation failure, 2 invalid input or config,
//! 64 unknown subcommand.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientSet, CoefficientSpec, CoefficientsConfig};
use crate::error::{Error, Result};
use crate::experiments::{asymptotic_study, brascamp_lieb_sweep, interior_grid, AsymptoticReport, BLiebReport};
use crate::gamma::{f_infinity, f_infinity_functional, limit_cost, verify_recovery, MeasureSpec};
use crate::optimizer::{optimize, OptimizerConfig};
use crate::output::{fmt_num, nums, to_json, write_csv, write_csv_file, Num};
use crate::phi::{ConvexFn, PhiConfig};
use crate::sl_solver::{first_eigenvalue, global_bounds, local_lower_bound, local_upper_bound, Interval};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Contents of a `--config` file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: CoefficientSpec,
    pub q: CoefficientSpec,
    pub w: CoefficientSpec,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiConfig>,
    #[serde(default)]
    pub relax_q: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Builds the coefficients and checks the standing bounds.
    pub fn coefficients(&self, relax_q: bool) -> Result<CoefficientSet> {
        let cs = CoefficientsConfig {
            p: self.p.clone(),
            q: self.q.clone(),
            w: self.w.clone(),
            beta: self.beta,
        }
        .build()?
        .with_relaxed_q(self.relax_q || relax_q);
        cs.ensure_valid()?;
        Ok(cs)
    }

    /// `φ` from `--phi` (a path or an inline JSON object), else from the
    /// config file.
    pub fn phi(&self, flag: Option<&str>) -> Result<ConvexFn> {
        let block = match flag {
            Some(arg) => {
                let text = if arg.trim_start().starts_with('{') {
                    arg.to_string()
                } else {
                    std::fs::read_to_string(arg).map_err(|e| Error::Config(format!("cannot read {arg}: {e}")))?
                };
                serde_json::from_str::<PhiConfig>(&text).map_err(|e| Error::Config(format!("phi: {e}")))?
            }
            None => self
                .phi
                .clone()
                .ok_or_else(|| Error::Config("no `phi` block in config and no --phi given".into()))?,
        };
        block.build()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "slpart",
    version,
    about = "Sturm-Liouville eigenvalues and optimal spectral partitions of (0, 1)"
)]
pub struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// First Dirichlet eigenvalue on (lo, hi) with bounds.
    Eig(EigArgs),
    /// Minimize the partition cost for fixed n.
    Optimize(OptimizeArgs),
    /// Limit functional of a measure and the limiting cost.
    Gamma(GammaArgs),
    /// Recovery partitions of a block measure against the limit functional.
    Recovery(RecoveryArgs),
    /// Optimal partitions for several n against the limit.
    Verify(VerifyArgs),
    /// Splitting inequality sweep over interior points.
    Blieb(BliebArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct EigArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    #[arg(long, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub step_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long)]
    pub allow_empty: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub measure: PathBuf,
    /// Cells used for f∞ when s is not piecewise constant.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    #[arg(long)]
    pub f_inf_csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoveryArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub step_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BliebArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    /// Number of interior points k/(grid+1).
    #[arg(long, default_value_t = 99)]
    pub grid: usize,
    /// Allow negative q.
    #[arg(long)]
    pub relax_q: bool,
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct EigOutput {
    lambda: Num,
    error_estimate: Num,
    grid_size: usize,
    global_bounds: [Num; 2],
    local_bounds: [Num; 2],
}

#[derive(Serialize)]
struct OptimizeOutput {
    breakpoints: Vec<Num>,
    cost: Num,
    lambdas: Vec<Num>,
    converged: bool,
    iterations: usize,
    restarts_used: usize,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct GammaOutput {
    F_infinity: Num,
    limit_cost: Num,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_INVALID,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be >= 1");
            return EXIT_INVALID;
        }
        // fails only if a pool already exists in this process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_INVALID
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = to_json(value)?;
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_csv(header: &[String], rows: &[Vec<String>], out: Option<&Path>) -> Result<()> {
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    match out {
        Some(p) => write_csv_file(p, &header, rows),
        None => write_csv(std::io::stdout().lock(), &header, rows),
    }
}

fn check_tol(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {v}")))
    }
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Eig(a) => {
            let cfg = RunConfig::load(&a.cfg.config)?;
            let cs = cfg.coefficients(false)?;
            check_tol("rel-tol", a.rel_tol)?;
            let j = Interval::new(a.lo, a.hi)?;
            if j.is_empty() {
                return Err(Error::InvalidInput(format!("interval ({}, {}) is empty", a.lo, a.hi)));
            }
            let r = first_eigenvalue(j, &cs, a.rel_tol)?;
            let (g_lo, g_hi) = global_bounds(j, cs.beta)?;
            let out = EigOutput {
                lambda: Num(r.lambda),
                error_estimate: Num(r.error_estimate),
                grid_size: r.grid_size,
                global_bounds: [Num(g_lo), Num(g_hi)],
                local_bounds: [Num(local_lower_bound(j, &cs)?), Num(local_upper_bound(j, &cs)?)],
            };
            emit_json(&out, a.out.as_deref())
        }
        Command::Optimize(a) => {
            let cfg = RunConfig::load(&a.cfg.config)?;
            let cs = cfg.coefficients(false)?;
            let phi = cfg.phi(a.phi.as_deref())?;
            let oc = OptimizerConfig {
                n: a.n,
                restarts: a.restarts,
                max_iters: a.max_iters,
                step_tol: a.step_tol,
                seed: a.seed,
                allow_empty: a.allow_empty,
                rel_tol: a.rel_tol,
                ..Default::default()
            };
            oc.validate()?;
            let o = optimize(&oc, &cs, &phi)?;
            let out = OptimizeOutput {
                breakpoints: nums(o.partition.breakpoints()),
                cost: Num(o.cost),
                lambdas: nums(&o.per_interval_lambdas),
                converged: o.converged,
                iterations: o.iterations,
                restarts_used: o.restarts_used,
            };
            emit_json(&out, a.out.as_deref())
        }
        Command::Gamma(a) => {
            let cfg = RunConfig::load(&a.cfg.config)?;
            let cs = cfg.coefficients(false)?;
            let phi = cfg.phi(a.phi.as_deref())?;
            let mu = load_measure(&a.measure)?.to_measure()?;
            let f_inf = f_infinity(&cs, a.grid, 1e-12)?;
            let out = GammaOutput {
                F_infinity: Num(f_infinity_functional(&mu, &cs, &phi, 1e-10)?),
                limit_cost: Num(limit_cost(&cs, &phi, 1e-12)?),
            };
            if let Some(p) = &a.f_inf_csv {
                f_inf.write_csv(std::fs::File::create(p)?)?;
            }
            emit_json(&out, a.out.as_deref())
        }
        Command::Recovery(a) => {
            let cfg = RunConfig::load(&a.cfg.config)?;
            let cs = cfg.coefficients(false)?;
            let phi = cfg.phi(a.phi.as_deref())?;
            check_tol("rel-tol", a.rel_tol)?;
            let mu = load_measure(&a.measure)?
                .blocks()?
                .ok_or_else(|| Error::InvalidInput("recovery needs a block measure {m, alphas}".into()))?;
            let rows = verify_recovery(&mu, &cs, &phi, &a.n_list, a.rel_tol)?;
            let header: Vec<String> = ["n", "cost", "F_infinity", "gap", "w1"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        fmt_num(r.cost),
                        fmt_num(r.f_infinity),
                        fmt_num(r.gap),
                        fmt_num(r.w1),
                    ]
                })
                .collect();
            emit_csv(&header, &body, a.out_csv.as_deref())
        }
        Command::Verify(a) => {
            let cfg = RunConfig::load(&a.cfg.config)?;
            let cs = cfg.coefficients(false)?;
            let phi = cfg.phi(a.phi.as_deref())?;
            let oc = OptimizerConfig {
                restarts: a.restarts,
                step_tol: a.step_tol,
                rel_tol: a.rel_tol,
                seed: a.seed,
                ..Default::default()
            };
            oc.validate()?;
            let report = asymptotic_study(&cs, &phi, &a.n_list, &oc)?;
            emit_csv(&AsymptoticReport::header(), &report.csv_rows(), a.out_csv.as_deref())
        }
        Command::Blieb(a) => {
            let cfg = RunConfig::load(&a.cfg.config)?;
            let cs = cfg.coefficients(a.relax_q)?;
            check_tol("rel-tol", a.rel_tol)?;
            if a.grid == 0 {
                return Err(Error::InvalidInput("grid must be >= 1".into()));
            }
            let report = brascamp_lieb_sweep(&cs, &interior_grid(a.grid), a.rel_tol)?;
            emit_csv(&BLiebReport::header(), &report.csv_rows(), a.out_csv.as_deref())
        }
    }
}

fn load_measure(path: &Path) -> Result<MeasureSpec> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    MeasureSpec::from_json(&text)
}
