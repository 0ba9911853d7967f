//! Argument parsing and dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::commands::{self, Outcome};
use crate::config::{parse_list, CriterionKind, MetricSpec, RunConfig, VectorSpec};
use crate::output::Artifacts;
use crate::verify;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "liegeo", version, about = "Geodesics, curvature and conjugate points on matrix Lie groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ricci matrix, closed-form comparisons and block constants.
    Curvature(Common),
    /// Integrate a geodesic and export the trajectory.
    Geodesic(Common),
    /// Conjugate times from the Jacobi detector or one named criterion.
    Conjugate(ConjugateArgs),
    /// Steady-geodesic operators and the three steady criteria.
    Steady(SteadyArgs),
    /// Berger-sphere tangent conjugate locus slices (CSV and SVG).
    Locus(LocusArgs),
    /// Run the invariant and oracle suites; exit 0 when all pass.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// so(n), su(n), su(n)-with-so(n) or berger-sphere (so3, su3-with-so3 also accepted).
    #[arg(long)]
    pub group: Option<String>,
    /// Metric kind and parameters, e.g. `rigid-body 1,2,3` or `cheeger -0.6667`.
    #[arg(long, num_args = 1..=2, allow_hyphen_values = true)]
    pub metric: Option<Vec<String>>,
    /// Initial velocity: coordinates `0.3,1,0.2` or an expression `e12 - 0.5*e13`.
    #[arg(long, allow_hyphen_values = true)]
    pub u0: Option<String>,
    /// Subalgebra part of the initial velocity.
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<String>,
    /// Complement part of the initial velocity.
    #[arg(long, allow_hyphen_values = true)]
    pub q0: Option<String>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, or a file path whose stem names the artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub time_tol: Option<f64>,
    #[arg(long)]
    pub sigma_rel: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConjugateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_criterion)]
    pub criterion: Option<CriterionKind>,
    /// Closing time for `closed`, test-field length for `nonsteady-phi`.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub random: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SteadyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub random: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LocusArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated δ values.
    #[arg(long, allow_hyphen_values = true)]
    pub deltas: Option<String>,
    #[arg(long)]
    pub angles: Option<usize>,
    /// momentum (default), biinvariant-unit or metric-unit.
    #[arg(long)]
    pub convention: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the results as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_criterion(s: &str) -> Result<CriterionKind, String> {
    serde_json::from_value(json!(s))
        .map_err(|_| format!("unknown criterion '{s}' (closed, steady-det, steady-blocks, misiolek, nonsteady-phi, cheeger)"))
}

impl Common {
    /// Loads the config file (if any) and applies flag overrides.
    pub fn resolve(&self) -> Result<(RunConfig, PathBuf), CliError> {
        let (mut cfg, base) = match &self.config {
            Some(p) => (
                RunConfig::load(p)?,
                p.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (RunConfig::default(), PathBuf::new()),
        };
        if let Some(g) = &self.group {
            cfg.group = g.parse().map_err(CliError::Config)?;
        }
        if let Some(m) = &self.metric {
            cfg.metric = MetricSpec::from_args(m)?;
        }
        if let Some(u) = &self.u0 {
            cfg.u0 = Some(VectorSpec::from_arg(u)?);
            cfg.p0 = None;
            cfg.q0 = None;
        }
        if self.p0.is_some() || self.q0.is_some() {
            cfg.u0 = None;
            cfg.p0 = self.p0.as_deref().map(VectorSpec::from_arg).transpose()?;
            cfg.q0 = self.q0.as_deref().map(VectorSpec::from_arg).transpose()?;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if self.dt.is_some() {
            cfg.dt = self.dt;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(t) = self.time_tol {
            cfg.tolerances.time = t;
        }
        if let Some(t) = self.sigma_rel {
            cfg.tolerances.sigma_rel = t;
        }
        Ok((cfg, base))
    }
}

fn validated(cfg: RunConfig) -> Result<RunConfig, CliError> {
    cfg.validate()?;
    Ok(cfg)
}

fn emit(outcome: Outcome) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    // a closed pipe on stdout is not an error for the run itself
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    match outcome.inapplicable {
        Some(reason) => Err(CliError::Inapplicable(reason)),
        None => Ok(()),
    }
}

/// Caps rayon at LIEGEO_THREADS when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("LIEGEO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("LIEGEO_THREADS must be a positive integer, got '{v}'")))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Curvature(c) => {
            let (cfg, base) = c.resolve()?;
            emit(commands::cmd_curvature(&validated(cfg)?, &base)?)
        }
        Command::Geodesic(c) => {
            let (cfg, base) = c.resolve()?;
            emit(commands::cmd_geodesic(&validated(cfg)?, &base)?)
        }
        Command::Conjugate(a) => {
            let (mut cfg, base) = a.common.resolve()?;
            if a.criterion.is_some() {
                cfg.criterion = a.criterion;
            }
            if a.tau.is_some() {
                cfg.tau = a.tau;
            }
            if let Some(s) = a.samples {
                cfg.samples = s;
            }
            if let Some(r) = a.random {
                cfg.random_directions = r;
            }
            emit(commands::cmd_conjugate(&validated(cfg)?, &base)?)
        }
        Command::Steady(a) => {
            let (mut cfg, base) = a.common.resolve()?;
            if let Some(s) = a.samples {
                cfg.samples = s;
            }
            if let Some(r) = a.random {
                cfg.random_directions = r;
            }
            emit(commands::cmd_steady(&validated(cfg)?, &base)?)
        }
        Command::Locus(a) => {
            let (mut cfg, _) = a.common.resolve()?;
            if let Some(d) = &a.deltas {
                cfg.locus.deltas = parse_list(d)?;
            }
            if let Some(n) = a.angles {
                cfg.locus.angles = n;
            }
            if let Some(c) = &a.convention {
                cfg.locus.convention = c.clone();
            }
            emit(commands::cmd_locus(&validated(cfg)?)?)
        }
        Command::Verify(a) => {
            let seed = a.seed.unwrap_or(0);
            let checks = verify::run_all(seed);
            let mut stdout = std::io::stdout().lock();
            for c in &checks {
                let _ = writeln!(
                    stdout,
                    "{} {:<20} {:<44} {:>12.3e} (tol {:.1e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.suite,
                    c.name,
                    c.measured,
                    c.tolerance
                );
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            let _ = writeln!(stdout, "{} checks, {failed} failed", checks.len());
            if let Some(out) = &a.out {
                let cfg = RunConfig {
                    seed,
                    out: out.clone(),
                    ..RunConfig::default()
                };
                let mut art = Artifacts::new(out, "verify", cfg.hash())?;
                art.json("", json!({ "seed": seed, "checks": checks, "failed": failed }))?;
                art.manifest("verify", &cfg, json!({}))?;
            }
            if failed > 0 {
                Err(CliError::Numeric(format!("{failed} verification checks failed")))
            } else {
                Ok(())
            }
        }
    }
}
