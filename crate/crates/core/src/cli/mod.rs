//! Command-line front end: `functionals`, `norm`, `verify` and `sweep`.

pub mod config;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::verify::{run_suite, CheckReport, Suite};
use crate::weights::Exponents;
pub use config::{parse_range, GridConfig, Overrides, RunConfig, SpacingKind};
pub use report::{evaluate, BoundsReport, Interval, Scope};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    CheckFailed = 1,
    ConfigError = 2,
}

#[derive(Debug, Parser)]
#[command(name = "hardycert", version, about = "Two-sided bounds for weighted Hardy inequalities on the quadrant")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for perturbed starts and random suites.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Nodes per grid axis.
    #[arg(long, global = true)]
    pub grid_nodes: Option<usize>,
    /// Lower truncation point on every axis.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    /// Upper truncation point on every axis.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x_max: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Functionals, constants and chained estimates.
    Functionals,
    /// Functionals plus the direct norm estimate and the certified interval.
    Norm,
    /// Machine checks of the auxiliary inequalities.
    Verify {
        /// ghs, lemmas, limits, zones or all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// One CSV row per (p, q) on a range.
    Sweep {
        /// `start:stop:step`.
        #[arg(long, allow_hyphen_values = true)]
        p_range: Option<String>,
        /// `start:stop:step`.
        #[arg(long, allow_hyphen_values = true)]
        q_range: Option<String>,
    },
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub reports: Vec<CheckReport>,
}

pub const SWEEP_HEADER: [&str; 18] = [
    "p", "q", "r", "zone", "A1", "A2", "A3", "B1", "B2", "B3", "Bv", "Bw", "c_lower", "C_upper",
    "probe_lower", "ascent", "certified_lo", "certified_hi",
];

fn load_config(common: &Common, extra: Overrides) -> Result<RunConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config", "this command needs a configuration file"))?;
    let mut cfg = RunConfig::load(path)?;
    cfg.apply(&Overrides {
        seed: common.seed,
        grid_nodes: common.grid_nodes,
        x_min: common.x_min,
        x_max: common.x_max,
        ..extra
    });
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_functionals(cfg: &RunConfig) -> Result<BoundsReport> {
    let grid = cfg.build_grid()?;
    evaluate(
        "functionals",
        cfg,
        cfg.exponents()?,
        &grid,
        Scope {
            norm: false,
            truncation_check: true,
        },
    )
}

pub fn cmd_norm(cfg: &RunConfig) -> Result<BoundsReport> {
    let grid = cfg.build_grid()?;
    evaluate(
        "norm",
        cfg,
        cfg.exponents()?,
        &grid,
        Scope {
            norm: true,
            truncation_check: true,
        },
    )
}

pub fn cmd_verify(suite: &str, seed: u64) -> Result<VerifyReport> {
    let suite: Suite = suite.parse()?;
    let reports = run_suite(suite, seed)?;
    Ok(VerifyReport {
        suite,
        seed,
        passed: reports.iter().all(|r| r.passed),
        reports,
    })
}

fn csv_float(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.16e}"),
        None => String::new(),
    }
}

/// Rows in `(p, q)` order, p outer.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    if cfg.dims != 2 {
        return Err(Error::config("dims", "sweep reports two-dimensional functionals; dims must be 2"));
    }
    let ps = match &cfg.p_range {
        Some(r) => parse_range("p_range", r)?,
        None => vec![cfg.p],
    };
    let qs = match &cfg.q_range {
        Some(r) => parse_range("q_range", r)?,
        None => vec![cfg.q],
    };
    let mut pairs = Vec::with_capacity(ps.len() * qs.len());
    for &p in &ps {
        for &q in &qs {
            let e = Exponents::new(p, q).map_err(|err| {
                Error::config(if p > 1.0 { "q_range" } else { "p_range" }, err.to_string())
            })?;
            pairs.push(e);
        }
    }
    let grid = cfg.build_grid()?;
    let mut row_cfg = cfg.clone();
    row_cfg.functionals = Some(
        ["A1", "A2", "A3", "B1", "B2", "B3", "Bv", "Bw"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    let rows = pairs
        .par_iter()
        .map(|&e| {
            let rep = evaluate(
                "sweep",
                &row_cfg,
                e,
                &grid,
                Scope {
                    norm: true,
                    truncation_check: false,
                },
            )?;
            Ok(sweep_row(&rep))
        })
        .collect::<Result<Vec<String>>>()?;
    let mut out = SWEEP_HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    Ok(out)
}

fn sweep_row(rep: &BoundsReport) -> String {
    let e = &rep.exponents;
    let diag = e.r.is_none();
    let b = |n: &str| if diag { None } else { rep.value(n) };
    let norm = rep.norm.as_ref();
    let iv = rep.certified_interval.as_ref();
    let mut cells = vec![
        csv_float(Some(e.p)),
        csv_float(Some(e.q)),
        csv_float(e.r),
        rep.zone.to_string(),
    ];
    for n in ["A1", "A2", "A3"] {
        cells.push(csv_float(rep.value(n)));
    }
    for n in ["B1", "B2", "B3", "Bv", "Bw"] {
        cells.push(csv_float(b(n)));
    }
    cells.push(csv_float(Some(rep.constants.c_lower)));
    cells.push(csv_float(Some(rep.constants.c_upper)));
    cells.push(csv_float(norm.map(|n| n.probe_lower)));
    cells.push(csv_float(norm.map(|n| n.estimate)));
    cells.push(csv_float(iv.map(|i| i.lower)));
    cells.push(csv_float(iv.and_then(|i| i.upper)));
    cells.join(",")
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                so.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Caps the global thread pool from `HARDYCERT_THREADS`.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HARDYCERT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::config("HARDYCERT_THREADS", format!("{v:?} is not a positive integer")))?;
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<Exit> {
    configure_threads()?;
    let out = cli.common.out.as_deref();
    match &cli.command {
        Command::Functionals | Command::Norm => {
            let cfg = load_config(&cli.common, Overrides::default())?;
            let rep = if matches!(cli.command, Command::Norm) {
                cmd_norm(&cfg)?
            } else {
                cmd_functionals(&cfg)?
            };
            emit(out, &to_json(&rep)?)?;
            Ok(if rep.passed() { Exit::Success } else { Exit::CheckFailed })
        }
        Command::Verify { suite } => {
            let rep = cmd_verify(suite, cli.common.seed.unwrap_or(42))?;
            emit(out, &to_json(&rep)?)?;
            Ok(if rep.passed { Exit::Success } else { Exit::CheckFailed })
        }
        Command::Sweep { p_range, q_range } => {
            let cfg = load_config(
                &cli.common,
                Overrides {
                    p_range: p_range.clone(),
                    q_range: q_range.clone(),
                    ..Default::default()
                },
            )?;
            emit(out, &cmd_sweep(&cfg)?)?;
            Ok(Exit::Success)
        }
    }
}

/// Parses `args`, runs the command and returns the exit status. Errors are
/// written to standard error.
pub fn run<I, T>(args: I) -> Exit
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Exit::Success,
                _ => Exit::ConfigError,
            };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            Exit::ConfigError
        }
    }
}
