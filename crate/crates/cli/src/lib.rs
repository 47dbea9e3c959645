//! The `zeroledger` command line: table reproduction, case verification, the
//! delta frontier search and ad-hoc evaluation of individual bounds.

pub mod config;
pub mod format;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use zeroledger::density::{
    b0, b_bound, optimize_t_density, t_bound_density, t_bound_staircase, BoundParams, Slack, TBoundResult,
};
use zeroledger::kernel::{eval_g, laplace_g, KernelContext};
use zeroledger::ledger::{delta_search, verify_all, verify_tables};
use zeroledger::rbound::{optimize_r, r_bound_general, r_bound_restricted, HeadScenario, RBoundResult, RBranch};

pub use config::{OutputFormat, Overrides, RunConfig};
use format::{object, opt_real, real_value};
use report::DocKind;

pub mod exit {
    pub const PASS: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const DOMAIN: u8 = 2;
    pub const DEGENERATE: u8 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] zeroledger::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        exit::DOMAIN
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "zeroledger",
    version,
    about = "Certified constants for zero-density and exceptional-set estimates"
)]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub c0: Option<f64>,
    #[arg(long = "eps-num", global = true)]
    pub eps_num: Option<f64>,
    /// Staircase grid points (odd, at least 51).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<OutputFormat>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Evaluate independent bounds in parallel (thread count capped by ZL_THREADS).
    #[arg(long, global = true)]
    pub parallel: bool,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            delta: self.delta,
            c0: self.c0,
            eps_num: self.eps_num,
            grid_points: self.grid,
            output_format: self.format,
            out_path: self.out.clone(),
            parallel: self.parallel,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recompute the tabulated constants.
    VerifyTables,
    /// Tables plus the case certificates and c1.
    VerifyCases,
    /// Bisect for the largest delta at which cases (2) to (6) certify.
    SearchDelta {
        #[arg(allow_negative_numbers = true)]
        lo: f64,
        #[arg(allow_negative_numbers = true)]
        hi: f64,
        #[arg(default_value_t = 1e-3, allow_negative_numbers = true)]
        tol: f64,
    },
    /// Evaluate one quantity.
    Eval {
        #[arg(value_enum)]
        expr: EvalExpr,
        #[arg(allow_negative_numbers = true)]
        args: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalExpr {
    /// g(u)
    #[value(name = "g")]
    SmallG,
    /// G(z)
    #[value(name = "G")]
    BigG,
    /// B0(u, lambda)
    #[value(name = "B0")]
    B0,
    /// B(x, y, z, Lambda)
    #[value(name = "B")]
    B,
    /// psi(x, lambda0, lambda)
    #[value(name = "psi")]
    Psi,
    /// xi(x, lambda0)
    #[value(name = "xi")]
    Xi,
    /// T(Lambda), or T(x, y, z, Lambda) for a fixed triple
    #[value(name = "T31")]
    T31,
    /// staircase T(Lambda, lambda0)
    #[value(name = "Tstair")]
    Tstair,
    /// R(Lambda, lambda1, lambda2, lambda*[, x])
    #[value(name = "Rgen")]
    Rgen,
    /// restricted R(Lambda, lambda1, lambda2, lambda*[, N0[, x]])
    #[value(name = "Rres")]
    Rres,
}

impl EvalExpr {
    fn name(self) -> &'static str {
        match self {
            Self::SmallG => "g",
            Self::BigG => "G",
            Self::B0 => "B0",
            Self::B => "B",
            Self::Psi => "psi",
            Self::Xi => "xi",
            Self::T31 => "T31",
            Self::Tstair => "Tstair",
            Self::Rgen => "Rgen",
            Self::Rres => "Rres",
        }
    }

    /// Accepted argument counts.
    fn arities(self) -> &'static [usize] {
        match self {
            Self::SmallG | Self::BigG => &[1],
            Self::B0 | Self::Xi | Self::Tstair => &[2],
            Self::Psi => &[3],
            Self::B => &[4],
            Self::T31 => &[1, 4],
            Self::Rgen => &[4, 5],
            Self::Rres => &[4, 5, 6],
        }
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::DOMAIN } else { exit::PASS };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("zeroledger: {e}");
            e.exit_code()
        }
    }
}

fn thread_count(parallel: bool) -> Result<usize, CliError> {
    if !parallel {
        return Ok(1);
    }
    match std::env::var("ZL_THREADS") {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Usage(format!(
                "ZL_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        // Zero lets rayon pick.
        _ => Ok(0),
    }
}

pub fn execute(cli: &Cli) -> Result<u8, CliError> {
    let cfg = RunConfig::resolve(cli.flags.config.as_deref(), &cli.flags.overrides())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cfg.parallel)?)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let (doc, kind, code) = pool.install(|| match &cli.command {
        Command::VerifyTables => cmd_verify_tables(&cfg),
        Command::VerifyCases => cmd_verify_cases(&cfg),
        Command::SearchDelta { lo, hi, tol } => cmd_search_delta(&cfg, *lo, *hi, *tol),
        Command::Eval { expr, args } => cmd_eval(&cfg, *expr, args),
    })?;
    emit(&cfg, &doc, kind)?;
    Ok(code)
}

fn emit(cfg: &RunConfig, doc: &Value, kind: DocKind) -> Result<(), CliError> {
    let text = report::render(doc, kind, cfg.output_format)?;
    match &cfg.out_path {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

type Outcome = Result<(Value, DocKind, u8), CliError>;

/// Exit 2 when a row could not be computed or has a negative slack, 1 when a
/// computed value exceeds the tabulated one, 0 otherwise.
pub fn cmd_verify_tables(cfg: &RunConfig) -> Outcome {
    let rows = verify_tables(cfg.delta, &cfg.ledger_options())?;
    let code = if rows.iter().any(|r| r.computed.is_none() || !r.feasible) {
        exit::DOMAIN
    } else if rows.iter().all(|r| r.pass) {
        exit::PASS
    } else {
        exit::FAILURE
    };
    Ok((
        report::tables_document(cfg.delta, cfg.c0, cfg.eps_num, &rows),
        DocKind::Report,
        code,
    ))
}

/// Exit 0 iff cases (2) to (6) certify and the case (1) audit is present.
pub fn cmd_verify_cases(cfg: &RunConfig) -> Outcome {
    let report = verify_all(cfg.delta, cfg.c0, &cfg.ledger_options())?;
    let audited = report.cases.iter().any(|c| c.case_id == 1);
    let code = if report.main_cases_pass() && audited {
        exit::PASS
    } else {
        exit::FAILURE
    };
    Ok((report::report_document(&report), DocKind::Report, code))
}

pub fn cmd_search_delta(cfg: &RunConfig, lo: f64, hi: f64, tol: f64) -> Outcome {
    let s = delta_search(lo, hi, tol, cfg.c0, &cfg.ledger_options())?;
    let code = if s.is_degenerate() {
        exit::DEGENERATE
    } else {
        exit::PASS
    };
    Ok((report::search_document(lo, hi, tol, cfg.c0, &s), DocKind::Search, code))
}

fn t_details(t: &TBoundResult) -> Value {
    if let Some(p) = t.density_params() {
        return object(vec![
            ("x", real_value(p.x)),
            ("y", real_value(p.y)),
            ("z", real_value(p.z)),
            ("k", real_value(p.k())),
        ]);
    }
    match t.staircase() {
        Some(g) => object(vec![
            ("grid_sum", real_value(g.grid_sum)),
            ("refined_sum", real_value(g.refined_sum)),
            ("tail", real_value(g.tail)),
            ("tail_source", Value::from(g.tail_source.clone())),
        ]),
        None => Value::Null,
    }
}

fn r_details(r: &RBoundResult) -> Value {
    object(vec![
        ("x", real_value(r.x_used)),
        ("n0", r.n0.map_or(Value::Null, Value::from)),
        (
            "branch",
            Value::from(if r.branch == RBranch::Main {
                "main"
            } else {
                "count_fallback"
            }),
        ),
        ("main_bound", real_value(r.main_bound)),
        ("fallback_bound", opt_real(r.fallback_bound)),
    ])
}

fn n0_arg(v: f64) -> Result<u32, CliError> {
    if v.fract() == 0.0 && (4.0..=6.0).contains(&v) {
        Ok(v as u32)
    } else {
        Err(CliError::Usage(format!("N0 must be 4, 5 or 6, got {v}")))
    }
}

/// Exit 2 on a wrong argument count or a domain error.
pub fn cmd_eval(cfg: &RunConfig, expr: EvalExpr, args: &[f64]) -> Outcome {
    if !expr.arities().contains(&args.len()) {
        let want: Vec<String> = expr.arities().iter().map(usize::to_string).collect();
        return Err(CliError::Usage(format!(
            "{} takes {} argument(s), got {}",
            expr.name(),
            want.join(" or "),
            args.len()
        )));
    }
    let d = cfg.delta;
    let a = args;
    let (value, slacks, uses_delta, details): (f64, Vec<Slack>, bool, Value) = match expr {
        EvalExpr::SmallG => (eval_g(a[0])?, vec![], false, Value::Null),
        EvalExpr::BigG => (laplace_g(a[0])?, vec![], false, Value::Null),
        EvalExpr::B0 => (b0(a[0], a[1])?, vec![], false, Value::Null),
        EvalExpr::B => {
            let p = BoundParams::new(a[0], a[1], a[2], false)?;
            let slack = Slack::new("1/delta - k", 1.0 / d - p.k());
            (
                b_bound(&p, a[3])?,
                vec![slack],
                true,
                object(vec![("k", real_value(p.k()))]),
            )
        }
        EvalExpr::Psi => (KernelContext::new(a[0], a[1])?.psi(a[2]), vec![], false, Value::Null),
        EvalExpr::Xi => (KernelContext::new(a[0], a[1])?.xi(), vec![], false, Value::Null),
        EvalExpr::T31 => {
            let t = if a.len() == 1 {
                optimize_t_density(d, a[0], false)?
            } else {
                t_bound_density(d, a[3], &BoundParams::new(a[0], a[1], a[2], false)?)?
            };
            (t.bound, t.slacks.clone(), true, t_details(&t))
        }
        EvalExpr::Tstair => {
            let t = t_bound_staircase(d, a[0], a[1])?;
            (t.bound, t.slacks.clone(), true, t_details(&t))
        }
        EvalExpr::Rgen => {
            let sc = HeadScenario::general(a[0], a[1], a[2], a[3])?;
            let r = if a.len() == 5 {
                r_bound_general(d, &sc, a[4])?
            } else {
                optimize_r(d, &sc)?
            };
            (r.bound, r.slacks.clone(), true, r_details(&r))
        }
        EvalExpr::Rres => {
            let n0 = a.get(4).map(|&v| n0_arg(v)).transpose()?;
            let sc = HeadScenario::restricted(a[0], a[1], a[2], a[3], n0)?;
            let r = if a.len() == 6 {
                r_bound_restricted(d, &sc, a[5])?
            } else {
                optimize_r(d, &sc)?
            };
            (r.bound, r.slacks.clone(), true, r_details(&r))
        }
    };
    let doc = report::eval_document(expr.name(), args, uses_delta.then_some(d), value, &slacks, details);
    Ok((doc, DocKind::Eval, exit::PASS))
}
