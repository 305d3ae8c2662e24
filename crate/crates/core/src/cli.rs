//! The `accmd` command line.
//!
//! ```text
//! accmd run    --problem loglinear --dim 64 --seed 7 --solver accmd-forward --out trace.csv
//! accmd verify --all --problem counterexample
//! accmd bench  --problem loglinear --g 20,0,0 --solver md --solver accmd-forward
//! accmd gen    --problem quartic --dim 32 --seed 1 --out inst/
//! ```
//!
//! Every subcommand accepts `--manifest FILE`, a JSON object whose keys are
//! flag names (`{"problem": "lasso", "lambda": 0.05, "no-timing": true}`).
//! Flags given on the command line win over the manifest.
//!
//! Exit codes: 0 success, 1 runtime failure (aborted run, failed check, I/O),
//! 2 usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::certify::{self, CheckReport, GcsSampling, LyapunovSuite, StepKind};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::mirror::{EntropyMirror, MirrorFunction, QuadraticMirror, QuarticMirror};
use crate::objective::{self, DataFormat, NonsmoothTerm, ObjectiveData, ProblemInstance};
use crate::solver::{self, Algorithm, CEstimator, SolverConfig, Termination, Trace};

#[derive(Parser, Debug)]
#[command(
    name = "accmd",
    version,
    about = "Accelerated mirror descent solvers and certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem and write the iteration trace.
    Run(RunArgs),
    /// Run certification checks.
    Verify(VerifyArgs),
    /// Compare several solvers on one problem.
    Bench(BenchArgs),
    /// Generate a problem instance and write its data.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Loglinear,
    Maxmargin,
    MaxmarginSpread,
    Quartic,
    Lasso,
    Counterexample,
    Isotropic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svmlight,
}

impl From<Format> for DataFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => DataFormat::Csv,
            Format::Svmlight => DataFormat::Svmlight,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CEstimatorArg {
    Exact,
    Power,
    Practical,
    #[value(name = "global-L", alias = "global-l")]
    GlobalL,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MirrorArg {
    Quadratic,
    Entropy,
    EntropySimplex,
    Quartic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CheckName {
    ThreePoint,
    StrongLyapunov,
    StepIdentity,
    PerturbedStepIdentity,
    Gcs,
    Rate,
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Problem family.
    #[arg(long, value_enum, default_value = "loglinear")]
    problem: Family,
    /// Dimension (features for lasso).
    #[arg(long)]
    dim: Option<usize>,
    /// Samples of a synthetic lasso design.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit log-linear vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    g: Option<Vec<f64>>,
    /// Norm of a random log-linear vector.
    #[arg(long)]
    g_norm: Option<f64>,
    /// Condition number of the spread max-margin instance.
    #[arg(long)]
    cond: Option<f64>,
    /// L1 weight of the lasso.
    #[arg(long)]
    lambda: Option<f64>,
    /// Dataset for the lasso.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Override the strong convexity constant.
    #[arg(long)]
    mu: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Override the GCS constant used for `α`.
    #[arg(long, value_enum)]
    c_estimator: Option<CEstimatorArg>,
    /// Hessian Hölder constant for the practical estimator.
    #[arg(long)]
    hessian_lipschitz: Option<f64>,
    /// Hölder exponent for the practical estimator.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Radius bound for the practical estimator.
    #[arg(long)]
    radius: Option<f64>,
    /// Fixed Acc-MD step parameter instead of `√(μ/C)`.
    #[arg(long)]
    alpha: Option<f64>,
    /// Mirror descent step size.
    #[arg(long)]
    step: Option<f64>,
    /// Fixed level of the perturbed scheme.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Starting level of the homotopy schedule.
    #[arg(long)]
    epsilon0: Option<f64>,
    /// Inner steps of the first homotopy stage.
    #[arg(long)]
    m0: Option<usize>,
    /// Stop the homotopy once the level falls below this.
    #[arg(long)]
    epsilon_min: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Drop wall-clock columns so output is byte-for-byte reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver_opts: SolverArgs,
    /// Solver: md, accmd-forward, accmd-backward, perturbed, homotopy or composite.
    #[arg(long, default_value = "accmd-forward")]
    solver: String,
    /// Trace CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON summary here.
    #[arg(long)]
    json_summary: Option<PathBuf>,
    /// Skip the reference solve that fills the Lyapunov columns.
    #[arg(long)]
    no_lyapunov: bool,
    /// JSON object of flag values; explicit flags win.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Checks to run.
    #[arg(long, value_enum)]
    check: Vec<CheckName>,
    /// Run every check that applies to the problem.
    #[arg(long)]
    all: bool,
    /// Run the three-point check on a bare mirror function instead.
    #[arg(long, value_enum)]
    mirror: Option<MirrorArg>,
    /// Sampled points per check.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Trajectory length for the step identities.
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Perturbation level for the perturbed step identity.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sample the GCS inequality in a ball of this radius around the minimizer.
    #[arg(long)]
    gcs_radius: Option<f64>,
    /// Report JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON object of flag values; explicit flags win.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_sign_flip: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver_opts: SolverArgs,
    /// Solvers to compare (at least two).
    #[arg(long = "solver", required = true, value_delimiter = ',')]
    solvers: Vec<String>,
    /// Relative objective error that counts as reached.
    #[arg(long, default_value_t = 1e-8)]
    target: f64,
    /// Table CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON summary here.
    #[arg(long)]
    json_summary: Option<PathBuf>,
    /// JSON object of flag values; explicit flags win.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// JSON object of flag values; explicit flags win.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
    /// Already reported by clap (help, version, parse errors).
    Reported(i32),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

/// Entry point of the binary; returns the process exit code.
pub fn main_entry() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("ACCMD_LOG", "warn")).try_init();
    run_cli(std::env::args_os())
}

/// Parse `args` (including the program name) and execute.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let outcome = parse_with_manifest(&args).and_then(|cli| match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
    });
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Reported(code)) => code,
    }
}

fn parse_with_manifest(args: &[OsString]) -> CliResult<Cli> {
    let merged = match manifest_path(args) {
        Some(path) => merge_manifest(args, &path)?,
        None => args.to_vec(),
    };
    Cli::try_parse_from(&merged).map_err(|e| {
        let _ = e.print();
        Failure::Reported(e.exit_code())
    })
}

fn manifest_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().filter_map(|a| a.to_str());
    while let Some(a) = it.next() {
        if a == "--manifest" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--manifest=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Splice manifest entries in after the subcommand, skipping flags that
/// already appear on the command line.
fn merge_manifest(args: &[OsString], path: &Path) -> CliResult<Vec<OsString>> {
    let Some(sub) = args.get(1).and_then(|a| a.to_str()) else {
        return Ok(args.to_vec());
    };
    let cmd = Cli::command();
    let Some(sub_cmd) = cmd.find_subcommand(sub) else {
        return Ok(args.to_vec());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let json: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("manifest {}: {e}", path.display())))?;
    let obj = json
        .as_object()
        .ok_or_else(|| Failure::Usage("manifest must be a JSON object".into()))?;
    let given = |long: &str| {
        args.iter().filter_map(|a| a.to_str()).any(|a| {
            a.strip_prefix("--")
                .is_some_and(|rest| rest == long || rest.strip_prefix(long).is_some_and(|r| r.starts_with('=')))
        })
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in obj {
        let long = key.replace('_', "-");
        if long == "manifest" {
            return Err(Failure::Usage("manifests cannot nest".into()));
        }
        if !sub_cmd.get_arguments().any(|a| a.get_long() == Some(long.as_str())) {
            return Err(Failure::Usage(format!("unknown manifest key '{key}' for {sub}")));
        }
        if given(&long) {
            continue;
        }
        let flag = format!("--{long}");
        let scalar = |v: &serde_json::Value| -> CliResult<String> {
            match v {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                _ => Err(Failure::Usage(format!("manifest key '{key}': unsupported value {v}"))),
            }
        };
        match value {
            serde_json::Value::Bool(true) => extra.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                for v in items {
                    extra.push(format!("{flag}={}", scalar(v)?).into());
                }
            }
            v => extra.push(format!("{flag}={}", scalar(v)?).into()),
        }
    }
    let mut merged = args[..2].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[2..]);
    Ok(merged)
}

fn build_problem(a: &ProblemArgs) -> CliResult<ProblemInstance> {
    let dim = |default: usize| a.dim.unwrap_or(default);
    let mut p = match a.problem {
        Family::Loglinear => match (&a.g, a.g_norm) {
            (Some(_), Some(_)) => return Err(Failure::Usage("--g and --g-norm are exclusive".into())),
            (Some(g), None) => objective::make_log_linear(&Vector::from(g.clone())).map_err(usage)?,
            (None, Some(n)) => objective::log_linear_with_norm(dim(16), a.seed, n).map_err(usage)?,
            (None, None) => objective::log_linear_instance(dim(16), a.seed).map_err(usage)?,
        },
        Family::Maxmargin => objective::max_margin_instance(dim(16), a.seed).map_err(usage)?,
        Family::MaxmarginSpread => {
            objective::max_margin_spread_instance(dim(32), a.seed, a.cond.unwrap_or(2f64.powi(30))).map_err(usage)?
        }
        Family::Quartic => objective::make_quartic(dim(32), a.seed).map_err(usage)?,
        Family::Lasso => {
            let lambda = a.lambda.unwrap_or(0.05);
            match &a.data {
                Some(path) => {
                    let ds = objective::load_dataset(path, a.format.into(), a.dim)?;
                    objective::make_lasso(&ds.a, &ds.b, lambda)?
                }
                None => objective::lasso_instance(a.rows.unwrap_or(20), dim(50), a.seed, lambda).map_err(usage)?,
            }
        }
        Family::Counterexample => objective::make_counterexample_1d(),
        Family::Isotropic => objective::make_isotropic_quadratic(dim(16)),
    };
    if a.lambda.is_some() && a.problem != Family::Lasso {
        return Err(Failure::Usage("--lambda only applies to lasso".into()));
    }
    if let Some(mu) = a.mu {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Failure::Usage(format!("--mu must be nonnegative, got {mu}")));
        }
        p = p.with_mu(mu);
    }
    Ok(p)
}

fn build_config(solver: &str, s: &SolverArgs) -> CliResult<SolverConfig> {
    let algorithm: Algorithm = solver.parse().map_err(usage)?;
    let mut c = SolverConfig::new(algorithm)
        .with_tol(s.tol)
        .with_max_iters(s.max_iters)
        .with_timing(!s.no_timing);
    c.alpha = s.alpha;
    c.step = s.step;
    c.epsilon = s.epsilon;
    c.epsilon0 = s.epsilon0;
    c.m0 = s.m0;
    c.epsilon_min = s.epsilon_min;
    c.c_estimator = match s.c_estimator {
        None => CEstimator::Problem,
        Some(CEstimatorArg::Exact) => CEstimator::Exact,
        Some(CEstimatorArg::Power) => CEstimator::Power,
        Some(CEstimatorArg::GlobalL) => CEstimator::GlobalL,
        Some(CEstimatorArg::Practical) => CEstimator::Practical {
            hessian_lipschitz: s.hessian_lipschitz,
            theta: s.theta,
            radius: s.radius,
        },
    };
    c.validate().map_err(usage)?;
    Ok(c)
}

/// Minimizer used for the Lyapunov columns: the known one, or a reference
/// solve when that converges linearly.
fn lyapunov_reference(p: &ProblemInstance) -> Result<Option<Vector>> {
    if let Some(x) = &p.known_minimizer {
        return Ok(Some(x.clone()));
    }
    if p.mu > 0.0 {
        return Ok(Some(certify::reference_minimizer(p, 100_000)?.x));
    }
    Ok(None)
}

fn write_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| io_context(e, p))?);
            f(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
        }
    }
    Ok(())
}

fn io_context(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| io_context(e, path))
}

fn cmd_run(a: RunArgs) -> CliResult<i32> {
    let problem = build_problem(&a.problem)?;
    let config = build_config(&a.solver, &a.solver_opts)?;
    let reference = if a.no_lyapunov {
        None
    } else {
        lyapunov_reference(&problem)?
    };
    let trace = solver::run(&problem, &config, reference.as_ref()).map_err(usage)?;
    write_output(a.out.as_deref(), |w| trace.write_csv(w))?;
    if let Some(path) = &a.json_summary {
        write_json(path, &trace.summary())?;
    }
    report_status(&trace)
}

fn report_status(trace: &Trace) -> CliResult<i32> {
    eprintln!(
        "{} on {}: {} after {} iterations, objective {:.12e}",
        trace.config.algorithm,
        trace.problem.name,
        status_name(&trace.status),
        trace.iterations(),
        trace.last().obj
    );
    match &trace.status {
        Termination::Aborted { reason } => Err(Failure::Runtime(format!("run aborted: {reason}"))),
        _ => Ok(0),
    }
}

fn status_name(t: &Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::MaxIters => "max-iters",
        Termination::ScheduleExhausted => "schedule-exhausted",
        Termination::Aborted { .. } => "aborted",
    }
}

fn mirror_for(m: MirrorArg, dim: usize) -> MirrorFunction {
    match m {
        MirrorArg::Quadratic => QuadraticMirror::identity(dim).into(),
        MirrorArg::Entropy => EntropyMirror::positive_orthant(dim).into(),
        MirrorArg::EntropySimplex => EntropyMirror::simplex(dim).into(),
        MirrorArg::Quartic => QuarticMirror::new(dim).into(),
    }
}

fn cmd_verify(a: VerifyArgs) -> CliResult<i32> {
    let mut checks = a.check.clone();
    if a.all {
        checks = CheckName::value_variants().to_vec();
    }
    if checks.is_empty() {
        return Err(Failure::Usage("choose --check NAME or --all".into()));
    }
    checks.sort();
    checks.dedup();
    let problem = build_problem(&a.problem)?;
    let seed = a.problem.seed;
    let mut reports: Vec<CheckReport> = Vec::new();
    let mut skipped: Vec<(CheckName, String)> = Vec::new();
    let mut xstar: Option<Vector> = None;
    let mut need_xstar = |p: &ProblemInstance| -> Result<Vector> {
        if let Some(x) = &xstar {
            return Ok(x.clone());
        }
        let x = match &p.known_minimizer {
            Some(x) => x.clone(),
            None => certify::reference_minimizer(p, 100_000)?.x,
        };
        xstar = Some(x.clone());
        Ok(x)
    };
    let sign = if a.inject_sign_flip { -1.0 } else { 1.0 };
    for check in checks {
        let strongly_convex = problem.mu > 0.0;
        let inapplicable = match check {
            CheckName::StrongLyapunov
            | CheckName::StepIdentity
            | CheckName::PerturbedStepIdentity
            | CheckName::Rate
                if !strongly_convex =>
            {
                Some("needs mu > 0")
            }
            CheckName::StepIdentity | CheckName::PerturbedStepIdentity | CheckName::Rate
                if matches!(problem.nonsmooth, NonsmoothTerm::L1 { .. }) =>
            {
                Some("no L1 term allowed")
            }
            _ => None,
        };
        if let Some(why) = inapplicable {
            if a.all {
                skipped.push((check, why.to_string()));
                continue;
            }
            return Err(Failure::Runtime(format!(
                "check {check:?} does not apply to {}: {why}",
                problem.name
            )));
        }
        let report = match check {
            CheckName::ThreePoint => match a.mirror {
                Some(m) => certify::check_three_point(&mirror_for(m, a.problem.dim.unwrap_or(8)), a.samples, seed)?,
                None => certify::check_three_point_objective(&problem, a.samples, seed)?,
            },
            CheckName::StrongLyapunov => {
                let x = need_xstar(&problem)?;
                certify::check_strong_lyapunov(&problem, Some(&x), a.samples, seed)?
            }
            CheckName::StepIdentity => {
                let x = need_xstar(&problem)?;
                let config = SolverConfig::new(Algorithm::AccMdForward).with_timing(false);
                let alpha = solver::Solver::new(&problem, &config)?.alpha();
                let traj = solver::trajectory(&problem, &config, a.steps)?;
                let suite = LyapunovSuite::new(&problem, x)?.with_cross_sign(sign);
                certify::check_step_identity(&suite, &traj, StepKind::Forward { alpha })?
            }
            CheckName::PerturbedStepIdentity => {
                let x = need_xstar(&problem)?;
                let epsilon = a.epsilon.unwrap_or(problem.mu);
                let config = SolverConfig::new(Algorithm::PerturbedAccMd)
                    .with_epsilon(epsilon)
                    .with_timing(false);
                let alpha = solver::Solver::new(&problem, &config)?.alpha();
                let traj = solver::trajectory(&problem, &config, a.steps)?;
                let suite = LyapunovSuite::new(&problem, x)?.with_cross_sign(sign);
                certify::check_step_identity(&suite, &traj, StepKind::Perturbed { alpha, epsilon })?
            }
            CheckName::Gcs => {
                let sampling = match a.gcs_radius {
                    Some(radius) => GcsSampling::Ball {
                        center: need_xstar(&problem)?,
                        radius,
                    },
                    None => GcsSampling::Global,
                };
                certify::check_gcs(&problem, a.samples, seed, &sampling)?
            }
            CheckName::Rate => {
                let x = need_xstar(&problem)?;
                rate_check(&problem, &x)?
            }
        };
        log::info!("{}: passed = {}", report.name, report.passed);
        reports.push(report);
    }
    for (check, why) in &skipped {
        eprintln!(
            "skipped {}: {why}",
            check.to_possible_value().expect("named").get_name()
        );
    }
    for r in &reports {
        eprintln!(
            "{:<24} {}  max rel residual {:.3e} over {} samples",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.max_rel_residual,
            r.samples
        );
    }
    write_output(a.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &reports)?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
}

/// Forward Acc-MD must contract `Eᵅ` by `1/(1+α)` at every step.
fn rate_check(problem: &ProblemInstance, xstar: &Vector) -> Result<CheckReport> {
    let config = SolverConfig::new(Algorithm::AccMdForward).with_timing(false);
    let trace = solver::run(problem, &config, Some(xstar))?;
    let alpha = trace.alpha;
    let e: Vec<f64> = trace.records.iter().filter_map(|r| r.lyap_ealpha).collect();
    let floor = 1e-12 * e.first().copied().unwrap_or(0.0).abs();
    let mut violations = 0usize;
    let mut worst = 0f64;
    let mut pairs = 0usize;
    for w in e.windows(2) {
        if w[0].abs() <= floor {
            break;
        }
        pairs += 1;
        let excess = (w[1] - w[0] / (1.0 + alpha)) / w[0].abs();
        if excess > 1e-9 {
            violations += 1;
        }
        worst = worst.max(excess);
    }
    let fit = certify::fit_geometric(&e, 0.0, ..);
    let mut extra = std::collections::BTreeMap::new();
    extra.insert("alpha".into(), alpha);
    extra.insert("bound".into(), 1.0 / (1.0 + alpha));
    // Eᵅ(x₀, y₀)·√(C/μ), the constant of the O(√(C/μ)·log) iteration bound
    if let Some(&e0) = e.first() {
        extra.insert("c0".into(), e0 * (trace.gcs / problem.mu).sqrt());
    }
    if let Some(c) = fit.contraction {
        extra.insert("fitted_contraction".into(), c);
    }
    extra.insert("violations".into(), violations as f64);
    Ok(CheckReport {
        name: "rate".into(),
        samples: pairs,
        max_abs_residual: worst,
        max_rel_residual: worst.max(0.0),
        tolerance: 1e-9,
        passed: violations == 0 && fit.contraction.is_some_and(|c| c <= 1.0 / (1.0 + alpha) + 1e-9),
        extra,
    })
}

#[derive(Debug, Serialize)]
struct BenchRow {
    solver: String,
    status: &'static str,
    iterations: usize,
    iterations_to_target: Option<usize>,
    time_to_target_ms: Option<f64>,
    final_obj: f64,
    final_rel_error: f64,
    contraction: Option<f64>,
}

fn cmd_bench(a: BenchArgs) -> CliResult<i32> {
    if a.solvers.len() < 2 {
        return Err(Failure::Usage("bench needs at least two --solver values".into()));
    }
    let problem = build_problem(&a.problem)?;
    let configs = a
        .solvers
        .iter()
        .map(|s| build_config(s, &a.solver_opts))
        .collect::<CliResult<Vec<_>>>()?;
    let fstar = match &problem.known_minimizer {
        Some(x) => problem.total_value(x)?,
        None => certify::reference_minimizer(&problem, 200_000)?.value,
    };
    let scale = fstar.abs().max(1.0);
    let traces: Vec<Result<Trace>> = configs.par_iter().map(|c| solver::run(&problem, c, None)).collect();
    let mut rows = Vec::new();
    let mut failed = false;
    for (name, trace) in a.solvers.iter().zip(traces) {
        let trace = trace.map_err(usage)?;
        failed |= trace.aborted();
        let rel: Vec<f64> = trace.records.iter().map(|r| (r.obj - fstar) / scale).collect();
        let hit = trace
            .records
            .iter()
            .zip(&rel)
            .find(|(_, e)| **e <= a.target)
            .map(|(r, _)| r);
        let fit = certify::fit_geometric(&trace.objective_values(), fstar, ..);
        rows.push(BenchRow {
            solver: name.clone(),
            status: status_name(&trace.status),
            iterations: trace.iterations(),
            iterations_to_target: hit.map(|r| r.k),
            time_to_target_ms: hit.and_then(|r| r.time_ms),
            final_obj: trace.last().obj,
            final_rel_error: *rel.last().expect("nonempty"),
            contraction: fit.contraction,
        });
    }
    write_output(a.out.as_deref(), |w| {
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record([
            "solver",
            "status",
            "iterations",
            "iterations_to_target",
            "time_to_target_ms",
            "final_obj",
            "final_rel_error",
            "contraction",
        ])?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &rows {
            cw.write_record([
                r.solver.clone(),
                r.status.to_string(),
                r.iterations.to_string(),
                opt(r.iterations_to_target.map(|v| v.to_string())),
                opt(r.time_to_target_ms.map(|v| v.to_string())),
                r.final_obj.to_string(),
                r.final_rel_error.to_string(),
                opt(r.contraction.map(|v| v.to_string())),
            ])?;
        }
        cw.flush()?;
        Ok(())
    })?;
    if let Some(path) = &a.json_summary {
        #[derive(Serialize)]
        struct BenchSummary<'a> {
            problem: objective::ProblemMetadata,
            reference_value: f64,
            target: f64,
            rows: &'a [BenchRow],
        }
        write_json(
            path,
            &BenchSummary {
                problem: problem.metadata(),
                reference_value: fstar,
                target: a.target,
                rows: &rows,
            },
        )?;
    }
    if failed {
        return Err(Failure::Runtime("at least one solver aborted".into()));
    }
    Ok(0)
}

fn cmd_gen(a: GenArgs) -> CliResult<i32> {
    let problem = build_problem(&a.problem)?;
    std::fs::create_dir_all(&a.out).map_err(|e| io_context(e, &a.out))?;
    let mut files = Vec::new();
    for (name, data) in problem.objective.data() {
        let path = a.out.join(format!("{name}.csv"));
        match data {
            ObjectiveData::Matrix(m) => objective::write_matrix_csv(m, &path)?,
            ObjectiveData::Vector(v) => objective::write_vector_csv(v, &path)?,
        }
        files.push(format!("{name}.csv"));
    }
    if let Some(x) = &problem.known_minimizer {
        objective::write_vector_csv(x, &a.out.join("xstar.csv"))?;
        files.push("xstar.csv".into());
    }
    #[derive(Serialize)]
    struct GenMetadata {
        #[serde(flatten)]
        meta: objective::ProblemMetadata,
        files: Vec<String>,
    }
    write_json(
        &a.out.join("metadata.json"),
        &GenMetadata {
            meta: problem.metadata(),
            files,
        },
    )?;
    eprintln!("wrote {} to {}", problem.name, a.out.display());
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> CliResult<Cli> {
        let v: Vec<OsString> = args.iter().map(OsString::from).collect();
        parse_with_manifest(&v)
    }

    #[test]
    fn parses_run_flags() {
        let cli = parse(&[
            "accmd",
            "run",
            "--problem",
            "lasso",
            "--lambda",
            "0.1",
            "--solver",
            "homotopy",
        ])
        .ok()
        .unwrap();
        let Command::Run(a) = cli.command else { panic!() };
        assert_eq!(a.problem.problem, Family::Lasso);
        assert_eq!(a.problem.lambda, Some(0.1));
        assert_eq!(a.solver, "homotopy");
    }

    #[test]
    fn negative_g_entries_parse() {
        let cli = parse(&["accmd", "run", "--g", "-1,2.5"]).ok().unwrap();
        let Command::Run(a) = cli.command else { panic!() };
        assert_eq!(a.problem.g, Some(vec![-1.0, 2.5]));
    }

    #[test]
    fn manifest_fills_unset_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.json");
        std::fs::write(&m, r#"{"problem": "quartic", "dim": 12, "no-timing": true, "seed": 3}"#).unwrap();
        let cli = parse(&["accmd", "run", "--manifest", m.to_str().unwrap(), "--seed", "9"])
            .ok()
            .unwrap();
        let Command::Run(a) = cli.command else { panic!() };
        assert_eq!(a.problem.problem, Family::Quartic);
        assert_eq!(a.problem.dim, Some(12));
        assert_eq!(a.problem.seed, 9);
        assert!(a.solver_opts.no_timing);
    }

    #[test]
    fn manifest_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.json");
        std::fs::write(&m, r#"{"bogus": 1}"#).unwrap();
        assert!(matches!(
            parse(&["accmd", "run", "--manifest", m.to_str().unwrap()]),
            Err(Failure::Usage(_))
        ));
    }

    #[test]
    fn config_rejects_unknown_solver() {
        let s = SolverArgs::parse_from_defaults();
        assert!(matches!(build_config("nope", &s), Err(Failure::Usage(_))));
        assert!(build_config("md", &s).is_ok());
    }

    impl SolverArgs {
        fn parse_from_defaults() -> Self {
            let Command::Run(a) = parse(&["accmd", "run"]).ok().unwrap().command else {
                panic!()
            };
            a.solver_opts
        }
    }
}
