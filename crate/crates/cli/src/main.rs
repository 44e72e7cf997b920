//! `qmetric`: evaluate metrics, classify Kraus channels and run the
//! verification suites.
//!
//! Exit codes: 0 success, 1 property failure (invalid channel, failing
//! suite, demonstration without a gap), 2 input or validation error. Errors
//! are reported on stdout as `{"error": {"kind": …, "message": …}}`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qmetric::harness::{self, TrialConfig, SUITE_NAMES};
use qmetric::io::{self, JobCommand, JobDocument, MetricKind};
use qmetric::metrics::{CptniMetric, CptpMetricSpec, PetzMetric};
use qmetric::{CMat, Complex64, DensityLikeOperator, Error, KrausChannel, MonotoneFunctionSpec, TraceMode};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "qmetric",
    version,
    about = "Monotone metrics on unnormalized positive operators"
)]
struct Cli {
    /// Run a JSON job document instead of a subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    job: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate K_ρ(X, Y) and print "re im".
    Eval(EvalArgs),
    /// Classify a Kraus channel document as CPTP, CPTNI-strict or invalid.
    ValidateChannel(ChannelArgs),
    /// Run verification suites and print the reports as JSON.
    Verify(VerifyArgs),
    /// Show the CPTP metric's direct-sum gap.
    Demo(DemoArgs),
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Optional metric (cptni, petz, kumagai) followed by `rho=…`, `x=…`,
    /// `y=…` assignments; values are `diag(a,b,…)`, `Eij(n,i,j)` or paths.
    #[arg(value_name = "ARGS")]
    args: Vec<String>,
    #[arg(long)]
    metric: Option<String>,
    #[arg(long = "f", default_value = "sld")]
    f: String,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    /// Constant b of the kumagai metric.
    #[arg(long)]
    b: Option<f64>,
    /// Constant c of the petz metric.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, default_value = "bounded")]
    trace_mode: String,
    /// Also evaluate the superoperator and operator-mean paths.
    #[arg(long)]
    cross_check: bool,
}

#[derive(Args, Debug)]
struct ChannelArgs {
    /// Channel document.
    file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite names, or `all`.
    suites: Vec<String>,
    #[arg(long, env = "QMETRIC_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Dimension range such as `2-5`.
    #[arg(long)]
    dims: Option<String>,
    /// Comma-separated function names; defaults to the monotone catalog.
    #[arg(long = "f")]
    f: Option<String>,
    /// `b` of the CPTP metric in the non-additivity demonstration.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, default_value = "bounded")]
    trace_mode: String,
    /// Directory receiving failing-instance dumps.
    #[arg(long, default_value = "qmetric-failures")]
    dump_dir: PathBuf,
    #[arg(long, hide = true)]
    kernel_perturbation: Option<f64>,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[arg(long, default_value_t = 1.0)]
    b: f64,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn input(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::NonHermitian { .. } => "non-hermitian",
            Error::NumericalFailure(_) => "numerical-failure",
            Error::DomainViolation { .. } => "domain-violation",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::SingularBlock(_) => "singular-block",
            Error::NonConvergence(_) => "non-convergence",
            Error::NotStrictlyPositive { .. } => "not-strictly-positive",
            Error::TraceExceedsOne(_) => "trace-exceeds-one",
            Error::DimCapExceeded { .. } => "dim-cap-exceeded",
            Error::NotUnitTrace(_) => "not-unit-trace",
            Error::SpecViolation(_) => "spec-violation",
            Error::NotCptni(_) => "not-cptni",
            Error::DemoFailure(_) => "demo-failure",
            Error::UnknownFunction(_) => "unknown-function",
            Error::InvalidConfig(_) => "invalid-config",
            Error::InvalidDocument(_) => "invalid-document",
            Error::Json(_) => "json",
        };
        let code = if matches!(e, Error::DemoFailure(_)) { 1 } else { 2 };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

struct EvalRequest {
    metric: MetricKind,
    f: MonotoneFunctionSpec,
    rho: CMat,
    x: CMat,
    y: Option<CMat>,
    b: f64,
    c: f64,
    trace_mode: TraceMode,
    cross_check: bool,
}

fn parse_metric(s: &str) -> Result<MetricKind, Failure> {
    match s {
        "cptni" => Ok(MetricKind::Cptni),
        "petz" => Ok(MetricKind::Petz),
        "kumagai" => Ok(MetricKind::Kumagai),
        _ => Err(Failure::input("invalid-argument", format!("unknown metric `{s}`"))),
    }
}

impl EvalArgs {
    fn into_request(self) -> Result<EvalRequest, Failure> {
        let mut metric = self.metric.as_deref().map(parse_metric).transpose()?;
        let (mut rho, mut x, mut y) = (self.rho, self.x, self.y);
        for arg in self.args {
            match arg.split_once('=') {
                Some((k, v)) => {
                    let slot = match k.to_ascii_lowercase().as_str() {
                        "rho" | "ρ" => &mut rho,
                        "x" => &mut x,
                        "y" => &mut y,
                        _ => return Err(Failure::input("invalid-argument", format!("unknown input `{k}`"))),
                    };
                    *slot = Some(v.to_string());
                }
                None if metric.is_none() => metric = Some(parse_metric(&arg)?),
                None => {
                    return Err(Failure::input(
                        "invalid-argument",
                        format!("unexpected argument `{arg}`"),
                    ))
                }
            }
        }
        let need = |v: Option<String>, name: &str| {
            v.ok_or_else(|| Failure::input("missing-input", format!("`{name}` is required")))
        };
        let rho = io::parse_matrix_arg(&need(rho, "rho")?, None)?;
        let x = io::parse_matrix_arg(&need(x, "x")?, None)?;
        let y = y.map(|s| io::parse_matrix_arg(&s, None)).transpose()?;
        Ok(EvalRequest {
            metric: metric.unwrap_or_default(),
            f: self.f.parse()?,
            rho,
            x,
            y,
            b: self.b.unwrap_or(1.0),
            c: self.c.unwrap_or(0.0),
            trace_mode: self.trace_mode.parse()?,
            cross_check: self.cross_check,
        })
    }
}

/// Values within 1e-15 of zero print as `0.0`.
fn snap(v: f64) -> f64 {
    if v.abs() < 1e-15 {
        0.0
    } else {
        v
    }
}

fn run_eval(req: EvalRequest) -> Outcome {
    let rho = DensityLikeOperator::new(&req.rho, req.trace_mode)?;
    let y = req.y.as_ref().unwrap_or(&req.x);
    let value: Complex64 = match req.metric {
        MetricKind::Cptni => CptniMetric::new(req.f).eval(&rho, &req.x, y)?,
        MetricKind::Petz => PetzMetric::new(req.f, req.c)?.eval(&rho, &req.x, y)?,
        MetricKind::Kumagai => CptpMetricSpec::constant(req.f, req.b).eval(&rho, &req.x, y)?,
    };
    println!("{:?} {:?}", snap(value.re), snap(value.im));
    if req.cross_check {
        let metric = CptniMetric::new(req.f);
        let report = if req.y.is_none() {
            let cmp = metric.cross_check(&rho, &req.x)?;
            json!({
                "kernel": cmp.kernel,
                "superop": cmp.superop,
                "meanform": cmp.meanform,
                "max_relative_deviation": cmp.max_relative_deviation,
            })
        } else {
            let k = metric.eval(&rho, &req.x, y)?;
            let s = metric.eval_superop(&rho, &req.x, y)?;
            let dev = (k - s).norm() / k.norm().max(s.norm()).max(f64::MIN_POSITIVE);
            json!({
                "kernel": [k.re, k.im],
                "superop": [s.re, s.im],
                "max_relative_deviation": if k == s { 0.0 } else { dev },
            })
        };
        println!("{report}");
    }
    Ok(0)
}

fn run_validate(doc: &serde_json::Value) -> Outcome {
    let ch: KrausChannel = io::channel_from_value(doc)?;
    let class = ch.classification();
    let report = json!({
        "classification": class.to_string(),
        "in_dim": ch.in_dim(),
        "out_dim": ch.out_dim(),
        "completeness_defect": ch.completeness_defect(),
        "defect_min_eigenvalue": ch.defect_min_eigenvalue()?,
        "choi_min_eigenvalue": ch.choi_min_eigenvalue(),
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    Ok(if class == qmetric::Classification::Invalid {
        1
    } else {
        0
    })
}

fn read_json(path: &Path) -> Result<serde_json::Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input("io", format!("cannot read `{}`: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::from(Error::from(e)))
}

struct VerifyRequest {
    suites: Vec<String>,
    cfg: TrialConfig,
    dump_dir: PathBuf,
}

fn parse_f_names(list: &[String]) -> Result<Vec<MonotoneFunctionSpec>, Failure> {
    if list.is_empty() {
        return Ok(MonotoneFunctionSpec::monotone_catalog());
    }
    Ok(list
        .iter()
        .map(|s| s.trim().parse())
        .collect::<qmetric::Result<Vec<_>>>()?)
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    seed: Option<u64>,
    trials: Option<usize>,
    tol: Option<f64>,
    dims: Option<&str>,
    f_names: &[String],
    b: Option<f64>,
    trace_mode: TraceMode,
    kernel_perturbation: Option<f64>,
) -> Result<TrialConfig, Failure> {
    let mut cfg = TrialConfig::default();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(t) = tol {
        cfg.tol = t;
    }
    if let Some(d) = dims {
        (cfg.dim_min, cfg.dim_max) = io::parse_dims(d)?;
    }
    cfg.f_names = parse_f_names(f_names)?;
    if let Some(b) = b {
        cfg.demo_b = b;
    }
    cfg.trace_mode = trace_mode;
    cfg.kernel_perturbation = kernel_perturbation.unwrap_or(0.0);
    cfg.validate()?;
    Ok(cfg)
}

fn seed_from_env() -> Result<Option<u64>, Failure> {
    match std::env::var("QMETRIC_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::input("invalid-argument", format!("QMETRIC_SEED `{s}` is not an integer"))),
        Err(_) => Ok(None),
    }
}

fn expand_suites(names: &[String]) -> Result<Vec<String>, Failure> {
    if names.is_empty() || names.iter().any(|s| s == "all") {
        return Ok(SUITE_NAMES.iter().map(|s| s.to_string()).collect());
    }
    for n in names {
        if !SUITE_NAMES.contains(&n.as_str()) {
            return Err(Failure::input(
                "invalid-argument",
                format!("unknown suite `{n}`; expected one of {} or all", SUITE_NAMES.join(", ")),
            ));
        }
    }
    Ok(names.to_vec())
}

fn write_dumps(dir: &Path, reports: &[qmetric::Report]) -> Result<Vec<String>, Failure> {
    let mut paths = Vec::new();
    for r in reports {
        for d in &r.failures {
            if paths.is_empty() {
                std::fs::create_dir_all(dir)
                    .map_err(|e| Failure::input("io", format!("cannot create `{}`: {e}", dir.display())))?;
            }
            let name = format!("{}-{}.json", d.suite.replace('/', "_"), d.trial);
            let path = dir.join(name);
            let text = serde_json::to_string_pretty(d).map_err(Error::from)?;
            std::fs::write(&path, text)
                .map_err(|e| Failure::input("io", format!("cannot write `{}`: {e}", path.display())))?;
            paths.push(path.display().to_string());
        }
    }
    Ok(paths)
}

fn run_verify(req: VerifyRequest) -> Outcome {
    let start = Instant::now();
    let reports = req
        .suites
        .iter()
        .map(|s| harness::run_suite(s, &req.cfg))
        .collect::<qmetric::Result<Vec<_>>>()?;
    let passed = harness::all_passed(&reports);
    let dumps = write_dumps(&req.dump_dir, &reports)?;
    let out = json!({
        "passed": passed,
        "report_hash": harness::report_hash(&reports),
        "config": req.cfg,
        "reports": reports,
        "dumps": dumps,
        "elapsed_seconds": start.elapsed().as_secs_f64(),
    });
    println!("{}", serde_json::to_string_pretty(&out).map_err(Error::from)?);
    Ok(if passed { 0 } else { 1 })
}

fn run_demo(b: f64) -> Outcome {
    let o = harness::demo_cptp_non_additivity(b)?;
    println!("{}", serde_json::to_string_pretty(&o).map_err(Error::from)?);
    Ok(0)
}

fn run_job(path: &Path) -> Outcome {
    let value = read_json(path)?;
    let job: JobDocument = serde_json::from_value(value).map_err(Error::from)?;
    let base = path.parent();
    match job.command {
        JobCommand::Eval => {
            let get = |k: &str| {
                job.inputs
                    .get(k)
                    .map(|m| m.resolve(base))
                    .transpose()
                    .map_err(Failure::from)
            };
            let missing = |k: &str| Failure::input("missing-input", format!("job input `{k}` is required"));
            run_eval(EvalRequest {
                metric: job.metric.unwrap_or_default(),
                f: job.f_name.as_deref().unwrap_or("sld").parse()?,
                rho: get("rho")?.ok_or_else(|| missing("rho"))?,
                x: get("x")?.ok_or_else(|| missing("x"))?,
                y: get("y")?,
                b: job.b.unwrap_or(1.0),
                c: job.c.unwrap_or(0.0),
                trace_mode: job.trace_mode.unwrap_or_default(),
                cross_check: job.cross_check,
            })
        }
        JobCommand::ValidateChannel => {
            let doc = match &job.channel {
                Some(serde_json::Value::String(p)) => {
                    let p = Path::new(p);
                    read_json(&base.map(|b| b.join(p)).unwrap_or_else(|| p.to_path_buf()))?
                }
                Some(v) => v.clone(),
                None => return Err(Failure::input("missing-input", "job has no channel")),
            };
            run_validate(&doc)
        }
        JobCommand::Verify => {
            let seed = match job.seed {
                Some(s) => Some(s),
                None => seed_from_env()?,
            };
            let cfg = build_config(
                seed,
                job.trials,
                job.tol,
                job.dims.as_deref(),
                &job.f_names,
                job.b,
                job.trace_mode.unwrap_or_default(),
                None,
            )?;
            run_verify(VerifyRequest {
                suites: expand_suites(&job.suites)?,
                cfg,
                dump_dir: PathBuf::from("qmetric-failures"),
            })
        }
        JobCommand::Demo => run_demo(job.b.unwrap_or(1.0)),
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(job) = &cli.job {
        return run_job(job);
    }
    match cli.command {
        None => Err(Failure::input("missing-command", "expected a subcommand or --job")),
        Some(Command::Eval(a)) => run_eval(a.into_request()?),
        Some(Command::ValidateChannel(a)) => {
            let file = a
                .file
                .ok_or_else(|| Failure::input("missing-input", "channel document path is required"))?;
            run_validate(&read_json(&file)?)
        }
        Some(Command::Verify(a)) => {
            let f_names: Vec<String> =
                a.f.as_deref()
                    .map(|s| s.split(',').map(str::to_string).collect())
                    .unwrap_or_default();
            let cfg = build_config(
                a.seed,
                a.trials,
                a.tol,
                a.dims.as_deref(),
                &f_names,
                a.b,
                a.trace_mode.parse()?,
                a.kernel_perturbation,
            )?;
            run_verify(VerifyRequest {
                suites: expand_suites(&a.suites)?,
                cfg,
                dump_dir: a.dump_dir,
            })
        }
        Some(Command::Demo(a)) => run_demo(a.b),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let msg = e.to_string();
            println!("{}", json!({"error": {"kind": "usage", "message": msg.trim()}}));
            return ExitCode::from(2);
        }
        Err(e) => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            println!("{}", json!({"error": {"kind": f.kind, "message": f.message}}));
            ExitCode::from(f.code)
        }
    }
}
