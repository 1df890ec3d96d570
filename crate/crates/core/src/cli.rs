//! Command-line front end.
//!
//! Settings come from three layers: built-in defaults, a flat `key=value`
//! config file (`--config`, `#` starts a comment), and command-line flags.
//! Later layers win. Keys that are not recognised are rejected. The fully
//! resolved set is written to `manifest.txt` next to the outputs.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::Parser;

use crate::error::Error;
use crate::estimator::{self, CvPlan, EstimatorKind, EstimatorSpec, Scoring, Trim};
use crate::io::{self, fmt_f64, Layout};
use crate::linalg::SymmetricPd;
use crate::model::Dataset;
use crate::sim::{self, FlipRule, LambdaGrid, MethodSpec, MixtureVariant, Scenario};
use crate::solver::{FitResult, SolverConfig};
use crate::{exec, theory};

#[derive(Parser, Debug)]
#[command(name = "trimest", version, about = "Trimmed regularized M-estimators")]
pub struct Args {
    /// One of fit, cv, simulate, bench, theory.
    #[arg(long)]
    pub command: Option<String>,
    #[arg(long)]
    pub input: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    /// Number of samples kept.
    #[arg(long)]
    pub h: Option<String>,
    /// Fraction of samples trimmed.
    #[arg(long = "trim-frac")]
    pub trim_frac: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    pub threads: Option<String>,
    /// Any other setting, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Numerical(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NotPositiveDefinite | Error::LineSearchFailed(_) | Error::NonPositiveCurvature(_) => {
                Self::Numerical(e.to_string())
            }
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Usage(format!("i/o error: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

const KNOWN_KEYS: &[&str] = &[
    "command", "input", "output", "estimator", "lambda", "h", "trim_frac", "seed", "threads",
    "radius", "start", "max_iter", "tol_rel_obj", "tol_grad_map", "weight_stable_iters",
    "scenario", "n", "p", "q", "rank", "k", "contamination", "variant", "flip", "hubs",
    "ar_rho", "outlier_shift", "noise_sd", "reps",
    "lambdas", "lambda_ratio", "lambda_len", "lambda_rel",
    "h_grid", "folds", "scoring",
    "tau", "trials", "b", "fxb", "c", "c_prime", "c_dprime", "kappa", "psi", "tau2",
];

/// Resolved key/value settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Usage(format!("unknown key `{key}`")));
        }
        self.map.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    fn set_default(&mut self, key: &str, value: &str) {
        self.map.entry(key.to_string()).or_insert_with(|| value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("cannot parse `{key}` value `{v}`"))),
        }
    }

    fn req<T: FromStr>(&self, key: &str) -> CliResult<T> {
        self.get(key)?.ok_or_else(|| CliError::Usage(format!("missing required key `{key}`")))
    }

    fn list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| CliError::Usage(format!("cannot parse `{key}` entry `{s}`"))))
                .collect::<CliResult<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn lines(&self) -> String {
        self.map.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Parses a flat `key=value` config file.
pub fn parse_config(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let k = k.trim();
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(CliError::Usage(format!("config line {}: duplicate key `{k}`", i + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn command_defaults(s: &mut Settings, command: &str) {
    s.set_default("seed", "0");
    s.set_default("threads", "0");
    let solver = SolverConfig::default();
    s.set_default("max_iter", &solver.max_iter.to_string());
    s.set_default("tol_rel_obj", &format!("{:e}", solver.tol_rel_obj));
    s.set_default("tol_grad_map", &format!("{:e}", solver.tol_grad_map));
    s.set_default("weight_stable_iters", &solver.weight_stable_iters.to_string());
    match command {
        "cv" => {
            s.set_default("folds", "5");
            s.set_default("lambda_ratio", "0.01");
            s.set_default("lambda_len", "10");
        }
        "simulate" => {
            s.set_default("reps", "20");
            s.set_default("lambda_ratio", "0.01");
            s.set_default("lambda_len", "10");
        }
        "bench" => {
            s.set_default("scenario", "tracenorm");
            s.set_default("n", "50");
            s.set_default("p", "300");
            s.set_default("q", "10");
            s.set_default("reps", "1");
            s.set_default("lambda_rel", "0.1");
        }
        "theory" => {
            s.set_default("p", "20");
            s.set_default("n", "2000");
            s.set_default("b", "0");
            s.set_default("tau", "3");
            s.set_default("fxb", "0");
            s.set_default("c", "1");
            s.set_default("c_prime", "1");
            s.set_default("c_dprime", "0.5");
            s.set_default("trials", "1000");
        }
        _ => {}
    }
}

/// Merges defaults, config file and flags.
pub fn resolve(args: &Args) -> CliResult<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (k, v) in parse_config(&text)? {
            s.set(&k, &v)?;
        }
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        s.set(k.trim(), v)?;
    }
    let flags = [
        ("command", &args.command),
        ("input", &args.input),
        ("output", &args.output),
        ("estimator", &args.estimator),
        ("lambda", &args.lambda),
        ("h", &args.h),
        ("trim_frac", &args.trim_frac),
        ("seed", &args.seed),
        ("threads", &args.threads),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, v)?;
        }
    }
    let command = s.raw("command").ok_or_else(|| CliError::Usage("missing --command".into()))?.to_string();
    command_defaults(&mut s, &command);
    Ok(s)
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match resolve(&args).and_then(|s| run(&s)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn run(s: &Settings) -> CliResult<()> {
    let threads: usize = s.req("threads")?;
    let command = s.raw("command").unwrap_or_default().to_string();
    exec::with_threads(threads, || match command.as_str() {
        "fit" => cmd_fit(s),
        "cv" => cmd_cv(s),
        "simulate" => cmd_simulate(s),
        "bench" => cmd_bench(s),
        "theory" => cmd_theory(s),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    })
}

/// Estimator name plus whether it is an untrimmed alias.
fn parse_estimator(name: &str) -> CliResult<(EstimatorKind, bool)> {
    let alias = match name {
        "lasso" => Some(EstimatorKind::SparseLts),
        "logistic_lasso" => Some(EstimatorKind::TrimmedLogistic),
        "glasso" => Some(EstimatorKind::TrimmedGlasso),
        "tracenorm" => Some(EstimatorKind::TracenormLts),
        _ => None,
    };
    match alias {
        Some(k) => Ok((k, true)),
        None => Ok((name.parse()?, false)),
    }
}

fn layout_for(kind: EstimatorKind) -> Layout {
    match kind {
        EstimatorKind::SparseLts | EstimatorKind::TrimmedLogistic => Layout::Regression,
        EstimatorKind::TrimmedGlasso => Layout::Ggm,
        EstimatorKind::TracenormLts => Layout::MultiResponse,
    }
}

fn solver_config(s: &Settings) -> CliResult<SolverConfig> {
    let cfg = SolverConfig {
        max_iter: s.req("max_iter")?,
        tol_rel_obj: s.req("tol_rel_obj")?,
        tol_grad_map: s.req("tol_grad_map")?,
        weight_stable_iters: s.req("weight_stable_iters")?,
        seed: s.req("seed")?,
        ..SolverConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn trim_setting(s: &Settings, untrimmed_alias: bool) -> CliResult<Option<Trim>> {
    let h: Option<usize> = s.get("h")?;
    let frac: Option<f64> = s.get("trim_frac")?;
    let trim = match (h, frac) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either h or trim_frac, not both".into())),
        (Some(h), None) => Some(Trim::Count(h)),
        (None, Some(f)) => Some(Trim::Fraction(f)),
        (None, None) => None,
    };
    if untrimmed_alias && trim.is_some() {
        return Err(CliError::Usage("untrimmed estimators take no h or trim_frac".into()));
    }
    Ok(trim)
}

fn estimator_spec(s: &Settings, kind: EstimatorKind, lambda: f64, trim: Option<Trim>) -> CliResult<EstimatorSpec> {
    let mut spec = EstimatorSpec::new(kind, lambda).with_solver(solver_config(s)?);
    if let Some(t) = trim {
        spec = spec.with_trim(t);
    }
    if let Some(r) = s.get::<f64>("radius")? {
        spec.radius = r;
    }
    if let Some(v) = s.raw("start") {
        spec.start = v.parse()?;
    }
    spec.regularizer()?;
    Ok(spec)
}

fn read_input(s: &Settings, layout: Layout) -> CliResult<Dataset> {
    let path: String = s.req("input")?;
    let file = File::open(&path).map_err(|e| CliError::Usage(format!("cannot open {path}: {e}")))?;
    io::read_dataset(file, layout).map_err(|e| CliError::Usage(format!("{path}: {e}")))
}

fn output_dir(s: &Settings) -> CliResult<PathBuf> {
    let out: String = s.req("output")?;
    let dir = PathBuf::from(out);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_manifest(dir: &Path, s: &Settings, extra: &[(String, String)]) -> CliResult<()> {
    let mut w = create(dir, "manifest.txt")?;
    w.write_all(s.lines().as_bytes())?;
    for (k, v) in extra {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_timing(dir: &Path, entries: &[(String, f64)]) -> CliResult<()> {
    let mut w = create(dir, "timing.txt")?;
    for (k, v) in entries {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()?;
    Ok(())
}

fn fit_summary(fit: &FitResult, h: usize, n: usize) -> Vec<(String, String)> {
    let trace = &fit.objective_trace;
    vec![
        ("resolved_h".into(), h.to_string()),
        ("resolved_n".into(), n.to_string()),
        ("objective_initial".into(), fmt_f64(trace.first().copied().unwrap_or(f64::NAN))),
        ("objective_final".into(), fmt_f64(fit.objective())),
        ("objective_trace_len".into(), trace.len().to_string()),
        ("iterations".into(), fit.iterations.to_string()),
        ("converged".into(), fit.converged.to_string()),
        ("degenerate".into(), fit.degenerate.to_string()),
        (
            "weight_stabilized_at".into(),
            fit.weight_stabilized_at.map_or("none".into(), |v| v.to_string()),
        ),
        ("ls_backtracks".into(), fit.ls_backtracks.to_string()),
        ("pd_rejections".into(), fit.pd_rejections.to_string()),
        ("residual".into(), fmt_f64(fit.residual)),
    ]
}

fn cmd_fit(s: &Settings) -> CliResult<()> {
    let (kind, alias) = parse_estimator(&s.req::<String>("estimator")?)?;
    let lambda: f64 = s.req("lambda")?;
    let trim = trim_setting(s, alias)?;
    s.req::<String>("output")?;
    let data = read_input(s, layout_for(kind))?;
    let spec = estimator_spec(s, kind, lambda, trim)?;
    let h = spec.trim.resolve(data.n())?;

    let start = Instant::now();
    let fit = estimator::fit(&spec, &data)?;
    let seconds = start.elapsed().as_secs_f64();
    if !fit.converged {
        return Err(CliError::Numerical(format!(
            "solver did not converge within {} iterations (residual {:e})",
            fit.iterations, fit.residual
        )));
    }
    let losses = spec.model(&data)?.evaluate(&fit.theta)?.losses;

    let dir = output_dir(s)?;
    let mut w = create(&dir, "estimate.csv")?;
    io::write_matrix(fit.theta.values(), &mut w)?;
    w.flush()?;
    let mut w = create(&dir, "weights.csv")?;
    writeln!(w, "sample_index,included,loss")?;
    for (i, l) in losses.iter().enumerate() {
        writeln!(w, "{i},{},{}", fit.weights.is_included(i) as u8, fmt_f64(*l))?;
    }
    w.flush()?;
    write_manifest(&dir, s, &fit_summary(&fit, h, data.n()))?;
    write_timing(&dir, &[("fit_seconds".into(), seconds)])
}

fn lambda_grid(s: &Settings) -> CliResult<LambdaGrid> {
    if let Some(v) = s.list::<f64>("lambdas")? {
        return Ok(LambdaGrid::Fixed(v));
    }
    if let Some(l) = s.get::<f64>("lambda")? {
        return Ok(LambdaGrid::Fixed(vec![l]));
    }
    Ok(LambdaGrid::Relative {
        ratio: s.req("lambda_ratio")?,
        len: s.req("lambda_len")?,
    })
}

fn cmd_cv(s: &Settings) -> CliResult<()> {
    let (kind, alias) = parse_estimator(&s.req::<String>("estimator")?)?;
    let trim = trim_setting(s, alias)?;
    s.req::<String>("output")?;
    let data = read_input(s, layout_for(kind))?;
    let n = data.n();
    let template = estimator_spec(s, kind, 0.0, trim)?;
    let lambda_grid = match lambda_grid(s)? {
        LambdaGrid::Fixed(v) => v,
        LambdaGrid::Relative { ratio, len } => estimator::log_grid(estimator::lambda_max(kind, &data)?, ratio, len),
    };
    let h_grid = match s.list::<usize>("h_grid")? {
        Some(v) if alias => return Err(CliError::Usage(format!("untrimmed estimators take no h_grid, got {v:?}"))),
        Some(v) => v,
        None => vec![template.trim.resolve(n)?],
    };
    let scoring = match s.get::<String>("scoring")? {
        Some(v) => Scoring::from_str(&v)?,
        None => match kind {
            EstimatorKind::SparseLts | EstimatorKind::TracenormLts => Scoring::TrimmedMse,
            EstimatorKind::TrimmedLogistic => Scoring::Deviance,
            EstimatorKind::TrimmedGlasso => Scoring::HeldoutLoglik,
        },
    };
    let plan = CvPlan {
        lambda_grid,
        h_grid,
        folds: s.req("folds")?,
        scoring,
        seed: s.req("seed")?,
    };
    let start = Instant::now();
    let out = estimator::cross_validate(&template, &plan, &data)?;
    let seconds = start.elapsed().as_secs_f64();

    let dir = output_dir(s)?;
    let mut w = create(&dir, "cv.csv")?;
    let fold_cols: Vec<String> = (1..=plan.folds).map(|f| format!("fold{f}")).collect();
    writeln!(w, "lambda,h,score,{}", fold_cols.join(","))?;
    for c in &out.table {
        let folds: Vec<String> = c.fold_scores.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{},{},{},{}", fmt_f64(c.lambda), c.h, fmt_f64(c.score), folds.join(","))?;
    }
    w.flush()?;
    let extra = vec![
        ("best_lambda".to_string(), fmt_f64(out.best_lambda)),
        ("best_h".to_string(), out.best_h.to_string()),
    ];
    write_manifest(&dir, s, &extra)?;
    write_timing(&dir, &[("cv_seconds".into(), seconds)])
}

/// Scenario, the estimator it is paired with, and the default trimming.
fn scenario_from(s: &Settings) -> CliResult<(Scenario, EstimatorKind, f64)> {
    let name: String = s.req("scenario")?;
    let get_or = |k: &str, d: f64| -> CliResult<f64> { Ok(s.get(k)?.unwrap_or(d)) };
    let getu_or = |k: &str, d: usize| -> CliResult<usize> { Ok(s.get(k)?.unwrap_or(d)) };
    let out = match name.as_str() {
        "logistic_flip" => {
            let flip = match s.raw("flip").unwrap_or("tenth") {
                "tenth" => FlipRule::Tenth,
                "sqrt_n" => FlipRule::SqrtN,
                other => return Err(CliError::Usage(format!("unknown flip rule `{other}`"))),
            };
            let sc = Scenario::LogisticFlip {
                n: getu_or("n", 200)?,
                p: getu_or("p", 60)?,
                k: s.get("k")?,
                flip,
            };
            (sc, EstimatorKind::TrimmedLogistic, 0.1)
        }
        "tracenorm" => {
            let c = get_or("contamination", 0.1)?;
            let sc = Scenario::tracenorm(getu_or("n", 50)?, getu_or("p", 60)?, getu_or("q", 5)?, getu_or("rank", 3)?, c);
            (sc, EstimatorKind::TracenormLts, c)
        }
        "ggm_mixture" => {
            let variant = MixtureVariant::from_str(s.raw("variant").unwrap_or("M1"))?;
            let p_o = get_or("contamination", 0.1)?;
            let sc = Scenario::GgmMixture {
                n: getu_or("n", 100)?,
                p: getu_or("p", 50)?,
                p_o,
                variant,
                hubs: getu_or("hubs", 9)?,
            };
            (sc, EstimatorKind::TrimmedGlasso, p_o)
        }
        "linear" => {
            let c = get_or("contamination", 0.1)?;
            let sc = Scenario::LinearGeneric {
                n: getu_or("n", 200)?,
                p: getu_or("p", 100)?,
                k: getu_or("k", 5)?,
                ar_rho: get_or("ar_rho", 0.5)?,
                contamination: c,
                outlier_shift: get_or("outlier_shift", 10.0)?,
                noise_sd: get_or("noise_sd", 1.0)?,
            };
            (sc, EstimatorKind::SparseLts, c)
        }
        other => return Err(CliError::Usage(format!("unknown scenario `{other}`"))),
    };
    out.0.validate()?;
    Ok(out)
}

fn cmd_simulate(s: &Settings) -> CliResult<()> {
    let (scenario, kind, default_frac) = scenario_from(s)?;
    let reps: usize = s.req("reps")?;
    if reps < 1 {
        return Err(CliError::Usage("reps must be at least 1".into()));
    }
    s.req::<String>("output")?;
    let trim = trim_setting(s, false)?.unwrap_or(Trim::Fraction(default_frac));
    let lambdas = lambda_grid(s)?;
    let methods = vec![
        MethodSpec {
            name: "trimmed".into(),
            template: estimator_spec(s, kind, 0.0, Some(trim))?,
            lambdas: lambdas.clone(),
        },
        MethodSpec {
            name: "untrimmed".into(),
            template: estimator_spec(s, kind, 0.0, None)?,
            lambdas,
        },
    ];
    let report = sim::run_experiment(&scenario, s.req("seed")?, &methods, reps)?;

    let dir = output_dir(s)?;
    let mut w = create(&dir, "simulate_rows.csv")?;
    sim::write_rows_csv(&report, &mut w)?;
    w.flush()?;
    let mut w = create(&dir, "simulate_summary.csv")?;
    sim::write_summary_csv(&report, &mut w)?;
    w.flush()?;
    let mut w = create(&dir, "simulate_auc.csv")?;
    writeln!(w, "method,replication,auc")?;
    for m in &report.methods {
        for (r, a) in m.per_replication_auc.iter().enumerate() {
            writeln!(w, "{},{r},{}", m.name, fmt_f64(*a))?;
        }
    }
    w.flush()?;
    let mut w = create(&dir, "timing.csv")?;
    sim::write_timing_csv(&report, &mut w)?;
    w.flush()?;
    let mut extra = vec![("estimator".to_string(), kind.name().to_string())];
    for m in &report.methods {
        extra.push((format!("{}_mean_auc", m.name), fmt_f64(m.mean_auc)));
        let (idx, l2) = m.best_l2();
        extra.push((format!("{}_best_lambda_index", m.name), idx.to_string()));
        extra.push((format!("{}_best_mean_l2_error", m.name), fmt_f64(l2)));
    }
    write_manifest(&dir, s, &extra)
}

fn cmd_bench(s: &Settings) -> CliResult<()> {
    let (scenario, kind, default_frac) = scenario_from(s)?;
    let reps: usize = s.req("reps")?;
    if reps < 1 {
        return Err(CliError::Usage("reps must be at least 1".into()));
    }
    s.req::<String>("output")?;
    let trim = trim_setting(s, false)?.unwrap_or(Trim::Fraction(default_frac));
    let seed: u64 = s.req("seed")?;
    let template = estimator_spec(s, kind, 0.0, Some(trim))?;

    let dir = output_dir(s)?;
    let mut w = create(&dir, "bench.csv")?;
    writeln!(w, "replication,solver,lambda,h,iterations,converged,objective,objective_gap,wall_seconds")?;
    for rep in 0..reps {
        let g = sim::generate(&scenario, sim::rng::derive_seed(seed, rep as u64))?;
        let lambda = match s.get::<f64>("lambda")? {
            Some(l) => l,
            None => s.req::<f64>("lambda_rel")? * estimator::lambda_max(kind, &g.data)?,
        };
        let spec = template.clone().with_lambda(lambda);
        let h = spec.trim.resolve(g.data.n())?;
        let t0 = Instant::now();
        let partial = estimator::fit(&spec, &g.data)?;
        let t_partial = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let alternate = estimator::fit_alternate(&spec, &g.data, &spec.solver)?;
        let t_alt = t0.elapsed().as_secs_f64();
        let gap = (partial.objective() - alternate.objective()).abs();
        for (name, f, t) in [("partial_min", &partial, t_partial), ("alternate_min", &alternate, t_alt)] {
            writeln!(
                w,
                "{rep},{name},{},{h},{},{},{},{},{}",
                fmt_f64(lambda),
                f.iterations,
                f.converged,
                fmt_f64(f.objective()),
                fmt_f64(gap),
                t
            )?;
        }
    }
    w.flush()?;
    write_manifest(&dir, s, &[("estimator".into(), kind.name().into())])
}

fn cmd_theory(s: &Settings) -> CliResult<()> {
    let p: usize = s.req("p")?;
    let n: usize = s.req("n")?;
    let h: usize = s.get("h")?.unwrap_or(n);
    let b: usize = s.req("b")?;
    let tau: f64 = s.req("tau")?;
    let fxb: f64 = s.req("fxb")?;
    let trials: usize = s.req("trials")?;
    let seed: u64 = s.req("seed")?;
    if !(tau > 2.0) {
        return Err(Error::InvalidTau(tau).into());
    }
    let sigma = match s.raw("input") {
        Some(path) => {
            let f = File::open(path).map_err(|e| CliError::Usage(format!("cannot open {path}: {e}")))?;
            let m = io::read_matrix(f).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
            SymmetricPd::new(m)?
        }
        None => SymmetricPd::identity(p),
    };
    if sigma.dim() != p {
        return Err(CliError::Usage(format!("covariance is {}×{0} but p={p}", sigma.dim())));
    }
    let k: usize = s.get("k")?.unwrap_or(((p as f64).sqrt().round() as usize).max(1));
    let c: f64 = s.req("c")?;
    let mut rows: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: String| rows.push((k.to_string(), v));

    push("ggm_lambda", fmt_f64(theory::ggm_lambda(&sigma, h, b, p, fxb, tau)?));
    push("lts_lambda", fmt_f64(theory::lts_lambda(h, p, c)));
    let (l2, l1) = theory::lts_bounds(s.req("c_prime")?, s.req("c_dprime")?, k, b, h, p);
    push("lts_l2_bound", fmt_f64(l2));
    push("lts_l1_bound", fmt_f64(l1));
    if let Some(kappa) = s.get::<f64>("kappa")? {
        let bound = theory::ggm_frobenius_bound(c, k, p, n, fxb, b, kappa)?;
        push("ggm_frobenius_bound", fmt_f64(bound));
        let tp = theory::TheoryParams {
            kappa_l: kappa,
            tau1: 0.0,
            tau2: s.get("tau2")?.unwrap_or(0.0),
            tau3: 0.0,
            psi: s.get("psi")?.unwrap_or((k as f64).sqrt()),
            alpha: 1.0,
            fxb,
            k,
            rho: f64::INFINITY,
            lambda: s.get("lambda")?.unwrap_or(theory::lts_lambda(h, p, c)),
            h,
            n,
            p,
            b_size: b,
        };
        let (e2, er) = theory::error_bounds(&tp)?;
        push("general_l2_bound", fmt_f64(e2));
        push("general_reg_bound", fmt_f64(er));
    }
    let rsc = theory::rsc_sweep(p.min(10), trials, seed)?;
    push("rsc_draws", rsc.draws.to_string());
    push("rsc_passes", rsc.passes.to_string());
    push("rsc_min_margin", fmt_f64(rsc.min_margin));
    let sc = theory::check_samplecov_concentration(&sigma, n, tau, trials, seed)?;
    push("samplecov_bound", fmt_f64(sc.bound));
    push("samplecov_violation_rate", fmt_f64(sc.violation_rate));
    push("samplecov_allowed_rate", fmt_f64(sc.allowed_rate));
    push("samplecov_mc_se", fmt_f64(sc.mc_standard_error));
    push("samplecov_passes", sc.passes().to_string());

    let mut table = String::from("quantity,value\n");
    for (k, v) in &rows {
        table.push_str(&format!("{k},{v}\n"));
    }
    print!("{table}");
    if s.raw("output").is_some() {
        let dir = output_dir(s)?;
        fs::write(dir.join("theory.csv"), &table)?;
        write_manifest(&dir, s, &[])?;
    }
    Ok(())
}
