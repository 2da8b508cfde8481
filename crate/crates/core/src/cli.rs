//! Command-line front end. Every subcommand prints one JSON object per line.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or
//! configuration error, 3 oracle or budget error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::builddt::{build_dt, call_bound, learn_with_plan, leaf_sample_count, BuildParams, LearnPlan, ThresholdMode};
use crate::cube::{Restriction, Subcube};
use crate::dense::{dense_to_tree, DensePmf};
use crate::error::{Error, Result};
use crate::influence::{
    exact_influence, infest_high_accuracy, monotone_bias_estimate, oracle_influence, InfluenceKind, InfluenceOracle,
};
use crate::json;
use crate::lift::{end_to_end, weighted_error, LearnerSpec, LiftPlan};
use crate::oracle::{AccessMode, DistOracle};
use crate::seed;
use crate::tree::DistTree;
use crate::testbed::{
    brute_optimal_tree, check_inequalities, gen_dt_dist, gen_monotone_dist, gen_target, CheckRecord, Instance,
    TargetClass, TruthTable,
};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_250_101;

/// Largest dimension for commands that build dense tables.
pub const DENSE_MAX_DIM: usize = 20;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "DTDIST_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "dtdist", version, about = "Learn decision-tree distributions and lift uniform learners")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance: tree, dense table and optional target.
    Gen(GenArgs),
    /// Learn a tree distribution from oracle access.
    LearnDist(LearnArgs),
    /// Estimate one distributional influence.
    EstimateInfluence(InfluenceArgs),
    /// Run the full lifting pipeline.
    Lift(LiftArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

/// Options shared by every subcommand.
#[derive(Clone, Debug, Args)]
pub struct RunConfig {
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Split threshold; defaults to eps/(8 depth²).
    #[arg(long)]
    pub tau: Option<f64>,
    /// A number, or `random` for a clock-derived seed.
    #[arg(long, default_value_t = SeedArg(DEFAULT_SEED), value_parser = parse_seed)]
    pub seed: SeedArg,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    /// Directory receiving artifacts and `results.jsonl`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; `DTDIST_WORKERS` overrides the default.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedArg(pub u64);

impl std::fmt::Display for SeedArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn parse_seed(s: &str) -> std::result::Result<SeedArg, String> {
    if s == "random" {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_err(|e| e.to_string())?
            .as_nanos();
        return Ok(SeedArg(seed::mix64(nanos as u64)));
    }
    s.parse().map(SeedArg).map_err(|_| format!("seed must be an integer or `random`, got `{s}`"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    Exact,
    Monotone,
    Subcube,
}

impl OracleArg {
    pub fn kind(self) -> InfluenceKind {
        match self {
            OracleArg::Exact => InfluenceKind::Exact,
            OracleArg::Monotone => InfluenceKind::MonotoneBias,
            OracleArg::Subcube => InfluenceKind::SubcubeInfest,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub config: RunConfig,
    /// Generate a monotone distribution.
    #[arg(long)]
    pub monotone: bool,
    /// Also generate a target, e.g. `depth:2`, `junta:3`, `degree:2`.
    #[arg(long)]
    pub target_class: Option<String>,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[command(flatten)]
    pub config: RunConfig,
    #[arg(long, value_enum, default_value_t = OracleArg::Exact)]
    pub oracle: OracleArg,
    /// Tree JSON to learn; generated per trial when absent.
    #[arg(long)]
    pub dist: Option<PathBuf>,
    /// Generate monotone instances (implied by `--oracle monotone`).
    #[arg(long)]
    pub monotone: bool,
    /// Per-estimate accuracy; defaults to min(tau/4, eps/n).
    #[arg(long)]
    pub accuracy: Option<f64>,
    /// Per-estimate failure probability.
    #[arg(long)]
    pub confidence: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InfluenceArgs {
    #[command(flatten)]
    pub config: RunConfig,
    #[arg(long, value_enum, default_value_t = OracleArg::Exact)]
    pub oracle: OracleArg,
    #[arg(long)]
    pub dist: Option<PathBuf>,
    #[arg(long)]
    pub monotone: bool,
    #[arg(long, default_value_t = 0)]
    pub coord: usize,
    /// Restriction such as `0=+1,3=-1`.
    #[arg(long, default_value = "")]
    pub restriction: String,
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    #[command(flatten)]
    pub config: RunConfig,
    #[arg(long, value_enum, default_value_t = OracleArg::Monotone)]
    pub oracle: OracleArg,
    /// `lowdeg:k`, `tree:k` or `majority`.
    #[arg(long, default_value = "tree:2")]
    pub learner: String,
    #[arg(long)]
    pub dist: Option<PathBuf>,
    /// Truth-table JSON of the target; generated when absent.
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, default_value = "depth:2")]
    pub target_class: String,
    /// TV target for the distribution stage; defaults to eps/(3m).
    #[arg(long)]
    pub dist_eps: Option<f64>,
    /// Per-estimate accuracy of the distribution stage.
    #[arg(long)]
    pub accuracy: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Inequalities,
    BuilddtOptimal,
    Estimators,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub config: RunConfig,
    #[arg(long, value_enum)]
    pub suite: Suite,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Stage { source, .. } => exit_code(source),
        Error::AccessDenied { .. }
        | Error::ZeroWeight
        | Error::RejectionCap { .. }
        | Error::BudgetExceeded { .. }
        | Error::Normalization(_)
        | Error::InsufficientSample { .. }
        | Error::Learner(_) => 3,
        _ => 2,
    }
}

/// Output of a command: JSON records and whether every check passed.
pub struct Report {
    pub records: Vec<Value>,
    pub pass: bool,
}

fn validate(c: &RunConfig, dense: bool) -> Result<()> {
    if !(c.eps > 0.0 && c.eps < 1.0) {
        return Err(Error::InvalidParameter(format!("--eps must lie in (0,1), got {}", c.eps)));
    }
    if !(c.delta > 0.0 && c.delta < 1.0) {
        return Err(Error::InvalidParameter(format!("--delta must lie in (0,1), got {}", c.delta)));
    }
    if dense && c.n > DENSE_MAX_DIM {
        return Err(Error::DimensionTooLarge { n: c.n, limit: DENSE_MAX_DIM });
    }
    if c.depth > c.n {
        return Err(Error::InvalidParameter(format!("--depth {} exceeds --n {}", c.depth, c.n)));
    }
    if c.trials == 0 {
        return Err(Error::InvalidParameter("--trials must be positive".into()));
    }
    Ok(())
}

/// Seed of trial `t`: the base seed for the first trial, a child stream
/// for the rest.
pub fn trial_seed(base: u64, t: u64) -> u64 {
    if t == 0 {
        base
    } else {
        seed::child(base, t)
    }
}

fn workers(c: &RunConfig) -> Result<usize> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")));
    }
    Ok(c.workers.unwrap_or(0))
}

/// Runs `f` over all trials on the worker pool, keeping trial order.
fn over_trials<T: Send>(c: &RunConfig, f: impl Fn(u64, u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers(c)?)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let base = c.seed.0;
    pool.install(|| {
        (0..c.trials)
            .into_par_iter()
            .map(|t| f(t, trial_seed(base, t)))
            .collect()
    })
}

fn instance(dist: Option<&Path>, n: usize, depth: usize, monotone: bool, seed: u64) -> Result<Instance> {
    match dist {
        Some(p) => {
            // either file format: a tree, or a dense table
            let v: Value = json::read_file(p)?;
            let tree = if v.get("table").is_some() {
                dense_to_tree(&serde_json::from_value::<DensePmf>(v)?)?
            } else {
                serde_json::from_value::<DistTree>(v)?
            };
            if tree.dim() != n {
                return Err(Error::InvalidParameter(format!(
                    "--dist has dimension {} but --n is {n}",
                    tree.dim()
                )));
            }
            Instance::new(tree, seed, "file", false)
        }
        None if monotone => gen_monotone_dist(n, depth, seed),
        None => gen_dt_dist(n, depth, seed),
    }
}

fn oracle_for(inst: &Instance, kind: InfluenceKind, seed: u64) -> DistOracle {
    DistOracle::from_tree(inst.tree.clone(), kind.required_mode(), seed::derive(seed, "oracle"))
}

fn value_name(v: impl ValueEnum) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn elapsed(t: Instant) -> f64 {
    (t.elapsed().as_secs_f64() * 1e3).round() / 1e3
}

fn gen(a: &GenArgs) -> Result<Report> {
    validate(&a.config, true)?;
    let class: Option<TargetClass> = a.target_class.as_deref().map(str::parse).transpose()?;
    let records = over_trials(&a.config, |t, s| {
        let mut inst = instance(None, a.config.n, a.config.depth, a.monotone, s)?;
        if let Some(class) = class {
            inst = inst.with_target(gen_target(a.config.n, class, s)?)?;
        }
        if let Some(dir) = &a.config.out {
            fs::create_dir_all(dir)?;
            let stem = if a.config.trials == 1 { String::new() } else { format!("-{t}") };
            json::write_file(&dir.join(format!("tree{stem}.json")), &inst.tree)?;
            json::write_file(&dir.join(format!("dense{stem}.json")), &inst.dense)?;
            if let Some(target) = &inst.target {
                json::write_file(&dir.join(format!("target{stem}.json")), target)?;
            }
        }
        Ok(json!({
            "trial": t,
            "seed": s,
            "descriptor": inst.descriptor,
            "leaves": inst.tree.leaf_count(),
            "tree": serde_json::to_value(&inst.tree)?,
            "target": inst.target.as_ref().map(serde_json::to_value).transpose()?,
        }))
    })?;
    Ok(Report { records, pass: true })
}

/// Applies `--tau`, `--accuracy` and `--confidence` on top of a plan.
fn override_plan(mut plan: LearnPlan, tau: Option<f64>, accuracy: Option<f64>, confidence: Option<f64>) -> LearnPlan {
    if let Some(tau) = tau {
        plan = plan.with_tau(tau);
    }
    if let Some(a) = accuracy {
        plan.accuracy = a;
    }
    if let Some(c) = confidence {
        plan.estimate_confidence = c;
    }
    plan
}

fn learn_dist(a: &LearnArgs) -> Result<Report> {
    let c = &a.config;
    validate(c, true)?;
    let kind = a.oracle.kind();
    let monotone = a.monotone || kind == InfluenceKind::MonotoneBias;
    let plan = override_plan(LearnPlan::new(c.n, c.depth, c.eps, c.delta, kind)?, c.tau, a.accuracy, a.confidence);
    plan.params()?;
    let bound = call_bound(c.depth, c.eps);
    let rows = over_trials(c, |t, s| {
        let inst = instance(a.dist.as_deref(), c.n, c.depth, monotone, s)?;
        let mut o = oracle_for(&inst, kind, s);
        let start = Instant::now();
        let learned = learn_with_plan(&mut o, &plan)?;
        let mut rec = learned.stats_json(Some(&inst.dense))?;
        let tv = rec["tv_exact"].as_f64().unwrap_or(f64::INFINITY);
        let within_bound = learned.stats.recursive_calls as f64 <= bound;
        let pass = tv <= c.eps && within_bound;
        if let Some(dir) = &c.out {
            fs::create_dir_all(dir)?;
            json::write_file(&dir.join(format!("learned-{t}.json")), &learned.tree)?;
        }
        let obj = rec.as_object_mut().expect("stats record is an object");
        obj.insert("trial".into(), json!(t));
        obj.insert("seed".into(), json!(s));
        obj.insert("oracle".into(), json!(value_name(a.oracle)));
        obj.insert("tau".into(), json!(plan.tau));
        obj.insert("accuracy".into(), json!(plan.accuracy));
        obj.insert("call_bound".into(), json!(bound));
        obj.insert("leaves".into(), json!(learned.tree.leaf_count()));
        obj.insert("pass".into(), json!(pass));
        obj.insert("elapsed_s".into(), json!(elapsed(start)));
        Ok((rec, pass))
    })?;
    let pass = rows.iter().all(|(_, p)| *p);
    Ok(Report {
        records: rows.into_iter().map(|(r, _)| r).collect(),
        pass,
    })
}

fn estimate_influence(a: &InfluenceArgs) -> Result<Report> {
    let c = &a.config;
    validate(c, true)?;
    let kind = a.oracle.kind();
    let restriction: Restriction = a.restriction.parse()?;
    let monotone = a.monotone || kind == InfluenceKind::MonotoneBias;
    let rows = over_trials(c, |t, s| {
        let inst = instance(a.dist.as_deref(), c.n, c.depth, monotone, s)?;
        restriction.check_dim(inst.tree.dim())?;
        let source = oracle_for(&inst, kind, s);
        let mut io = match kind {
            InfluenceKind::Exact => InfluenceOracle::exact(source)?,
            k => InfluenceOracle::new(k, source, c.eps, c.delta)?,
        };
        let est = oracle_influence(&mut io, a.coord, &restriction, c.eps, c.delta)?;
        let exact = exact_influence(&inst.dense, a.coord, &restriction)?;
        let err = (est.value - exact).abs();
        let pass = err <= c.eps;
        let mut rec = serde_json::to_value(&est)?;
        let obj = rec.as_object_mut().expect("estimate is an object");
        obj.insert("trial".into(), json!(t));
        obj.insert("seed".into(), json!(s));
        obj.insert("restriction".into(), json!(restriction.to_string()));
        obj.insert("exact".into(), json!(exact));
        obj.insert("abs_error".into(), json!(err));
        obj.insert("pass".into(), json!(pass));
        Ok((rec, pass))
    })?;
    let pass = rows.iter().all(|(_, p)| *p);
    Ok(Report {
        records: rows.into_iter().map(|(r, _)| r).collect(),
        pass,
    })
}

fn lift(a: &LiftArgs) -> Result<Report> {
    let c = &a.config;
    validate(c, true)?;
    let kind = a.oracle.kind();
    let spec: LearnerSpec = a.learner.parse()?;
    let class: TargetClass = a.target_class.parse()?;
    let file_target: Option<TruthTable> = a.target.as_deref().map(json::read_file).transpose()?;
    let (mut plan, learner) = LiftPlan::for_learner(c.n, c.depth, c.eps, c.delta, kind, spec)?;
    if let Some(e) = a.dist_eps {
        plan.dist = LearnPlan::new(c.n, c.depth, e, plan.dist.delta, kind)?;
        plan.dist.leaf_samples = leaf_sample_count(c.depth, e, plan.dist.delta);
    }
    plan.dist = override_plan(plan.dist, c.tau, a.accuracy, None);
    plan.dist.params()?;
    let monotone = kind == InfluenceKind::MonotoneBias;
    let rows = over_trials(c, |t, s| {
        let inst = instance(a.dist.as_deref(), c.n, c.depth, monotone, s)?;
        let target = match &file_target {
            Some(f) => f.clone(),
            None => gen_target(c.n, class, s)?,
        };
        if target.dim() != c.n {
            return Err(Error::DimensionMismatch {
                expected: c.n,
                found: target.dim(),
            });
        }
        let mut o = oracle_for(&inst, kind, s);
        let mut labels = DistOracle::from_tree(inst.tree.clone(), AccessMode::Sample, seed::derive(s, "labels"));
        let start = Instant::now();
        let out = end_to_end(
            &mut o,
            || {
                let x = labels.sample()?;
                let y = target.eval(&x);
                Ok((x, y))
            },
            learner.clone(),
            &plan,
        )?;
        let err = weighted_error(&out.hypothesis, &target, &inst.dense)?;
        let pass = err <= c.eps;
        if let Some(dir) = &c.out {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("hypothesis-{t}.json"));
            fs::write(path, json::to_string_pretty(&out.hypothesis.to_json(c.n))? + "\n")?;
        }
        let rec = json!({
            "trial": t,
            "seed": s,
            "learner": out.learner.name(),
            "m": out.learner.m(),
            "sample_size": out.sample_size,
            "dist_eps": plan.dist.eps,
            "learned_leaves": out.learned.tree.leaf_count(),
            "leaves": out.leaves,
            "error": err,
            "pass": pass,
            "elapsed_s": elapsed(start),
        });
        Ok((rec, pass))
    })?;
    let pass = rows.iter().all(|(_, p)| *p);
    Ok(Report {
        records: rows.into_iter().map(|(r, _)| r).collect(),
        pass,
    })
}

/// Inequality suite: `n = 2 + (t mod 9)`, `d = t mod 4`, every check of
/// [`check_inequalities`] on each instance.
pub fn suite_inequalities(base: u64, trials: u64) -> Result<Vec<CheckRecord>> {
    let per: Vec<Vec<CheckRecord>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let n = 2 + (t % 9) as usize;
            let d = ((t % 4) as usize).min(n);
            let inst = gen_dt_dist(n, d, trial_seed(base, t))?;
            Ok(check_inequalities(&inst)?.records)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// BuildDT in exact mode against exhaustive enumeration on small
/// instances: `n = 2 + (t mod 4)`, `d = t mod 3`, τ cycling through
/// 0.01, 0.05 and 0.1.
pub fn suite_builddt_optimal(base: u64, trials: u64) -> Result<Vec<CheckRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(base, t);
            let n = 2 + (t % 4) as usize;
            let d = ((t % 3) as usize).min(n);
            let tau = [0.01, 0.05, 0.1][(t / 3 % 3) as usize];
            let inst = gen_dt_dist(n, d, s)?;
            let (_, brute) = brute_optimal_tree(&inst.dense, d, tau)?;
            let mut o = DistOracle::from_dense(inst.dense.clone(), AccessMode::ExactPmf, s);
            let mut io = InfluenceOracle::exact(o.split(1))?;
            let p = BuildParams::new(d, tau, 0.1, 0.1, ThresholdMode::Exact)?;
            let out = build_dt(&mut o, &mut io, &Restriction::empty(), &p)?;
            let margin = -(out.objective - brute).abs();
            Ok(CheckRecord {
                instance: s,
                check: "builddt_optimal".into(),
                lhs: out.objective,
                rhs: brute,
                margin,
                pass: -margin <= 1e-9,
            })
        })
        .collect()
}

/// Accuracy of the two estimators at `ε = δ = 0.05` on instances over
/// `n = 6`, with a restriction of depth `t mod 2`.
pub fn suite_estimators(base: u64, trials: u64) -> Result<Vec<CheckRecord>> {
    const EPS: f64 = 0.05;
    const DELTA: f64 = 0.05;
    let per: Vec<Vec<CheckRecord>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(base, t);
            let n = 6;
            let i = (t % n as u64) as usize;
            let r = if t % 2 == 1 {
                Restriction::from_subcube(Subcube::FULL.with((i + 1) % n, crate::cube::Sign::Pos))
            } else {
                Restriction::empty()
            };
            let mut out = Vec::with_capacity(2);
            for (name, inst) in [("monotone_bias", gen_monotone_dist(n, 2, s)?), ("infest", gen_dt_dist(n, 2, s)?)] {
                let w = inst.dense.weight(&r.subcube());
                let scale = (r.depth() as f64).exp2() * w;
                let exact = exact_influence(&inst.dense, i, &r)? / scale;
                let value = if name == "infest" {
                    let mut o = DistOracle::from_tree(inst.tree.clone(), AccessMode::SubcubeSample, s);
                    infest_high_accuracy(&mut o, i, &r, EPS, DELTA)?.value
                } else {
                    let mut o = DistOracle::from_tree(inst.tree.clone(), AccessMode::Sample, s);
                    monotone_bias_estimate(&mut o, i, &r, EPS, DELTA)?.value
                };
                let err = (value - exact).abs();
                out.push(CheckRecord {
                    instance: s,
                    check: name.into(),
                    lhs: err,
                    rhs: EPS,
                    margin: EPS - err,
                    pass: err <= EPS,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Share of records of each estimator that must land within the band.
pub const ESTIMATOR_PASS_RATE: f64 = 0.9;

fn verify(a: &VerifyArgs) -> Result<Report> {
    let c = &a.config;
    if c.trials == 0 {
        return Err(Error::InvalidParameter("--trials must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers(c)?)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let records = pool.install(|| match a.suite {
        Suite::Inequalities => suite_inequalities(c.seed.0, c.trials),
        Suite::BuilddtOptimal => suite_builddt_optimal(c.seed.0, c.trials),
        Suite::Estimators => suite_estimators(c.seed.0, c.trials),
    })?;
    let pass = match a.suite {
        Suite::Estimators => ["monotone_bias", "infest"].iter().all(|name| {
            let (hit, all) = records
                .iter()
                .filter(|r| r.check == *name)
                .fold((0, 0), |(h, a), r| (h + usize::from(r.pass), a + 1));
            hit as f64 >= ESTIMATOR_PASS_RATE * all as f64
        }),
        _ => records.iter().all(|r| r.pass),
    };
    let mut values = records
        .iter()
        .map(serde_json::to_value)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let failures = records.iter().filter(|r| !r.pass).count();
    values.push(json!({
        "suite": value_name(a.suite),
        "records": records.len(),
        "failures": failures,
        "pass": pass,
    }));
    Ok(Report { records: values, pass })
}

fn config_of(cmd: &Command) -> &RunConfig {
    match cmd {
        Command::Gen(a) => &a.config,
        Command::LearnDist(a) => &a.config,
        Command::EstimateInfluence(a) => &a.config,
        Command::Lift(a) => &a.config,
        Command::Verify(a) => &a.config,
    }
}

/// Runs a parsed command.
pub fn execute(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::LearnDist(a) => learn_dist(a),
        Command::EstimateInfluence(a) => estimate_influence(a),
        Command::Lift(a) => lift(a),
        Command::Verify(a) => verify(a),
    }
}

fn emit(out: &mut impl Write, records: &[Value]) -> Result<()> {
    for r in records {
        writeln!(out, "{}", json::to_string(r)?)?;
    }
    Ok(())
}

/// Parses `args`, runs the command, writes records to `stdout` and
/// returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };
    let result = execute(&cli.command).and_then(|report| {
        emit(stdout, &report.records)?;
        if let Some(dir) = &config_of(&cli.command).out {
            fs::create_dir_all(dir)?;
            let mut f = fs::File::create(dir.join("results.jsonl"))?;
            emit(&mut f, &report.records)?;
        }
        Ok(report.pass)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let code = exit_code(&e);
            let _ = writeln!(stderr, "{}", json!({ "error": e.to_string(), "exit": code }));
            code
        }
    }
}
