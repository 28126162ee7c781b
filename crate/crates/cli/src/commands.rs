use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use weightlab::acceptance::{run_all, Outcome};
use weightlab::bellman::{
    bounds_check_ainf, verify_hessian, verify_tangent, BellmanPoint, BellmanSurface, BoundsCheck,
    HessianVerdict, SurfaceKind, TangentVerdict, LINEARITY_TOL,
};
use weightlab::constants::{constants_report, ConstantKind, Estimate};
use weightlab::dyadic::{build_partition, chain_verify, ChainReport, PartitionNode, SplitConfig, SplitMode};
use weightlab::extremals::{
    attainment_check, build_extremal, constant_attainment, sharpness_sweep, ExtremalFamily, ExtremalSpec,
};
use weightlab::invariants::run_invariants;
use weightlab::solvers::{
    eps_minus, funny_bound, gamma_entropy_roots, gamma_log, gehring_dim_n_eps, gehring_sharp_eps,
    log_funny_bound, RootResult,
};
use weightlab::Weight;

use crate::emit::{fmt_real, opt, to_json, write_out, Format, Table};
use crate::{RunConfig, Status};

/// Deepest splitting tree accepted (`2^16` leaves).
const MAX_DEPTH: usize = 16;

fn parse<T: FromStr<Err = weightlab::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: weightlab::Error| e.to_string())
}

#[derive(Debug, Clone, Copy)]
pub struct Pair(f64, f64);

fn parse_pair(s: &str) -> Result<Pair, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok(Pair(num(a)?, num(b)?))
}

fn load_weight(path: &Path) -> Result<Weight> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Weight::from_json(&text).with_context(|| format!("in {}", path.display()))
}

/// Flattens a JSON report into `quantity,value` rows with dotted keys.
fn flatten(v: &Value) -> Table {
    fn walk(prefix: &str, v: &Value, t: &mut Table) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, x)| walk(&key(k), x, t)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| walk(&key(&i.to_string()), x, t)),
            Value::Number(n) if !(n.is_u64() || n.is_i64()) => {
                t.push(vec![prefix.to_string(), fmt_real(n.as_f64().unwrap_or(f64::NAN))])
            }
            Value::Null => t.push(vec![prefix.to_string(), String::new()]),
            Value::String(s) => t.push(vec![prefix.to_string(), s.clone()]),
            other => t.push(vec![prefix.to_string(), other.to_string()]),
        }
    }
    let mut t = Table::new(&["quantity", "value"]);
    walk("", v, &mut t);
    t
}

/// Emits a report as JSON, or as `quantity,value` CSV.
fn emit_report<T: Serialize>(cfg: &RunConfig, report: &T) -> Result<()> {
    let text = match cfg.format {
        Format::Json => to_json(report)?,
        Format::Csv => flatten(&serde_json::to_value(report)?).to_csv()?,
    };
    write_out(&text, cfg.output.as_deref())
}

fn emit_table(cfg: &RunConfig, json: &impl Serialize, table: Table) -> Result<()> {
    let text = match cfg.format {
        Format::Json => to_json(json)?,
        Format::Csv => table.to_csv()?,
    };
    write_out(&text, cfg.output.as_deref())
}

// ---- constants ----

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    /// Weight JSON file.
    #[arg(long)]
    weight: PathBuf,
    /// Constants to compute: ap, ainf, rhp, rh1, rh1prime, rh1doubleprime.
    #[arg(long, value_delimiter = ',', default_value = "rh1,ainf", value_parser = parse::<ConstantKind>)]
    which: Vec<ConstantKind>,
    /// Exponents for ap and rhp.
    #[arg(long = "p", value_delimiter = ',', default_value = "2")]
    exponents: Vec<f64>,
    /// Resolution of the nested scans behind rh1prime and rh1doubleprime.
    #[arg(long, default_value_t = 64)]
    nested_resolution: usize,
}

pub fn constants(cfg: &RunConfig, a: ConstantsArgs) -> Result<Status> {
    let w = load_weight(&a.weight)?;
    let report = constants_report(&w, &a.which, &a.exponents, cfg.resolution, a.nested_resolution)?;
    let mut t = Table::new(&["constant", "p", "value", "a", "b"]);
    let mut row = |name: &str, p: Option<f64>, e: &Estimate| {
        t.push(vec![
            name.into(),
            opt(p),
            fmt_real(e.value),
            fmt_real(e.interval.a()),
            fmt_real(e.interval.b()),
        ])
    };
    for e in &report.a_p {
        row("ap", Some(e.p), &e.estimate);
    }
    if let Some(e) = &report.a_inf {
        row("ainf", None, e);
    }
    for e in &report.rh_p {
        row("rhp", Some(e.p), &e.estimate);
    }
    if let Some(e) = &report.rh_1 {
        row("rh1", None, e);
    }
    if let Some(e) = &report.rh_1_prime {
        row("rh1prime", None, e);
    }
    if let Some(e) = &report.rh_1_doubleprime {
        row("rh1doubleprime", None, e);
    }
    emit_table(cfg, &report, t)?;
    Ok(Status::Ok)
}

// ---- solve ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Equation {
    GammaLog,
    GammaEntropy,
    EpsMinus,
    GehringSharp,
    GehringN,
    Funny,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    equation: Equation,
    /// Class constant Q (every equation except gehring-sharp).
    #[arg(long)]
    q: Option<f64>,
    /// Exponent for gehring-sharp.
    #[arg(long)]
    p: Option<f64>,
    /// Reverse Hölder constant for gehring-sharp.
    #[arg(long)]
    k: Option<f64>,
    /// Dimension for gehring-n.
    #[arg(long)]
    n: Option<u32>,
}

fn root_json(r: &RootResult) -> Value {
    json!({
        "root": r.root,
        "residual": r.residual,
        "bracket": [r.bracket.0, r.bracket.1],
        "iterations": r.iterations,
        "certified": r.is_certified(),
    })
}

pub fn solve(cfg: &RunConfig, a: SolveArgs) -> Result<Status> {
    let need =
        |v: Option<f64>, flag: &str| v.with_context(|| format!("--{flag} is required for this equation"));
    let mut certified = true;
    let mut single = |r: RootResult, head: Value| {
        certified &= r.is_certified();
        let mut out = head;
        if let (Value::Object(m), Value::Object(extra)) = (&mut out, root_json(&r)) {
            m.extend(extra);
        }
        out
    };
    let report = match a.equation {
        Equation::GammaLog => {
            let q = need(a.q, "q")?;
            single(gamma_log(q)?, json!({"equation": "gamma-log", "q": q}))
        }
        Equation::EpsMinus => {
            let q = need(a.q, "q")?;
            single(eps_minus(q)?, json!({"equation": "eps-minus", "q": q}))
        }
        Equation::GehringSharp => {
            let (p, k) = (need(a.p, "p")?, need(a.k, "k")?);
            single(gehring_sharp_eps(p, k)?, json!({"equation": "gehring-sharp", "p": p, "k": k}))
        }
        Equation::GammaEntropy => {
            let q = need(a.q, "q")?;
            let (m, p) = gamma_entropy_roots(q)?;
            certified = m.is_certified() && p.is_certified();
            json!({"equation": "gamma-entropy", "q": q, "gamma_minus": root_json(&m), "gamma_plus": root_json(&p)})
        }
        Equation::GehringN => {
            let q = need(a.q, "q")?;
            let n = a.n.context("--n is required for this equation")?;
            json!({"equation": "gehring-n", "n": n, "q": q, "root": gehring_dim_n_eps(n, q)?})
        }
        Equation::Funny => {
            let q = need(a.q, "q")?;
            json!({"equation": "funny", "q": q, "bound": funny_bound(q)?, "log_bound": log_funny_bound(q)?})
        }
    };
    emit_report(cfg, &report)?;
    Ok(if certified { Status::Ok } else { Status::Failed })
}

// ---- bellman ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Verify {
    Hessian,
    Bounds,
    Tangent,
}

#[derive(Args, Debug)]
pub struct BellmanArgs {
    /// ainf-upper, gehring or ainf-lower.
    #[arg(long, value_parser = parse::<SurfaceKind>)]
    surface: SurfaceKind,
    /// Class constant Q of the domain.
    #[arg(long)]
    q: f64,
    /// Exponent gap for gehring; defaults to half the critical gap.
    #[arg(long)]
    eps: Option<f64>,
    /// Evaluate at `x,y`.
    #[arg(long, value_parser = parse_pair, required_unless_present = "verify", conflicts_with = "verify")]
    eval: Option<Pair>,
    /// Run a check over the domain instead of evaluating.
    #[arg(long, value_enum)]
    verify: Option<Verify>,
    /// Samples (hessian, default 1000), grid side (bounds, default 100) or
    /// tangent lines (tangent, default 50).
    #[arg(long)]
    grid: Option<usize>,
    /// Seed of the Hessian samples.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn make_surface(kind: SurfaceKind, q: f64, eps: Option<f64>) -> Result<BellmanSurface> {
    Ok(match (kind, eps) {
        (SurfaceKind::Gehring, None) => BellmanSurface::gehring_fraction(q, 0.5)?,
        (SurfaceKind::Gehring, Some(e)) => BellmanSurface::gehring(q, e)?,
        (_, Some(_)) => bail!("--eps only applies to the gehring surface"),
        (k, None) => BellmanSurface::new(k, q, None)?,
    })
}

#[derive(Serialize)]
struct SurfaceInfo {
    surface: SurfaceKind,
    q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    gamma: f64,
}

impl SurfaceInfo {
    fn of(s: &BellmanSurface) -> Self {
        Self { surface: s.kind(), q: s.q(), eps: s.eps(), gamma: s.gamma() }
    }
}

#[derive(Serialize)]
struct Verdict<T: Serialize> {
    #[serde(flatten)]
    surface: SurfaceInfo,
    check: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    passed: bool,
    #[serde(flatten)]
    verdict: T,
}

#[derive(Serialize)]
struct BoundsVerdict {
    grid: usize,
    #[serde(flatten)]
    check: BoundsCheck,
}

pub fn bellman(cfg: &RunConfig, a: BellmanArgs) -> Result<Status> {
    let s = make_surface(a.surface, a.q, a.eps)?;
    if let Some(Pair(x, y)) = a.eval {
        let p = BellmanPoint::new(x, y);
        let r = s.tangent_root(p)?;
        let (gx, gy) = s.gradient(p)?;
        let h = s.hessian(p)?;
        let report = json!({
            "surface": SurfaceInfo::of(&s),
            "x": x,
            "y": y,
            "value": s.evaluate(p)?,
            "tangent": r.root,
            "tangent_residual": r.residual,
            "gradient": [gx, gy],
            "hessian": h,
        });
        emit_report(cfg, &report)?;
        return Ok(Status::Ok);
    }
    let passed = match a.verify.expect("clap requires --eval or --verify") {
        Verify::Hessian => {
            let v: HessianVerdict = verify_hessian(&s, a.grid.unwrap_or(1000), a.seed)?;
            let passed = v.passed;
            emit_report(
                cfg,
                &Verdict {
                    surface: SurfaceInfo::of(&s),
                    check: "hessian",
                    tolerance: None,
                    passed,
                    verdict: v,
                },
            )?;
            passed
        }
        Verify::Bounds => {
            ensure!(s.kind() == SurfaceKind::AinfUpper, "--verify bounds applies to the ainf-upper surface");
            let grid = a.grid.unwrap_or(100);
            let tol = cfg.tolerance.unwrap_or(1e-9);
            let check = bounds_check_ainf(a.q, grid)?;
            let passed = check.max_excess_low <= tol && check.max_excess_high <= tol;
            let verdict = BoundsVerdict { grid, check };
            emit_report(
                cfg,
                &Verdict {
                    surface: SurfaceInfo::of(&s),
                    check: "bounds",
                    tolerance: Some(tol),
                    passed,
                    verdict,
                },
            )?;
            passed
        }
        Verify::Tangent => {
            let tol = cfg.tolerance.unwrap_or(LINEARITY_TOL);
            let mut v: TangentVerdict = verify_tangent(&s, a.grid.unwrap_or(50))?;
            v.passed = v.max_deviation <= tol;
            let passed = v.passed;
            emit_report(
                cfg,
                &Verdict {
                    surface: SurfaceInfo::of(&s),
                    check: "tangent",
                    tolerance: Some(tol),
                    passed,
                    verdict: v,
                },
            )?;
            passed
        }
    };
    Ok(if passed { Status::Ok } else { Status::Failed })
}

// ---- extremal ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    /// Weight JSON, loadable by `constants` and `dyadic`.
    Json,
    /// `t,w` samples for plotting.
    Csv,
    /// Construction parameters, attainment gap and scanned constant.
    Report,
}

#[derive(Args, Debug)]
pub struct ExtremalArgs {
    /// ainf, gehring-boundary, gehring-interior or funny.
    #[arg(long, value_parser = parse::<ExtremalFamily>)]
    family: ExtremalFamily,
    /// Class constant the weight attains.
    #[arg(long)]
    q: f64,
    /// Target `m w` (ainf, gehring-interior; optional for gehring-boundary).
    #[arg(long)]
    x: Option<f64>,
    /// Target `m log w` (ainf) or `m w log w` (gehring-interior).
    #[arg(long)]
    y: Option<f64>,
    /// Exponent gap for the Gehring attainment check; defaults to half the
    /// critical gap.
    #[arg(long)]
    eps: Option<f64>,
    /// What to write; defaults to the global --format.
    #[arg(long, value_enum)]
    emit: Option<Emit>,
    /// Sample count for CSV output.
    #[arg(long, default_value_t = 1000)]
    points: usize,
}

pub fn extremal(cfg: &RunConfig, a: ExtremalArgs) -> Result<Status> {
    let target = match (a.family, a.x, a.y) {
        (ExtremalFamily::Funny, _, _) => None,
        (ExtremalFamily::GehringBoundary, Some(x), y) => Some(BellmanPoint::new(x, y.unwrap_or(0.0))),
        (ExtremalFamily::GehringBoundary, None, _) => None,
        (_, Some(x), Some(y)) => Some(BellmanPoint::new(x, y)),
        _ => bail!("--x and --y are required for the {} family", a.family),
    };
    let spec = ExtremalSpec::new(a.family, a.q, target);
    let e = build_extremal(&spec)?;
    let emit = a.emit.unwrap_or(match cfg.format {
        Format::Json => Emit::Json,
        Format::Csv => Emit::Csv,
    });
    match emit {
        Emit::Json => {
            write_out(&to_json(&e.weight)?, cfg.output.as_deref())?;
            Ok(Status::Ok)
        }
        Emit::Csv => {
            ensure!(a.points >= 1, "--points must be positive");
            let mut t = Table::new(&["t", "w"]);
            for i in 0..a.points {
                let s = (i as f64 + 0.5) / a.points as f64;
                t.push(vec![fmt_real(s), fmt_real(e.weight.eval(s)?)]);
            }
            write_out(&t.to_csv()?, cfg.output.as_deref())?;
            Ok(Status::Ok)
        }
        Emit::Report => {
            let tol = cfg.tolerance.unwrap_or(1e-6);
            let eps = match a.family {
                ExtremalFamily::GehringBoundary | ExtremalFamily::GehringInterior => {
                    Some(a.eps.map_or_else(|| eps_minus(a.q).map(|r| 0.5 * r.root), Ok)?)
                }
                _ => None,
            };
            let attainment = attainment_check(&spec, eps)?;
            let constant = constant_attainment(&spec, cfg.resolution)?;
            let passed = attainment.gap <= tol && constant.q_gap <= tol;
            let report = json!({
                "family": a.family,
                "q": a.q,
                "target": target,
                "tangent": e.tangent,
                "glue": e.glue,
                "eps": eps,
                "tolerance": tol,
                "passed": passed,
                "attainment": attainment,
                "constant": constant,
                "weight": e.weight,
            });
            emit_report(cfg, &report)?;
            Ok(if passed { Status::Ok } else { Status::Failed })
        }
    }
}

// ---- dyadic ----

#[derive(Args, Debug)]
pub struct DyadicArgs {
    /// Weight JSON file.
    #[arg(long)]
    weight: PathBuf,
    /// log (points (m w, m log w)) or entropy (points (m w, m w log w)).
    #[arg(long, value_parser = parse::<SplitMode>)]
    mode: SplitMode,
    /// Domain every node point must lie in.
    #[arg(long)]
    q: f64,
    /// Enlarged domain for parent-child segments.
    #[arg(long)]
    q1: f64,
    /// Generations below the root, at most 16.
    #[arg(long, default_value_t = 8)]
    depth: usize,
    /// Surface (built with Q1) whose Bellman chain is checked.
    #[arg(long, value_parser = parse::<SurfaceKind>)]
    verify: Option<SurfaceKind>,
    /// Exponent gap for a gehring chain; defaults to half the critical gap.
    #[arg(long)]
    eps: Option<f64>,
    /// Smallest share of a child in its parent.
    #[arg(long, default_value_t = 0.05)]
    delta0: f64,
    /// Points sampled on each parent-child segment.
    #[arg(long, default_value_t = 100)]
    segment_samples: usize,
}

#[derive(Serialize)]
struct DyadicReport<'a> {
    mode: SplitMode,
    config: SplitConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    chain: Option<&'a ChainReport>,
    tree: &'a PartitionNode,
}

pub fn dyadic(cfg: &RunConfig, a: DyadicArgs) -> Result<Status> {
    ensure!(a.depth <= MAX_DEPTH, "--depth is capped at {MAX_DEPTH}, got {}", a.depth);
    let w = load_weight(&a.weight)?;
    let split = SplitConfig {
        delta0: a.delta0,
        segment_samples: a.segment_samples,
        ..SplitConfig::new(a.q, a.q1, a.depth)?
    };
    split.validate()?;
    let tree = build_partition(&w, &split, a.mode)?;
    let chain = match a.verify {
        None => None,
        Some(kind) => {
            let s = make_surface(kind, a.q1, a.eps)?;
            ensure!(
                s.coordinates() == a.mode.coordinates(),
                "the {kind} surface does not match {} mode",
                a.mode
            );
            Some(chain_verify(&s, &w, &tree)?)
        }
    };
    let mut t = Table::new(&["generation", "nodes", "min_alpha", "max_alpha", "sum"]);
    for k in 0..=tree.depth() {
        let level = tree.generation(k);
        let alphas: Vec<f64> = level.iter().filter_map(|n| n.alpha).collect();
        let (lo, hi) = (alphas.iter().copied().reduce(f64::min), alphas.iter().copied().reduce(f64::max));
        let sum = chain.as_ref().map(|c| c.sums[k]);
        t.push(vec![k.to_string(), level.len().to_string(), opt(lo), opt(hi), opt(sum)]);
    }
    let report = DyadicReport { mode: a.mode, config: split, chain: chain.as_ref(), tree: &tree };
    emit_table(cfg, &report, t)?;
    Ok(match &chain {
        Some(c) if !c.passed() => Status::Failed,
        _ => Status::Ok,
    })
}

// ---- sweep ----

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Explicit list of Q values.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "steps"])]
    qs: Vec<f64>,
    /// First Q of the range.
    #[arg(long, requires_all = ["to", "steps"])]
    from: Option<f64>,
    /// Last Q of the range.
    #[arg(long, requires = "from")]
    to: Option<f64>,
    /// Number of Q values, endpoints included.
    #[arg(long, requires = "from")]
    steps: Option<usize>,
    /// Space the range logarithmically.
    #[arg(long)]
    log: bool,
}

fn sweep_points(a: &SweepArgs) -> Result<Vec<f64>> {
    let (Some(from), Some(to), Some(n)) = (a.from, a.to, a.steps) else {
        return Ok(a.qs.clone());
    };
    if a.log {
        ensure!(from > 0.0 && to > 0.0, "--log needs a positive range");
    }
    let at = |s: f64| if a.log { (from.ln() + s * (to / from).ln()).exp() } else { from + s * (to - from) };
    Ok(match n {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..n).map(|i| at(i as f64 / (n - 1) as f64)).collect(),
    })
}

pub fn sweep(cfg: &RunConfig, a: SweepArgs) -> Result<Status> {
    let qs = sweep_points(&a)?;
    ensure!(qs.iter().all(|q| *q > 0.0 && q.is_finite()), "every Q must be positive and finite");
    let rows = sharpness_sweep(&qs);
    let mut t = Table::new(&["Q", "e_ratio", "funny_ratio"]);
    for r in &rows {
        t.push(vec![fmt_real(r.q), opt(r.e_ratio), opt(r.funny_ratio)]);
    }
    emit_table(cfg, &rows, t)?;
    Ok(Status::Ok)
}

// ---- selftest ----

#[derive(Args, Debug)]
pub struct SelftestArgs {
    /// Run only the acceptance criteria.
    #[arg(long)]
    acceptance_only: bool,
}

pub fn selftest(cfg: &RunConfig, a: SelftestArgs) -> Result<Status> {
    let mut outcomes: Vec<Outcome> = run_all();
    if !a.acceptance_only {
        outcomes.extend(run_invariants());
    }
    for o in &outcomes {
        eprintln!("{o}");
    }
    let mut t = Table::new(&["id", "name", "passed", "detail"]);
    for o in &outcomes {
        t.push(vec![o.id.to_string(), o.name.clone(), o.passed.to_string(), o.detail.clone()]);
    }
    emit_table(cfg, &outcomes, t)?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    eprintln!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
    Ok(if failed == 0 { Status::Ok } else { Status::Failed })
}
