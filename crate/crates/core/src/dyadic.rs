//! Splitting trees whose parent-child segments stay inside an enlarged
//! domain, and the concavity chain of Bellman values along them.

use serde::{Deserialize, Serialize};

use crate::bellman::{BellmanPoint, BellmanSurface, Coordinates, Domain, SurfaceKind};
use crate::error::{Error, Result};
use crate::weights::{Interval, Moment, Weight};

/// Slack for the per-generation monotonicity of the chain.
pub const CHAIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// `(m w, m log w)`
    Log,
    /// `(m w, m w log w)`
    Entropy,
}

impl SplitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Log => "log",
            Self::Entropy => "entropy",
        }
    }

    pub fn coordinates(self) -> Coordinates {
        match self {
            Self::Log => Coordinates::Log,
            Self::Entropy => Coordinates::Entropy,
        }
    }

    pub fn point(self, w: &Weight, interval: &Interval) -> BellmanPoint {
        let y = match self {
            Self::Log => Moment::LogW,
            Self::Entropy => Moment::WLogW,
        };
        BellmanPoint::new(w.moment(interval, Moment::W), w.moment(interval, y))
    }
}

impl std::fmt::Display for SplitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(Self::Log),
            "entropy" => Ok(Self::Entropy),
            other => Err(Error::Parameter(format!("unknown split mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub q: f64,
    pub q1: f64,
    /// Children are at least this share of the parent.
    pub delta0: f64,
    pub max_depth: usize,
    /// Points sampled on each parent-child segment.
    pub segment_samples: usize,
}

impl SplitConfig {
    pub fn new(q: f64, q1: f64, max_depth: usize) -> Result<Self> {
        let cfg = Self { q, q1, delta0: 0.05, max_depth, segment_samples: 100 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q1 > self.q && self.q1.is_finite()) {
            return Err(Error::Parameter(format!("need 0 < Q < Q1, got Q = {}, Q1 = {}", self.q, self.q1)));
        }
        if !(self.delta0 > 0.0 && self.delta0 < 0.5) {
            return Err(Error::Parameter(format!("delta0 must lie in (0, 1/2), got {}", self.delta0)));
        }
        if self.segment_samples < 2 {
            return Err(Error::Parameter("at least two segment samples are needed".into()));
        }
        Ok(())
    }
}

/// Largest excess outside `domain` along the segment from `p` to `r`.
///
/// Samples `samples` evenly spaced points and adds the one interior point
/// where the excess over the non-convex side of the domain peaks (upper curve
/// in entropy coordinates, lower curve in log coordinates); the other side
/// bounds a convex region, so the endpoints decide it.
pub fn segment_violation(domain: &Domain, p: BellmanPoint, r: BellmanPoint, samples: usize) -> f64 {
    let excess = |s: f64| {
        let z = p.lerp(r, s);
        domain.excess(z) - crate::bellman::DOMAIN_TOL * (1.0 + z.y.abs())
    };
    let (dx, dy) = (r.x - p.x, r.y - p.y);
    let critical_x = match domain.coordinates {
        // d/ds (y - x ln x - Qx) = 0
        Coordinates::Entropy if dx != 0.0 => (dy / dx - 1.0 - domain.q).exp(),
        // d/ds (y - ln x) = 0
        Coordinates::Log if dy != 0.0 => dx / dy,
        _ => f64::NAN,
    };
    let s_star = if dx != 0.0 { (critical_x - p.x) / dx } else { f64::NAN };
    let mut worst =
        (0..samples).map(|i| excess(i as f64 / (samples - 1) as f64)).fold(f64::NEG_INFINITY, f64::max);
    if s_star > 0.0 && s_star < 1.0 {
        worst = worst.max(excess(s_star));
    }
    worst
}

/// Candidate shares `1/2, 1/2 - 0.01, 1/2 + 0.01, ...` inside
/// `[delta0, 1 - delta0]`; smaller left children (larger right ones) first.
fn candidate_alphas(delta0: f64) -> Vec<f64> {
    let mut out = vec![0.5];
    for k in 1..50 {
        for a in [(50 - k) as f64 / 100.0, (50 + k) as f64 / 100.0] {
            if a >= delta0 - 1e-12 && a <= 1.0 - delta0 + 1e-12 {
                out.push(a);
            }
        }
    }
    out
}

/// A split of an interval into left and right children.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub left: Interval,
    pub right: Interval,
    /// `|left| / |I|`
    pub alpha: f64,
}

/// Finds the first share (in sweep order) whose children's moment points are
/// joined by a segment inside `Ω_{Q1}`.
pub fn split(w: &Weight, interval: &Interval, cfg: &SplitConfig, mode: SplitMode) -> Result<Split> {
    cfg.validate()?;
    let domain = Domain::new(mode.coordinates(), cfg.q1);
    let mut best = (f64::NAN, f64::INFINITY);
    for alpha in candidate_alphas(cfg.delta0) {
        let (left, right) = interval.split_at_ratio(alpha)?;
        let (p, r) = (mode.point(w, &left), mode.point(w, &right));
        let violation = segment_violation(&domain, p, r, cfg.segment_samples);
        if violation <= 0.0 {
            return Ok(Split { left, right, alpha });
        }
        if violation < best.1 {
            best = (alpha, violation);
        }
    }
    Err(Error::SplitFailure { a: interval.a(), b: interval.b(), best_alpha: best.0, best_violation: best.1 })
}

/// A node of the splitting tree. `path` is `""` for the root and a string of
/// `L`/`R` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionNode {
    pub path: String,
    pub interval: Interval,
    pub point: BellmanPoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub children: Vec<PartitionNode>,
}

impl PartitionNode {
    /// Nodes of generation `k` in left-to-right order.
    pub fn generation(&self, k: usize) -> Vec<&PartitionNode> {
        let mut level = vec![self];
        for _ in 0..k {
            level = level.iter().flat_map(|n| n.children.iter()).collect();
        }
        level
    }

    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> Vec<&PartitionNode> {
        if self.children.is_empty() {
            vec![self]
        } else {
            self.children.iter().flat_map(|c| c.leaves()).collect()
        }
    }

    /// Visits every node depth-first, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a PartitionNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    fn describe(&self) -> String {
        format!(
            "node `{}` [{}, {}]",
            if self.path.is_empty() { "root" } else { &self.path },
            self.interval.a(),
            self.interval.b()
        )
    }
}

/// Splits `[0, 1]` recursively down to `cfg.max_depth`. Every node point must
/// lie in `Ω_Q`.
pub fn build_partition(w: &Weight, cfg: &SplitConfig, mode: SplitMode) -> Result<PartitionNode> {
    cfg.validate()?;
    build_node(w, Interval::unit(), String::new(), cfg, mode, 0)
}

fn build_node(
    w: &Weight,
    interval: Interval,
    path: String,
    cfg: &SplitConfig,
    mode: SplitMode,
    depth: usize,
) -> Result<PartitionNode> {
    let point = mode.point(w, &interval);
    let node = PartitionNode { path, interval, point, alpha: None, children: Vec::new() };
    if !Domain::new(mode.coordinates(), cfg.q).contains(point) {
        return Err(Error::Domain(format!(
            "{} has point ({}, {}) outside Ω_{}",
            node.describe(),
            point.x,
            point.y,
            cfg.q
        )));
    }
    if depth == cfg.max_depth {
        return Ok(node);
    }
    let s = split(w, &interval, cfg, mode)?;
    let (lp, rp) = (format!("{}L", node.path), format!("{}R", node.path));
    let (left, right) = rayon::join(
        || build_node(w, s.left, lp, cfg, mode, depth + 1),
        || build_node(w, s.right, rp, cfg, mode, depth + 1),
    );
    Ok(PartitionNode { alpha: Some(s.alpha), children: vec![left?, right?], ..node })
}

/// Per-generation Bellman sums of a splitting tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// `S_k = Σ |I|·B(point of I)` over generation `k` (the root has length 1).
    pub sums: Vec<f64>,
    /// Nonincreasing for sup-type surfaces, nondecreasing for the inf-type
    /// one, up to [`CHAIN_SLACK`].
    pub monotone: bool,
    /// Worst step against the expected direction (positive is a violation).
    pub worst_step: f64,
    /// The average the chain bounds: `m(w log w)`, `m w^{1+ε}` or `m log w`.
    pub target: f64,
    /// `S_depth` lies on the correct side of `target`.
    pub target_ok: bool,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.target_ok
    }
}

/// Evaluates the surface at every node and checks the chain of inequalities.
pub fn chain_verify(surface: &BellmanSurface, w: &Weight, tree: &PartitionNode) -> Result<ChainReport> {
    let mut err = None;
    tree.walk(&mut |n| {
        if err.is_none() && !surface.in_domain(n.point) {
            err = Some(Error::Domain(format!(
                "{} has point ({}, {}) outside the {} domain",
                n.describe(),
                n.point.x,
                n.point.y,
                surface.kind()
            )));
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let root_len = tree.interval.len();
    let mut sums = Vec::new();
    for k in 0.. {
        let level = tree.generation(k);
        if level.is_empty() {
            break;
        }
        let mut s = 0.0;
        for n in level {
            s += n.interval.len() / root_len * surface.evaluate(n.point)?;
        }
        sums.push(s);
    }
    let sign = if surface.is_concave() { 1.0 } else { -1.0 };
    let worst_step = sums.windows(2).map(|p| sign * (p[1] - p[0])).fold(f64::NEG_INFINITY, f64::max);
    let monotone = sums.len() < 2 || worst_step <= CHAIN_SLACK * (1.0 + sums[0].abs());
    let kind = match surface.kind() {
        SurfaceKind::AinfUpper => Moment::WLogW,
        SurfaceKind::Gehring => Moment::WPow(1.0 + surface.eps().expect("gehring surfaces carry ε")),
        SurfaceKind::AinfLower => Moment::LogW,
    };
    let target = w.moment(&tree.interval, kind);
    let last = *sums.last().expect("tree has a root");
    let target_ok = sign * (last - target) >= -CHAIN_SLACK * (1.0 + target.abs());
    Ok(ChainReport { sums, monotone, worst_step: worst_step.max(0.0), target, target_ok })
}

/// Max over `samples` midpoints `t` of `|x_k(t) - w(t)| + |y_k(t) - f(w(t))|`
/// per generation `k`, where `(x_k, y_k)` is the point of the generation-`k`
/// interval containing `t`.
pub fn convergence_errors(
    w: &Weight,
    tree: &PartitionNode,
    mode: SplitMode,
    samples: usize,
) -> Result<Vec<f64>> {
    let ts: Vec<f64> = (0..samples).map(|i| (i as f64 + 0.5) / samples as f64).collect();
    let mut out = Vec::new();
    for k in 0.. {
        let level = tree.generation(k);
        if level.is_empty() {
            break;
        }
        let mut worst: f64 = 0.0;
        for &t in &ts {
            let node = level
                .iter()
                .find(|n| n.interval.contains(t))
                .ok_or_else(|| Error::Domain(format!("generation {k} does not cover t = {t}")))?;
            let v = w.eval(t)?;
            let fy = match mode {
                SplitMode::Log => v.ln(),
                SplitMode::Entropy => v * v.ln(),
            };
            worst = worst.max((node.point.x - v).abs() + (node.point.y - fy).abs());
        }
        out.push(worst);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    fn identity() -> Weight {
        Weight::power(1.0, 1.0).unwrap()
    }

    #[test]
    fn sweep_order() {
        let a = candidate_alphas(0.05);
        assert_eq!(&a[..3], &[0.5, 0.49, 0.51]);
        assert_eq!(a.len(), 91);
        assert!(a.iter().all(|&x| (0.05..=0.95).contains(&x)));
    }

    #[test]
    fn constant_weight_splits_in_half() {
        let w = Weight::constant(2.0).unwrap();
        let cfg = SplitConfig::new(1.5, 2.0, 4).unwrap();
        for mode in [SplitMode::Log, SplitMode::Entropy] {
            let s = split(&w, &Interval::unit(), &cfg, mode).unwrap();
            assert_eq!(s.alpha, 0.5);
        }
        let tree = build_partition(&w, &cfg, SplitMode::Log).unwrap();
        assert_eq!(tree.leaves().len(), 16);
        assert!(tree.leaves().iter().all(|l| (l.interval.len() - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn identity_splits_in_half_for_log() {
        let cfg = SplitConfig::new(E / 2.0 * 1.01, E, 1).unwrap();
        let s = split(&identity(), &Interval::unit(), &cfg, SplitMode::Log).unwrap();
        assert_eq!(s.alpha, 0.5);
    }

    #[test]
    fn large_jump_moves_the_split() {
        // RH_1 of this step is about 3.96941
        let w = Weight::step(&[0.7], &[1.0, 1000.0]).unwrap();
        let cfg = SplitConfig::new(3.9695, 3.9698, 1).unwrap();
        let s = split(&w, &Interval::unit(), &cfg, SplitMode::Entropy).unwrap();
        assert_eq!(s.alpha, 0.71);
        // oracle: the midpoint split leaves Ω_{Q1}, the returned one does not
        let domain = Domain::new(Coordinates::Entropy, cfg.q1);
        let dense = |a: f64| {
            let (l, r) = Interval::unit().split_at_ratio(a).unwrap();
            let (p, q) = (SplitMode::Entropy.point(&w, &l), SplitMode::Entropy.point(&w, &r));
            (0..=1000).map(|i| domain.excess(p.lerp(q, i as f64 / 1000.0))).fold(f64::MIN, f64::max)
        };
        assert!(dense(0.5) > 0.0);
        assert!(dense(0.71) <= 1e-12);
        assert!(dense(0.58) > 0.0);
        let tight = SplitConfig { delta0: 0.45, ..cfg };
        assert!(matches!(
            split(&w, &Interval::unit(), &tight, SplitMode::Entropy),
            Err(Error::SplitFailure { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(SplitConfig::new(2.0, 1.5, 3).is_err());
        let mut cfg = SplitConfig::new(1.5, 2.0, 3).unwrap();
        cfg.delta0 = 0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn tree_structure_and_martingale_property() {
        let cfg = SplitConfig::new(E / 2.0 * 1.1, E / 2.0 * 1.1 * 1.2, 8).unwrap();
        let w = identity();
        let tree = build_partition(&w, &cfg, SplitMode::Log).unwrap();
        assert_eq!(tree.leaves().len(), 256);
        let bound = (1.0 - cfg.delta0).powi(8);
        assert!(tree.leaves().iter().all(|l| l.interval.len() <= bound + 1e-15));
        tree.walk(&mut |n| {
            if let [l, r] = n.children.as_slice() {
                assert_eq!(l.interval.a(), n.interval.a());
                assert_eq!(l.interval.b(), r.interval.a());
                assert_eq!(r.interval.b(), n.interval.b());
                let (a, b) = (l.interval.len() / n.interval.len(), r.interval.len() / n.interval.len());
                let x = a * l.point.x + b * r.point.x;
                let y = a * l.point.y + b * r.point.y;
                assert!((x - n.point.x).abs() < 1e-12 && (y - n.point.y).abs() < 1e-12);
            }
        });
    }

    #[test]
    fn chain_on_identity() {
        let q = E / 2.0 * 1.1;
        let cfg = SplitConfig::new(q, 1.2 * q, 8).unwrap();
        let w = identity();
        let tree = build_partition(&w, &cfg, SplitMode::Log).unwrap();
        let surface = BellmanSurface::ainf_upper(cfg.q1).unwrap();
        let r = chain_verify(&surface, &w, &tree).unwrap();
        assert_eq!(r.sums.len(), 9);
        assert!(r.passed(), "{r:?}");
        assert!((r.target + 0.25).abs() < 1e-15);
    }

    #[test]
    fn chain_on_constant_is_flat() {
        let w = Weight::constant(3.0).unwrap();
        let cfg = SplitConfig::new(1.5, 2.0, 3).unwrap();
        let tree = build_partition(&w, &cfg, SplitMode::Entropy).unwrap();
        let s = BellmanSurface::gehring(2.0, 0.1).unwrap();
        let r = chain_verify(&s, &w, &tree).unwrap();
        assert!(r.sums.iter().all(|v| (v - 3f64.powf(1.1)).abs() < 1e-12));
        assert!(r.passed());
    }

    #[test]
    fn convergence_shrinks() {
        let cfg = SplitConfig::new(E / 2.0 * 1.1, E / 2.0 * 1.1 * 1.2, 12).unwrap();
        let w = identity();
        let tree = build_partition(&w, &cfg, SplitMode::Log).unwrap();
        let errs = convergence_errors(&w, &tree, SplitMode::Log, 100).unwrap();
        assert_eq!(errs.len(), 13);
        assert!(errs[12] < 0.01 * errs[0], "{errs:?}");
    }

    #[test]
    fn out_of_domain_node_is_named() {
        // RH_1 of t on [0, 1] is ln 2 - 1/2 ≈ 0.19
        let cfg = SplitConfig::new(0.1, 0.2, 2).unwrap();
        match build_partition(&identity(), &cfg, SplitMode::Entropy) {
            Err(Error::Domain(msg)) => assert!(msg.contains("root"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}
