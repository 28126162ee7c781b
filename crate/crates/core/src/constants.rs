//! Weight constants estimated by sup-scans over grids of subintervals.
//!
//! The candidate intervals are all pairs of points drawn from a uniform grid
//! together with every breakpoint of the weight. Scans run in parallel and
//! reduce with a deterministic max (ties go to the lexicographically smallest
//! interval).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::tanh_sinh;
use crate::serde_ext;
use crate::weights::{Interval, Moment, Weight};

pub const DEFAULT_RESOLUTION: usize = 201;
/// Resolution for the nested-scan constants (`RH_1'`, `RH_1''`).
pub const DEFAULT_NESTED_RESOLUTION: usize = 64;

/// Grid points closer than this are merged.
const MERGE_TOL: f64 = 1e-12;

/// A sup estimate together with the interval attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(with = "serde_ext::ext_f64")]
    pub value: f64,
    pub interval: Interval,
}

impl Estimate {
    fn better(self, other: Estimate) -> Estimate {
        match self.value.total_cmp(&other.value) {
            std::cmp::Ordering::Greater => self,
            std::cmp::Ordering::Less => other,
            std::cmp::Ordering::Equal => {
                if other.interval.lex_cmp(&self.interval).is_lt() {
                    other
                } else {
                    self
                }
            }
        }
    }
}

/// An estimate for an exponent-dependent constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub p: f64,
    #[serde(flatten)]
    pub estimate: Estimate,
}

/// Every supported constant of one weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub a_p: Vec<ExponentEstimate>,
    pub a_inf: Option<Estimate>,
    pub rh_p: Vec<ExponentEstimate>,
    pub rh_1: Option<Estimate>,
    pub rh_1_prime: Option<Estimate>,
    pub rh_1_doubleprime: Option<Estimate>,
    pub grid_size: usize,
}

/// Names accepted by [`constants_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstantKind {
    Ap,
    Ainf,
    Rhp,
    Rh1,
    Rh1Prime,
    Rh1DoublePrime,
}

impl std::str::FromStr for ConstantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "ap" => Self::Ap,
            "ainf" => Self::Ainf,
            "rhp" => Self::Rhp,
            "rh1" => Self::Rh1,
            "rh1prime" | "rh1'" => Self::Rh1Prime,
            "rh1doubleprime" | "rh1''" => Self::Rh1DoublePrime,
            other => return Err(Error::Parameter(format!("unknown constant `{other}`"))),
        })
    }
}

/// Sorted grid points: uniform grid of `resolution` points plus breakpoints.
pub fn scan_points(w: &Weight, resolution: usize) -> Vec<f64> {
    points_in(w, &Interval::unit(), resolution, None)
}

fn points_in(w: &Weight, interval: &Interval, resolution: usize, extra: Option<f64>) -> Vec<f64> {
    let n = resolution.max(2);
    let (a, b) = (interval.a(), interval.b());
    let mut pts: Vec<f64> =
        (0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect();
    pts.extend(w.breakpoints().into_iter().filter(|t| *t > a && *t < b));
    if let Some(t) = extra {
        pts.push(t);
    }
    pts.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(pts.len());
    for t in pts {
        match merged.last() {
            Some(&last) if t - last <= MERGE_TOL => {
                // keep exact endpoints and the forced point when merging
                if t == b || Some(t) == extra {
                    *merged.last_mut().unwrap() = t;
                }
            }
            _ => merged.push(t),
        }
    }
    merged
}

/// All candidate intervals for a sup-scan.
pub fn scan_grid(w: &Weight, resolution: usize) -> Vec<Interval> {
    let pts = scan_points(w, resolution);
    let mut out = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            out.push(Interval::new(pts[i], pts[j]).expect("grid points are ordered"));
        }
    }
    out
}

/// Maximizes `score` over the scan grid.
pub fn sup_scan<F>(w: &Weight, resolution: usize, score: F) -> Estimate
where
    F: Fn(&Interval) -> f64 + Sync,
{
    sup_scan_over(&scan_points(w, resolution), score)
}

/// Maximizes `score` over all intervals with endpoints in `pts`, which must
/// be sorted, distinct and at least two.
pub fn sup_scan_over<F>(pts: &[f64], score: F) -> Estimate
where
    F: Fn(&Interval) -> f64 + Sync,
{
    let n = pts.len();
    assert!(n >= 2, "a scan needs at least two points");
    (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<Estimate> = None;
            for j in i + 1..n {
                let interval = Interval::new(pts[i], pts[j]).expect("grid points are ordered");
                let value = score(&interval);
                let cand = Estimate { value: if value.is_nan() { f64::INFINITY } else { value }, interval };
                best = Some(match best {
                    Some(b) => b.better(cand),
                    None => cand,
                });
            }
            best.expect("at least one interval per row")
        })
        .reduce_with(Estimate::better)
        .expect("grid has at least two points")
}

/// Sorts `pts` and merges points closer than the grid merge tolerance.
pub fn merge_points(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|t, last| *t - *last <= MERGE_TOL);
    pts
}

/// Normalized entropy `m(w log w)/m w - log m w` on one interval.
pub fn rh1_on(w: &Weight, interval: &Interval) -> f64 {
    if w.constant_on(interval).is_some() {
        return 0.0;
    }
    let x = w.moment(interval, Moment::W);
    let e = w.moment(interval, Moment::WLogW);
    if !e.is_finite() {
        return f64::INFINITY;
    }
    e / x - x.ln()
}

/// `m w · exp(-m log w)` on one interval.
pub fn ainf_on(w: &Weight, interval: &Interval) -> f64 {
    if w.constant_on(interval).is_some() {
        return 1.0;
    }
    w.moment(interval, Moment::W) * (-w.moment(interval, Moment::LogW)).exp()
}

/// `(m w^p)^{1/p} / m w` on one interval.
pub fn rhp_on(w: &Weight, interval: &Interval, p: f64) -> f64 {
    if w.constant_on(interval).is_some() {
        return 1.0;
    }
    let mp = w.moment(interval, Moment::WPow(p));
    if !mp.is_finite() {
        return f64::INFINITY;
    }
    mp.powf(1.0 / p) / w.moment(interval, Moment::W)
}

/// `m w · (m w^{-1/(p-1)})^{p-1}` on one interval.
pub fn ap_on(w: &Weight, interval: &Interval, p: f64) -> f64 {
    if w.constant_on(interval).is_some() {
        return 1.0;
    }
    let dual = w.moment(interval, Moment::WPow(-1.0 / (p - 1.0)));
    if !dual.is_finite() {
        return f64::INFINITY;
    }
    w.moment(interval, Moment::W) * dual.powf(p - 1.0)
}

pub fn rh1_constant(w: &Weight, resolution: usize) -> Estimate {
    sup_scan(w, resolution, |i| rh1_on(w, i))
}

pub fn ainf_constant(w: &Weight, resolution: usize) -> Estimate {
    sup_scan(w, resolution, |i| ainf_on(w, i))
}

pub fn rhp_constant(w: &Weight, p: f64, resolution: usize) -> Result<Estimate> {
    if !(p > 1.0) {
        return Err(Error::Parameter(format!("RH_p needs p > 1, got {p}")));
    }
    Ok(sup_scan(w, resolution, |i| rhp_on(w, i, p)))
}

pub fn ap_constant(w: &Weight, p: f64, resolution: usize) -> Result<Estimate> {
    if !(p > 1.0) {
        return Err(Error::Parameter(format!("A_p needs p > 1, got {p}")));
    }
    Ok(sup_scan(w, resolution, |i| ap_on(w, i, p)))
}

/// Uncentered maximal function of `w χ_I` at `t ∈ I`.
///
/// Sup over grid subintervals of `I` containing `t` (the grid includes `t`
/// itself), together with the one-sided limits of `w` at `t`.
pub fn maximal_function(w: &Weight, interval: &Interval, t: f64, resolution: usize) -> Result<f64> {
    if !interval.contains(t) {
        return Err(Error::Domain(format!("t = {t} is outside [{}, {}]", interval.a(), interval.b())));
    }
    let pts = points_in(w, interval, resolution, Some(t));
    let prims: Vec<f64> = pts.iter().map(|&p| w.primitive(p)).collect();
    let k = pts.partition_point(|&p| p < t);
    let mut best = limits_max(w, interval, t);
    for i in 0..=k.min(pts.len() - 1) {
        for j in k.max(i + 1)..pts.len() {
            if pts[i] <= t && t <= pts[j] {
                best = best.max((prims[j] - prims[i]) / (pts[j] - pts[i]));
            }
        }
    }
    Ok(best)
}

fn limits_max(w: &Weight, interval: &Interval, t: f64) -> f64 {
    let (l, r) = w.one_sided_limits(t);
    let mut m = 0.0f64;
    if t > interval.a() {
        m = m.max(l.unwrap_or(0.0));
    }
    if t < interval.b() {
        m = m.max(r.unwrap_or(0.0));
    }
    m
}

/// `(1/m_I w) · m_I M(w χ_I)` with `M` sampled at cell midpoints of a grid of
/// `resolution` points inside `I`.
pub fn rh1_prime_on(w: &Weight, interval: &Interval, resolution: usize) -> f64 {
    let pts = points_in(w, interval, resolution, None);
    let m = pts.len();
    let prims: Vec<f64> = pts.iter().map(|&p| w.primitive(p)).collect();
    let avg = |i: usize, j: usize| (prims[j] - prims[i]) / (pts[j] - pts[i]);

    // best[k]: max over grid intervals [p_i, p_j] with i <= k < j
    let mut best = vec![f64::NEG_INFINITY; m - 1];
    let mut suffix = vec![f64::NEG_INFINITY; m];
    for i in 0..m - 1 {
        let mut run = f64::NEG_INFINITY;
        for j in (i + 1..m).rev() {
            run = run.max(avg(i, j));
            suffix[j] = run;
        }
        for (k, slot) in best.iter_mut().enumerate().skip(i) {
            *slot = slot.max(suffix[k + 1]);
        }
    }

    let mut integral = 0.0;
    for k in 0..m - 1 {
        let (lo, hi) = (pts[k], pts[k + 1]);
        let mid = lo + 0.5 * (hi - lo);
        let pm = w.primitive(mid);
        let mut mk = best[k].max(w.eval(mid).unwrap_or(0.0));
        for j in k + 1..m {
            mk = mk.max((prims[j] - pm) / (pts[j] - mid));
        }
        for i in 0..=k {
            mk = mk.max((pm - prims[i]) / (mid - pts[i]));
        }
        integral += (hi - lo) * mk;
    }
    integral / interval.len() / w.moment(interval, Moment::W)
}

/// `[w]_{RH_1'}`; cost grows like `resolution^4`.
pub fn rh1_prime_constant(w: &Weight, resolution: usize) -> Estimate {
    sup_scan(w, resolution, |i| rh1_prime_on(w, i, resolution))
}

/// Young functions of the supported Luxemburg norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orlicz {
    /// `Φ(s) = s`
    L,
    /// `Φ(s) = s log(e + s)`
    LLogL,
    /// `Φ(s) = e^s - 1`
    ExpMinusOne,
}

impl Orlicz {
    fn phi(self, s: f64) -> f64 {
        match self {
            Orlicz::L => s,
            Orlicz::LLogL => s * (std::f64::consts::E + s).ln(),
            Orlicz::ExpMinusOne => s.exp_m1(),
        }
    }
}

/// `(1/|I|) ∫_I Φ(w/λ)`.
pub fn orlicz_average(w: &Weight, interval: &Interval, phi: Orlicz, lambda: f64) -> f64 {
    let mut total = 0.0;
    for piece in w.pieces() {
        let lo = piece.support.a().max(interval.a());
        let hi = piece.support.b().min(interval.b());
        if hi <= lo {
            continue;
        }
        if piece.exponent == 0.0 {
            total += (hi - lo) * phi.phi(piece.coeff / lambda);
        } else {
            if phi == Orlicz::ExpMinusOne && lo == 0.0 && piece.exponent < 0.0 {
                return f64::INFINITY;
            }
            let (c, a) = (piece.coeff / lambda, piece.exponent);
            total += tanh_sinh(|t| phi.phi(c * t.powf(a)), lo, hi, 1e-13);
        }
        if !total.is_finite() {
            return f64::INFINITY;
        }
    }
    total / interval.len()
}

/// Luxemburg norm `inf{λ > 0 : (1/|I|) ∫_I Φ(w/λ) <= 1}`.
pub fn luxemburg_norm(w: &Weight, interval: &Interval, phi: Orlicz) -> f64 {
    let mean = w.moment(interval, Moment::W);
    if phi == Orlicz::L {
        return mean;
    }
    let f = |lambda: f64| orlicz_average(w, interval, phi, lambda) - 1.0;
    // Φ(s) >= s, so λ = m w is still infeasible
    let lo = mean;
    let mut hi = 2.0 * mean;
    let mut guard = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 1100 {
            return f64::INFINITY;
        }
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = a + 0.5 * (b - a);
        if mid <= a || mid >= b || (b - a) <= 1e-15 * b {
            break;
        }
        if f(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    b
}

/// `‖w‖_{L log L, I} / ‖w‖_{L, I}` on one interval.
pub fn rh1_doubleprime_on(w: &Weight, interval: &Interval) -> f64 {
    luxemburg_norm(w, interval, Orlicz::LLogL) / luxemburg_norm(w, interval, Orlicz::L)
}

pub fn rh1_doubleprime_constant(w: &Weight, resolution: usize) -> Estimate {
    sup_scan(w, resolution, |i| rh1_doubleprime_on(w, i))
}

/// Both sides of the `p -> 1` limit identity on one interval:
/// `(p/(p-1)) log((m w^p)^{1/p} / m w)` and the normalized entropy.
pub fn rh1_limit_check(w: &Weight, interval: &Interval, p: f64) -> Result<(f64, f64)> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::Parameter(format!("limit check needs 1 < p < 2, got {p}")));
    }
    let mp = w.moment(interval, Moment::WPow(p));
    if !mp.is_finite() {
        return Err(Error::Divergent(format!("m_I w^{p} is infinite")));
    }
    let x = w.moment(interval, Moment::W);
    let lhs = (mp.ln() - p * x.ln()) / (p - 1.0);
    Ok((lhs, rh1_on(w, interval)))
}

/// Computes the requested constants.
pub fn constants_report(
    w: &Weight,
    which: &[ConstantKind],
    exponents: &[f64],
    resolution: usize,
    nested_resolution: usize,
) -> Result<ConstantsReport> {
    let has = |k: ConstantKind| which.contains(&k);
    let mut report = ConstantsReport {
        a_p: Vec::new(),
        a_inf: None,
        rh_p: Vec::new(),
        rh_1: None,
        rh_1_prime: None,
        rh_1_doubleprime: None,
        grid_size: scan_points(w, resolution).len(),
    };
    if has(ConstantKind::Ap) {
        for &p in exponents {
            report.a_p.push(ExponentEstimate { p, estimate: ap_constant(w, p, resolution)? });
        }
    }
    if has(ConstantKind::Ainf) {
        report.a_inf = Some(ainf_constant(w, resolution));
    }
    if has(ConstantKind::Rhp) {
        for &p in exponents {
            report.rh_p.push(ExponentEstimate { p, estimate: rhp_constant(w, p, resolution)? });
        }
    }
    if has(ConstantKind::Rh1) {
        report.rh_1 = Some(rh1_constant(w, resolution));
    }
    if has(ConstantKind::Rh1Prime) {
        report.rh_1_prime = Some(rh1_prime_constant(w, nested_resolution));
    }
    if has(ConstantKind::Rh1DoublePrime) {
        report.rh_1_doubleprime = Some(rh1_doubleprime_constant(w, nested_resolution));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Weight {
        Weight::power(1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_stretches_are_exact() {
        let c = Weight::constant(3.0).unwrap();
        assert_eq!(rh1_constant(&c, 201).value, 0.0);
        assert_eq!(ainf_constant(&c, 201).value, 1.0);
        let s = Weight::step(&[0.5], &[0.3, 7.0]).unwrap();
        let left = Interval::new(0.1, 0.4).unwrap();
        assert_eq!((rh1_on(&s, &left), ainf_on(&s, &left), rhp_on(&s, &left, 2.0)), (0.0, 1.0, 1.0));
        assert!(rh1_on(&s, &Interval::unit()) > 0.0);
    }

    #[test]
    fn grid_counts() {
        let c = Weight::constant(2.0).unwrap();
        assert_eq!(scan_grid(&c, 3).len(), 3);
        assert_eq!(scan_grid(&c, 101).len(), 5050);
        let two = Weight::step(&[0.3], &[1.0, 2.0]).unwrap();
        assert_eq!(scan_points(&two, 2), vec![0.0, 0.3, 1.0]);
        assert_eq!(scan_grid(&two, 2).len(), 3);
    }

    #[test]
    fn constant_weight_constants() {
        let c = Weight::constant(3.0).unwrap();
        assert!(rh1_constant(&c, 11).value.abs() < 1e-14);
        assert!((ainf_constant(&c, 11).value - 1.0).abs() < 1e-14);
        assert!((rhp_constant(&c, 3.0, 11).unwrap().value - 1.0).abs() < 1e-14);
        assert!((ap_constant(&c, 3.0, 11).unwrap().value - 1.0).abs() < 1e-14);
        assert!((rh1_prime_constant(&c, 8).value - 1.0).abs() < 1e-13);
        let unit = Interval::unit();
        assert!((maximal_function(&c, &unit, 0.3, 11).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(rh1_limit_check(&c, &unit, 1.5).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn identity_weight_constants() {
        let w = t();
        let rh1 = rh1_constant(&w, 101);
        assert!((rh1.value - (2f64.ln() - 0.5)).abs() < 1e-13);
        assert_eq!(rh1.interval.a(), 0.0);
        let ainf = ainf_constant(&w, 101);
        assert!((ainf.value - std::f64::consts::E / 2.0).abs() < 1e-13);
        assert_eq!(ainf.interval.a(), 0.0);
        let rh2 = rhp_constant(&w, 2.0, 101).unwrap();
        assert!((rh2.value - 2.0 / 3f64.sqrt()).abs() < 1e-13);
        assert_eq!(ap_constant(&w, 2.0, 101).unwrap().value, f64::INFINITY);
        let sqrt = Weight::power(1.0, 0.5).unwrap();
        let a2 = ap_constant(&sqrt, 2.0, 101).unwrap();
        assert!((a2.value - 4.0 / 3.0).abs() < 1e-13);
        assert!(rhp_constant(&w, 1.0, 11).is_err());
        assert!(ap_constant(&w, 0.5, 11).is_err());
    }

    #[test]
    fn maximal_function_examples() {
        let w = t();
        let unit = Interval::unit();
        assert!((maximal_function(&w, &unit, 1.0, 200).unwrap() - 1.0).abs() < 1e-15);
        assert!((maximal_function(&w, &unit, 0.0, 200).unwrap() - 0.5).abs() < 1e-15);
        assert!(maximal_function(&w, &Interval::new(0.2, 0.4).unwrap(), 0.5, 10).is_err());
    }

    #[test]
    fn rh1_prime_identity_weight_is_three_halves() {
        // M(t χ_[0,b])(s) = (s + b)/2, whose average over [0,b] divided by b/2 is 3/2
        let v = rh1_prime_constant(&t(), 24).value;
        assert!((v - 1.5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn luxemburg_examples() {
        let unit = Interval::unit();
        let c = Weight::constant(2.5).unwrap();
        assert_eq!(luxemburg_norm(&c, &unit, Orlicz::L), 2.5);
        // χ_E + 1e-12 with E = [0, 1/2]: 1/log 3
        let chi = Weight::step(&[0.5], &[1.0 + 1e-12, 1e-12]).unwrap();
        let n = luxemburg_norm(&chi, &unit, Orlicz::ExpMinusOne);
        assert!((n - 1.0 / 3f64.ln()).abs() < 1e-9, "{n}");
        // exp-integrability fails for a singular power
        let sing = Weight::power(1.0, -0.5).unwrap();
        assert_eq!(luxemburg_norm(&sing, &unit, Orlicz::ExpMinusOne), f64::INFINITY);
        assert!(luxemburg_norm(&sing, &unit, Orlicz::LLogL).is_finite());
    }

    #[test]
    fn doubleprime_is_homogeneous() {
        let unit = Interval::unit();
        let a = rh1_doubleprime_on(&Weight::constant(1.0).unwrap(), &unit);
        let b = rh1_doubleprime_on(&Weight::constant(40.0).unwrap(), &unit);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn limit_identity_identity_weight() {
        let unit = Interval::unit();
        let target = 2f64.ln() - 0.5;
        let mut prev = f64::INFINITY;
        for p in [1.1, 1.01, 1.001] {
            let (lhs, rhs) = rh1_limit_check(&t(), &unit, p).unwrap();
            // closed form (p/(p-1)) [log 2 - (1/p) log(1+p)]
            let closed = p / (p - 1.0) * (2f64.ln() - (1.0 + p).ln() / p);
            assert!((lhs - closed).abs() < 1e-10);
            assert!((rhs - target).abs() < 1e-14);
            let gap = (lhs - rhs).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 2e-4);
        let sing = Weight::power(1.0, -0.8).unwrap();
        assert!(matches!(rh1_limit_check(&sing, &unit, 1.5), Err(Error::Divergent(_))));
    }

    #[test]
    fn report_roundtrips_through_json() {
        let w = Weight::power(1.0, -0.5).unwrap();
        let r = constants_report(
            &w,
            &[ConstantKind::Rh1, ConstantKind::Ainf, ConstantKind::Rhp, ConstantKind::Ap],
            &[2.0, 3.0],
            21,
            8,
        )
        .unwrap();
        assert_eq!(r.rh_p[0].estimate.value, f64::INFINITY);
        let text = serde_json::to_string(&r).unwrap();
        let back: ConstantsReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
