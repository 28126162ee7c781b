//! Per-module invariant checks on fixed seeds. `selftest` runs these after
//! the acceptance criteria; the property tests cover the same ground on
//! random inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acceptance::Outcome;
use crate::bellman::{BellmanPoint, BellmanSurface, Domain, SurfaceKind};
use crate::constants::{
    ainf_constant, ap_constant, rh1_constant, rh1_doubleprime_constant, rh1_prime_constant, rhp_constant,
};
use crate::dyadic::{build_partition, chain_verify, convergence_errors, SplitConfig, SplitMode};
use crate::error::Result;
use crate::extremals::{
    attainment_check, build_extremal, constant_attainment, divergence_probe, ExtremalFamily, ExtremalSpec,
};
use crate::oracle::{corpus, random_glued_power, random_step};
use crate::solvers::{eps_minus, gamma_entropy_roots, gamma_log, gehring_sharp_eps};
use crate::weights::{Interval, Moment, Weight};

/// Seed shared by all invariant checks.
pub const SEED: u64 = 11;

type Check = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("weights: Jensen on 1000 pairs", jensen),
    ("weights: truncation is a pointwise median", truncation_median),
    ("weights: moment additivity", additivity),
    ("constants: lower bounds", constant_lower_bounds),
    ("constants: monotone in the exponent", exponent_monotonicity),
    ("constants: scaling invariance", scaling_invariance),
    ("constants: grid refinement", grid_refinement),
    ("solvers: root certification on random Q", solver_roots),
    ("solvers: sharp Gehring gap decreases in K", gehring_monotone),
    ("bellman: tangent residuals and brackets", tangent_brackets),
    ("bellman: bounds against corpus weights", bellman_bounds),
    ("bellman: Gehring boundary values", gehring_boundary),
    ("bellman: Lipschitz sweep", lipschitz_sweep),
    ("extremals: class constraints", class_constraints),
    ("extremals: attainment on random targets", attainment_random),
    ("extremals: interior glue reproduces m w", interior_glue),
    ("extremals: critical probe increases", probe_increases),
    ("dyadic: splits and martingale on corpus trees", corpus_trees),
    ("dyadic: convergence to the weight", dyadic_convergence),
];

/// Runs every invariant check; ids start at 101.
pub fn run_invariants() -> Vec<Outcome> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
            Outcome { id: 101 + i as u32, name: name.to_string(), passed, detail }
        })
        .collect()
}

fn random_weight(rng: &mut ChaCha8Rng) -> Weight {
    if rng.gen_bool(0.5) {
        random_step(rng)
    } else {
        random_glued_power(rng)
    }
}

fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
    let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
    let (a, b) = (a.min(b), a.max(b));
    Interval::new(a, b.max(a + 1e-3).min(1.0)).unwrap_or_else(|_| Interval::unit())
}

fn jensen() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let w = random_weight(&mut rng);
        let i = random_interval(&mut rng);
        let m = w.moment(&i, Moment::W);
        let gap = m * m.ln() - w.moment(&i, Moment::WLogW);
        worst = worst.max(gap / m.abs().max(1.0));
    }
    Ok((worst <= 1e-12, format!("max (m w log m w - m w log w) = {worst:.2e}")))
}

fn truncation_median() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for w in corpus(SEED) {
        for n in [2.0, 10.0, 100.0] {
            let t = w.truncate(n)?;
            for k in 0..500 {
                let s = (k as f64 + 0.5) / 500.0;
                let (v, tv) = (w.eval(s)?, t.eval(s)?);
                let median = v.clamp(1.0 / n, n);
                if tv < 1.0 / n * (1.0 - 1e-12) || tv > n * (1.0 + 1e-12) {
                    worst = f64::INFINITY;
                }
                worst = worst.max((tv - median).abs() / median);
            }
        }
    }
    Ok((worst <= 1e-12, format!("max relative gap to median(1/n, w, n) = {worst:.2e}")))
}

fn additivity() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let w = random_weight(&mut rng);
        let i = random_interval(&mut rng);
        let mut cuts: Vec<f64> =
            (0..rng.gen_range(1..6)).map(|_| i.a() + i.len() * rng.gen::<f64>()).collect();
        cuts.push(i.a());
        cuts.push(i.b());
        cuts.sort_by(f64::total_cmp);
        for kind in [Moment::W, Moment::LogW, Moment::WLogW, Moment::WPow(1.5)] {
            let whole = i.len() * w.moment(&i, kind);
            let parts: f64 =
                cuts.windows(2).filter(|c| c[1] > c[0]).map(|c| w.integral(c[0], c[1], kind)).sum();
            worst = worst.max((whole - parts).abs() / whole.abs().max(1.0));
        }
    }
    Ok((worst <= 1e-12, format!("max relative gap over 200 partitions × 4 moments = {worst:.2e}")))
}

fn constant_lower_bounds() -> Result<(bool, String)> {
    let (mut rh, mut ai) = (f64::INFINITY, f64::INFINITY);
    for w in corpus(SEED) {
        rh = rh.min(rh1_constant(&w, 101).value);
        ai = ai.min(ainf_constant(&w, 101).value);
    }
    Ok((rh >= 0.0 && ai >= 1.0, format!("min RH_1 = {rh:.4}, min A_inf = {ai:.4}")))
}

fn exponent_monotonicity() -> Result<(bool, String)> {
    let mut ok = true;
    for w in corpus(SEED).iter().step_by(4) {
        let rhp: Vec<f64> = [1.5, 2.0, 3.0]
            .iter()
            .map(|&p| rhp_constant(w, p, 101).map(|e| e.value))
            .collect::<Result<_>>()?;
        let ap: Vec<f64> = [1.5, 2.0, 3.0]
            .iter()
            .map(|&p| ap_constant(w, p, 101).map(|e| e.value))
            .collect::<Result<_>>()?;
        ok &= rhp.windows(2).all(|v| v[0] <= v[1] * (1.0 + 1e-12));
        ok &= ap.windows(2).all(|v| v[1] <= v[0] * (1.0 + 1e-12));
    }
    Ok((ok, "RH_p nondecreasing, A_p nonincreasing in p ∈ {1.5, 2, 3} on 5 weights".into()))
}

fn scaling_invariance() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let all = |w: &Weight| -> Result<[f64; 6]> {
        Ok([
            rh1_constant(w, 41).value,
            ainf_constant(w, 41).value,
            rhp_constant(w, 2.0, 41)?.value,
            ap_constant(w, 2.0, 41)?.value,
            rh1_prime_constant(w, 16).value,
            rh1_doubleprime_constant(w, 41).value,
        ])
    };
    for w in corpus(SEED).iter().step_by(7) {
        let base = all(w)?;
        for c in [0.1, 7.0, 1000.0] {
            let scaled = all(&w.rescale(c)?)?;
            for (a, b) in base.iter().zip(scaled) {
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
    }
    Ok((
        worst <= 1e-10,
        format!("max relative change of six constants under c ∈ {{0.1, 7, 1000}}: {worst:.2e}"),
    ))
}

fn grid_refinement() -> Result<(bool, String)> {
    let mut ok = true;
    for w in corpus(SEED).iter().step_by(3) {
        // 51 uniform points are a subset of 101
        ok &= rh1_constant(w, 51).value <= rh1_constant(w, 101).value;
        ok &= ainf_constant(w, 51).value <= ainf_constant(w, 101).value;
    }
    Ok((ok, "resolution 51 never exceeds resolution 101".into()))
}

fn solver_roots() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ok = true;
    let mut worst_id: f64 = 0.0;
    for _ in 0..20 {
        let q = (0.05f64.ln() + rng.gen::<f64>() * 1000f64.ln()).exp();
        let (gm, gp) = gamma_entropy_roots(q)?;
        let e = eps_minus(q)?;
        let mut roots = vec![gm, gp, e];
        if q > 1.0 {
            roots.push(gamma_log(q)?);
        }
        for r in &roots {
            ok &= r.residual.abs() <= 1e-12 && r.bracket.0 < r.root && r.root < r.bracket.1;
        }
        for t in [gm.root, gp.root] {
            ok &= (t - t.ln() - q - 1.0).abs() <= 1e-12 * (q + 1.0);
        }
        ok &= gm.root < 1.0 && 1.0 < gp.root;
        worst_id = worst_id.max((e.root * (gp.root - 1.0) - 1.0).abs());
    }
    Ok((
        ok && worst_id <= 1e-10,
        format!("20 random Q in (0.05, 50); max |ε_-(γ_+ - 1) - 1| = {worst_id:.2e}"),
    ))
}

fn gehring_monotone() -> Result<(bool, String)> {
    let mut ok = true;
    for p in [1.5, 2.0, 3.0] {
        let eps: Vec<f64> = (1..=30)
            .map(|i| gehring_sharp_eps(p, 1.0 + 0.1 * i as f64).map(|r| r.root))
            .collect::<Result<_>>()?;
        ok &= eps.windows(2).all(|e| e[1] < e[0]);
    }
    Ok((ok, "strictly decreasing on K ∈ {1.1, ..., 4} for p ∈ {1.5, 2, 3}".into()))
}

fn surfaces(q: f64) -> Result<Vec<BellmanSurface>> {
    Ok(vec![
        BellmanSurface::ainf_upper(q)?,
        BellmanSurface::gehring_fraction(q, 0.5)?,
        BellmanSurface::ainf_lower(q)?,
    ])
}

fn tangent_brackets() -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for q in [1.2, 2.0, 8.0] {
        for s in surfaces(q)? {
            for p in s.sample_interior(200, SEED, 1e-3, 1e3, 0.0) {
                let r = s.tangent_root(p)?;
                let (g, v, x) = (s.gamma(), r.root, p.x);
                worst = worst.max(r.residual.abs() / (1.0 + p.y.abs()));
                ok &= match s.kind() {
                    SurfaceKind::AinfUpper => g * x <= v && v <= x,
                    SurfaceKind::Gehring => v <= x && x <= g * v * (1.0 + 1e-15),
                    SurfaceKind::AinfLower => v >= x,
                };
            }
        }
    }
    Ok((ok && worst <= 1e-12, format!("max scaled residual {worst:.2e} over 1800 points")))
}

fn bellman_bounds() -> Result<(bool, String)> {
    let unit = Interval::unit();
    let mut worst = f64::NEG_INFINITY;
    for w in corpus(SEED) {
        let rq = rh1_constant(&w, 201).value.max(1e-3) * 1.05;
        let aq = ainf_constant(&w, 201).value * 1.05;
        let m = |k| w.moment(&unit, k);
        let log_point = BellmanPoint::new(m(Moment::W), m(Moment::LogW));
        let ent_point = BellmanPoint::new(m(Moment::W), m(Moment::WLogW));
        let upper = BellmanSurface::ainf_upper(aq)?;
        worst = worst.max(m(Moment::WLogW) - upper.evaluate(log_point)?);
        let gehring = BellmanSurface::gehring_fraction(rq, 0.5)?;
        let eps = gehring.eps().expect("gehring surfaces carry ε");
        worst = worst.max(m(Moment::WPow(1.0 + eps)) - gehring.evaluate(ent_point)?);
        let lower = BellmanSurface::ainf_lower(rq)?;
        worst = worst.max(lower.evaluate(ent_point)? - m(Moment::LogW));
    }
    Ok((worst <= 1e-12, format!("max violation over 20 weights × 3 surfaces = {worst:.2e}")))
}

fn gehring_boundary() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for q in [0.5, 1.0, 5.0] {
        for frac in [0.1, 0.5, 0.9] {
            let s = BellmanSurface::gehring_fraction(q, frac)?;
            let eps = s.eps().expect("gehring surfaces carry ε");
            for k in 0..50 {
                let v = (k as f64 / 49.0 * 6.0 - 3.0).exp();
                let b = s.evaluate(BellmanPoint::new(v, v * v.ln()))?;
                worst = worst.max((b - v.powf(1.0 + eps)).abs() / v.powf(1.0 + eps));
            }
        }
    }
    Ok((worst <= 1e-12, format!("max |B(v, v log v) - v^(1+ε)| relative = {worst:.2e}")))
}

fn lipschitz_sweep() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for q in [1.5, 5.0] {
        for s in surfaces(q)? {
            let domain: Domain = s.domain();
            let (nx, nt) = (120, 40);
            let grid: Vec<Vec<BellmanPoint>> = (0..nx)
                .map(|i| {
                    let x = (0.1f64.ln() + i as f64 / (nx - 1) as f64 * 100f64.ln()).exp();
                    (0..nt).map(|j| domain.point_at(x, 0.01 + 0.98 * j as f64 / (nt - 1) as f64)).collect()
                })
                .collect();
            let mut step = |p: BellmanPoint, r: BellmanPoint| -> Result<()> {
                let (gp, gr) = (s.gradient(p)?, s.gradient(r)?);
                let slope = gp.0.hypot(gp.1).max(gr.0.hypot(gr.1));
                let dist = (r.x - p.x).hypot(r.y - p.y);
                let diff = (s.evaluate(r)? - s.evaluate(p)?).abs();
                worst = worst.max(diff / (slope * dist).max(f64::MIN_POSITIVE));
                Ok(())
            };
            for i in 0..nx {
                for j in 0..nt {
                    if i + 1 < nx {
                        step(grid[i][j], grid[i + 1][j])?;
                    }
                    if j + 1 < nt {
                        step(grid[i][j], grid[i][j + 1])?;
                    }
                }
            }
        }
    }
    // mean value theorem with the gradient at either end plus curvature slack
    Ok((worst <= 1.5, format!("max |ΔB| / (max |∇B| |Δp|) = {worst:.4}")))
}

fn class_constraints() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    let targets = [
        (ExtremalFamily::GehringBoundary, 1.0, None),
        (ExtremalFamily::Funny, 1.0, None),
        (ExtremalFamily::GehringBoundary, 2.5, None),
        (ExtremalFamily::Funny, 0.5, None),
    ];
    for (family, q, target) in targets {
        let c = constant_attainment(&ExtremalSpec::new(family, q, target), 300)?;
        ok &= c.measured.value <= q + 1e-6 && (c.full_interval - q).abs() <= 1e-6;
        parts.push(format!("{family}({q}) {:.7}", c.measured.value));
    }
    for (family, q) in [(ExtremalFamily::Ainf, 2.0), (ExtremalFamily::GehringInterior, 1.0)] {
        let coords = if family == ExtremalFamily::Ainf {
            crate::bellman::Coordinates::Log
        } else {
            crate::bellman::Coordinates::Entropy
        };
        let target = Domain::new(coords, q).point_at(1.5, 0.6);
        let c = constant_attainment(&ExtremalSpec::new(family, q, Some(target)), 300)?;
        ok &= (c.measured.value - q).abs() <= 1e-6;
        parts.push(format!("{family}({q}) {:.7}", c.measured.value));
    }
    Ok((ok, parts.join(", ")))
}

fn attainment_random() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for family in [ExtremalFamily::Ainf, ExtremalFamily::GehringInterior, ExtremalFamily::GehringBoundary] {
        for _ in 0..50 {
            // the upper A_inf surface needs Q > 1
            let q = 1.2 + 4.8 * rng.gen::<f64>();
            let x = (0.2f64.ln() + rng.gen::<f64>() * 25f64.ln()).exp();
            let theta = 0.02 + 0.96 * rng.gen::<f64>();
            let (target, eps) = match family {
                ExtremalFamily::Ainf => {
                    (Domain::new(crate::bellman::Coordinates::Log, q).point_at(x, theta), None)
                }
                _ => (
                    Domain::new(crate::bellman::Coordinates::Entropy, q).point_at(x, theta),
                    Some(eps_minus(q)?.root * (0.1 + 0.8 * rng.gen::<f64>())),
                ),
            };
            let a = attainment_check(&ExtremalSpec::new(family, q, Some(target)), eps)?;
            worst = worst.max(a.gap);
        }
    }
    let funny = attainment_check(&ExtremalSpec::new(ExtremalFamily::Funny, 1.0, None), None)?;
    worst = worst.max(funny.gap);
    Ok((worst <= 1e-6, format!("max relative gap over 150 targets and the funny weight = {worst:.2e}")))
}

fn interior_glue() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for q in [0.5, 1.0, 3.0] {
        let domain = Domain::new(crate::bellman::Coordinates::Entropy, q);
        for k in 0..20 {
            let target = domain.point_at(0.5 + 0.2 * k as f64, 0.05 * k as f64);
            let e = build_extremal(&ExtremalSpec::new(ExtremalFamily::GehringInterior, q, Some(target)))?;
            worst = worst.max((e.weight.moment(&Interval::unit(), Moment::W) - target.x).abs() / target.x);
        }
    }
    Ok((worst <= 1e-12, format!("max relative |m w - x| = {worst:.2e}")))
}

fn probe_increases() -> Result<(bool, String)> {
    let w = build_extremal(&ExtremalSpec::new(ExtremalFamily::GehringBoundary, 1.0, None))?.weight;
    let q = 1.0 + eps_minus(1.0)?.root;
    let deltas: Vec<f64> = (1..=30).map(|k| 10f64.powi(-k)).collect();
    let v = divergence_probe(&w, q, &deltas)?;
    Ok((
        v.windows(2).all(|p| p[1] > p[0]),
        format!("∫_δ^1 w^q from {:.3} to {:.3} over δ = 1e-1..1e-30", v[0], v[29]),
    ))
}

fn corpus_trees() -> Result<(bool, String)> {
    let mut alphas_ok = true;
    let mut chains_ok = true;
    let mut worst_mart: f64 = 0.0;
    for w in corpus(crate::acceptance::CORPUS_SEED) {
        let rq = rh1_constant(&w, 201).value.max(1e-3) * 1.05;
        let aq = ainf_constant(&w, 201).value * 1.05;
        for (mode, q) in [(SplitMode::Entropy, rq), (SplitMode::Log, aq)] {
            let cfg = SplitConfig::new(q, 1.2 * q, 10)?;
            let tree = build_partition(&w, &cfg, mode)?;
            tree.walk(&mut |n| {
                if let Some(a) = n.alpha {
                    alphas_ok &= (cfg.delta0..=1.0 - cfg.delta0).contains(&a);
                }
                if let [l, r] = &n.children[..] {
                    let (sl, sr) = (l.interval.len() / n.interval.len(), r.interval.len() / n.interval.len());
                    let x = sl * l.point.x + sr * r.point.x;
                    let y = sl * l.point.y + sr * r.point.y;
                    worst_mart = worst_mart
                        .max((x - n.point.x).abs() / n.point.x.abs().max(1.0))
                        .max((y - n.point.y).abs() / n.point.y.abs().max(1.0));
                }
            });
            let chain_surfaces = match mode {
                SplitMode::Entropy => {
                    vec![BellmanSurface::gehring_fraction(cfg.q1, 0.5)?, BellmanSurface::ainf_lower(cfg.q1)?]
                }
                SplitMode::Log => vec![BellmanSurface::ainf_upper(cfg.q1)?],
            };
            for s in chain_surfaces {
                chains_ok &= chain_verify(&s, &w, &tree)?.passed();
            }
        }
    }
    Ok((
        alphas_ok && chains_ok && worst_mart <= 1e-12,
        format!(
            "40 trees at depth 10: alphas {alphas_ok}, chains {chains_ok}, martingale gap {worst_mart:.2e}"
        ),
    ))
}

fn dyadic_convergence() -> Result<(bool, String)> {
    let w = Weight::step(&[0.3, 0.55], &[1.0, 4.0, 2.0])?;
    let aq = ainf_constant(&w, 201).value * 1.05;
    let cfg = SplitConfig::new(aq, 1.2 * aq, 12)?;
    let tree = build_partition(&w, &cfg, SplitMode::Log)?;
    let errs = convergence_errors(&w, &tree, SplitMode::Log, 100)?;
    let last = *errs.last().expect("depth 12 tree");
    Ok((last <= 1e-2 * errs[0], format!("max error {:.3e} at depth 0, {last:.3e} at depth 12", errs[0])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_sequential() {
        assert_eq!(CHECKS.len(), 19);
    }
}
