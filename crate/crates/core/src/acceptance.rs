//! The end-to-end verification suite. Each criterion returns an
//! [`Outcome`]; the test target and the `selftest` command print them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bellman::Domain;
use crate::bellman::{bounds_check_ainf, verify_hessian, BellmanPoint, BellmanSurface};
use crate::constants::{
    ainf_on, merge_points, rh1_constant, rh1_limit_check, rh1_on, rhp_constant, scan_points, sup_scan_over,
};
use crate::dyadic::{build_partition, chain_verify, segment_violation, SplitConfig, SplitMode};
use crate::error::Result;
use crate::extremals::{
    build, constant_attainment, divergence_probe, divergence_probe_log, ExtremalFamily, ExtremalSpec,
};
use crate::oracle::{corpus, quadrature_moment, random_triple, touches_singularity};
use crate::solvers::{
    e_sharpness_ratio, eps_minus, funny_asymptotic_ratio, funny_bound, gamma_entropy_roots, gamma_log,
    gehring_dim_n_eps, gehring_sharp_eps, good_lambda_log_condition, good_lambda_params, p_gehring_via_one,
};
use crate::weights::{Interval, Moment, Weight};

const E: f64 = std::f64::consts::E;

/// Slack for "≈" against a constant quoted to six significant digits.
const SIX_DIGITS: f64 = 5e-6;

/// Seed of the truncation corpus.
pub const CORPUS_SEED: u64 = 2024;
/// Seed of the Hessian samples.
pub const HESSIAN_SEED: u64 = 1;
/// Seed of the quadrature triples.
pub const TRIPLE_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn outcome(id: u32, name: &str, r: Result<(bool, String)>) -> Outcome {
    let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome { id, name: name.to_string(), passed, detail }
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<Outcome> {
    (1..=12).map(run).collect()
}

/// Runs criterion `id` (1 to 12).
pub fn run(id: u32) -> Outcome {
    match id {
        1 => outcome(1, "root certification", root_certification()),
        2 => outcome(2, "eps_minus identity", eps_identity()),
        3 => outcome(3, "sharp p-Gehring quadratics", sharp_gehring()),
        4 => outcome(4, "A_inf upper bound and sharpness", ainf_bounds()),
        5 => outcome(5, "A_inf under RH_1 exact value", funny()),
        6 => outcome(6, "Gehring attainment and blow-up", gehring_attainment()),
        7 => outcome(7, "Hessian suites", hessians()),
        8 => outcome(8, "RH_p to RH_1 limit", limit_identity()),
        9 => outcome(9, "truncation monotonicity", truncation()),
        10 => outcome(10, "dyadic chain", dyadic_chain()),
        11 => outcome(11, "dimension-n pipeline", dim_n_pipeline()),
        12 => outcome(12, "closed form vs quadrature", oracle_equivalence()),
        _ => Outcome { id, name: "unknown".into(), passed: false, detail: format!("no criterion {id}") },
    }
}

fn root_certification() -> Result<(bool, String)> {
    let g = gamma_log(E)?;
    let (gm, gp) = gamma_entropy_roots(1.0)?;
    let em = eps_minus(1.0)?;
    // residuals recomputed from the defining equations
    let r_g = (g.root - g.root.ln() - 2.0).abs();
    let r_m = (gm.root - gm.root.ln() - 2.0).abs();
    let r_p = (gp.root - gp.root.ln() - 2.0).abs();
    let r_e = (1.0 / em.root - (1.0 / em.root).ln_1p() - 1.0).abs();
    let values = (g.root - 0.158594).abs() <= SIX_DIGITS
        && (gm.root - 0.158594).abs() <= SIX_DIGITS
        && (gp.root - 3.146193).abs() <= SIX_DIGITS
        && (em.root - 0.465940).abs() <= SIX_DIGITS;
    let residuals = [r_g, r_m, r_p, r_e].iter().all(|r| *r <= 1e-12);
    Ok((
        values && residuals,
        format!(
            "γ(e) = {:.9}, γ± = ({:.9}, {:.9}), ε_-(1) = {:.9}; residuals {:.1e}, {:.1e}, {:.1e}, {:.1e}",
            g.root, gm.root, gp.root, em.root, r_g, r_m, r_p, r_e
        ),
    ))
}

fn eps_identity() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let q = (0.05f64.ln() + (1000f64).ln() * i as f64 / 19.0).exp();
        let e = eps_minus(q)?.root;
        let gp = gamma_entropy_roots(q)?.1.root;
        worst = worst.max((e - 1.0 / (gp - 1.0)).abs());
    }
    Ok((worst <= 1e-10, format!("max |ε_- - 1/(γ_+ - 1)| = {worst:.2e} over 20 Q in [0.05, 50]")))
}

fn sharp_gehring() -> Result<(bool, String)> {
    let a = gehring_sharp_eps(2.0, 2f64.sqrt())?.root;
    let b = gehring_sharp_eps(2.0, 2.0)?.root;
    let (ea, eb) = ((a - (2f64.sqrt() - 1.0)).abs(), (b - (-3.0 + 12f64.sqrt()) / 3.0).abs());
    Ok((
        ea <= 1e-10 && eb <= 1e-10,
        format!("K = √2: ε = {a:.12} (err {ea:.1e}); K = 2: ε = {b:.12} (err {eb:.1e})"),
    ))
}

fn ainf_bounds() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [1.5, 2.0, 10.0] {
        let r = bounds_check_ainf(q, 100)?;
        ok &= r.max_excess_low <= 1e-9 && r.max_excess_high <= 1e-9;
        parts.push(format!("Q = {q}: excess ({:.1e}, {:.1e})", r.max_excess_low, r.max_excess_high));
    }
    let ratio = e_sharpness_ratio(1e6)?;
    ok &= (ratio - E).abs() <= 0.02 * E;
    parts.push(format!("ratio at 1e6 = {ratio:.6}"));
    Ok((ok, parts.join("; ")))
}

fn funny() -> Result<(bool, String)> {
    let bound = funny_bound(1.0)?;
    let c = constant_attainment(&ExtremalSpec::new(ExtremalFamily::Funny, 1.0, None), 300)?;
    let ainf = c.funny_ainf.expect("funny family reports A_inf").value;
    let ratio = funny_asymptotic_ratio(8.0)?;
    let ok = (bound - 31.936).abs() <= 1e-3 * 31.936
        && (c.measured.value - 1.0).abs() <= 1e-6
        && (ainf - bound).abs() <= 1e-3
        && (ratio - 1.0).abs() <= 1e-3;
    Ok((
        ok,
        format!(
            "bound = {bound:.6}; measured RH_1 = {:.9}, A_inf = {ainf:.6}; ratio at Q = 8: {ratio:.6}",
            c.measured.value
        ),
    ))
}

fn gehring_attainment() -> Result<(bool, String)> {
    let spec = ExtremalSpec::new(ExtremalFamily::GehringBoundary, 1.0, None);
    let c = constant_attainment(&spec, 300)?;
    let w = build(&spec)?;
    let gp = gamma_entropy_roots(1.0)?.1.root;
    let avg = w.moment(&Interval::unit(), Moment::WPow(1.3));
    let bellman = BellmanSurface::gehring(1.0, 0.3)?.evaluate(BellmanPoint::new(gp, gp * gp.ln() + gp))?;
    let quoted = 3.146193 / 0.356143;
    let q = 1.0 + eps_minus(1.0)?.root;
    let deltas: Vec<f64> = (3..=12).map(|k| 10f64.powi(-k)).collect();
    let probe = divergence_probe(&w, q, &deltas)?;
    let probe_err = deltas.iter().zip(&probe).map(|(d, v)| (v - (1.0 / d).ln()).abs()).fold(0.0, f64::max);
    let far = divergence_probe_log(&w, q, &[1e6, 1.1e6])?;
    let ok = (c.measured.value - 1.0).abs() <= 1e-6
        && c.measured.value <= 1.0 + 1e-6
        && (avg - bellman).abs() <= 1e-4 * bellman
        && (avg - quoted).abs() <= 1e-4 * quoted
        && probe_err <= 1e-6
        && probe.windows(2).all(|p| p[1] > p[0])
        && far[1] > 1e6
        && far[1] > far[0];
    Ok((
        ok,
        format!(
            "RH_1 = {:.9}; m w^1.3 = {avg:.6} vs B = {bellman:.6}; probe err {probe_err:.1e}; at δ = e^-1.1e6: {:.1}",
            c.measured.value, far[1]
        ),
    ))
}

fn hessians() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [1.5, 5.0] {
        let up = verify_hessian(&BellmanSurface::ainf_upper(q)?, 1000, HESSIAN_SEED)?;
        let ge = verify_hessian(&BellmanSurface::gehring_fraction(q, 0.5)?, 1000, HESSIAN_SEED)?;
        let lo = verify_hessian(&BellmanSurface::ainf_lower(q)?, 1000, HESSIAN_SEED)?;
        ok &= up.passed && ge.passed && lo.passed;
        parts.push(format!(
            "Q = {q}: upper det {:.1e} B_yy <= {:.2e}; gehring max eig {:.1e}; lower min eig {:.1e}",
            up.max_relative_det, up.max_yy, ge.extreme_eigenvalue, lo.extreme_eigenvalue
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn limit_identity() -> Result<(bool, String)> {
    let w = Weight::power(1.0, 1.0)?;
    let target = 2f64.ln() - 0.5;
    let mut gaps = Vec::new();
    for p in [1.1, 1.01, 1.001] {
        let (lhs, _) = rh1_limit_check(&w, &Interval::unit(), p)?;
        gaps.push((lhs - target).abs());
    }
    let ok = gaps[2] <= 2e-4 && gaps[0] > gaps[1] && gaps[1] > gaps[2];
    Ok((
        ok,
        format!(
            "|LHS - (ln 2 - 1/2)| at p = 1.1, 1.01, 1.001: {:.2e}, {:.2e}, {:.2e}",
            gaps[0], gaps[1], gaps[2]
        ),
    ))
}

/// Largest increase of the scanned `RH_1` and `A_∞` constants under
/// truncation over the corpus. Both weights are scanned on the union of
/// their grids.
pub fn truncation_excess(weights: &[Weight], levels: &[f64], resolution: usize) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for w in weights {
        for &n in levels {
            let t = w.truncate(n)?;
            let mut pts = scan_points(w, resolution);
            pts.extend(t.breakpoints());
            let pts = merge_points(pts);
            let rh =
                sup_scan_over(&pts, |i| rh1_on(&t, i)).value - sup_scan_over(&pts, |i| rh1_on(w, i)).value;
            let ai =
                sup_scan_over(&pts, |i| ainf_on(&t, i)).value - sup_scan_over(&pts, |i| ainf_on(w, i)).value;
            worst = worst.max(rh).max(ai);
        }
    }
    Ok(worst)
}

fn truncation() -> Result<(bool, String)> {
    let worst = truncation_excess(&corpus(CORPUS_SEED), &[2.0, 10.0, 100.0], 201)?;
    Ok((worst <= 1e-6, format!("max increase over 20 weights × n in {{2, 10, 100}}: {worst:.2e}")))
}

fn dyadic_chain() -> Result<(bool, String)> {
    let q = E / 2.0 * 1.1;
    let cfg = SplitConfig::new(q, 1.2 * q, 8)?;
    let w = Weight::power(1.0, 1.0)?;
    let tree = build_partition(&w, &cfg, SplitMode::Log)?;
    let (omega, omega1) =
        (Domain::new(SplitMode::Log.coordinates(), q), Domain::new(SplitMode::Log.coordinates(), cfg.q1));
    let mut alphas_ok = true;
    let mut points_ok = true;
    let mut segments_ok = true;
    tree.walk(&mut |n| {
        points_ok &= omega.contains(n.point);
        if let Some(a) = n.alpha {
            alphas_ok &= (cfg.delta0..=1.0 - cfg.delta0).contains(&a);
        }
        for c in &n.children {
            segments_ok &= segment_violation(&omega1, n.point, c.point, 1000) <= 0.0;
        }
    });
    let report = chain_verify(&BellmanSurface::ainf_upper(cfg.q1)?, &w, &tree)?;
    let last = *report.sums.last().expect("non-empty chain");
    let ok = alphas_ok && points_ok && segments_ok && report.monotone && last >= -0.25 - 1e-9;
    Ok((
        ok,
        format!(
            "alphas {alphas_ok}, points {points_ok}, segments {segments_ok}, monotone {} (worst step {:.1e}); S_0 = {:.6}, S_8 = {last:.9}",
            report.monotone, report.worst_step, report.sums[0]
        ),
    ))
}

fn dim_n_pipeline() -> Result<(bool, String)> {
    let eps = gehring_dim_n_eps(1, 1.0)?;
    let quoted = 0.159477;
    let eps_ok = (eps - quoted).abs() <= 1e-6;
    let mut lambda_ok = true;
    for n in 1..=3 {
        for q in [0.5, 1.0, 5.0] {
            lambda_ok &= good_lambda_log_condition(n, q, gehring_dim_n_eps(n, q)?)? < 0.0;
        }
    }
    let (alpha, _) = good_lambda_params(1.0)?;
    let w = Weight::power(1.0, 0.25)?;
    let k = rhp_constant(&w, 2.0, 201)?.value;
    let (bound, _) = p_gehring_via_one(1, 2.0, k)?;
    let measured = rh1_constant(&Weight::power(1.0, 0.5)?, 201).value;
    let bound_ok = bound >= measured;
    Ok((
        eps_ok && lambda_ok && bound_ok,
        format!(
            "ε(1, 1) = {eps:.9} (reference {quoted}, diff {:.1e}); good-λ {lambda_ok} (α(1) = {alpha:.4e}); [w²]_RH1 = {measured:.6} <= {bound:.3}",
            (eps - quoted).abs()
        ),
    ))
}

fn oracle_equivalence() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(TRIPLE_SEED);
    let (mut far, mut near): (f64, f64) = (0.0, 0.0);
    let mut singular = 0;
    for i in 0..200 {
        let (w, interval, kind) = random_triple(&mut rng, i);
        let closed = w.moment(&interval, kind);
        let quad = quadrature_moment(&w, &interval, kind, 1e-12);
        let err = (closed - quad).abs() / closed.abs().max(1.0);
        if touches_singularity(&w, &interval) {
            singular += 1;
            near = near.max(err);
        } else {
            far = far.max(err);
        }
    }
    Ok((
        far <= 1e-9 && near <= 1e-6,
        format!("max rel err {far:.1e} away from 0, {near:.1e} on {singular} singular cases"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criterion_fails() {
        assert!(!run(13).passed);
    }

    #[test]
    fn display_format() {
        let o = Outcome { id: 3, name: "x".into(), passed: true, detail: "d".into() };
        assert_eq!(o.to_string(), "[PASS]  3 x: d");
    }
}
