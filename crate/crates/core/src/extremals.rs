//! Weights attaining the Bellman bounds, and the sharpness experiments run
//! on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellman::{BellmanPoint, BellmanSurface};
use crate::constants::{ainf_constant, ainf_on, rh1_constant, rh1_on, Estimate};
use crate::error::{Error, Result};
use crate::serde_ext;
use crate::solvers::{e_sharpness_ratio, funny_asymptotic_ratio, gamma_entropy_roots, gamma_log};
use crate::weights::{Interval, Moment, PowerPiece, Weight};

/// Glue parameters this close outside `[0, 1]` are snapped back.
const GLUE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremalFamily {
    /// `v (t/a)^{γ-1}` on `[0, a]`, `v` on `[a, 1]`; attains the upper `A_∞`
    /// surface at a target `(m w, m log w)`.
    Ainf,
    /// `(x/γ_+) t^{(1-γ_+)/γ_+}`; lies on the upper boundary of the entropy
    /// domain and fails `RH_{1+ε_-}`.
    GehringBoundary,
    /// `v (t/u)^{(1-γ_+)/γ_+}` on `[0, u]`, `v` on `[u, 1]`; attains the
    /// Gehring surface at a target `(m w, m w log w)`.
    GehringInterior,
    /// `(1/γ_-) t^{(1-γ_-)/γ_-}`; `[w]_{RH_1} = Q` with the largest `[w]_{A_∞}`.
    Funny,
}

impl ExtremalFamily {
    /// Name used on the command line and in JSON.
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ainf => "ainf",
            Self::GehringBoundary => "gehring-boundary",
            Self::GehringInterior => "gehring-interior",
            Self::Funny => "funny",
        }
    }
}

impl std::fmt::Display for ExtremalFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExtremalFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ainf" | "ainf-upper" => Ok(Self::Ainf),
            "gehring-boundary" => Ok(Self::GehringBoundary),
            "gehring-interior" => Ok(Self::GehringInterior),
            "funny" => Ok(Self::Funny),
            other => Err(Error::Parameter(format!("unknown extremal family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSpec {
    pub family: ExtremalFamily,
    pub q: f64,
    /// Required for `Ainf` and `GehringInterior`; for `GehringBoundary` only
    /// `x` is used (default `γ_+`, which makes the coefficient 1).
    pub target: Option<BellmanPoint>,
}

impl ExtremalSpec {
    pub fn new(family: ExtremalFamily, q: f64, target: Option<BellmanPoint>) -> Self {
        Self { family, q, target }
    }

    fn require_target(&self) -> Result<BellmanPoint> {
        self.target
            .ok_or_else(|| Error::Parameter(format!("the {} family needs a target point", self.family)))
    }
}

/// A built extremal with its construction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremal {
    pub spec: ExtremalSpec,
    pub weight: Weight,
    /// Tangent parameter `v` of the target (glued families).
    pub tangent: Option<f64>,
    /// Length of the power part (glued families).
    pub glue: Option<f64>,
}

/// `v (t/g)^exponent` on `[0, g]` followed by the constant `v`.
fn glued_power(v: f64, glue: f64, exponent: f64) -> Result<Weight> {
    if glue <= 0.0 {
        return Weight::constant(v);
    }
    let coeff = v * glue.powf(-exponent);
    if glue >= 1.0 {
        return Weight::power(coeff, exponent);
    }
    Weight::from_pieces(vec![
        PowerPiece::new(Interval::new(0.0, glue)?, coeff, exponent)?,
        PowerPiece::new(Interval::new(glue, 1.0)?, v, 0.0)?,
    ])
}

fn snap_glue(glue: f64) -> Result<f64> {
    if !(-GLUE_TOL..=1.0 + GLUE_TOL).contains(&glue) {
        return Err(Error::InfeasibleTarget(format!("glue parameter {glue} is outside [0, 1]")));
    }
    Ok(if glue <= GLUE_TOL {
        0.0
    } else if glue >= 1.0 - GLUE_TOL {
        1.0
    } else {
        glue
    })
}

pub fn build_extremal(spec: &ExtremalSpec) -> Result<Extremal> {
    if !(spec.q > 0.0) || !spec.q.is_finite() {
        return Err(Error::Parameter(format!("Q must be positive, got {}", spec.q)));
    }
    let (weight, tangent, glue) = match spec.family {
        ExtremalFamily::Ainf => {
            let target = spec.require_target()?;
            let surface = BellmanSurface::ainf_upper(spec.q)?;
            let v = surface.tangent_point(target)?;
            let g = surface.gamma();
            let glue = snap_glue(g * (target.x - v) / (v * (1.0 - g)))?;
            (glued_power(v, glue, g - 1.0)?, Some(v), Some(glue))
        }
        ExtremalFamily::GehringBoundary => {
            let gp = gamma_entropy_roots(spec.q)?.1.root;
            let x = spec.target.map_or(gp, |p| p.x);
            if !(x > 0.0) {
                return Err(Error::Domain(format!("x must be positive, got {x}")));
            }
            (Weight::power(x / gp, (1.0 - gp) / gp)?, None, None)
        }
        ExtremalFamily::GehringInterior => {
            let target = spec.require_target()?;
            // the tangent lines do not depend on ε
            let surface = BellmanSurface::gehring_fraction(spec.q, 0.5)?;
            let v = surface.tangent_point(target)?;
            let g = surface.gamma();
            let glue = snap_glue((target.x - v) / (g * v - v))?;
            (glued_power(v, glue, (1.0 - g) / g)?, Some(v), Some(glue))
        }
        ExtremalFamily::Funny => {
            let gm = gamma_entropy_roots(spec.q)?.0.root;
            (Weight::power(1.0 / gm, (1.0 - gm) / gm)?, None, None)
        }
    };
    Ok(Extremal { spec: *spec, weight, tangent, glue })
}

pub fn build(spec: &ExtremalSpec) -> Result<Weight> {
    Ok(build_extremal(spec)?.weight)
}

/// Bellman value at a weight's averages against the weight's own average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attainment {
    pub point: BellmanPoint,
    pub bellman_value: f64,
    pub weight_value: f64,
    /// `|bellman - weight| / max(1, |bellman|)`
    pub gap: f64,
}

/// Compares the Bellman surface of the family with the matching average of
/// the built weight. `eps` is required for the Gehring families.
pub fn attainment_check(spec: &ExtremalSpec, eps: Option<f64>) -> Result<Attainment> {
    let w = build(spec)?;
    let unit = Interval::unit();
    let m = |k| w.moment(&unit, k);
    let (surface, point, weight_value) = match spec.family {
        ExtremalFamily::Ainf => (
            BellmanSurface::ainf_upper(spec.q)?,
            BellmanPoint::new(m(Moment::W), m(Moment::LogW)),
            m(Moment::WLogW),
        ),
        ExtremalFamily::GehringBoundary | ExtremalFamily::GehringInterior => {
            let eps =
                eps.ok_or_else(|| Error::Parameter("the Gehring families need an exponent gap ε".into()))?;
            (
                BellmanSurface::gehring(spec.q, eps)?,
                BellmanPoint::new(m(Moment::W), m(Moment::WLogW)),
                m(Moment::WPow(1.0 + eps)),
            )
        }
        ExtremalFamily::Funny => (
            BellmanSurface::ainf_lower(spec.q)?,
            BellmanPoint::new(m(Moment::W), m(Moment::WLogW)),
            m(Moment::LogW),
        ),
    };
    let bellman_value = surface.evaluate(point)?;
    let gap = (bellman_value - weight_value).abs() / bellman_value.abs().max(1.0);
    Ok(Attainment { point, bellman_value, weight_value, gap })
}

/// Scanned class constant of an extremal against `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantAttainment {
    /// `RH_1` for the Gehring and funny families, `A_∞` for `Ainf`.
    pub measured: Estimate,
    /// Same constant on `[0, 1]`.
    pub full_interval: f64,
    /// `measured - Q` for the `RH_1` families; for `Ainf` the scan is compared
    /// with `Q` directly as well.
    pub q_gap: f64,
    /// Scanned `A_∞` of the funny weight.
    pub funny_ainf: Option<Estimate>,
}

pub fn constant_attainment(spec: &ExtremalSpec, resolution: usize) -> Result<ConstantAttainment> {
    let w = build(spec)?;
    let unit = Interval::unit();
    let (measured, full_interval) = match spec.family {
        ExtremalFamily::Ainf => (ainf_constant(&w, resolution), ainf_on(&w, &unit)),
        _ => (rh1_constant(&w, resolution), rh1_on(&w, &unit)),
    };
    let funny_ainf = matches!(spec.family, ExtremalFamily::Funny).then(|| ainf_constant(&w, resolution));
    Ok(ConstantAttainment { measured, full_interval, q_gap: measured.value - spec.q, funny_ainf })
}

/// `∫_δ^1 w^q` for each `δ` (the average over `[δ, 1]` normalized by the
/// length of `[0, 1]`).
pub fn divergence_probe(w: &Weight, q: f64, deltas: &[f64]) -> Result<Vec<f64>> {
    deltas
        .iter()
        .map(|&d| {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Parameter(format!("δ must lie in (0, 1), got {d}")));
            }
            Ok(w.integral(d, 1.0, Moment::WPow(q)))
        })
        .collect()
}

/// [`divergence_probe`] with `δ = e^{-L}` given by `L`, for truncations far
/// below the smallest positive double.
pub fn divergence_probe_log(w: &Weight, q: f64, log_inv_deltas: &[f64]) -> Result<Vec<f64>> {
    let first = &w.pieces()[0];
    let b = first.support.b();
    let rest = w.integral(b, 1.0, Moment::WPow(q));
    let (c, alpha) = (first.coeff, first.exponent);
    let s = q * alpha + 1.0;
    log_inv_deltas
        .iter()
        .map(|&l| {
            if !(l > -b.ln()) {
                return Err(Error::Parameter(format!("δ = e^-{l} must lie inside the first piece [0, {b}]")));
            }
            // ∫_δ^b t^{s-1} = e^{-sL} expm1(s (ln b + L)) / s
            let span = b.ln() + l;
            let head = if s == 0.0 { span } else { (-s * l).exp() * (s * span).exp_m1() / s };
            Ok(c.powf(q) * head + rest)
        })
        .collect()
}

/// One row of the sharpness table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: f64,
    /// `(ln γ + 1/γ - 1)/Q`, tends to `e`; absent for `Q <= 1`.
    #[serde(with = "serde_ext::ext_f64_opt")]
    pub e_ratio: Option<f64>,
    /// `ln(funny bound)/(e^{Q+1} - Q - 2)`, tends to 1; absent when it
    /// cannot be represented.
    #[serde(with = "serde_ext::ext_f64_opt")]
    pub funny_ratio: Option<f64>,
}

pub fn sharpness_sweep(qs: &[f64]) -> Vec<SweepRow> {
    qs.par_iter()
        .map(|&q| SweepRow {
            q,
            e_ratio: if q > 1.0 { e_sharpness_ratio(q).ok().filter(|r| r.is_finite()) } else { None },
            funny_ratio: funny_asymptotic_ratio(q).ok().filter(|r| r.is_finite() && *r > 0.0),
        })
        .collect()
}

/// `e^{γ-1}/γ`: the `A_∞` constant of the power part of the `Ainf` family.
pub fn ainf_power_ratio(q: f64) -> Result<f64> {
    let g = gamma_log(q)?.root;
    Ok((g - 1.0).exp() / g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::Domain;
    use crate::solvers::eps_minus;

    const E: f64 = std::f64::consts::E;

    fn spec(family: ExtremalFamily, q: f64, target: Option<(f64, f64)>) -> ExtremalSpec {
        ExtremalSpec::new(family, q, target.map(|(x, y)| BellmanPoint::new(x, y)))
    }

    #[test]
    fn boundary_family_at_gamma_plus() {
        let w = build(&spec(ExtremalFamily::GehringBoundary, 1.0, None)).unwrap();
        let p = w.pieces()[0];
        assert!((p.coeff - 1.0).abs() < 1e-15);
        assert!((p.exponent + 0.682155).abs() < 1e-6);
        let gp = gamma_entropy_roots(1.0).unwrap().1.root;
        assert!((w.moment(&Interval::unit(), Moment::W) - gp).abs() < 1e-12);
    }

    #[test]
    fn interior_on_gamma_is_constant() {
        let x = 1.7;
        let w = build(&spec(ExtremalFamily::GehringInterior, 1.0, Some((x, x * x.ln())))).unwrap();
        assert_eq!(w.pieces().len(), 1);
        assert_eq!(w.pieces()[0].exponent, 0.0);
        assert!((w.pieces()[0].coeff - x).abs() < 1e-12);
    }

    #[test]
    fn funny_moments() {
        let w = build(&spec(ExtremalFamily::Funny, 1.0, None)).unwrap();
        let unit = Interval::unit();
        let gm = gamma_entropy_roots(1.0).unwrap().0.root;
        assert!((w.pieces()[0].exponent - 5.30540).abs() < 1e-4);
        assert!((w.moment(&unit, Moment::W) - 1.0).abs() < 1e-12);
        let log_oracle = (1.0 / gm).ln() - (1.0 - gm) / gm;
        assert!((w.moment(&unit, Moment::LogW) - log_oracle).abs() < 1e-12);
        assert!((log_oracle + 3.4639).abs() < 1e-3);
    }

    #[test]
    fn glued_targets_are_reproduced() {
        let up = BellmanSurface::ainf_upper(E).unwrap();
        for p in up.sample_interior(30, 2, 0.2, 5.0, 0.0) {
            let w = build(&ExtremalSpec::new(ExtremalFamily::Ainf, E, Some(p))).unwrap();
            let unit = Interval::unit();
            assert!((w.moment(&unit, Moment::W) - p.x).abs() < 1e-9 * p.x.max(1.0));
            assert!((w.moment(&unit, Moment::LogW) - p.y).abs() < 1e-9 * p.y.abs().max(1.0));
        }
        let g = BellmanSurface::gehring_fraction(1.0, 0.5).unwrap();
        for p in g.sample_interior(30, 3, 0.2, 5.0, 0.0) {
            let w = build(&ExtremalSpec::new(ExtremalFamily::GehringInterior, 1.0, Some(p))).unwrap();
            let unit = Interval::unit();
            assert!((w.moment(&unit, Moment::W) - p.x).abs() < 1e-9 * p.x.max(1.0));
            assert!((w.moment(&unit, Moment::WLogW) - p.y).abs() < 1e-9 * p.y.abs().max(1.0));
        }
    }

    #[test]
    fn targets_outside_are_rejected() {
        let r = build(&spec(ExtremalFamily::Ainf, E, Some((1.0, 0.5))));
        assert!(matches!(r, Err(Error::Domain(_))));
        let r = build(&spec(ExtremalFamily::GehringInterior, 1.0, Some((1.0, 1.5))));
        assert!(matches!(r, Err(Error::Domain(_))));
        assert!(build(&spec(ExtremalFamily::Ainf, E, None)).is_err());
    }

    #[test]
    fn attainment_examples() {
        let a = attainment_check(&spec(ExtremalFamily::GehringBoundary, 1.0, None), Some(0.3)).unwrap();
        assert!(a.gap <= 1e-6, "{a:?}");
        assert!((a.bellman_value - 8.834).abs() < 1e-3);
        let a = attainment_check(
            &spec(ExtremalFamily::GehringInterior, 1.0, Some((2.0, 2.0 * 2f64.ln()))),
            Some(0.3),
        )
        .unwrap();
        assert!((a.weight_value - 2f64.powf(1.3)).abs() < 1e-12);
        assert!(a.gap <= 1e-12);
        let a = attainment_check(&spec(ExtremalFamily::Ainf, E, Some((1.0, -0.5))), None).unwrap();
        assert!(a.gap <= 1e-6, "{a:?}");
        let a = attainment_check(&spec(ExtremalFamily::Funny, 1.0, None), None).unwrap();
        assert!(a.gap <= 1e-6, "{a:?}");
        assert!(attainment_check(&spec(ExtremalFamily::GehringBoundary, 1.0, None), None).is_err());
    }

    #[test]
    fn ainf_power_part_ratio_is_q() {
        for q in [1.5, E, 10.0] {
            assert!((ainf_power_ratio(q).unwrap() - q).abs() < 1e-12 * q);
        }
    }

    #[test]
    fn critical_probe_is_logarithmic() {
        let w = build(&spec(ExtremalFamily::GehringBoundary, 1.0, None)).unwrap();
        let q = 1.0 + eps_minus(1.0).unwrap().root;
        let deltas: Vec<f64> = (1..=12).map(|k| 10f64.powi(-k)).collect();
        let vals = divergence_probe(&w, q, &deltas).unwrap();
        for (d, v) in deltas.iter().zip(&vals) {
            assert!((v - (1.0 / d).ln()).abs() < 1e-6, "{d}: {v}");
        }
        assert!(vals.windows(2).all(|p| p[1] > p[0]));
        let big = divergence_probe_log(&w, q, &[1e6, 2e6]).unwrap();
        assert!((big[0] - 1e6).abs() < 1e-3 && big[1] > big[0]);
        // below the critical exponent the averages increase to the full
        // average, missing exactly the tail δ^s/s
        let gp = gamma_entropy_roots(1.0).unwrap().1.root;
        let limit = gp / (1.3 - 0.3 * gp);
        let s = 1.0 + 1.3 * w.pieces()[0].exponent;
        let ds = [1e-8, 1e-10, 1e-12, 1e-100];
        let sub = divergence_probe(&w, 1.3, &ds).unwrap();
        for (d, v) in ds.iter().zip(&sub) {
            assert!(*v < limit);
            assert!((limit - v - d.powf(s) / s).abs() < 1e-12 * limit, "{d}");
        }
        assert!(limit - sub[3] < 1e-10);
        assert!(divergence_probe(&w, q, &[0.0]).is_err());
    }

    #[test]
    fn constant_weight_probe() {
        let w = Weight::constant(1.0).unwrap();
        let v = divergence_probe(&w, 2.5, &[0.1, 0.01]).unwrap();
        assert!((v[0] - 0.9).abs() < 1e-15 && (v[1] - 0.99).abs() < 1e-15);
    }

    #[test]
    fn sweep_columns() {
        let rows = sharpness_sweep(&[0.5, 8.0, 10.0, 1e6]);
        assert_eq!(rows[0].e_ratio, None);
        assert!((rows[1].funny_ratio.unwrap() - 1.0).abs() < 1e-3);
        assert!(rows[2].e_ratio.unwrap() < E);
        assert!((rows[3].e_ratio.unwrap() - E).abs() < 0.02 * E);
        assert_eq!(rows[3].funny_ratio, None);
        assert!(sharpness_sweep(&[]).is_empty());
    }

    #[test]
    fn boundary_family_lies_on_upper_curve() {
        let gp = gamma_entropy_roots(2.0).unwrap().1.root;
        let w = build(&spec(ExtremalFamily::GehringBoundary, 2.0, Some((0.8, 0.0)))).unwrap();
        let unit = Interval::unit();
        let p = BellmanPoint::new(w.moment(&unit, Moment::W), w.moment(&unit, Moment::WLogW));
        let (_, hi) = Domain::new(crate::bellman::Coordinates::Entropy, 2.0).y_range(p.x);
        assert!((p.y - hi).abs() < 1e-12, "{} vs {hi} (γ = {gp})", p.y);
    }
}
