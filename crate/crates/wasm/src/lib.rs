//! Browser bindings for the demo page in `www/`: solver table, Bellman
//! surface heatmap and extremal weights.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use weightlab::bellman::{BellmanPoint, BellmanSurface, SurfaceKind};
use weightlab::extremals::{
    attainment_check, build_extremal, constant_attainment, ExtremalFamily, ExtremalSpec,
};
use weightlab::solvers::{
    e_sharpness_ratio, eps_minus, funny_asymptotic_ratio, funny_bound, gamma_entropy_roots, gamma_log,
};

/// Scan resolution for the constants shown next to an extremal.
const DEMO_RESOLUTION: usize = 150;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json(v: &impl Serialize) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(js)
}

#[derive(Serialize)]
struct Roots {
    q: f64,
    gamma_minus: f64,
    gamma_plus: f64,
    eps_minus: f64,
    funny_bound: f64,
    funny_ratio: f64,
    gamma_log: Option<f64>,
    e_ratio: Option<f64>,
}

/// Every root and ratio at `q`, as JSON.
#[wasm_bindgen]
pub fn solve(q: f64) -> Result<String, JsError> {
    let (gm, gp) = gamma_entropy_roots(q).map_err(js)?;
    let upper = q > 1.0;
    to_json(&Roots {
        q,
        gamma_minus: gm.root,
        gamma_plus: gp.root,
        eps_minus: eps_minus(q).map_err(js)?.root,
        funny_bound: funny_bound(q).map_err(js)?,
        funny_ratio: funny_asymptotic_ratio(q).map_err(js)?,
        gamma_log: if upper { Some(gamma_log(q).map_err(js)?.root) } else { None },
        e_ratio: if upper { Some(e_sharpness_ratio(q).map_err(js)?) } else { None },
    })
}

fn surface(kind: &str, q: f64, eps_fraction: f64) -> Result<BellmanSurface, JsError> {
    let kind: SurfaceKind = kind.parse().map_err(js)?;
    match kind {
        SurfaceKind::Gehring => BellmanSurface::gehring_fraction(q, eps_fraction),
        k => BellmanSurface::new(k, q, None),
    }
    .map_err(js)
}

/// Lower and upper boundary heights at each `x`, interleaved.
#[wasm_bindgen]
pub fn domain_bounds(kind: &str, q: f64, xs: Vec<f64>) -> Result<Vec<f64>, JsError> {
    let d = surface(kind, q, 0.5)?.domain();
    Ok(xs
        .iter()
        .flat_map(|&x| {
            let (lo, hi) = d.y_range(x);
            [lo, hi]
        })
        .collect())
}

/// Surface values on a `width × height` pixel grid over
/// `[x_min, x_max] × [y_min, y_max]`, rows from the top; `NaN` outside the
/// domain.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn surface_values(
    kind: &str,
    q: f64,
    eps_fraction: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    width: usize,
    height: usize,
) -> Result<Vec<f64>, JsError> {
    let s = surface(kind, q, eps_fraction)?;
    let mut out = Vec::with_capacity(width * height);
    for row in 0..height {
        let y = y_max - (y_max - y_min) * (row as f64 + 0.5) / height as f64;
        for col in 0..width {
            let x = x_min + (x_max - x_min) * (col as f64 + 0.5) / width as f64;
            let p = BellmanPoint::new(x, y);
            out.push(if s.in_domain(p) { s.evaluate(p).unwrap_or(f64::NAN) } else { f64::NAN });
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ExtremalView {
    family: ExtremalFamily,
    q: f64,
    target: Option<BellmanPoint>,
    weight: weightlab::Weight,
    ts: Vec<f64>,
    ws: Vec<f64>,
    bellman_value: f64,
    weight_value: f64,
    gap: f64,
    /// Scanned `A_∞` (ainf family) or `RH_1` constant.
    constant: f64,
    funny_ainf: Option<f64>,
}

/// Builds an extremal weight. Glued families take their target at `m w = x`
/// and relative height `theta` in the domain.
#[wasm_bindgen]
pub fn extremal(family: &str, q: f64, x: f64, theta: f64, points: usize) -> Result<String, JsError> {
    let family: ExtremalFamily = family.parse().map_err(js)?;
    let target = match family {
        ExtremalFamily::Ainf => Some(BellmanSurface::ainf_upper(q).map_err(js)?.domain().point_at(x, theta)),
        ExtremalFamily::GehringInterior => {
            Some(BellmanSurface::gehring_fraction(q, 0.5).map_err(js)?.domain().point_at(x, theta))
        }
        _ => None,
    };
    let spec = ExtremalSpec::new(family, q, target);
    let e = build_extremal(&spec).map_err(js)?;
    let eps = match family {
        ExtremalFamily::GehringBoundary | ExtremalFamily::GehringInterior => {
            Some(0.5 * eps_minus(q).map_err(js)?.root)
        }
        _ => None,
    };
    let a = attainment_check(&spec, eps).map_err(js)?;
    let c = constant_attainment(&spec, DEMO_RESOLUTION).map_err(js)?;
    let n = points.max(2);
    let ts: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let ws = ts.iter().map(|&t| e.weight.eval(t).unwrap_or(f64::NAN)).collect();
    to_json(&ExtremalView {
        family,
        q,
        target,
        weight: e.weight,
        ts,
        ws,
        bellman_value: a.bellman_value,
        weight_value: a.weight_value,
        gap: a.gap,
        constant: c.measured.value,
        funny_ainf: c.funny_ainf.map(|e| e.value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_grid_marks_outside() {
        let v = surface_values("ainf-upper", 2.0, 0.5, 0.5, 2.0, -2.0, 1.0, 8, 6).unwrap();
        assert_eq!(v.len(), 48);
        assert!(v.iter().any(|x| x.is_nan()));
        assert!(v.iter().any(|x| x.is_finite()));
    }

    #[test]
    fn bounds_interleave() {
        let b = domain_bounds("gehring", 1.0, vec![1.0, 2.0]).unwrap();
        assert_eq!(b.len(), 4);
        assert!(b[0] < b[1] && b[2] < b[3]);
    }
}
