//! The three closed-form Bellman surfaces and their verification.
//!
//! Each surface is ruled by tangent lines: a point `(x, y)` is mapped to the
//! parameter `v` of the tangent line through it (found by bisection on a
//! monotone bracket) and the surface is affine along that line.
//!
//! | kind | coordinates | domain | tangent line |
//! |------|-------------|--------|--------------|
//! | `AinfUpper` | `(m w, m log w)` | `1 <= x e^{-y} <= Q` | `y = γx/v + ln v - γ`, `γx <= v <= x` |
//! | `Gehring` | `(m w, m w log w)` | `x ln x <= y <= x ln x + Qx` | `y = (ln v + γ_+)x - γ_+ v`, `v <= x <= γ_+ v` |
//! | `AinfLower` | `(m w, m w log w)` | same as `Gehring` | `y = (ln v + γ_-)x - γ_- v`, `γ_- v <= x <= v` |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::{bisect, eps_minus, gamma_entropy_roots, gamma_log, RootResult};

/// Boundary membership slack.
pub const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    /// Sup of `m(w log w)` given `(m w, m log w)` under `[w]_{A_∞} <= Q`.
    AinfUpper,
    /// Sup of `m w^{1+ε}` given `(m w, m w log w)` under `[w]_{RH_1} <= Q`.
    Gehring,
    /// Inf of `m log w` given `(m w, m w log w)` under `[w]_{RH_1} <= Q`.
    AinfLower,
}

impl SurfaceKind {
    /// Name used on the command line and in JSON.
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AinfUpper => "ainf-upper",
            Self::Gehring => "gehring",
            Self::AinfLower => "ainf-lower",
        }
    }
}

impl std::fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ainf-upper" => Ok(Self::AinfUpper),
            "gehring" => Ok(Self::Gehring),
            "ainf-lower" => Ok(Self::AinfLower),
            other => Err(Error::Parameter(format!("unknown surface `{other}`"))),
        }
    }
}

/// Which averages a point carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coordinates {
    /// `(m w, m log w)`
    Log,
    /// `(m w, m w log w)`
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellmanPoint {
    pub x: f64,
    pub y: f64,
}

impl BellmanPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn lerp(self, other: Self, s: f64) -> Self {
        Self { x: self.x + s * (other.x - self.x), y: self.y + s * (other.y - self.y) }
    }
}

/// The admissible region `Ω_Q` of average pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub coordinates: Coordinates,
    pub q: f64,
}

impl Domain {
    pub fn new(coordinates: Coordinates, q: f64) -> Self {
        Self { coordinates, q }
    }

    /// Lower and upper `y` at abscissa `x > 0`.
    pub fn y_range(&self, x: f64) -> (f64, f64) {
        match self.coordinates {
            Coordinates::Log => (x.ln() - self.q.ln(), x.ln()),
            Coordinates::Entropy => {
                let base = x * x.ln();
                (base, base + self.q * x)
            }
        }
    }

    /// Signed distance (in `y`) outside the domain; `<= 0` means inside.
    pub fn excess(&self, p: BellmanPoint) -> f64 {
        if !(p.x > 0.0) || !p.y.is_finite() {
            return f64::INFINITY;
        }
        let (lo, hi) = self.y_range(p.x);
        (lo - p.y).max(p.y - hi)
    }

    pub fn contains(&self, p: BellmanPoint) -> bool {
        self.excess(p) <= DOMAIN_TOL * (1.0 + p.y.abs())
    }

    /// Point at relative height `theta ∈ [0, 1]` between the boundaries.
    /// `theta = 0` is the curve `Γ` where constant weights live.
    pub fn point_at(&self, x: f64, theta: f64) -> BellmanPoint {
        let (lo, hi) = self.y_range(x);
        match self.coordinates {
            // Γ (constant weights, x e^{-y} = 1) is the upper curve here
            Coordinates::Log => BellmanPoint::new(x, hi - theta * (hi - lo)),
            Coordinates::Entropy => BellmanPoint::new(x, lo + theta * (hi - lo)),
        }
    }
}

/// A second-derivative matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hessian {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
    pub method: DerivativeMethod,
    /// Set when the finite-difference stencil had to shrink to fit the domain.
    pub precision_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMethod {
    ClosedForm,
    FiniteDifference,
}

impl Hessian {
    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let r = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        (mean - r, mean + r)
    }

    /// `|det|` relative to the size of the entries.
    pub fn relative_det(&self) -> f64 {
        let scale = (self.xx * self.yy).abs() + self.xy * self.xy;
        if scale == 0.0 {
            0.0
        } else {
            self.det().abs() / scale
        }
    }
}

/// One of the three closed-form Bellman surfaces with its tangent slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellmanSurface {
    kind: SurfaceKind,
    q: f64,
    eps: Option<f64>,
    gamma: f64,
}

impl BellmanSurface {
    pub fn new(kind: SurfaceKind, q: f64, eps: Option<f64>) -> Result<Self> {
        match kind {
            SurfaceKind::AinfUpper => Self::ainf_upper(q),
            SurfaceKind::Gehring => {
                let eps = eps
                    .ok_or_else(|| Error::Parameter("the Gehring surface needs an exponent gap ε".into()))?;
                Self::gehring(q, eps)
            }
            SurfaceKind::AinfLower => Self::ainf_lower(q),
        }
    }

    pub fn ainf_upper(q: f64) -> Result<Self> {
        let gamma = gamma_log(q)?.root;
        Ok(Self { kind: SurfaceKind::AinfUpper, q, eps: None, gamma })
    }

    /// Requires `0 < ε < 1/(γ_+ - 1)`.
    pub fn gehring(q: f64, eps: f64) -> Result<Self> {
        let gamma = gamma_entropy_roots(q)?.1.root;
        let limit = 1.0 / (gamma - 1.0);
        if !(eps > 0.0 && eps < limit) {
            return Err(Error::Parameter(format!("ε = {eps} must lie in (0, {limit}) for Q = {q}")));
        }
        Ok(Self { kind: SurfaceKind::Gehring, q, eps: Some(eps), gamma })
    }

    /// Gehring surface with `ε = fraction · ε_-(Q)`.
    pub fn gehring_fraction(q: f64, fraction: f64) -> Result<Self> {
        Self::gehring(q, fraction * eps_minus(q)?.root)
    }

    pub fn ainf_lower(q: f64) -> Result<Self> {
        let gamma = gamma_entropy_roots(q)?.0.root;
        Ok(Self { kind: SurfaceKind::AinfLower, q, eps: None, gamma })
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn eps(&self) -> Option<f64> {
        self.eps
    }

    /// `γ`, `γ_+` or `γ_-` depending on the kind.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn coordinates(&self) -> Coordinates {
        match self.kind {
            SurfaceKind::AinfUpper => Coordinates::Log,
            SurfaceKind::Gehring | SurfaceKind::AinfLower => Coordinates::Entropy,
        }
    }

    pub fn domain(&self) -> Domain {
        Domain::new(self.coordinates(), self.q)
    }

    /// `true` for the sup-type (concave) surfaces.
    pub fn is_concave(&self) -> bool {
        !matches!(self.kind, SurfaceKind::AinfLower)
    }

    pub fn in_domain(&self, p: BellmanPoint) -> bool {
        self.domain().contains(p)
    }

    fn check(&self, p: BellmanPoint) -> Result<()> {
        if self.in_domain(p) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "({}, {}) is outside Ω_{} for the {} surface",
                p.x, p.y, self.q, self.kind
            )))
        }
    }

    /// Tangent equation residual `line(v; x) - y` and the bracket for `v`.
    fn tangent_equation(&self, p: BellmanPoint) -> (impl Fn(f64) -> f64, f64, f64) {
        let (g, x, y, kind) = (self.gamma, p.x, p.y, self.kind);
        let f = move |v: f64| match kind {
            SurfaceKind::AinfUpper => g * x / v + v.ln() - g - y,
            SurfaceKind::Gehring | SurfaceKind::AinfLower => (v.ln() + g) * x - v * g - y,
        };
        let (lo, hi) = match kind {
            SurfaceKind::AinfUpper => (g * x, x),
            SurfaceKind::Gehring => (x / g, x),
            SurfaceKind::AinfLower => (x, x / g),
        };
        (f, lo, hi)
    }

    /// Solves for the tangent parameter `v` through `p`.
    pub fn tangent_root(&self, p: BellmanPoint) -> Result<RootResult> {
        self.check(p)?;
        let (f, lo, hi) = self.tangent_equation(p);
        match bisect(&f, lo, hi) {
            Ok(r) => Ok(r),
            // on a boundary within tolerance the sign change can be lost
            Err(Error::NoBracket { f_lo, f_hi, .. }) => {
                let (root, residual) = if f_lo.abs() <= f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
                Ok(RootResult { root, residual, bracket: (lo, hi), iterations: 0 })
            }
            Err(e) => Err(e),
        }
    }

    pub fn tangent_point(&self, p: BellmanPoint) -> Result<f64> {
        Ok(self.tangent_root(p)?.root)
    }

    fn value_with(&self, p: BellmanPoint, v: f64) -> f64 {
        let (g, x) = (self.gamma, p.x);
        match self.kind {
            SurfaceKind::AinfUpper => x * v.ln() + (x - v) / g,
            SurfaceKind::Gehring => {
                let e = self.eps.expect("gehring surfaces carry ε");
                v.powf(e) / (1.0 + e - g * e) * (x * (1.0 + e) - e * g * v)
            }
            SurfaceKind::AinfLower => v.ln() + (x - v) / (g * v),
        }
    }

    pub fn evaluate(&self, p: BellmanPoint) -> Result<f64> {
        let v = self.tangent_point(p)?;
        Ok(self.value_with(p, v))
    }

    /// Second derivatives: closed form for `AinfUpper`, finite differences
    /// otherwise.
    pub fn hessian(&self, p: BellmanPoint) -> Result<Hessian> {
        match self.kind {
            SurfaceKind::AinfUpper => {
                let v = self.tangent_point(p)?;
                let (g, x) = (self.gamma, p.x);
                let d = v - g * x;
                Ok(Hessian {
                    xx: -g / d,
                    xy: v / d,
                    yy: -v * v / (g * d),
                    method: DerivativeMethod::ClosedForm,
                    precision_warning: d <= 1e-8 * v,
                })
            }
            _ => self.hessian_fd(p),
        }
    }

    /// First partials `(B_x, B_y)`, in closed form.
    ///
    /// The surface is affine along each tangent line, so the gradient only
    /// depends on the tangent parameter `v`.
    pub fn gradient(&self, p: BellmanPoint) -> Result<(f64, f64)> {
        let v = self.tangent_point(p)?;
        Ok(self.gradient_at(v))
    }

    fn gradient_at(&self, v: f64) -> (f64, f64) {
        let g = self.gamma;
        match self.kind {
            SurfaceKind::AinfUpper => (v.ln() + 1.0 / g + 1.0, -v / g),
            SurfaceKind::Gehring => {
                let e = self.eps.expect("gehring surfaces carry ε");
                let k = (1.0 + e) / (1.0 + e - g * e) * v.powf(e);
                (k * (1.0 - e * (v.ln() + g)), e * k)
            }
            SurfaceKind::AinfLower => ((1.0 + v.ln() + g) / (g * v), -1.0 / (g * v)),
        }
    }

    /// Central differences of the closed-form gradient with one Richardson
    /// step. The step is `FD_STEP · max(1, x)` in both directions and halves
    /// (setting the warning flag) until the stencil fits inside the domain.
    pub fn hessian_fd(&self, p: BellmanPoint) -> Result<Hessian> {
        self.check(p)?;
        let domain = self.domain();
        let (lo, hi) = domain.y_range(p.x);
        // the gradient changes on the scale of the distance to the far end
        // of the tangent segment, where the second derivatives blow up
        let far = self.tangent_segment(self.tangent_point(p)?).1;
        let room = (p.y - lo).min(hi - p.y).min((p.x - far.x).abs());
        let mut h = (FD_STEP * p.x.max(1.0)).min(ROOM_FRACTION * room);
        let mut warning = false;
        while [(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)]
            .iter()
            .any(|&(sx, sy)| domain.excess(BellmanPoint::new(p.x + sx * h, p.y + sy * h)) >= 0.0)
        {
            h *= 0.5;
            warning = true;
            if h < FD_STEP * 1e-6 {
                return Err(Error::Domain(format!(
                    "({}, {}) is too close to the boundary for finite differences",
                    p.x, p.y
                )));
            }
        }
        let grad = |x: f64, y: f64| self.gradient(BellmanPoint::new(x, y));
        let stencil = |h: f64| -> Result<[f64; 4]> {
            let (xp, xm) = (grad(p.x + h, p.y)?, grad(p.x - h, p.y)?);
            let (yp, ym) = (grad(p.x, p.y + h)?, grad(p.x, p.y - h)?);
            let d = 2.0 * h;
            Ok([(xp.0 - xm.0) / d, (xp.1 - xm.1) / d, (yp.0 - ym.0) / d, (yp.1 - ym.1) / d])
        };
        // Richardson table over h, h/2, h/4 removing the h² and h⁴ terms
        let (d0, d1, d2) = (stencil(h)?, stencil(0.5 * h)?, stencil(0.25 * h)?);
        let r: Vec<f64> = (0..4)
            .map(|i| {
                let e1 = (4.0 * d1[i] - d0[i]) / 3.0;
                let e2 = (4.0 * d2[i] - d1[i]) / 3.0;
                (16.0 * e2 - e1) / 15.0
            })
            .collect();
        Ok(Hessian {
            xx: r[0],
            xy: 0.5 * (r[1] + r[2]),
            yy: r[3],
            method: DerivativeMethod::FiniteDifference,
            precision_warning: warning,
        })
    }

    /// Endpoints of the tangent segment with parameter `v`: the point on `Γ`
    /// and the tangency point on the opposite boundary.
    pub fn tangent_segment(&self, v: f64) -> (BellmanPoint, BellmanPoint) {
        let g = self.gamma;
        match self.kind {
            SurfaceKind::AinfUpper => {
                (BellmanPoint::new(v, v.ln()), BellmanPoint::new(v / g, 1.0 + v.ln() - g))
            }
            SurfaceKind::Gehring | SurfaceKind::AinfLower => {
                let a = g * v;
                (BellmanPoint::new(v, v * v.ln()), BellmanPoint::new(a, (v.ln() + g) * a - v * g))
            }
        }
    }

    /// Max deviation of the surface from the affine interpolation of its
    /// endpoint values along the tangent segment with parameter `v`.
    pub fn tangent_linearity_check(&self, v: f64, n_samples: usize) -> Result<f64> {
        if !(v > 0.0) || n_samples < 2 {
            return Err(Error::Parameter(format!(
                "need v > 0 and at least two samples, got v = {v}, n = {n_samples}"
            )));
        }
        let (p0, p1) = self.tangent_segment(v);
        let (b0, b1) = (self.evaluate(p0)?, self.evaluate(p1)?);
        let mut worst: f64 = 0.0;
        for i in 0..n_samples {
            let s = i as f64 / (n_samples - 1) as f64;
            let b = self.evaluate(p0.lerp(p1, s))?;
            worst = worst.max((b - ((1.0 - s) * b0 + s * b1)).abs());
        }
        Ok(worst)
    }

    /// Reproducible interior sample: `x` log-uniform in `[x_lo, x_hi]`,
    /// relative height in `[margin, 1 - margin]`.
    pub fn sample_interior(
        &self,
        n: usize,
        seed: u64,
        x_lo: f64,
        x_hi: f64,
        margin: f64,
    ) -> Vec<BellmanPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let domain = self.domain();
        (0..n)
            .map(|_| {
                let x = (x_lo.ln() + rng.gen::<f64>() * (x_hi / x_lo).ln()).exp();
                let theta = margin + rng.gen::<f64>() * (1.0 - 2.0 * margin);
                domain.point_at(x, theta)
            })
            .collect()
    }
}

/// Share of the distance to the boundary the finite-difference step may use.
pub const ROOM_FRACTION: f64 = 2e-2;

/// Finite-difference step (scaled by `max(1, x)`) before Richardson extrapolation.
pub const FD_STEP: f64 = 1e-3;

/// Result of [`bounds_check_ainf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsCheck {
    /// `max (x ln x - B)`; must be `<= 0` up to rounding.
    pub max_excess_low: f64,
    /// `max (B - x ln x - eQx)`; must be `<= 0` up to rounding.
    pub max_excess_high: f64,
    pub worst_low: BellmanPoint,
    pub worst_high: BellmanPoint,
    /// `max (B - x ln x)/x` over the grid.
    pub max_ratio: f64,
    /// `ln γ + 1/γ - 1`, the exact supremum of that ratio.
    pub ratio_bound: f64,
}

/// Checks `x ln x <= B <= x ln x + eQx` for the upper `A_∞` surface on a
/// `grid × grid` net: `x` log-spaced in `[1e-2, 1e2]`, all heights from the
/// lower to the upper boundary.
pub fn bounds_check_ainf(q: f64, grid: usize) -> Result<BoundsCheck> {
    let surface = BellmanSurface::ainf_upper(q)?;
    let g = surface.gamma();
    let domain = surface.domain();
    let n = grid.max(2);
    let rows: Vec<Result<BoundsCheck>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = 10f64.powf(-2.0 + 4.0 * i as f64 / (n - 1) as f64);
            let mut acc = BoundsCheck {
                max_excess_low: f64::NEG_INFINITY,
                max_excess_high: f64::NEG_INFINITY,
                worst_low: BellmanPoint::new(x, 0.0),
                worst_high: BellmanPoint::new(x, 0.0),
                max_ratio: f64::NEG_INFINITY,
                ratio_bound: g.ln() + 1.0 / g - 1.0,
            };
            for j in 0..n {
                let p = domain.point_at(x, j as f64 / (n - 1) as f64);
                let b = surface.evaluate(p)?;
                let xlx = x * x.ln();
                let low = xlx - b;
                let high = b - xlx - std::f64::consts::E * q * x;
                if low > acc.max_excess_low {
                    acc.max_excess_low = low;
                    acc.worst_low = p;
                }
                if high > acc.max_excess_high {
                    acc.max_excess_high = high;
                    acc.worst_high = p;
                }
                acc.max_ratio = acc.max_ratio.max((b - xlx) / x);
            }
            Ok(acc)
        })
        .collect();
    let mut out: Option<BoundsCheck> = None;
    for row in rows {
        let row = row?;
        out = Some(match out {
            None => row,
            Some(mut acc) => {
                if row.max_excess_low > acc.max_excess_low {
                    acc.max_excess_low = row.max_excess_low;
                    acc.worst_low = row.worst_low;
                }
                if row.max_excess_high > acc.max_excess_high {
                    acc.max_excess_high = row.max_excess_high;
                    acc.worst_high = row.worst_high;
                }
                acc.max_ratio = acc.max_ratio.max(row.max_ratio);
                acc
            }
        });
    }
    Ok(out.expect("grid is non-empty"))
}

/// Outcome of a Hessian sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianVerdict {
    pub passed: bool,
    pub samples: usize,
    /// For concave surfaces the largest eigenvalue seen, for the convex one
    /// the smallest.
    pub extreme_eigenvalue: f64,
    pub extreme_point: BellmanPoint,
    /// Largest relative determinant seen.
    pub max_relative_det: f64,
    /// Largest `B''_yy` seen (relevant for `AinfUpper`).
    pub max_yy: f64,
    pub warnings: usize,
}

/// Eigenvalue slack for the semidefiniteness checks.
pub const EIGEN_TOL: f64 = 1e-8;
/// Relative determinant slack for the degenerate Monge–Ampère check.
pub const DET_TOL: f64 = 1e-6;

/// Samples `samples` interior points (`x ∈ [0.1, 10]`, heights in
/// `[0.02, 0.98]`) and checks the semidefiniteness of the Hessian.
pub fn verify_hessian(surface: &BellmanSurface, samples: usize, seed: u64) -> Result<HessianVerdict> {
    let points = surface.sample_interior(samples, seed, 0.1, 10.0, 0.02);
    let hessians =
        points.par_iter().map(|p| surface.hessian(*p).map(|h| (*p, h))).collect::<Result<Vec<_>>>()?;
    let concave = surface.is_concave();
    let mut verdict = HessianVerdict {
        passed: true,
        samples,
        extreme_eigenvalue: if concave { f64::NEG_INFINITY } else { f64::INFINITY },
        extreme_point: points.first().copied().unwrap_or(BellmanPoint::new(1.0, 0.0)),
        max_relative_det: 0.0,
        max_yy: f64::NEG_INFINITY,
        warnings: 0,
    };
    for (p, h) in hessians {
        let (lo, hi) = h.eigenvalues();
        if concave && hi > verdict.extreme_eigenvalue {
            verdict.extreme_eigenvalue = hi;
            verdict.extreme_point = p;
        }
        if !concave && lo < verdict.extreme_eigenvalue {
            verdict.extreme_eigenvalue = lo;
            verdict.extreme_point = p;
        }
        verdict.max_relative_det = verdict.max_relative_det.max(h.relative_det());
        verdict.max_yy = verdict.max_yy.max(h.yy);
        verdict.warnings += h.precision_warning as usize;
    }
    verdict.passed = if concave {
        verdict.extreme_eigenvalue <= EIGEN_TOL
    } else {
        verdict.extreme_eigenvalue >= -EIGEN_TOL
    };
    if surface.kind() == SurfaceKind::AinfUpper {
        verdict.passed &= verdict.max_relative_det <= DET_TOL && verdict.max_yy <= 0.0;
    }
    Ok(verdict)
}

/// Outcome of a tangent-linearity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVerdict {
    pub passed: bool,
    pub max_deviation: f64,
    pub worst_v: f64,
    pub lines: usize,
}

/// Linearity tolerance along tangent segments.
pub const LINEARITY_TOL: f64 = 1e-9;

/// Checks linearity along `lines` tangent segments with `v` log-spaced in
/// `[0.2, 5]`, 50 samples each.
pub fn verify_tangent(surface: &BellmanSurface, lines: usize) -> Result<TangentVerdict> {
    let n = lines.max(2);
    let mut verdict = TangentVerdict { passed: true, max_deviation: 0.0, worst_v: 1.0, lines: n };
    for i in 0..n {
        let v = (0.2f64.ln() + (25f64).ln() * i as f64 / (n - 1) as f64).exp();
        let dev = surface.tangent_linearity_check(v, 50)?;
        // deviation scales with the surface values on the segment
        let (p0, p1) = surface.tangent_segment(v);
        let scale = 1.0f64.max(surface.evaluate(p0)?.abs()).max(surface.evaluate(p1)?.abs());
        if dev / scale > verdict.max_deviation {
            verdict.max_deviation = dev / scale;
            verdict.worst_v = v;
        }
    }
    verdict.passed = verdict.max_deviation <= LINEARITY_TOL;
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn domain_membership() {
        let up = BellmanSurface::ainf_upper(2.0).unwrap();
        assert!(up.in_domain(BellmanPoint::new(1.0, 0.0)));
        let g = BellmanSurface::gehring(1.0, 0.3).unwrap();
        assert!(g.in_domain(BellmanPoint::new(1.0, 0.5)));
        assert!(!g.in_domain(BellmanPoint::new(1.0, 1.5)));
        assert!(!g.in_domain(BellmanPoint::new(-1.0, 0.0)));
    }

    #[test]
    fn parameter_validation() {
        assert!(BellmanSurface::ainf_upper(1.0).is_err());
        assert!(BellmanSurface::gehring(1.0, 0.0).is_err());
        // 1/(γ_+ - 1) ≈ 0.46594 at Q = 1
        assert!(BellmanSurface::gehring(1.0, 0.47).is_err());
        assert!(BellmanSurface::gehring(1.0, 0.46).is_ok());
        assert!(BellmanSurface::ainf_lower(0.0).is_err());
        assert!(BellmanSurface::new(SurfaceKind::Gehring, 1.0, None).is_err());
    }

    #[test]
    fn boundary_substitutions() {
        let up = BellmanSurface::ainf_upper(E).unwrap();
        for x in [0.3, 1.0, 4.0] {
            let p = BellmanPoint::new(x, x.ln());
            assert!((up.tangent_point(p).unwrap() - x).abs() < 1e-14 * x);
            assert!((up.evaluate(p).unwrap() - x * x.ln()).abs() < 1e-13);
        }
        let g = BellmanSurface::gehring(1.0, 0.3).unwrap();
        for x in [0.3, 1.0, 4.0] {
            let p = BellmanPoint::new(x, x * x.ln());
            assert!((g.tangent_point(p).unwrap() - x).abs() < 1e-14 * x);
            assert!((g.evaluate(p).unwrap() - x.powf(1.3)).abs() < 1e-13 * x.powf(1.3));
        }
    }

    #[test]
    fn gehring_gamma_q_point() {
        let g = BellmanSurface::gehring(1.0, 0.3).unwrap();
        let gp = g.gamma();
        assert!((gp - 3.146193).abs() < 1e-6);
        // forward: v = 1 gives (γ_+, γ_+ (1 + ... )) on Γ_Q
        let (_, p1) = g.tangent_segment(1.0);
        assert!((p1.x - 3.146193).abs() < 1e-6);
        assert!((p1.y - 6.75234).abs() < 1e-5, "{}", p1.y);
        assert!((g.tangent_point(p1).unwrap() - 1.0).abs() < 1e-9);
        let b = g.evaluate(p1).unwrap();
        assert!((b - gp / (1.3 - 0.3 * gp)).abs() < 1e-12 * b);
        assert!((b - 8.8340).abs() < 1e-3, "{b}");
    }

    #[test]
    fn closed_form_hessian_is_degenerate_and_concave() {
        let up = BellmanSurface::ainf_upper(E).unwrap();
        for p in up.sample_interior(200, 7, 0.1, 10.0, 0.02) {
            let h = up.hessian(p).unwrap();
            assert!(h.relative_det() < 1e-12);
            assert!(h.yy <= 0.0 && h.xx <= 0.0);
        }
    }

    /// Closed-form second derivatives of the entropy-coordinate surfaces,
    /// derived by hand; used only as an oracle for the finite differences.
    fn entropy_hessian_oracle(s: &BellmanSurface, p: BellmanPoint) -> (f64, f64, f64) {
        let v = s.tangent_point(p).unwrap();
        let g = s.gamma();
        let l = v.ln() + g;
        match s.kind() {
            SurfaceKind::Gehring => {
                let e = s.eps().unwrap();
                let c = -e * e * (1.0 + e) / (1.0 + e - g * e) * v.powf(e) / (g * v - p.x);
                (c * l * l, -c * l, c)
            }
            SurfaceKind::AinfLower => {
                let c = 1.0 / (g * v * (p.x - g * v));
                (c * l * l, -c * l, c)
            }
            SurfaceKind::AinfUpper => unreachable!(),
        }
    }

    #[test]
    fn fd_agrees_with_closed_form() {
        let up = BellmanSurface::ainf_upper(5.0).unwrap();
        for p in up.sample_interior(50, 3, 0.2, 5.0, 0.05) {
            let c = up.hessian(p).unwrap();
            let f = up.hessian_fd(p).unwrap();
            for (a, b) in [(c.xx, f.xx), (c.xy, f.xy), (c.yy, f.yy)] {
                assert!((a - b).abs() <= 1e-4 * (1.0 + a.abs()), "{a} vs {b} at {p:?}");
            }
        }
        for s in [
            BellmanSurface::gehring(1.0, 0.3).unwrap(),
            BellmanSurface::gehring_fraction(4.0, 0.9).unwrap(),
            BellmanSurface::ainf_lower(1.0).unwrap(),
            BellmanSurface::ainf_lower(3.0).unwrap(),
        ] {
            for p in s.sample_interior(100, 5, 0.1, 10.0, 0.02) {
                let (xx, xy, yy) = entropy_hessian_oracle(&s, p);
                let f = s.hessian(p).unwrap();
                assert_eq!(f.method, DerivativeMethod::FiniteDifference);
                for (a, b) in [(xx, f.xx), (xy, f.xy), (yy, f.yy)] {
                    assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{:?}: {a} vs {b}", s.kind());
                }
            }
        }
    }

    #[test]
    fn gradient_matches_value_differences() {
        for s in [
            BellmanSurface::ainf_upper(3.0).unwrap(),
            BellmanSurface::gehring(1.0, 0.3).unwrap(),
            BellmanSurface::ainf_lower(2.0).unwrap(),
        ] {
            for p in s.sample_interior(40, 11, 0.3, 3.0, 0.1) {
                let (gx, gy) = s.gradient(p).unwrap();
                let h = 1e-6;
                let b = |x: f64, y: f64| s.evaluate(BellmanPoint::new(x, y)).unwrap();
                let fx = (b(p.x + h, p.y) - b(p.x - h, p.y)) / (2.0 * h);
                let fy = (b(p.x, p.y + h) - b(p.x, p.y - h)) / (2.0 * h);
                assert!((gx - fx).abs() < 1e-6 * (1.0 + gx.abs()), "{:?} {gx} {fx}", s.kind());
                assert!((gy - fy).abs() < 1e-6 * (1.0 + gy.abs()), "{:?} {gy} {fy}", s.kind());
            }
        }
    }

    #[test]
    fn tangent_linearity() {
        let g = BellmanSurface::gehring(1.0, 0.3).unwrap();
        assert!(g.tangent_linearity_check(1.0, 50).unwrap() <= 1e-9);
        let up = BellmanSurface::ainf_upper(E).unwrap();
        assert!(up.tangent_linearity_check(1.0, 50).unwrap() <= 1e-9);
        assert_eq!(up.tangent_linearity_check(1.0, 2).unwrap(), 0.0);
        let low = BellmanSurface::ainf_lower(1.0).unwrap();
        assert!(low.tangent_linearity_check(2.0, 50).unwrap() <= 1e-9);
        assert!(up.tangent_linearity_check(1.0, 1).is_err());
    }

    #[test]
    fn bounds_and_ratio() {
        let r = bounds_check_ainf(2.0, 60).unwrap();
        assert!(r.max_excess_low <= 1e-9 && r.max_excess_high <= 1e-9, "{r:?}");
        assert!((r.max_ratio - r.ratio_bound).abs() < 1e-9);
        let g = gamma_log(E).unwrap().root;
        assert!((g.ln() + 1.0 / g - 1.0 - 3.4640).abs() < 1e-3);
    }

    #[test]
    fn outside_point_is_a_domain_error() {
        let g = BellmanSurface::gehring(1.0, 0.3).unwrap();
        assert!(matches!(g.evaluate(BellmanPoint::new(1.0, 2.0)), Err(Error::Domain(_))));
        assert!(matches!(g.tangent_point(BellmanPoint::new(1.0, -0.1)), Err(Error::Domain(_))));
    }
}
