//! Piecewise power-law weights on `[0, 1]`.
//!
//! Every piece is a global power `c * t^alpha` restricted to a subinterval,
//! so all averages used by the weight constants (`w`, `log w`, `w log w`,
//! `w^p`) have elementary antiderivatives and are computed in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points closer than this are treated as the same abutment.
const ABUT_TOL: f64 = 1e-12;

/// A subinterval `[a, b]` of `[0, 1]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a < 0.0 || b > 1.0 || a >= b {
            return Err(Error::Domain(format!("interval [{a}, {b}] must satisfy 0 <= a < b <= 1")));
        }
        Ok(Self { a, b })
    }

    pub fn unit() -> Self {
        Self { a: 0.0, b: 1.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, t: f64) -> bool {
        self.a <= t && t <= self.b
    }

    pub fn midpoint(&self) -> f64 {
        self.a + 0.5 * (self.b - self.a)
    }

    /// Splits at `a + alpha * len` into `(left, right)`.
    pub fn split_at_ratio(&self, alpha: f64) -> Result<(Interval, Interval)> {
        let s = self.a + alpha * self.len();
        Ok((Interval::new(self.a, s)?, Interval::new(s, self.b)?))
    }

    /// Lexicographic order on `(a, b)`; used to break ties in sup-scans.
    pub fn lex_cmp(&self, other: &Interval) -> std::cmp::Ordering {
        self.a.total_cmp(&other.a).then_with(|| self.b.total_cmp(&other.b))
    }
}

/// `w(t) = coeff * t^exponent` on `support`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPiece {
    pub support: Interval,
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerPiece {
    pub fn new(support: Interval, coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff.is_finite() && coeff > 0.0) {
            return Err(Error::InvalidWeight(format!("coeff must be positive and finite, got {coeff}")));
        }
        if !exponent.is_finite() {
            return Err(Error::InvalidWeight(format!("exponent must be finite, got {exponent}")));
        }
        if support.a == 0.0 && exponent <= -1.0 {
            return Err(Error::InvalidWeight(format!("exponent {exponent} is not integrable at the origin")));
        }
        Ok(Self { support, coeff, exponent })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.exponent == 0.0 {
            self.coeff
        } else {
            self.coeff * t.powf(self.exponent)
        }
    }

    /// Integral of the requested integrand over `[lo, hi]`, which must lie
    /// inside the support.
    fn integral(&self, lo: f64, hi: f64, kind: Moment) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let (c, alpha) = (self.coeff, self.exponent);
        let s = alpha + 1.0;
        match kind {
            Moment::W => {
                if alpha == 0.0 {
                    c * (hi - lo)
                } else {
                    c * power_integral(s, lo, hi)
                }
            }
            Moment::LogW => {
                let base = (hi - lo) * c.ln();
                if alpha == 0.0 {
                    base
                } else {
                    base + alpha * log_integral(lo, hi)
                }
            }
            Moment::WLogW => {
                if alpha == 0.0 {
                    c * c.ln() * (hi - lo)
                } else {
                    c * c.ln() * power_integral(s, lo, hi) + c * alpha * power_log_integral(s, lo, hi)
                }
            }
            Moment::WPow(p) => {
                if alpha == 0.0 {
                    c.powf(p) * (hi - lo)
                } else {
                    c.powf(p) * power_integral(p * alpha + 1.0, lo, hi)
                }
            }
        }
    }
}

/// `∫_lo^hi t^(s-1) dt`; `+∞` when `lo == 0` and `s <= 0`.
pub(crate) fn power_integral(s: f64, lo: f64, hi: f64) -> f64 {
    if lo == 0.0 {
        if s <= 0.0 {
            return f64::INFINITY;
        }
        return hi.powf(s) / s;
    }
    let log_ratio = (lo / hi).ln();
    if s == 0.0 {
        return -log_ratio;
    }
    // (hi^s - lo^s) / s written through expm1 so s -> 0 stays accurate
    -hi.powf(s) * (s * log_ratio).exp_m1() / s
}

/// `∫_lo^hi ln t dt`.
pub(crate) fn log_integral(lo: f64, hi: f64) -> f64 {
    let f = |t: f64| if t == 0.0 { 0.0 } else { t * t.ln() - t };
    f(hi) - f(lo)
}

/// `∫_lo^hi t^(s-1) ln t dt` for `s > 0` when `lo == 0`.
pub(crate) fn power_log_integral(s: f64, lo: f64, hi: f64) -> f64 {
    let prim = |t: f64| t.powf(s) * (s * t.ln() - 1.0) / (s * s);
    if lo == 0.0 {
        if s <= 0.0 {
            return f64::NEG_INFINITY;
        }
        return prim(hi);
    }
    let (l1, l2) = (lo.ln(), hi.ln());
    if s.abs() * l1.abs().max(l2.abs()) <= 1.0 {
        // series in s: sum_k s^k / k! * (l2^(k+2) - l1^(k+2)) / (k+2)
        let mut sum = 0.0;
        let mut coef = 1.0;
        let (mut p1, mut p2) = (l1 * l1, l2 * l2);
        for k in 0..60 {
            let term = coef * (p2 - p1) / (k as f64 + 2.0);
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() && k > 2 {
                break;
            }
            coef *= s / (k as f64 + 1.0);
            p1 *= l1;
            p2 *= l2;
        }
        return sum;
    }
    prim(hi) - prim(lo)
}

/// The averaged integrands supported in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Moment {
    /// `m_I w`
    W,
    /// `m_I log w`
    LogW,
    /// `m_I (w log w)`
    WLogW,
    /// `m_I w^p`; may be `+∞`.
    WPow(f64),
}

/// A positive weight on `[0, 1]` built from power pieces that partition it.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pieces: Vec<PowerPiece>,
}

impl Weight {
    pub fn from_pieces(mut pieces: Vec<PowerPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidWeight("weight has no pieces".into()));
        }
        if pieces[0].support.a != 0.0 {
            return Err(Error::InvalidWeight(format!(
                "piece 0 starts at {} instead of 0",
                pieces[0].support.a
            )));
        }
        let last = pieces.len() - 1;
        if pieces[last].support.b != 1.0 {
            return Err(Error::InvalidWeight(format!(
                "piece {last} ends at {} instead of 1",
                pieces[last].support.b
            )));
        }
        for i in 1..pieces.len() {
            let (prev_b, a) = (pieces[i - 1].support.b, pieces[i].support.a);
            if (prev_b - a).abs() > ABUT_TOL {
                return Err(Error::InvalidWeight(format!(
                    "piece {i} starts at {a} but piece {} ends at {prev_b}",
                    i - 1
                )));
            }
            pieces[i].support.a = prev_b;
            if pieces[i].support.a >= pieces[i].support.b {
                return Err(Error::InvalidWeight(format!("piece {i} is empty")));
            }
        }
        Ok(Self { pieces })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::power(c, 0.0)
    }

    /// `c * t^alpha` on the whole of `[0, 1]`.
    pub fn power(c: f64, alpha: f64) -> Result<Self> {
        Self::from_pieces(vec![PowerPiece::new(Interval::unit(), c, alpha)?])
    }

    /// Step weight with `values[k]` on `[breaks[k-1], breaks[k]]`, where the
    /// interior breakpoints are given in increasing order.
    pub fn step(breaks: &[f64], values: &[f64]) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidWeight(format!(
                "{} values need {} breakpoints, got {}",
                values.len(),
                values.len().saturating_sub(1),
                breaks.len()
            )));
        }
        let mut edges = Vec::with_capacity(values.len() + 1);
        edges.push(0.0);
        edges.extend_from_slice(breaks);
        edges.push(1.0);
        let pieces = values
            .iter()
            .enumerate()
            .map(|(k, &v)| PowerPiece::new(Interval::new(edges[k], edges[k + 1])?, v, 0.0))
            .collect::<Result<Vec<_>>>()?;
        Self::from_pieces(pieces)
    }

    pub fn pieces(&self) -> &[PowerPiece] {
        &self.pieces
    }

    /// Interior abutment points.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.support.a).collect()
    }

    fn piece_index(&self, t: f64) -> usize {
        self.pieces.partition_point(|p| p.support.b <= t).min(self.pieces.len() - 1)
    }

    /// Value at `t ∈ (0, 1]`; at an abutment the right piece is used.
    /// The value of `w` on `interval` if it is constant there.
    pub fn constant_on(&self, interval: &Interval) -> Option<f64> {
        let mut value = None;
        for p in &self.pieces {
            if p.support.b <= interval.a || p.support.a >= interval.b {
                continue;
            }
            if p.exponent != 0.0 || value.is_some_and(|v| v != p.coeff) {
                return None;
            }
            value = Some(p.coeff);
        }
        value
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Domain(format!("t = {t} is outside (0, 1]")));
        }
        Ok(self.pieces[self.piece_index(t)].eval(t))
    }

    /// Limits `(w(t-), w(t+))`; missing sides are `None`.
    pub fn one_sided_limits(&self, t: f64) -> (Option<f64>, Option<f64>) {
        let left = (t > 0.0).then(|| {
            let i = self.pieces.partition_point(|p| p.support.b < t);
            self.pieces[i.min(self.pieces.len() - 1)].eval(t)
        });
        let right = (t < 1.0).then(|| {
            let p = &self.pieces[self.piece_index(t)];
            if t == 0.0 {
                if p.exponent < 0.0 {
                    f64::INFINITY
                } else if p.exponent > 0.0 {
                    0.0
                } else {
                    p.coeff
                }
            } else {
                p.eval(t)
            }
        });
        (left, right)
    }

    /// `∫_lo^hi` of the moment integrand (not averaged).
    pub fn integral(&self, lo: f64, hi: f64, kind: Moment) -> f64 {
        let mut total = 0.0;
        for piece in &self.pieces {
            let (pa, pb) = (piece.support.a, piece.support.b);
            if pb <= lo {
                continue;
            }
            if pa >= hi {
                break;
            }
            total += piece.integral(pa.max(lo), pb.min(hi), kind);
        }
        total
    }

    /// Average of the moment integrand over `interval`.
    pub fn moment(&self, interval: &Interval, kind: Moment) -> f64 {
        self.integral(interval.a, interval.b, kind) / interval.len()
    }

    /// `∫_0^t w`.
    pub fn primitive(&self, t: f64) -> f64 {
        self.integral(0.0, t, Moment::W)
    }

    /// The clamped weight `min(max(w, 1/n), n)`.
    pub fn truncate(&self, n: f64) -> Result<Weight> {
        if !(n > 1.0) || !n.is_finite() {
            return Err(Error::Parameter(format!("truncation level must exceed 1, got {n}")));
        }
        let (low, high) = (1.0 / n, n);
        let mut out: Vec<PowerPiece> = Vec::new();
        let mut push = |lo: f64, hi: f64, c: f64, alpha: f64| -> Result<()> {
            if hi <= lo {
                return Ok(());
            }
            if let Some(last) = out.last_mut() {
                if alpha == 0.0 && last.exponent == 0.0 && last.coeff == c {
                    last.support = Interval::new(last.support.a, hi)?;
                    return Ok(());
                }
            }
            out.push(PowerPiece::new(Interval::new(lo, hi)?, c, alpha)?);
            Ok(())
        };
        for piece in &self.pieces {
            let (a, b) = (piece.support.a, piece.support.b);
            let (c, alpha) = (piece.coeff, piece.exponent);
            if alpha == 0.0 {
                push(a, b, c.clamp(low, high), 0.0)?;
                continue;
            }
            // c t^alpha crosses `level` at t = (level / c)^(1/alpha)
            let cross = |level: f64| (level / c).powf(1.0 / alpha);
            let (t_low, t_high) = (cross(low), cross(high));
            let mut cuts = vec![a, b];
            for t in [t_low, t_high] {
                if t > a && t < b {
                    cuts.push(t);
                }
            }
            cuts.sort_by(f64::total_cmp);
            for win in cuts.windows(2) {
                let (lo, hi) = (win[0], win[1]);
                let mid = piece.eval(0.5 * (lo + hi));
                if mid < low {
                    push(lo, hi, low, 0.0)?;
                } else if mid > high {
                    push(lo, hi, high, 0.0)?;
                } else {
                    push(lo, hi, c, alpha)?;
                }
            }
        }
        Weight::from_pieces(out)
    }

    /// Multiplies the weight by `c > 0`.
    pub fn rescale(&self, c: f64) -> Result<Weight> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Parameter(format!("scale factor must be positive, got {c}")));
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| PowerPiece::new(p.support, p.coeff * c, p.exponent))
            .collect::<Result<Vec<_>>>()?;
        Weight::from_pieces(pieces)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&WeightJson::from(self)).expect("weight serializes")
    }

    pub fn from_json(text: &str) -> Result<Weight> {
        // serde_json messages already carry the line and column
        let raw: WeightJson = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        Weight::try_from(raw)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceJson {
    a: f64,
    b: f64,
    coeff: f64,
    exponent: f64,
}

/// Wire form `{"pieces":[{"a":..,"b":..,"coeff":..,"exponent":..}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightJson {
    pieces: Vec<PieceJson>,
}

impl From<&Weight> for WeightJson {
    fn from(w: &Weight) -> Self {
        Self {
            pieces: w
                .pieces
                .iter()
                .map(|p| PieceJson { a: p.support.a, b: p.support.b, coeff: p.coeff, exponent: p.exponent })
                .collect(),
        }
    }
}

impl TryFrom<WeightJson> for Weight {
    type Error = Error;

    fn try_from(raw: WeightJson) -> Result<Weight> {
        let pieces = raw
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let at = |field: &str, e: Error| {
                    let msg = match e {
                        Error::InvalidWeight(m) => m,
                        e => e.to_string(),
                    };
                    Error::InvalidWeight(format!("pieces[{i}]{field}: {msg}"))
                };
                let support = Interval::new(p.a, p.b).map_err(|e| at(".a/b", e))?;
                PowerPiece::new(support, p.coeff, p.exponent).map_err(|e| at("", e))
            })
            .collect::<Result<Vec<_>>>()?;
        Weight::from_pieces(pieces)
    }
}

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WeightJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = WeightJson::deserialize(d)?;
        Weight::try_from(raw).map_err(serde::de::Error::custom)
    }
}
