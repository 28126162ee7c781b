//! Transcendental equations behind the sharp (and non-sharp) constants.
//!
//! Every root is found by bisection on a bracket where the target function is
//! monotone, and is returned together with its residual so callers can
//! certify it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual threshold every solver in this module certifies.
pub const RESIDUAL_TOL: f64 = 1e-12;

const MAX_ITERATIONS: usize = 200;

/// A bisection root together with the bracket it was searched in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub root: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

impl RootResult {
    pub fn is_certified(&self) -> bool {
        self.residual.abs() <= RESIDUAL_TOL && self.bracket.0 <= self.root && self.root <= self.bracket.1
    }
}

/// Bisection until the bracket collapses to adjacent floats.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them vanish).
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<RootResult> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(RootResult { root: a, residual: 0.0, bracket: (lo, hi), iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(RootResult { root: b, residual: 0.0, bracket: (lo, hi), iterations: 0 });
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo, hi, f_lo: fa, f_hi: fb });
    }
    let mut fb = fb;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let mid = a + 0.5 * (b - a);
        if mid <= a || mid >= b {
            break;
        }
        iterations += 1;
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(RootResult { root: mid, residual: 0.0, bracket: (lo, hi), iterations });
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    let (root, residual) = if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
    Ok(RootResult { root, residual, bracket: (lo, hi), iterations })
}

fn certified(r: RootResult) -> Result<RootResult> {
    if r.residual.abs() <= RESIDUAL_TOL {
        Ok(r)
    } else {
        Err(Error::Uncertified { root: r.root, residual: r.residual })
    }
}

/// Root in `(0, 1)` of `t - ln t = c` for `c > 1`.
fn small_root_of_t_minus_log(c: f64) -> Result<RootResult> {
    // smallest positive normal: -ln reaches ~708, enough for c < 708
    let lo = f64::MIN_POSITIVE;
    if lo - lo.ln() <= c {
        return Err(Error::Parameter(format!("t - ln t = {c} has its small root below the f64 range")));
    }
    certified(bisect(|t| t - t.ln() - c, lo, 1.0)?)
}

/// Root in `(1, ∞)` of `t - ln t = c` for `c > 1`.
fn large_root_of_t_minus_log(c: f64) -> Result<RootResult> {
    let f = |t: f64| t - t.ln() - c;
    let mut hi = c + 1.0 + (c + 1.0).ln();
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    certified(bisect(f, 1.0, hi)?)
}

/// The root `γ < 1` of `t - ln t = 1 + ln Q` (upper `A_∞` surface).
pub fn gamma_log(q: f64) -> Result<RootResult> {
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::Parameter(format!("gamma_log needs Q > 1, got {q}")));
    }
    small_root_of_t_minus_log(1.0 + q.ln())
}

/// Both roots `γ_- < 1 < γ_+` of `t - ln t = Q + 1`.
pub fn gamma_entropy_roots(q: f64) -> Result<(RootResult, RootResult)> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Parameter(format!("gamma_entropy_roots needs Q > 0, got {q}")));
    }
    let c = q + 1.0;
    Ok((small_root_of_t_minus_log(c)?, large_root_of_t_minus_log(c)?))
}

/// The critical exponent `ε_-`: the root of `1/t - ln(1/t + 1) = Q`.
///
/// Solved directly; `1/ε_- + 1` coincides with `γ_+(Q)`.
pub fn eps_minus(q: f64) -> Result<RootResult> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Parameter(format!("eps_minus needs Q > 0, got {q}")));
    }
    // decreasing in t: +∞ at 0+, -Q at ∞
    let g = |t: f64| {
        let u = 1.0 / t;
        u - u.ln_1p() - q
    };
    let lo = 1e-300;
    let mut hi = 1.0;
    while g(hi) >= 0.0 {
        hi *= 2.0;
    }
    certified(bisect(g, lo, hi)?)
}

/// Left side of the sharp `p`-Gehring equation minus its right side.
fn gehring_gap(p: f64, rhs: f64, eps: f64) -> f64 {
    let first = ((p - 1.0) / eps).ln_1p() / (p - 1.0);
    let second = (1.0 / (p - 1.0 + eps)).ln_1p();
    first - second - rhs
}

/// Sharp self-improvement gap `ε(p, K)` for `w ∈ RH_p` with `[w]_{RH_p} = K`.
///
/// Returns a root of `+∞` when `K <= 1` (every exponent works).
pub fn gehring_sharp_eps(p: f64, k: f64) -> Result<RootResult> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("gehring_sharp_eps needs p > 1, got {p}")));
    }
    if !(k > 1.0) {
        return Ok(RootResult {
            root: f64::INFINITY,
            residual: 0.0,
            bracket: (f64::INFINITY, f64::INFINITY),
            iterations: 0,
        });
    }
    let rhs = p / (p - 1.0) * k.ln();
    let f = |e: f64| gehring_gap(p, rhs, e);
    let lo = 1e-300;
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    certified(bisect(f, lo, hi)?)
}

/// Non-sharp exponent `ε = ln 4 / (n ln 2 + 8Q)` of the good-λ argument.
pub fn gehring_dim_n_eps(n: u32, q: f64) -> Result<f64> {
    if n < 1 || !(q > 0.0) {
        return Err(Error::Parameter(format!("need n >= 1 and Q > 0, got n = {n}, Q = {q}")));
    }
    Ok(4f64.ln() / (n as f64 * 2f64.ln() + 8.0 * q))
}

/// Good-λ thresholds `α = 1/(e^{8Q} - 1)` and `β = 1/4`.
pub fn good_lambda_params(q: f64) -> Result<(f64, f64)> {
    if !(q > 0.0) {
        return Err(Error::Parameter(format!("good_lambda_params needs Q > 0, got {q}")));
    }
    Ok((1.0 / (8.0 * q).exp_m1(), 0.25))
}

/// `ln((2^n / α)^ε β)`; negative means the good-λ condition holds.
pub fn good_lambda_log_condition(n: u32, q: f64, eps: f64) -> Result<f64> {
    let (_alpha, beta) = good_lambda_params(q)?;
    // ln(1/α) = 8Q + ln(1 - e^{-8Q}); the first part is compared against the
    // exponent that balances it exactly so the tiny second part survives
    let d = n as f64 * 2f64.ln() + 8.0 * q;
    let balanced = -beta.ln() / d;
    Ok((eps - balanced) * d + eps * (-(-8.0 * q).exp()).ln_1p())
}

/// `p`-Gehring obtained from the `1`-Gehring lemma.
///
/// Returns the bound `6^n K^p 2^p p/(p-1)` on `[w^p]_{RH_1}` and the gain
/// `δ = p ε_-(bound)` such that `w ∈ RH_{p+δ}`.
pub fn p_gehring_via_one(n: u32, p: f64, k: f64) -> Result<(f64, f64)> {
    if n < 1 || !(p > 1.0) || !(k >= 1.0) {
        return Err(Error::Parameter(format!("need n >= 1, p > 1, K >= 1, got n = {n}, p = {p}, K = {k}")));
    }
    let bound = 6f64.powi(n as i32) * k.powf(p) * 2f64.powf(p) * p / (p - 1.0);
    let eps = eps_minus(bound)?.root;
    Ok((bound, p * eps))
}

/// Exact supremum of `[w]_{A_∞}` over `[w]_{RH_1} <= Q`: `γ_- e^{(1-γ_-)/γ_-}`.
pub fn funny_bound(q: f64) -> Result<f64> {
    Ok(log_funny_bound(q)?.exp())
}

/// Natural logarithm of [`funny_bound`], `ln γ_- + 1/γ_- - 1`.
pub fn log_funny_bound(q: f64) -> Result<f64> {
    let g = gamma_entropy_roots(q)?.0.root;
    Ok(g.ln() + (1.0 - g) / g)
}

/// `(ln γ + 1/γ - 1) / Q` with `γ = gamma_log(Q)`; tends to `e` from below.
pub fn e_sharpness_ratio(q: f64) -> Result<f64> {
    let g = gamma_log(q)?.root;
    Ok((g.ln() + 1.0 / g - 1.0) / q)
}

/// `ln(funny_bound(Q)) / (e^{Q+1} - Q - 2)`; tends to 1.
pub fn funny_asymptotic_ratio(q: f64) -> Result<f64> {
    Ok(log_funny_bound(q)? / ((q + 1.0).exp() - q - 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_log_at_e() {
        let r = gamma_log(std::f64::consts::E).unwrap();
        assert!((r.root - 0.158594).abs() < 1e-6, "{}", r.root);
        assert!(r.is_certified());
        assert!((r.root - r.root.ln() - 2.0).abs() < 1e-12);
        assert!(r.iterations <= 100);
    }

    #[test]
    fn gamma_log_limits() {
        let near = gamma_log(1.0 + 1e-10).unwrap().root;
        assert!((near - 1.0).abs() < 1e-4);
        let big = gamma_log(1e6).unwrap().root;
        let asym = 1.0 / (std::f64::consts::E * 1e6);
        assert!((big / asym - 1.0).abs() < 0.01);
        assert!(matches!(gamma_log(1.0), Err(Error::Parameter(_))));
        assert!(matches!(gamma_log(0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn entropy_roots_q1() {
        let (m, p) = gamma_entropy_roots(1.0).unwrap();
        assert!((m.root - 0.158594).abs() < 1e-6);
        assert!((p.root - 3.146193).abs() < 1e-6);
        assert!(m.is_certified() && p.is_certified());
        let (m, p) = gamma_entropy_roots(1e-8).unwrap();
        assert!((m.root - 1.0).abs() < 1e-3 && (p.root - 1.0).abs() < 1e-3);
        assert!(gamma_entropy_roots(0.0).is_err());
        // asymptotic order of gamma_minus
        let e2 = (-2.0f64).exp();
        let (m, _) = gamma_entropy_roots(1.0).unwrap();
        assert!(m.root / e2 > 1.0 && m.root / e2 < 1.5);
    }

    #[test]
    fn eps_minus_q1_and_identity() {
        let r = eps_minus(1.0).unwrap();
        assert!((r.root - 1.0 / 2.146193).abs() < 1e-6, "{}", r.root);
        for q in [0.1, 1.0, 5.0, 20.0] {
            let e = eps_minus(q).unwrap().root;
            let gp = gamma_entropy_roots(q).unwrap().1.root;
            assert!((1.0 / e + 1.0 - gp).abs() < 1e-10 * gp, "Q = {q}");
        }
        let mut prev = f64::INFINITY;
        for q in [0.5, 1.0, 10.0, 100.0, 1000.0] {
            let e = eps_minus(q).unwrap().root;
            assert!(e < prev);
            prev = e;
        }
        assert!(eps_minus(-1.0).is_err());
    }

    #[test]
    fn gehring_sharp_quadratic_cases() {
        let r = gehring_sharp_eps(2.0, 2f64.sqrt()).unwrap();
        assert!((r.root - (2f64.sqrt() - 1.0)).abs() < 1e-10);
        let r = gehring_sharp_eps(2.0, 2.0).unwrap();
        assert!((r.root - (-3.0 + 12f64.sqrt()) / 3.0).abs() < 1e-10);
        assert_eq!(gehring_sharp_eps(2.0, 1.0).unwrap().root, f64::INFINITY);
        assert!(gehring_sharp_eps(1.0, 2.0).is_err());
        let near_one = gehring_sharp_eps(2.0, 1.0 + 1e-6).unwrap().root;
        assert!(near_one > 100.0);
    }

    #[test]
    fn dim_n_eps() {
        let e = gehring_dim_n_eps(1, 1.0).unwrap();
        assert!((e - 0.159_469_790_666_836).abs() < 1e-12);
        assert!(gehring_dim_n_eps(2, 1.0).unwrap() < e);
        assert!(gehring_dim_n_eps(1, 1e12).unwrap() < 1e-12);
    }

    #[test]
    fn good_lambda() {
        let (a, b) = good_lambda_params(1.0).unwrap();
        assert!((a - 1.0 / (8f64.exp() - 1.0)).abs() < 1e-18);
        assert!((a - 3.3557e-4).abs() < 1e-8);
        assert_eq!(b, 0.25);
        for n in 1..=3 {
            for q in [0.5, 1.0, 5.0] {
                let eps = gehring_dim_n_eps(n, q).unwrap();
                assert!(good_lambda_log_condition(n, q, eps).unwrap() < 0.0);
            }
        }
        assert!(good_lambda_params(200.0).unwrap().0 < 1e-300);
    }

    #[test]
    fn p_gehring_bound() {
        let (bound, delta) = p_gehring_via_one(1, 2.0, 1.0).unwrap();
        assert_eq!(bound, 48.0);
        assert!(delta > 0.0);
    }

    #[test]
    fn funny_bound_values() {
        let f = funny_bound(1.0).unwrap();
        assert!((f - 31.936).abs() < 1e-2, "{f}");
        assert!((funny_bound(1e-9).unwrap() - 1.0).abs() < 1e-3);
        let r8 = funny_asymptotic_ratio(8.0).unwrap();
        assert!((r8 - 1.0).abs() < 1e-3);
        let r3 = funny_asymptotic_ratio(3.0).unwrap();
        let r5 = funny_asymptotic_ratio(5.0).unwrap();
        assert!((1.0 - r3).abs() > (1.0 - r5).abs() && (1.0 - r5).abs() > (1.0 - r8).abs());
    }

    #[test]
    fn e_ratio() {
        assert!((e_sharpness_ratio(1e6).unwrap() / std::f64::consts::E - 1.0).abs() < 0.02);
        assert!(e_sharpness_ratio(10.0).unwrap() < std::f64::consts::E);
        assert!(
            (e_sharpness_ratio(std::f64::consts::E).unwrap() * std::f64::consts::E - 3.4640).abs() < 1e-3
        );
    }
}
