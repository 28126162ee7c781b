//! Double-exponential (tanh-sinh) quadrature on a finite interval.
//!
//! Tolerates integrable endpoint singularities such as `t^alpha` with
//! `alpha > -1`, which is the case the Luxemburg norms need.

use std::f64::consts::FRAC_PI_2;

const MAX_LEVEL: usize = 9;
const T_MAX: f64 = 6.0;

/// Integrates `f` over `[a, b]` to roughly `rel_tol` relative accuracy.
///
/// Returns `+∞` as soon as an evaluated node is infinite.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let center = a + half;

    // contribution of the nodes at +-t (both sides)
    let pair = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cosh_u = u.cosh();
        // distance of the node from the nearer endpoint, in units of `half`
        let gap = 1.0 / (u.exp() * cosh_u);
        if gap * half == 0.0 {
            return 0.0;
        }
        let weight = FRAC_PI_2 * t.cosh() / (cosh_u * cosh_u);
        let left = a + half * gap;
        let right = b - half * gap;
        let mut s = 0.0;
        if left > a {
            s += f(left);
        }
        if right < b {
            s += f(right);
        }
        weight * s
    };

    let mut h = 1.0;
    let mut sum = FRAC_PI_2 * f(center);
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        sum += pair(k as f64 * h);
        k += 1;
    }
    let mut estimate = sum * h * half;
    if !estimate.is_finite() {
        return estimate;
    }
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        // new nodes are the odd multiples of h
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            sum += pair(k as f64 * h);
            k += 2;
        }
        let next = sum * h * half;
        if !next.is_finite() {
            return next;
        }
        let converged = (next - estimate).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE);
        estimate = next;
        if converged && level >= 3 {
            break;
        }
    }
    estimate
}
