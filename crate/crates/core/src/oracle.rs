//! Independent reference computations used by the tests and the acceptance
//! suite: adaptive Simpson quadrature, brute-force scans and a seeded corpus
//! of weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::weights::{Interval, Moment, PowerPiece, Weight};

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol || m <= a || b <= m {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

fn integrand(piece: &PowerPiece, kind: Moment) -> impl Fn(f64) -> f64 + '_ {
    move |t: f64| {
        let w = piece.eval(t);
        match kind {
            Moment::W => w,
            Moment::LogW => w.ln(),
            Moment::WLogW => w * w.ln(),
            Moment::WPow(p) => w.powf(p),
        }
    }
}

/// Power of `t` the integrand behaves like near the origin (log factors
/// ignored).
fn leading_exponent(piece: &PowerPiece, kind: Moment) -> f64 {
    match kind {
        Moment::W | Moment::WLogW => piece.exponent,
        Moment::LogW => 0.0,
        Moment::WPow(p) => p * piece.exponent,
    }
}

/// Integral of one piece's moment integrand over `[lo, hi]` by quadrature.
///
/// On pieces touching the origin the substitution `t = lo + (hi - lo) u^m`
/// flattens the endpoint singularity.
pub fn piece_integral(piece: &PowerPiece, lo: f64, hi: f64, kind: Moment, rel_tol: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let g = integrand(piece, kind);
    let len = hi - lo;
    let m = if lo == 0.0 {
        let s = leading_exponent(piece, kind) + 1.0;
        if s <= 0.0 {
            return f64::INFINITY;
        }
        (3.0 / s).ceil().max(2.0)
    } else {
        1.0
    };
    let h = |u: f64| {
        if u <= 0.0 && m > 1.0 {
            return 0.0;
        }
        let t = lo + len * u.powf(m);
        g(t) * len * m * u.powf(m - 1.0)
    };
    // coarse pass for the scale of the answer
    let scale = {
        let n = 64;
        (0..n).map(|i| h((i as f64 + 0.5) / n as f64).abs()).sum::<f64>() / n as f64
    };
    adaptive_simpson(&h, 0.0, 1.0, rel_tol * scale.max(f64::MIN_POSITIVE))
}

/// Average of the moment integrand over `interval` by quadrature.
pub fn quadrature_moment(w: &Weight, interval: &Interval, kind: Moment, rel_tol: f64) -> f64 {
    let (a, b) = (interval.a(), interval.b());
    let mut total = 0.0;
    for piece in w.pieces() {
        let (pa, pb) = (piece.support.a(), piece.support.b());
        if pb <= a || pa >= b {
            continue;
        }
        total += piece_integral(piece, pa.max(a), pb.min(b), kind, rel_tol);
    }
    total / interval.len()
}

/// Sup of `score` over all intervals with endpoints on a uniform grid of
/// `n + 1` points, scanned sequentially.
pub fn brute_sup<F: Fn(&Interval) -> f64>(n: usize, score: F) -> (f64, Interval) {
    let mut best = (f64::NEG_INFINITY, Interval::unit());
    for i in 0..n {
        for j in i + 1..=n {
            let iv = Interval::new(i as f64 / n as f64, j as f64 / n as f64).expect("ordered grid");
            let v = score(&iv);
            if v > best.0 {
                best = (v, iv);
            }
        }
    }
    best
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi / lo).ln()).exp()
}

fn sorted_breaks(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut b: Vec<f64> = (0..k).map(|_| 0.05 + 0.9 * rng.gen::<f64>()).collect();
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() < 0.02);
    b
}

/// A random step weight with 2 to 6 levels in `[0.1, 10]`.
pub fn random_step(rng: &mut ChaCha8Rng) -> Weight {
    let k = rng.gen_range(1..=5);
    let breaks = sorted_breaks(rng, k);
    let values: Vec<f64> = (0..=breaks.len()).map(|_| log_uniform(rng, 0.1, 10.0)).collect();
    Weight::step(&breaks, &values).expect("valid step weight")
}

/// A power piece at the origin (exponent in `(-0.9, 2)`) glued continuously
/// to one or two further pieces.
pub fn random_glued_power(rng: &mut ChaCha8Rng) -> Weight {
    let k = rng.gen_range(1..=2);
    let breaks = sorted_breaks(rng, k);
    let mut pieces = Vec::new();
    let mut a: f64 = 0.0;
    let mut value_at_a = f64::NAN;
    for (i, &b) in breaks.iter().chain(std::iter::once(&1.0)).enumerate() {
        let exponent = if i == 0 { -0.9 + 2.9 * rng.gen::<f64>() } else { -1.5 + 3.0 * rng.gen::<f64>() };
        let coeff = if i == 0 {
            log_uniform(rng, 0.2, 5.0)
        } else {
            // continuous at the left end of the piece
            value_at_a / a.powf(exponent)
        };
        let support = Interval::new(a, b).expect("ordered breaks");
        let piece = PowerPiece::new(support, coeff, exponent).expect("valid piece");
        value_at_a = piece.eval(b);
        pieces.push(piece);
        a = b;
    }
    Weight::from_pieces(pieces).expect("pieces partition [0, 1]")
}

/// Ten random steps followed by ten glued powers.
pub fn corpus(seed: u64) -> Vec<Weight> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Weight> = (0..10).map(|_| random_step(&mut rng)).collect();
    out.extend((0..10).map(|_| random_glued_power(&mut rng)));
    out
}

/// A random `(weight, interval, moment)` triple; every third weight has a
/// piece with exponent in `(-1, 0)` at the origin.
pub fn random_triple(rng: &mut ChaCha8Rng, index: usize) -> (Weight, Interval, Moment) {
    let w = if index.is_multiple_of(3) {
        let alpha = -0.95 + 0.9 * rng.gen::<f64>();
        let c = log_uniform(rng, 0.2, 5.0);
        let b = 0.2 + 0.6 * rng.gen::<f64>();
        Weight::from_pieces(vec![
            PowerPiece::new(Interval::new(0.0, b).unwrap(), c, alpha).unwrap(),
            PowerPiece::new(Interval::new(b, 1.0).unwrap(), log_uniform(rng, 0.2, 5.0), 0.0).unwrap(),
        ])
        .unwrap()
    } else if index % 3 == 1 {
        random_step(rng)
    } else {
        random_glued_power(rng)
    };
    let (mut a, mut b) = (rng.gen::<f64>(), rng.gen::<f64>());
    if rng.gen_bool(0.3) {
        a = 0.0;
    }
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    if b - a < 1e-3 {
        b = (a + 0.1).min(1.0);
        a = b - 0.1;
    }
    let interval = Interval::new(a, b).unwrap();
    // powers kept integrable for exponents down to -0.95
    let kind = match rng.gen_range(0..4) {
        0 => Moment::W,
        1 => Moment::LogW,
        2 => Moment::WLogW,
        _ => Moment::WPow(0.3 + 0.7 * rng.gen::<f64>()),
    };
    (w, interval, kind)
}

/// Does `interval` touch the origin inside a piece with a negative exponent?
pub fn touches_singularity(w: &Weight, interval: &Interval) -> bool {
    interval.a() == 0.0 && w.pieces()[0].exponent < 0.0
}
