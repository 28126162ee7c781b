use proptest::prelude::*;

use weightlab::bellman::{BellmanSurface, Domain};
use weightlab::constants::{ainf_on, rh1_on};
use weightlab::dyadic::{split, SplitConfig, SplitMode};
use weightlab::extremals::{attainment_check, ExtremalFamily, ExtremalSpec};
use weightlab::solvers::{eps_minus, gamma_entropy_roots, gehring_sharp_eps};
use weightlab::{Error, Interval, Moment, Weight};

prop_compose! {
    fn step_weight()(k in 1usize..6)
        (cuts in prop::collection::btree_set(1u32..99, k), values in prop::collection::vec(-3.0f64..3.0, k + 1))
        -> Weight
    {
        let breaks: Vec<f64> = cuts.iter().map(|&c| c as f64 / 100.0).collect();
        let values: Vec<f64> = values[..=breaks.len()].iter().map(|v| v.exp()).collect();
        Weight::step(&breaks, &values).unwrap()
    }
}

prop_compose! {
    fn power_weight()(c in 0.1f64..10.0, alpha in -0.9f64..3.0) -> Weight {
        Weight::power(c, alpha).unwrap()
    }
}

fn weight() -> impl Strategy<Value = Weight> {
    prop_oneof![step_weight(), power_weight()]
}

prop_compose! {
    fn interval()(a in 0.0f64..0.99, len in 0.001f64..1.0) -> Interval {
        Interval::new(a, (a + len).min(1.0)).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn jensen(w in weight(), i in interval()) {
        let m = w.moment(&i, Moment::W);
        prop_assert!(w.moment(&i, Moment::WLogW) >= m * m.ln() - 1e-12 * m.max(1.0));
        prop_assert!(w.moment(&i, Moment::LogW) <= m.ln() + 1e-12);
    }

    #[test]
    fn additivity(w in weight(), i in interval(), s in 0.01f64..0.99) {
        let cut = i.a() + s * i.len();
        for kind in [Moment::W, Moment::LogW, Moment::WLogW, Moment::WPow(0.5)] {
            let whole = w.integral(i.a(), i.b(), kind);
            let parts = w.integral(i.a(), cut, kind) + w.integral(cut, i.b(), kind);
            prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1.0));
        }
    }

    #[test]
    fn truncation_is_median(w in weight(), n in 1.01f64..100.0, t in 0.001f64..1.0) {
        let v = w.eval(t).unwrap();
        let tv = w.truncate(n).unwrap().eval(t).unwrap();
        prop_assert!((tv - v.clamp(1.0 / n, n)).abs() <= 1e-12 * tv);
    }

    #[test]
    fn json_round_trip(w in weight()) {
        prop_assert_eq!(Weight::from_json(&w.to_json()).unwrap(), w);
    }

    #[test]
    fn per_interval_scaling(w in weight(), i in interval(), c in 0.01f64..1000.0) {
        let s = w.rescale(c).unwrap();
        prop_assert!((rh1_on(&w, &i) - rh1_on(&s, &i)).abs() <= 1e-10 * rh1_on(&w, &i).max(1.0));
        prop_assert!((ainf_on(&w, &i) - ainf_on(&s, &i)).abs() <= 1e-10 * ainf_on(&w, &i));
        prop_assert!(rh1_on(&w, &i) >= -1e-12 && ainf_on(&w, &i) >= 1.0 - 1e-12);
    }

    #[test]
    fn eps_identity(q in 0.05f64..50.0) {
        let e = eps_minus(q).unwrap().root;
        let (gm, gp) = gamma_entropy_roots(q).unwrap();
        prop_assert!(gm.root < 1.0 && gp.root > 1.0);
        prop_assert!((e * (gp.root - 1.0) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn sharp_gap_decreasing(p in 1.1f64..4.0, k in 1.01f64..5.0, dk in 0.01f64..2.0) {
        let a = gehring_sharp_eps(p, k).unwrap().root;
        let b = gehring_sharp_eps(p, k + dk).unwrap().root;
        prop_assert!(b < a);
    }

    #[test]
    fn ainf_upper_bounds(q in 1.05f64..20.0, x in 0.01f64..100.0, theta in 0.0f64..=1.0) {
        let s = BellmanSurface::ainf_upper(q).unwrap();
        let p = s.domain().point_at(x, theta);
        let b = s.evaluate(p).unwrap();
        let tol = 1e-9 * (1.0 + (x * x.ln()).abs() + x);
        prop_assert!(b >= x * x.ln() - tol);
        prop_assert!(b <= x * x.ln() + std::f64::consts::E * q * x + tol);
    }

    #[test]
    fn ainf_upper_hessian_degenerate(q in 1.05f64..20.0, x in 0.1f64..10.0, theta in 0.02f64..0.98) {
        let s = BellmanSurface::ainf_upper(q).unwrap();
        let h = s.hessian(s.domain().point_at(x, theta)).unwrap();
        prop_assert!(h.relative_det() <= 1e-6 && h.yy <= 0.0);
    }

    #[test]
    fn ainf_attainment(q in 1.2f64..6.0, x in 0.2f64..5.0, theta in 0.02f64..0.98) {
        let target = Domain::new(weightlab::bellman::Coordinates::Log, q).point_at(x, theta);
        let a = attainment_check(&ExtremalSpec::new(ExtremalFamily::Ainf, q, Some(target)), None).unwrap();
        prop_assert!(a.gap <= 1e-6, "gap {}", a.gap);
    }

    #[test]
    fn gehring_interior_attainment(q in 0.3f64..6.0, x in 0.2f64..5.0, theta in 0.02f64..0.98, frac in 0.1f64..0.9) {
        let target = Domain::new(weightlab::bellman::Coordinates::Entropy, q).point_at(x, theta);
        let eps = eps_minus(q).unwrap().root * frac;
        let spec = ExtremalSpec::new(ExtremalFamily::GehringInterior, q, Some(target));
        let a = attainment_check(&spec, Some(eps)).unwrap();
        prop_assert!(a.gap <= 1e-6, "gap {}", a.gap);
    }

    #[test]
    fn split_never_clamps(w in step_weight(), i in interval(), q1 in 1.5f64..20.0) {
        let cfg = SplitConfig::new(1.0 + 0.5 * (q1 - 1.0), q1, 1).unwrap();
        match split(&w, &i, &cfg, SplitMode::Log) {
            Ok(s) => prop_assert!(s.alpha >= cfg.delta0 && s.alpha <= 1.0 - cfg.delta0),
            Err(e) => prop_assert!(matches!(e, Error::SplitFailure { .. }), "{e}"),
        }
    }
}
