use mginf_pme::busy_period::{divergence_diagnostic, MomentClass, QueueParams};
use mginf_pme::dist_core::{pme_pdf, pme_tail, PmeParams};
use mginf_pme::ext_real::format_sig17;
use mginf_pme::laplace::{pme_lt, pme_tail_lt};
use mginf_pme::simulator::{empirical_tail, simulate, tail_index_estimate, SimConfig, StopRule};
use mginf_pme::{ServiceModel, TailCurve};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pme_tail_is_a_survival_function(r in 1.05f64..10.0, t in 0.0f64..100.0, dt in 1e-3f64..10.0) {
        let p = PmeParams::new(r).unwrap();
        let (a, b) = (pme_tail(&p, t).unwrap(), pme_tail(&p, t + dt).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b <= a);
        prop_assert!(pme_pdf(&p, t).unwrap() > 0.0);
    }

    #[test]
    fn tail_transform_identity(r in 1.05f64..10.0, log_s in -3.0f64..3.0) {
        let s = 10f64.powf(log_s);
        let g = pme_lt(r, s).unwrap().expect_finite();
        let h = pme_tail_lt(r, s).unwrap().expect_finite();
        prop_assert!(g > 0.0 && g < 1.0);
        prop_assert!(h > 0.0 && h < 1.0);
        prop_assert!((h - (1.0 - g) / s).abs() < 1e-9);
    }

    #[test]
    fn transform_decreases_in_s(r in 1.05f64..6.0, s in 1e-3f64..50.0, ds in 1e-3f64..5.0) {
        prop_assert!(pme_lt(r, s + ds).unwrap().expect_finite() < pme_lt(r, s).unwrap().expect_finite());
    }

    #[test]
    fn sig17_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let back: f64 = format_sig17(v).parse().unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn simulation_alternates(seed in any::<u64>(), lambda in 0.2f64..3.0) {
        let q = QueueParams::new(lambda, ServiceModel::exponential(1.0).unwrap()).unwrap();
        let cfg = SimConfig::new(q, StopRule::BusyPeriods(200), seed).unwrap();
        let a = simulate(&cfg);
        prop_assert_eq!(&a, &simulate(&cfg));
        prop_assert!(a.busy_lengths.len().abs_diff(a.idle_lengths.len()) <= 1);
        let total: f64 = a.busy_lengths.iter().chain(&a.idle_lengths).sum();
        prop_assert!((total - a.total_time()).abs() < 1e-9);
        prop_assert!(a.busy_fraction > 0.0 && a.busy_fraction < 1.0);
    }

    #[test]
    fn empirical_tail_is_non_increasing(samples in prop::collection::vec(0.0f64..10.0, 1..200)) {
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.25).collect();
        let c = empirical_tail(&samples, &grid).unwrap();
        prop_assert!(c.values().windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(c.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn tail_index_is_scale_invariant(scale in 1e-3f64..1e3, seed in 0u64..1000) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = PmeParams::new(2.0).unwrap();
        let xs: Vec<f64> = (0..2000).map(|_| mginf_pme::dist_core::pme_sample(&p, &mut rng)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * scale).collect();
        let a = tail_index_estimate(&xs, 100).unwrap().index;
        let b = tail_index_estimate(&ys, 100).unwrap().index;
        prop_assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn diagnostic_flags_geometric_growth(base in 1e-3f64..1e3, growth in 1.1f64..4.0) {
        let v = [base, base * growth, base * growth * growth, base * growth.powi(3)];
        prop_assert_eq!(divergence_diagnostic(&v), MomentClass::Divergent);
        let flat = [base, base * 1.001, base * 1.0015, base * 1.002];
        prop_assert_eq!(divergence_diagnostic(&flat), MomentClass::Finite);
    }

    #[test]
    fn curve_interpolation_stays_between_nodes(t in 0.0f64..4.0) {
        let c = TailCurve::new(vec![0.0, 1.0, 2.0, 4.0], vec![1.0, 0.5, 0.2, 0.0]).unwrap();
        let v = c.value_at(t);
        prop_assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn invalid_shapes_are_rejected() {
    for r in [1.0, 0.5, -2.0, f64::NAN, f64::INFINITY] {
        assert!(PmeParams::new(r).is_err(), "{r}");
        assert!(pme_lt(r, 1.0).is_err());
    }
}
