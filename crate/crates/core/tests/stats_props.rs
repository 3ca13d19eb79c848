use mortstat::sim::SimRng;
use mortstat::stats::{
    fit_lognormal, ks_fitted_lognormal, ks_one_sample, ks_two_sample, pearson, two_sample_asymptotic_p,
    LogNormalParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn series() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..30).prop_flat_map(|n| {
        (
            prop::collection::vec(-100.0f64..100.0, n),
            prop::collection::vec(-100.0f64..100.0, n),
        )
    })
}

fn positive(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..50.0, len)
}

proptest! {
    #[test]
    fn pearson_affine_behaviour((x, y) in series(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let Ok(r) = pearson(&x, &y) else { return Ok(()) };
        prop_assert!(r.abs() <= 1.0);
        let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let r2 = pearson(&xs, &y).unwrap();
        prop_assert!((r - r2).abs() < 1e-9);
        let xn: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
        let r3 = pearson(&xn, &y).unwrap();
        prop_assert!((r + r3).abs() < 1e-9);
    }

    #[test]
    fn two_sample_symmetric_and_bounded(a in positive(1..20), b in positive(1..20)) {
        let ab = ks_two_sample(&a, &b).unwrap();
        let ba = ks_two_sample(&b, &a).unwrap();
        prop_assert_eq!(ab.statistic, ba.statistic);
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.statistic));
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }

    #[test]
    fn ks_statistics_invariant_under_monotone_map(a in positive(2..20), b in positive(2..20)) {
        let warp = |v: &Vec<f64>| v.iter().map(|x| x.powf(1.7) + 3.0 * x).collect::<Vec<_>>();
        let before = ks_two_sample(&a, &b).unwrap();
        let after = ks_two_sample(&warp(&a), &warp(&b)).unwrap();
        prop_assert_eq!(before.statistic, after.statistic);

        // one-sample: transform both data and the reference distribution
        let params = LogNormalParams::new(0.5, 1.2).unwrap();
        let one = ks_one_sample(&a, &params).unwrap();
        let scaled: Vec<f64> = a.iter().map(|x| x.powf(2.0) * 5.0).collect();
        let mapped = LogNormalParams::new(2.0 * 0.5 + 5f64.ln(), 2.0 * 1.2).unwrap();
        let two = ks_one_sample(&scaled, &mapped).unwrap();
        prop_assert!((one.statistic - two.statistic).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&one.statistic));
        prop_assert!((0.0..=1.0).contains(&one.p_value));
    }

    #[test]
    fn lognormal_fit_maximises_likelihood(xs in positive(2..30)) {
        let Ok(p) = fit_lognormal(&xs) else { return Ok(()) };
        let ll = |mu: f64, sigma: f64| -> f64 {
            xs.iter().map(|x| {
                let z = (x.ln() - mu) / sigma;
                -sigma.ln() - x.ln() - 0.5 * z * z
            }).sum()
        };
        let best = ll(p.mu, p.sigma);
        for (dm, ds) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            prop_assert!(ll(p.mu + dm, p.sigma * (1.0 + ds)) <= best + 1e-12);
        }
    }
}

#[test]
fn exact_and_asymptotic_agree_at_n_100() {
    let mut rng = SimRng::seed_from_u64(31);
    let mut worst = 0.0f64;
    for shift in [0.0, 0.1, 0.2, 0.3, 0.5] {
        for _ in 0..5 {
            let a: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..100).map(|_| rng.random::<f64>() + shift).collect();
            let r = ks_two_sample(&a, &b).unwrap();
            assert_eq!(r.method, "ks2-exact");
            let asym = two_sample_asymptotic_p(100, 100, r.statistic);
            worst = worst.max((asym - r.p_value).abs());
        }
    }
    assert!(worst < 0.01, "worst |exact - asymptotic| = {worst}");
}

#[test]
fn large_samples_switch_to_asymptotic() {
    let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
    let b: Vec<f64> = (0..60).map(|i| i as f64 * 3.1 + 0.5).collect();
    let r = ks_two_sample(&a, &b).unwrap();
    assert_eq!(r.method, "ks2-asymptotic");
}

#[test]
fn fitted_test_is_tagged() {
    let (_, r) = ks_fitted_lognormal(&[0.5, 0.9, 0.7, 0.8, 0.95]).unwrap();
    assert!(r.method.contains("params_estimated=true"));
    let json = serde_json::to_value(&r).unwrap();
    for key in ["statistic", "p_value", "method", "n"] {
        assert!(json.get(key).is_some());
    }
}
