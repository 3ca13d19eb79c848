use mortstat::cox::{cox_fit, partial_loglik_and_gradient, CovariateSpec, CoxFit};
use mortstat::sim::{exponential_cohort, SimRng};
use mortstat::survival::{Cohort, Subject};
use rand::{Rng, SeedableRng};

const TOL: f64 = 1e-7;

fn two_covariate_cohort(seed: u64) -> Cohort {
    let mut rng = SimRng::seed_from_u64(seed);
    let subjects = (0..120)
        .map(|i| {
            let x1: f64 = rng.random_range(-1.0..1.0);
            let x2 = f64::from(u8::from(rng.random_bool(0.4)));
            let hazard = 0.05 * (0.8 * x1 - 0.5 * x2).exp();
            let t = -(1.0 - rng.random::<f64>()).ln() / hazard;
            let (t, e) = if t < 30.0 { (t, true) } else { (30.0, false) };
            Subject::new(i.to_string(), t, e).with_covariates(vec![x1, x2])
        })
        .collect();
    Cohort::new("c", subjects).unwrap()
}

fn map_subjects(c: &Cohort, f: impl Fn(&Subject) -> Subject) -> Cohort {
    Cohort::new("m", c.subjects().iter().map(f).collect()).unwrap()
}

fn spec() -> CovariateSpec {
    CovariateSpec::new(["x1", "x2"]).unwrap()
}

fn fit(c: &Cohort) -> CoxFit {
    let f = cox_fit(c, &spec()).unwrap();
    assert!(f.converged, "{f:?} {:?}", partial_loglik_and_gradient(c, &f.coefficients));
    f
}

#[test]
fn rank_invariance() {
    let c = two_covariate_cohort(1);
    let base = fit(&c);
    let warped = map_subjects(&c, |s| Subject {
        observed_time: (s.observed_time + 1.0).ln() * 7.0 + s.observed_time.powi(3),
        ..s.clone()
    });
    let w = fit(&warped);
    for (a, b) in base.coefficients.iter().zip(&w.coefficients) {
        assert!((a - b).abs() < TOL);
    }
}

#[test]
fn centering_invariance() {
    let c = two_covariate_cohort(2);
    let base = fit(&c);
    let shifted = map_subjects(&c, |s| {
        s.clone().with_covariates(vec![s.covariates[0] - 13.5, s.covariates[1] + 4.0])
    });
    let w = fit(&shifted);
    for (a, b) in base.coefficients.iter().zip(&w.coefficients) {
        assert!((a - b).abs() < TOL);
    }
    assert!((base.log_partial_likelihood - w.log_partial_likelihood).abs() < 1e-9);
}

#[test]
fn scaling_covariance() {
    let c = two_covariate_cohort(3);
    let base = fit(&c);
    let scale = 3.7;
    let scaled = map_subjects(&c, |s| s.clone().with_covariates(vec![s.covariates[0] * scale, s.covariates[1]]));
    let w = fit(&scaled);
    assert!((w.coefficients[0] * scale - base.coefficients[0]).abs() < TOL);
    assert!((w.coefficients[1] - base.coefficients[1]).abs() < TOL);
    assert!((w.hazard_ratios[0].powf(scale) - base.hazard_ratios[0]).abs() < 1e-6);
}

#[test]
fn optimum_beats_origin_and_hazard_ratios_are_exp() {
    for seed in 0..10 {
        let c = two_covariate_cohort(seed);
        let f = fit(&c);
        let (at_zero, _) = partial_loglik_and_gradient(&c, &[0.0, 0.0]).unwrap();
        assert!(f.log_partial_likelihood >= at_zero);
        for (b, hr) in f.coefficients.iter().zip(&f.hazard_ratios) {
            assert_eq!(*hr, b.exp());
        }
        let (_, g) = partial_loglik_and_gradient(&c, &f.coefficients).unwrap();
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-8);
        assert!(f.standard_errors.iter().all(|s| *s > 0.0));
    }
}

#[test]
fn json_field_names() {
    let c = exponential_cohort(200, 0.02, 0.5, 60.0, 11).unwrap();
    let f = cox_fit(&c, &CovariateSpec::new(["x"]).unwrap()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&f).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "coefficients",
            "converged",
            "hazard_ratios",
            "iterations",
            "log_partial_likelihood",
            "standard_errors"
        ]
    );
}
