use mortstat::survival::{kaplan_meier, Cohort, Subject};
use proptest::prelude::*;

fn cohort(obs: &[(u8, bool)]) -> Cohort {
    let subjects = obs
        .iter()
        .enumerate()
        .map(|(i, (t, e))| Subject::new(i.to_string(), f64::from(*t), *e))
        .collect();
    Cohort::new("p", subjects).unwrap()
}

fn observations() -> impl Strategy<Value = Vec<(u8, bool)>> {
    prop::collection::vec((0u8..20, any::<bool>()), 1..40)
}

proptest! {
    #[test]
    fn estimate_is_monotone_and_bounded(obs in observations()) {
        let km = kaplan_meier(&cohort(&obs));
        let mut prev = 1.0;
        for w in km.steps.windows(2) {
            prop_assert!(w[0].time < w[1].time);
            prop_assert!(w[0].at_risk > w[1].at_risk);
        }
        for s in &km.steps {
            prop_assert!(s.deaths >= 1 && s.deaths <= s.at_risk);
            prop_assert!(s.estimate <= prev && s.estimate >= 0.0);
            prev = s.estimate;
        }
    }

    #[test]
    fn starts_at_one_before_first_death(obs in observations()) {
        let km = kaplan_meier(&cohort(&obs));
        if let Some(first) = km.steps.first() {
            if first.time > 0.0 {
                prop_assert_eq!(km.survival_at(0.0), 1.0);
                prop_assert_eq!(km.variance_at(0.0), 0.0);
            }
        }
    }

    #[test]
    fn late_censoring_time_is_invisible(obs in observations(), extra in 0u8..5) {
        // Moving the censoring time of anyone followed past the last death
        // to another time past it leaves every step unchanged.
        let km = kaplan_meier(&cohort(&obs));
        let last_death = obs.iter().filter(|o| o.1).map(|o| o.0).max().unwrap_or(0);
        let moved: Vec<(u8, bool)> = obs
            .iter()
            .map(|&(t, e)| if !e && t > last_death { (last_death + 1 + extra, false) } else { (t, e) })
            .collect();
        let km2 = kaplan_meier(&cohort(&moved));
        prop_assert_eq!(km.steps, km2.steps);
    }

    #[test]
    fn greenwood_sum_is_cumulative(obs in observations()) {
        let km = kaplan_meier(&cohort(&obs));
        let mut prev_sum = 0.0;
        for s in &km.steps {
            if s.estimate == 0.0 {
                break;
            }
            let sum = s.variance / (s.estimate * s.estimate);
            prop_assert!(sum + 1e-12 >= prev_sum);
            prev_sum = sum;
        }
    }
}

#[test]
fn tied_deaths_match_grouped_formula() {
    let km = kaplan_meier(&cohort(&[(3, true), (3, true), (5, false), (7, true), (9, false)]));
    assert_eq!(km.steps.len(), 2);
    assert_eq!(km.steps[0].deaths, 2);
    assert_eq!(km.steps[0].at_risk, 5);
    assert_eq!(km.steps[0].estimate, 1.0 - 2.0 / 5.0);
    assert!((km.steps[1].estimate - 0.6 * 0.5).abs() < 1e-15);
}
