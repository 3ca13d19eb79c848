//! Synthetic two-cohort survival data, death-recording indicators, and the
//! asymptomatic-contamination bias experiment.
//!
//! Event times are exponential, so the proportional-hazards assumption holds
//! exactly and `hazard_ratio_true` is the ground truth a Cox fit should
//! recover on uncontaminated data.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::cox::{cox_fit, CovariateSpec};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::survival::{Cohort, Subject};

/// Generator behind every simulation: xoshiro256++ seeded through SplitMix64.
pub type SimRng = Xoshiro256PlusPlus;

pub const GROUP_COVARIATE: &str = "covid_positive";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_positive: usize,
    pub n_negative: usize,
    /// Events per day in the negative cohort.
    pub baseline_hazard: f64,
    pub hazard_ratio_true: f64,
    pub asymptomatic_fraction: f64,
    /// Scales the hazard of asymptomatic positives; below 1 is milder disease.
    pub asymptomatic_hazard_multiplier: f64,
    pub follow_up_days: f64,
    pub seed: u64,
    /// Chance that a simulated positive death carries COVID-19 on the
    /// certificate. Only used when deriving death records.
    #[serde(default)]
    pub certificate_fraction: f64,
}

impl SimConfig {
    /// Parse a flat `key = value` file.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.n_positive == 0 || self.n_negative == 0 {
            return bad("cohort sizes must be positive".into());
        }
        for (name, v) in [
            ("baseline_hazard", self.baseline_hazard),
            ("hazard_ratio_true", self.hazard_ratio_true),
            ("asymptomatic_hazard_multiplier", self.asymptomatic_hazard_multiplier),
            ("follow_up_days", self.follow_up_days),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (name, v) in [
            ("asymptomatic_fraction", self.asymptomatic_fraction),
            ("certificate_fraction", self.certificate_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

/// Positive and negative cohorts, with the latent asymptomatic flag of each
/// positive subject kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCohorts {
    pub positive: Vec<Subject>,
    pub negative: Vec<Subject>,
    /// Parallel to `positive`.
    pub asymptomatic: Vec<bool>,
}

impl SimulatedCohorts {
    /// All subjects in one cohort with a 0/1 `covid_positive` covariate.
    pub fn merged(&self) -> Result<Cohort> {
        let tag = |s: &Subject, x: f64| s.clone().with_covariates(vec![x]);
        let subjects = self
            .positive
            .iter()
            .map(|s| tag(s, 1.0))
            .chain(self.negative.iter().map(|s| tag(s, 0.0)))
            .collect();
        Cohort::new("merged", subjects)
    }

    pub fn len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn draw_subject(rng: &mut SimRng, id: String, hazard: f64, follow_up: f64) -> Subject {
    // 1 - U lies in (0, 1], keeping the log finite.
    let u: f64 = rng.random();
    let t = -(1.0 - u).ln() / hazard;
    if t <= follow_up {
        Subject::new(id, t, true)
    } else {
        Subject::new(id, follow_up, false)
    }
}

pub fn generate_cohorts(config: &SimConfig) -> Result<SimulatedCohorts> {
    config.validate()?;
    let mut rng = SimRng::seed_from_u64(config.seed);
    let positive_hazard = config.baseline_hazard * config.hazard_ratio_true;

    let mut positive = Vec::with_capacity(config.n_positive);
    let mut asymptomatic = Vec::with_capacity(config.n_positive);
    for i in 0..config.n_positive {
        let asym = rng.random::<f64>() < config.asymptomatic_fraction;
        let hazard = if asym {
            positive_hazard * config.asymptomatic_hazard_multiplier
        } else {
            positive_hazard
        };
        positive.push(draw_subject(&mut rng, format!("pos-{i}"), hazard, config.follow_up_days));
        asymptomatic.push(asym);
    }
    let negative = (0..config.n_negative)
        .map(|i| draw_subject(&mut rng, format!("neg-{i}"), config.baseline_hazard, config.follow_up_days))
        .collect();

    Ok(SimulatedCohorts {
        positive,
        negative,
        asymptomatic,
    })
}

/// Move every asymptomatic positive into the negative cohort, as happens
/// when those infections go unnoticed. Records are otherwise untouched.
pub fn contaminate(cohorts: &SimulatedCohorts) -> SimulatedCohorts {
    let mut positive = Vec::new();
    let mut negative = cohorts.negative.clone();
    for (s, &asym) in cohorts.positive.iter().zip(&cohorts.asymptomatic) {
        if asym {
            negative.push(s.clone());
        } else {
            positive.push(s.clone());
        }
    }
    let asymptomatic = vec![false; positive.len()];
    SimulatedCohorts {
        positive,
        negative,
        asymptomatic,
    }
}

/// Hazard ratio of the positive cohort against the negative one.
pub fn fitted_hazard_ratio(cohorts: &SimulatedCohorts) -> Result<f64> {
    let spec = CovariateSpec::new([GROUP_COVARIATE])?;
    let fit = cox_fit(&cohorts.merged()?, &spec)?;
    Ok(fit.hazard_ratios[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasResult {
    /// Mean hazard ratio on the correctly labelled data.
    pub hr_clean: f64,
    /// Mean hazard ratio after contamination.
    pub hr_contaminated: f64,
    /// Replicates that produced both fits.
    pub replicates: usize,
    pub failed_replicates: usize,
    /// Mean of (contaminated − clean) over replicates.
    pub mean_inflation: f64,
    /// Monte-Carlo standard error of `mean_inflation`; 0 for one replicate.
    pub inflation_std_error: f64,
}

/// Seed of replicate `index`.
pub fn replicate_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

pub fn bias_experiment(config: &SimConfig, replicates: usize) -> Result<BiasResult> {
    bias_experiment_with(Execution::default(), config, replicates)
}

pub fn bias_experiment_with(exec: Execution, config: &SimConfig, replicates: usize) -> Result<BiasResult> {
    if replicates == 0 {
        return Err(Error::InvalidInput("replicates must be at least 1".into()));
    }
    config.validate()?;

    let outcomes = par::map_indexed(exec, replicates, |r| {
        let cfg = SimConfig {
            seed: replicate_seed(config.seed, r),
            ..config.clone()
        };
        let clean = generate_cohorts(&cfg)?;
        let hr_clean = fitted_hazard_ratio(&clean)?;
        let hr_dirty = fitted_hazard_ratio(&contaminate(&clean))?;
        Ok::<_, Error>((hr_clean, hr_dirty))
    });

    let mut pairs = Vec::with_capacity(replicates);
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(p) => pairs.push(p),
            Err(e) => log::debug!("replicate {r} dropped: {e}"),
        }
    }
    if pairs.is_empty() {
        return Err(Error::ExperimentFailed { replicates });
    }

    let k = pairs.len() as f64;
    let hr_clean = pairs.iter().map(|p| p.0).sum::<f64>() / k;
    let hr_contaminated = pairs.iter().map(|p| p.1).sum::<f64>() / k;
    let diffs: Vec<f64> = pairs.iter().map(|(c, d)| d - c).collect();
    let mean_inflation = diffs.iter().sum::<f64>() / k;
    let inflation_std_error = if pairs.len() > 1 {
        let var = diffs.iter().map(|d| (d - mean_inflation).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };

    Ok(BiasResult {
        hr_clean,
        hr_contaminated,
        replicates: pairs.len(),
        failed_replicates: replicates - pairs.len(),
        mean_inflation,
        inflation_std_error,
    })
}

/// `n` subjects with a fair-coin binary covariate and exponential event
/// times of hazard `baseline · exp(beta · x)`, censored at `follow_up`.
pub fn exponential_cohort(n: usize, baseline: f64, beta: f64, follow_up: f64, seed: u64) -> Result<Cohort> {
    let mut rng = SimRng::seed_from_u64(seed);
    let subjects = (0..n)
        .map(|i| {
            let x = if rng.random::<bool>() { 1.0 } else { 0.0 };
            draw_subject(&mut rng, format!("s{i}"), baseline * (beta * x).exp(), follow_up).with_covariates(vec![x])
        })
        .collect();
    Cohort::new("synthetic", subjects)
}

/// A registered death and what was known about the person's COVID-19 status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeathRecord {
    pub death_time: f64,
    pub first_positive_test_time: Option<f64>,
    pub covid_on_certificate: bool,
}

impl DeathRecord {
    /// Days from first positive test to death; tests after death are ignored.
    pub fn test_gap(&self) -> Option<f64> {
        self.first_positive_test_time
            .filter(|t| *t <= self.death_time)
            .map(|t| self.death_time - t)
    }
}

/// Counts under England's three dashboard definitions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorCounts {
    /// Any earlier positive test, no time limit.
    pub any_prior: usize,
    /// First positive test at most 28 days before death.
    pub within_28: usize,
    /// First positive test at most 60 days before death, or COVID-19 on the
    /// death certificate.
    pub within_60_or_cert: usize,
}

pub const WINDOW_SHORT_DAYS: f64 = 28.0;
pub const WINDOW_LONG_DAYS: f64 = 60.0;

pub fn england_indicators(records: &[DeathRecord]) -> IndicatorCounts {
    let mut c = IndicatorCounts::default();
    for r in records {
        let gap = r.test_gap();
        if gap.is_some() {
            c.any_prior += 1;
        }
        if gap.is_some_and(|g| g <= WINDOW_SHORT_DAYS) {
            c.within_28 += 1;
        }
        if gap.is_some_and(|g| g <= WINDOW_LONG_DAYS) || r.covid_on_certificate {
            c.within_60_or_cert += 1;
        }
    }
    c
}

/// Death records for every observed death in `cohorts`.
///
/// Positives are tested on entry (day 0), so the gap is the death time;
/// negatives have no test. Certificates are drawn for positive deaths with
/// probability `certificate_fraction`.
pub fn death_records(cohorts: &SimulatedCohorts, config: &SimConfig) -> Vec<DeathRecord> {
    let mut rng = SimRng::seed_from_u64(config.seed.rotate_left(32));
    let mut out = Vec::new();
    for s in cohorts.positive.iter().filter(|s| s.event) {
        out.push(DeathRecord {
            death_time: s.observed_time,
            first_positive_test_time: Some(0.0),
            covid_on_certificate: rng.random::<f64>() < config.certificate_fraction,
        });
    }
    for s in cohorts.negative.iter().filter(|s| s.event) {
        out.push(DeathRecord {
            death_time: s.observed_time,
            first_positive_test_time: None,
            covid_on_certificate: false,
        });
    }
    out
}
