//! Product-limit (Kaplan–Meier) survival estimation for right-censored data.

use std::cmp::Ordering;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One individual's follow-up record.
///
/// `event == true` means death was observed at `observed_time`; otherwise the
/// subject was censored there and nothing is known beyond it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub observed_time: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
}

impl Subject {
    pub fn new(id: impl Into<String>, observed_time: f64, event: bool) -> Self {
        Subject {
            id: id.into(),
            observed_time,
            event,
            covariates: Vec::new(),
        }
    }

    pub fn with_covariates(mut self, covariates: Vec<f64>) -> Self {
        self.covariates = covariates;
        self
    }
}

/// A non-empty set of subjects sharing one covariate layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    label: String,
    subjects: Vec<Subject>,
}

impl Cohort {
    pub fn new(label: impl Into<String>, subjects: Vec<Subject>) -> Result<Self> {
        let first = subjects
            .first()
            .ok_or_else(|| Error::InvalidInput("cohort has no subjects".into()))?;
        let p = first.covariates.len();
        for s in &subjects {
            if !s.observed_time.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "subject `{}` has non-finite time {}",
                    s.id, s.observed_time
                )));
            }
            if s.observed_time < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "subject `{}` has negative time {}",
                    s.id, s.observed_time
                )));
            }
            if s.covariates.len() != p {
                return Err(Error::InvalidInput(format!(
                    "subject `{}` has {} covariates, expected {}",
                    s.id,
                    s.covariates.len(),
                    p
                )));
            }
            if let Some(x) = s.covariates.iter().find(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "subject `{}` has non-finite covariate {}",
                    s.id, x
                )));
            }
        }
        Ok(Cohort {
            label: label.into(),
            subjects,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn n_covariates(&self) -> usize {
        self.subjects[0].covariates.len()
    }

    pub fn n_events(&self) -> usize {
        self.subjects.iter().filter(|s| s.event).count()
    }

    pub fn into_subjects(self) -> Vec<Subject> {
        self.subjects
    }
}

/// One death time of the step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    #[serde(rename = "t")]
    pub time: f64,
    #[serde(rename = "d")]
    pub deaths: usize,
    #[serde(rename = "n")]
    pub at_risk: usize,
    /// Survival just after `time`.
    #[serde(rename = "s")]
    pub estimate: f64,
    #[serde(rename = "var")]
    pub variance: f64,
}

/// Right-continuous step estimate of the survival function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurvivalCurve {
    pub steps: Vec<Step>,
    /// Indices of steps where every subject at risk died (`d == n`); the
    /// Greenwood term is undefined there and the variance is pinned to 0.
    pub degenerate_steps: Vec<usize>,
}

impl SurvivalCurve {
    /// ŝ(t): the estimate just after the last step at or before `t`.
    pub fn survival_at(&self, t: f64) -> f64 {
        let idx = self.steps.partition_point(|s| s.time <= t);
        if idx == 0 {
            1.0
        } else {
            self.steps[idx - 1].estimate
        }
    }

    /// Variance of ŝ(t), 0 before the first death.
    pub fn variance_at(&self, t: f64) -> f64 {
        let idx = self.steps.partition_point(|s| s.time <= t);
        if idx == 0 {
            0.0
        } else {
            self.steps[idx - 1].variance
        }
    }

    pub fn has_degenerate_step(&self) -> bool {
        !self.degenerate_steps.is_empty()
    }
}

// Largest integer for which every smaller integer is exactly representable.
const EXACT_LIMIT: u128 = 1 << 53;

/// Running product of (n - d) / n.
///
/// Kept as a reduced fraction while numerator and denominator stay exactly
/// representable so that, e.g., uncensored data give `k as f64 / n as f64`
/// bit-for-bit. Falls back to a floating product afterwards.
enum ProductLimit {
    Ratio { num: u128, den: u128 },
    Float(f64),
}

impl ProductLimit {
    fn one() -> Self {
        ProductLimit::Ratio { num: 1, den: 1 }
    }

    fn multiply(&mut self, survivors: usize, at_risk: usize) {
        *self = match *self {
            ProductLimit::Ratio { num, den } => {
                let (a, b) = (survivors as u128, at_risk as u128);
                let num = num * a;
                let den = den * b;
                let g = num.gcd(&den).max(1);
                let (num, den) = (num / g, den / g);
                if den <= EXACT_LIMIT {
                    ProductLimit::Ratio { num, den }
                } else {
                    ProductLimit::Float(num as f64 / den as f64)
                }
            }
            ProductLimit::Float(v) => ProductLimit::Float(v * (survivors as f64 / at_risk as f64)),
        }
    }

    fn value(&self) -> f64 {
        match *self {
            ProductLimit::Ratio { num, den } => num as f64 / den as f64,
            ProductLimit::Float(v) => v,
        }
    }
}

/// Kaplan–Meier estimate of a cohort's survival function.
///
/// Deaths tied at one time form a single step. A subject censored at `t`
/// still counts as at risk for deaths at `t`.
pub fn kaplan_meier(cohort: &Cohort) -> SurvivalCurve {
    let mut obs: Vec<(f64, bool)> = cohort
        .subjects()
        .iter()
        .map(|s| (s.observed_time, s.event))
        .collect();
    km_sorted(&mut obs)
}

/// Kaplan–Meier from parallel time/event slices.
pub fn kaplan_meier_from(times: &[f64], events: &[bool]) -> Result<SurvivalCurve> {
    if times.is_empty() {
        return Err(Error::InvalidInput("no observations".into()));
    }
    if times.len() != events.len() {
        return Err(Error::InvalidInput(format!(
            "{} times but {} event flags",
            times.len(),
            events.len()
        )));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(Error::InvalidInput(format!("invalid time {t}")));
    }
    let mut obs: Vec<(f64, bool)> = times.iter().copied().zip(events.iter().copied()).collect();
    Ok(km_sorted(&mut obs))
}

fn km_sorted(obs: &mut [(f64, bool)]) -> SurvivalCurve {
    obs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    let mut steps = Vec::new();
    let mut product = ProductLimit::one();
    let mut remaining = obs.len();
    let mut i = 0;
    while i < obs.len() {
        let t = obs[i].0;
        let mut deaths = 0;
        let mut j = i;
        while j < obs.len() && obs[j].0 == t {
            if obs[j].1 {
                deaths += 1;
            }
            j += 1;
        }
        if deaths > 0 {
            product.multiply(remaining - deaths, remaining);
            steps.push(Step {
                time: t,
                deaths,
                at_risk: remaining,
                estimate: product.value(),
                variance: 0.0,
            });
        }
        remaining -= j - i;
        i = j;
    }

    greenwood_variance(SurvivalCurve {
        steps,
        degenerate_steps: Vec::new(),
    })
}

/// Fill each step's variance with Greenwood's formula,
/// ŝ(tᵢ)² · Σ_{j≤i} dⱼ / (nⱼ (nⱼ − dⱼ)).
///
/// A step with `d == n` contributes no term; its variance is 0 (ŝ is 0 from
/// there on) and its index is recorded in `degenerate_steps`.
pub fn greenwood_variance(mut curve: SurvivalCurve) -> SurvivalCurve {
    curve.degenerate_steps.clear();
    let mut sum = 0.0;
    for (idx, step) in curve.steps.iter_mut().enumerate() {
        if step.deaths >= step.at_risk {
            curve.degenerate_steps.push(idx);
            step.variance = 0.0;
            continue;
        }
        let (d, n) = (step.deaths as f64, step.at_risk as f64);
        sum += d / (n * (n - d));
        step.variance = step.estimate * step.estimate * sum;
    }
    curve
}
