//! Cox proportional-hazards regression on the Breslow partial likelihood.
//!
//! Only hazard ratios are estimated; the baseline hazard is never formed.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survival::Cohort;

pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 50;
pub const MAX_HALVINGS: usize = 20;
/// Any coefficient beyond this magnitude is treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 50.0;
/// Linear-predictor span of a Newton step, taken at a point where the score
/// has already vanished, above which the optimum is judged to be at infinity.
const RUNAWAY_ETA_STEP: f64 = 1e-2;
const LOGLIK_RESOLUTION: f64 = 1e-12;

/// Ordered covariate labels, one per covariate column of the cohort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CovariateSpec {
    names: Vec<String>,
}

impl CovariateSpec {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidInput("no covariates named".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidInput(format!("duplicate covariate `{n}`")));
            }
        }
        Ok(CovariateSpec { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxFit {
    pub coefficients: Vec<f64>,
    pub hazard_ratios: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub log_partial_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Partial log-likelihood, score and observed information at one point.
struct Evaluation {
    loglik: f64,
    gradient: Vec<f64>,
    /// Negative Hessian, row-major p×p.
    information: Vec<f64>,
}

/// Subjects sorted by descending time with covariates centred by column mean.
struct Design {
    p: usize,
    times: Vec<f64>,
    events: Vec<bool>,
    x: Vec<f64>,
}

impl Design {
    fn new(cohort: &Cohort) -> Self {
        let p = cohort.n_covariates();
        let n = cohort.len();
        let mut order: Vec<usize> = (0..n).collect();
        let subjects = cohort.subjects();
        order.sort_by(|&a, &b| {
            subjects[b]
                .observed_time
                .partial_cmp(&subjects[a].observed_time)
                .unwrap_or(Ordering::Equal)
        });

        let mut means = vec![0.0; p];
        for s in subjects {
            for (m, x) in means.iter_mut().zip(&s.covariates) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);

        let mut x = Vec::with_capacity(n * p);
        let mut times = Vec::with_capacity(n);
        let mut events = Vec::with_capacity(n);
        for &i in &order {
            let s = &subjects[i];
            times.push(s.observed_time);
            events.push(s.event);
            x.extend(s.covariates.iter().zip(&means).map(|(v, m)| v - m));
        }
        Design { p, times, events, x }
    }

    /// With a vanishing score, a finite optimum also has a vanishing Newton
    /// step. On a monotone likelihood the step stays O(1) in linear-predictor
    /// units while the score decays exponentially; returns the covariate
    /// carrying the largest share of that step.
    fn runaway_direction(&self, at: &Evaluation) -> Option<usize> {
        let p = self.p;
        let step = cholesky_solve(&at.information, &at.gradient, p)?;
        let n = self.times.len();
        let mut shift = vec![0.0; p];
        for k in 0..p {
            let (lo, hi) = (0..n)
                .map(|i| self.row(i)[k])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            shift[k] = (step[k] * (hi - lo)).abs();
        }
        let total: f64 = shift.iter().sum();
        if total > RUNAWAY_ETA_STEP {
            Some(argmax_abs(&shift))
        } else {
            None
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    fn evaluate(&self, beta: &[f64], with_information: bool) -> Evaluation {
        let p = self.p;
        let n = self.times.len();
        let eta: Vec<f64> = (0..n)
            .map(|i| self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum())
            .collect();
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift = if shift.is_finite() { shift } else { 0.0 };

        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![0.0; if with_information { p * p } else { 0 }];

        let mut loglik = 0.0;
        let mut gradient = vec![0.0; p];
        let mut information = vec![0.0; if with_information { p * p } else { 0 }];

        // Walk from the latest time backwards; each tie group joins the risk
        // set before its deaths are scored (Breslow).
        let mut i = 0;
        while i < n {
            let t = self.times[i];
            let mut j = i;
            while j < n && self.times[j] == t {
                let w = (eta[j] - shift).exp();
                let xj = self.row(j);
                s0 += w;
                for a in 0..p {
                    s1[a] += w * xj[a];
                    if with_information {
                        for b in 0..p {
                            s2[a * p + b] += w * xj[a] * xj[b];
                        }
                    }
                }
                j += 1;
            }
            let deaths = self.events[i..j].iter().filter(|e| **e).count();
            if deaths > 0 {
                let d = deaths as f64;
                let log_s0 = s0.ln() + shift;
                for k in i..j {
                    if self.events[k] {
                        loglik += eta[k] - log_s0;
                        for (g, x) in gradient.iter_mut().zip(self.row(k)) {
                            *g += x;
                        }
                    }
                }
                for a in 0..p {
                    let mean_a = s1[a] / s0;
                    gradient[a] -= d * mean_a;
                    if with_information {
                        for b in 0..p {
                            let mean_b = s1[b] / s0;
                            information[a * p + b] += d * (s2[a * p + b] / s0 - mean_a * mean_b);
                        }
                    }
                }
            }
            i = j;
        }
        Evaluation {
            loglik,
            gradient,
            information,
        }
    }
}

fn check_coefficients(cohort: &Cohort, coefficients: &[f64]) -> Result<()> {
    if coefficients.len() != cohort.n_covariates() {
        return Err(Error::InvalidInput(format!(
            "{} coefficients for {} covariates",
            coefficients.len(),
            cohort.n_covariates()
        )));
    }
    Ok(())
}

/// Breslow partial log-likelihood and its analytic gradient.
pub fn partial_loglik_and_gradient(cohort: &Cohort, coefficients: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_coefficients(cohort, coefficients)?;
    let ev = Design::new(cohort).evaluate(coefficients, false);
    Ok((ev.loglik, ev.gradient))
}

/// Observed information (negative Hessian), row-major.
pub fn observed_information(cohort: &Cohort, coefficients: &[f64]) -> Result<Vec<f64>> {
    check_coefficients(cohort, coefficients)?;
    Ok(Design::new(cohort).evaluate(coefficients, true).information)
}

/// Maximise the partial likelihood by Newton–Raphson with step halving.
pub fn cox_fit(cohort: &Cohort, spec: &CovariateSpec) -> Result<CoxFit> {
    let p = cohort.n_covariates();
    if spec.len() != p {
        return Err(Error::InvalidInput(format!(
            "{} covariate names for {} columns",
            spec.len(),
            p
        )));
    }
    if cohort.n_events() == 0 {
        return Err(Error::NoEvents);
    }
    for (k, name) in spec.names().iter().enumerate() {
        let first = cohort.subjects()[0].covariates[k];
        if cohort.subjects().iter().all(|s| s.covariates[k] == first) {
            return Err(Error::DegenerateCovariate { name: name.clone() });
        }
    }

    let design = Design::new(cohort);
    let mut beta = vec![0.0; p];
    let mut current = design.evaluate(&beta, true);
    let mut iterations = 0;
    let mut converged = norm(&current.gradient) < GRADIENT_TOLERANCE;

    while !converged && iterations < MAX_ITERATIONS {
        iterations += 1;
        let direction = cholesky_solve(&current.information, &current.gradient, p)
            .ok_or_else(|| Error::DegenerateData("information matrix is not positive definite".into()))?;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate: Vec<f64> = beta.iter().zip(&direction).map(|(b, d)| b + scale * d).collect();
            if let Some(k) = candidate.iter().position(|b| b.abs() > DIVERGENCE_BOUND) {
                return Err(Error::Divergence {
                    name: spec.names()[k].clone(),
                });
            }
            let ev = design.evaluate(&candidate, true);
            // Near the optimum the ascent is below the resolution of the
            // log-likelihood itself; such steps are accepted.
            let slack = LOGLIK_RESOLUTION * current.loglik.abs().max(1.0);
            if ev.loglik.is_finite() && ev.loglik >= current.loglik - slack {
                accepted = Some((candidate, ev));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((b, ev)) => {
                beta = b;
                current = ev;
                converged = norm(&current.gradient) < GRADIENT_TOLERANCE;
            }
            // No ascent along the Newton direction at any step length; the
            // iterate is as good as floating point allows.
            None => break,
        }
    }

    if converged {
        if let Some(k) = design.runaway_direction(&current) {
            return Err(Error::Divergence {
                name: spec.names()[k].clone(),
            });
        }
    }

    if !current.loglik.is_finite() {
        let k = argmax_abs(&beta);
        return Err(Error::Divergence {
            name: spec.names()[k].clone(),
        });
    }

    let covariance = cholesky_inverse(&current.information, p)
        .ok_or_else(|| Error::DegenerateData("information matrix is not positive definite".into()))?;
    let standard_errors = (0..p).map(|k| covariance[k * p + k].sqrt()).collect();
    let hazard_ratios = beta.iter().map(|b| b.exp()).collect();

    Ok(CoxFit {
        coefficients: beta,
        hazard_ratios,
        standard_errors,
        log_partial_likelihood: current.loglik,
        iterations,
        converged,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn argmax_abs(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap_or(Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn solve_with_factor(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    x
}

fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let l = cholesky(a, n)?;
    Some(solve_with_factor(&l, b, n))
}

fn cholesky_inverse(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let l = cholesky(a, n)?;
    let mut inv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for c in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[c] = 1.0;
        let col = solve_with_factor(&l, &e, n);
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    Some(inv)
}
