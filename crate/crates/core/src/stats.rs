//! Goodness-of-fit tests, log-normal fitting and correlation.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Two-sample exact enumeration is used up to this value of `n_a * n_b`.
pub const TWO_SAMPLE_EXACT_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: String,
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormalParams {
    pub const STANDARD: LogNormalParams = LogNormalParams { mu: 0.0, sigma: 1.0 };

    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(Error::Domain(format!("invalid log-normal parameters mu={mu}, sigma={sigma}")));
        }
        Ok(LogNormalParams { mu, sigma })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = (x.ln() - self.mu) / self.sigma;
        0.5 * erfc(-z / std::f64::consts::SQRT_2)
    }
}

fn require_positive(samples: &[f64]) -> Result<()> {
    match samples.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        Some(x) => Err(Error::Domain(format!("log-normal sample must be positive and finite, got {x}"))),
        None => Ok(()),
    }
}

/// Maximum-likelihood log-normal fit: mean and 1/n standard deviation of the logs.
pub fn fit_lognormal(samples: &[f64]) -> Result<LogNormalParams> {
    require_positive(samples)?;
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "log-normal fit needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().all(|x| *x == samples[0]) {
        return Err(Error::DegenerateData("all samples are equal".into()));
    }
    let n = samples.len() as f64;
    let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
    let mu = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();
    if !(sigma > 0.0) {
        return Err(Error::DegenerateData("log-samples have zero spread".into()));
    }
    Ok(LogNormalParams { mu, sigma })
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

/// One-sample KS test of `samples` against a log-normal with fixed `params`.
pub fn ks_one_sample(samples: &[f64], params: &LogNormalParams) -> Result<TestResult> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("one-sample KS needs at least one sample".into()));
    }
    require_positive(samples)?;
    let xs = sorted(samples);
    let n = xs.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, x) in xs.iter().enumerate() {
        let f = params.cdf(*x);
        let above = (i + 1) as f64 / nf - f;
        let below = f - i as f64 / nf;
        d = d.max(above).max(below);
    }
    let (p_value, method) = kolmogorov_p_value(n, d);
    Ok(TestResult {
        statistic: d,
        p_value,
        method: method.to_string(),
        n: vec![n],
    })
}

/// Fit a log-normal to `samples` and test them against it.
///
/// The p-value is that of a fully specified null; estimating the
/// parameters from the same data makes it conservative. The method tag
/// carries `params_estimated=true` to say so.
pub fn ks_fitted_lognormal(samples: &[f64]) -> Result<(LogNormalParams, TestResult)> {
    let params = fit_lognormal(samples)?;
    let mut result = ks_one_sample(samples, &params)?;
    result.method.push_str(";params_estimated=true");
    Ok((params, result))
}

fn kolmogorov_p_value(n: usize, d: f64) -> (f64, &'static str) {
    if d <= 0.0 {
        return (1.0, "ks1-exact");
    }
    if d >= 1.0 {
        return (0.0, "ks1-exact");
    }
    let nf = n as f64;
    let s = nf * d * d;
    if n >= 50 && (s > 7.24 || (s > 3.76 && n > 99)) {
        let p = 2.0 * (-(2.000071 + 0.331 / nf.sqrt() + 1.409 / nf) * s).exp();
        return (p.clamp(0.0, 1.0), "ks1-tail-approx");
    }
    if n <= 1000 {
        let p = 1.0 - kolmogorov_cdf_exact(n, d);
        return (p.clamp(0.0, 1.0), "ks1-exact");
    }
    let en = nf.sqrt();
    (kolmogorov_survival((en + 0.12 + 0.11 / en) * d), "ks1-asymptotic")
}

/// P(Dₙ < d) for the one-sample Kolmogorov statistic, by the
/// Marsaglia–Tsang–Wang matrix-power method.
pub fn kolmogorov_cdf_exact(n: usize, d: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    if d >= 1.0 {
        return 1.0;
    }
    let nd = n as f64 * d;
    let k = nd.floor() as usize + 1;
    let m = 2 * k - 1;
    let h = k as f64 - nd;

    let mut hm = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i + 1 >= j {
                hm[i * m + j] = 1.0;
            }
        }
    }
    for i in 0..m {
        hm[i * m] -= h.powi(i as i32 + 1);
        hm[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        hm[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                let mut f = 1.0;
                for g in 1..=(i + 1 - j) {
                    f *= g as f64;
                }
                hm[i * m + j] /= f;
            }
        }
    }

    let (q, mut exponent) = matrix_power(&hm, 0, m, n);
    let mut s = q[(k - 1) * m + k - 1];
    for i in 1..=n {
        s = s * i as f64 / n as f64;
        if s < 1e-140 {
            s *= 1e140;
            exponent -= 140;
        }
    }
    s * 10f64.powi(exponent)
}

fn matrix_multiply(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    c
}

/// `a^n` with a base-10 exponent kept aside to avoid overflow.
fn matrix_power(a: &[f64], ea: i32, m: usize, n: usize) -> (Vec<f64>, i32) {
    if n == 1 {
        return (a.to_vec(), ea);
    }
    let (half, eh) = matrix_power(a, ea, m, n / 2);
    let mut v = matrix_multiply(&half, &half, m);
    let mut ev = 2 * eh;
    if n % 2 == 1 {
        v = matrix_multiply(a, &v, m);
        ev += ea;
    }
    if v[(m / 2) * m + m / 2] > 1e140 {
        v.iter_mut().for_each(|x| *x *= 1e-140);
        ev += 140;
    }
    (v, ev)
}

/// Limiting Kolmogorov survival function Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series converges quickly for small λ.
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in 1..=20 {
            let odd = (2 * k - 1) as f64;
            sum += (-odd * odd * c).exp();
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * sum;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-300 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample statistic in lattice units: max |i·n_b − j·n_a| over the
/// distinct pooled values, where i and j count elements ≤ that value.
fn two_sample_lattice_distance(a: &[f64], b: &[f64]) -> u64 {
    let (na, nb) = (a.len() as i64, b.len() as i64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0i64;
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.min(*y),
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        best = best.max((i as i64 * nb - j as i64 * na).abs());
    }
    best as u64
}

/// P(D ≥ observed) under the null by walking the lattice of orderings.
///
/// `distance` is in lattice units (D · n_a · n_b). Paths are weighted by their
/// probability under a uniformly random interleaving, so no binomial
/// coefficients are formed.
fn two_sample_exact_p(na: usize, nb: usize, distance: u64) -> f64 {
    let inside = |i: usize, j: usize| ((i * nb) as i64 - (j * na) as i64).unsigned_abs() < distance;
    let mut row = vec![0.0f64; nb + 1];
    row[0] = 1.0;
    for i in 0..=na {
        for j in 0..=nb {
            if i == 0 && j == 0 {
                continue;
            }
            let mut prob = 0.0;
            if i > 0 {
                // previous row value at (i-1, j), already stored in row[j]
                let remaining = (na + nb - (i - 1) - j) as f64;
                prob += row[j] * (na - (i - 1)) as f64 / remaining;
            }
            if j > 0 {
                let remaining = (na + nb - i - (j - 1)) as f64;
                prob += row[j - 1] * (nb - (j - 1)) as f64 / remaining;
            }
            row[j] = if inside(i, j) { prob } else { 0.0 };
        }
    }
    (1.0 - row[nb]).clamp(0.0, 1.0)
}

/// Stephens-corrected asymptotic two-sample p-value.
pub fn two_sample_asymptotic_p(na: usize, nb: usize, d: f64) -> f64 {
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    kolmogorov_survival((en + 0.12 + 0.11 / en) * d)
}

/// Two-sample KS test. Exact when `n_a · n_b ≤ 10⁴`, asymptotic otherwise.
///
/// The exact null assumes no ties between samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("two-sample KS needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("NaN in KS sample".into()));
    }
    let (xa, xb) = (sorted(a), sorted(b));
    let (na, nb) = (xa.len(), xb.len());
    let distance = two_sample_lattice_distance(&xa, &xb);
    let statistic = distance as f64 / (na * nb) as f64;
    let (p_value, method) = if distance == 0 {
        (1.0, "ks2-exact")
    } else if na * nb <= TWO_SAMPLE_EXACT_LIMIT {
        (two_sample_exact_p(na, nb, distance), "ks2-exact")
    } else {
        (two_sample_asymptotic_p(na, nb, statistic), "ks2-asymptotic")
    };
    Ok(TestResult {
        statistic,
        p_value,
        method: method.to_string(),
        n: vec![na, nb],
    })
}

/// Sample Pearson correlation, centred in a first pass.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("series lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("correlation needs at least 2 pairs".into()));
    }
    if x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]) {
        return Err(Error::DegenerateData("constant series".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ordinary least-squares line `y = slope · x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData("line fit needs at least 2 paired points".into()));
    }
    if x.iter().all(|v| *v == x[0]) {
        return Err(Error::DegenerateData("constant abscissa".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn lognormal_fit_hand_values() {
        let p = fit_lognormal(&[1.0, E * E]).unwrap();
        assert_relative_eq!(p.mu, 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.sigma, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn lognormal_fit_errors() {
        assert!(matches!(fit_lognormal(&[E, E, E, E]), Err(Error::DegenerateData(_))));
        assert!(matches!(fit_lognormal(&[1.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(fit_lognormal(&[1.0, -2.0]), Err(Error::Domain(_))));
        assert!(matches!(fit_lognormal(&[1.0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn quantile_samples_give_half_step_distance() {
        let params = LogNormalParams::new(0.3, 0.8).unwrap();
        let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        use statrs::distribution::ContinuousCDF;
        for n in [1usize, 3, 8, 25] {
            let xs: Vec<f64> = (1..=n)
                .map(|i| {
                    let q = (i as f64 - 0.5) / n as f64;
                    let mut x = (params.mu + params.sigma * normal.inverse_cdf(q)).exp();
                    // polish the quantile with Newton steps on the CDF
                    for _ in 0..3 {
                        let z = (x.ln() - params.mu) / params.sigma;
                        let density = (-0.5 * z * z).exp() / (x * params.sigma * (2.0 * std::f64::consts::PI).sqrt());
                        x -= (params.cdf(x) - q) / density;
                    }
                    x
                })
                .collect();
            let r = ks_one_sample(&xs, &params).unwrap();
            assert_relative_eq!(r.statistic, 0.5 / n as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_kolmogorov_matches_tabulated() {
        // Reference values from an independent exact implementation.
        let cases = [
            (10, 0.5, 0.00777741),
            (8, 0.2598896082600515, 0.5667833186034481),
            (20, 0.3, 0.04306706665851623),
            (100, 0.1, 0.2526927570063874),
            (5, 0.9, 1.9999999999999978e-05),
        ];
        for (n, d, p) in cases {
            let got = 1.0 - kolmogorov_cdf_exact(n, d);
            assert!((got - p).abs() < 1e-10, "n={n} d={d}: {got} vs {p}");
        }
        // The reference switches to a series approximation above n = 140,
        // good to about 1e-6.
        let got = 1.0 - kolmogorov_cdf_exact(400, 0.05);
        assert!((got - 0.26121244607129124).abs() < 1e-6);
    }

    #[test]
    fn two_sample_identical_and_disjoint() {
        let a = [0.3, 0.1, 0.9, 0.4];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);

        let r = ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 1.0);

        // Only 2 of C(7,3) orderings separate the samples completely.
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0, 7.0]).unwrap();
        assert_relative_eq!(r.p_value, 2.0 / 35.0, epsilon = 1e-14);
    }

    #[test]
    fn two_sample_known_value() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let b = [2.5, 3.5, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0];
        let r = ks_two_sample(&a, &b).unwrap();
        assert_relative_eq!(r.statistic, 0.8, epsilon = 1e-15);
        assert_relative_eq!(r.p_value, 0.002422414187120069, epsilon = 1e-12);
        assert_eq!(r.method, "ks2-exact");
        assert_eq!(r.n, vec![8, 10]);
    }

    #[test]
    fn two_sample_empty_rejected() {
        assert!(matches!(ks_two_sample(&[], &[1.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pearson_exact_line() {
        let x = [0.5, 1.7, -2.0, 3.3, 10.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        assert_relative_eq!(pearson(&x, &y).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(pearson(&x, &[1.0; 5]), Err(Error::DegenerateData(_))));
        assert!(pearson(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn least_squares_recovers_line() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v| -0.5 * v + 3.0).collect();
        let (m, c) = least_squares(&x, &y).unwrap();
        assert_relative_eq!(m, -0.5, epsilon = 1e-14);
        assert_relative_eq!(c, 3.0, epsilon = 1e-14);
        assert!(least_squares(&[1.0, 1.0], &[0.0, 2.0]).is_err());
    }

    #[test]
    fn kolmogorov_survival_branches_agree() {
        // both series evaluated near the switch point
        for lambda in [1.1, 1.18, 1.25] {
            let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
            let small: f64 = 1.0
                - (2.0 * std::f64::consts::PI).sqrt() / lambda
                    * (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum::<f64>();
            let large: f64 = 2.0
                * (1..=100)
                    .map(|k| {
                        let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                        s * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
                    })
                    .sum::<f64>();
            assert_relative_eq!(small, large, epsilon = 1e-12);
            assert_relative_eq!(kolmogorov_survival(lambda), large, epsilon = 1e-12);
        }
    }
}
