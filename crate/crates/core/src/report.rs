//! The per-country media analysis: aggregates, log-normal KS tests, the
//! cross-country KS test and count correlations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{self, Country, PublisherCounts};
use crate::stats::{self, LogNormalParams, TestResult};

/// A value, or the reason it could not be computed from the data at hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Computed<T> {
    Value(T),
    Missing { insufficient_data: String },
}

impl<T> Computed<T> {
    fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(v) => Computed::Value(v),
            Err(e) => Computed::Missing {
                insufficient_data: e.to_string(),
            },
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Computed::Value(v) => Some(v),
            Computed::Missing { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTest {
    pub params: LogNormalParams,
    pub test: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterLine {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryReport {
    pub country: Country,
    pub publishers: usize,
    pub macro_average: Computed<f64>,
    pub macro_sample_std: Computed<f64>,
    pub pooled: f64,
    pub per_publisher: Vec<media::PublisherProportion>,
    /// KS of the proportions against a log-normal fitted to them.
    pub ks_lognormal_fitted: Computed<FittedTest>,
    /// KS of the proportions against the standard log-normal (mu 0, sigma 1).
    pub ks_lognormal_standard: Computed<TestResult>,
    /// Pearson's r over (total, incorrect) article counts.
    pub pearson_total_incorrect: Computed<f64>,
    /// Pearson's r over (ln total, ln incorrect).
    pub pearson_log_total_incorrect: Computed<f64>,
    /// Pearson's r over (total, incorrect proportion).
    pub pearson_total_proportion: Computed<f64>,
    /// Least-squares line of incorrect on total counts.
    pub scatter_line: Computed<ScatterLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCountryTest {
    pub first: Country,
    pub second: Country,
    pub test: TestResult,
    /// Stephens-corrected asymptotic p-value for the same statistic.
    pub asymptotic_p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaReport {
    pub countries: Vec<CountryReport>,
    pub two_sample: Computed<CrossCountryTest>,
}

fn positive_log(v: u64, name: &str) -> Result<f64> {
    if v == 0 {
        Err(Error::Domain(format!("`{name}` has a zero count; logarithm undefined")))
    } else {
        Ok((v as f64).ln())
    }
}

pub fn country_report(country: Country, rows: &[PublisherCounts]) -> Result<CountryReport> {
    // Rows with no articles at all are input errors, not missing statistics.
    let per_publisher = media::aggregate_proportions(rows)?;
    let props: Vec<f64> = per_publisher.iter().map(|p| p.incorrect_proportion).collect();
    let pooled = media::pooled_proportion(rows)?;
    let (macro_average, macro_sample_std) = match media::macro_average(rows) {
        Ok((m, s)) => (Computed::Value(m), Computed::Value(s)),
        Err(e) => {
            let missing = || Computed::Missing {
                insufficient_data: e.to_string(),
            };
            (missing(), missing())
        }
    };

    let totals: Vec<f64> = rows.iter().map(|r| r.total() as f64).collect();
    let incorrect: Vec<f64> = rows.iter().map(|r| r.incorrect() as f64).collect();
    let logs = || -> Result<(Vec<f64>, Vec<f64>)> {
        let lt = rows.iter().map(|r| positive_log(r.total(), &r.name)).collect::<Result<_>>()?;
        let li = rows.iter().map(|r| positive_log(r.incorrect(), &r.name)).collect::<Result<_>>()?;
        Ok((lt, li))
    };

    Ok(CountryReport {
        country,
        publishers: rows.len(),
        macro_average,
        macro_sample_std,
        pooled,
        per_publisher,
        ks_lognormal_fitted: Computed::from_result(
            stats::ks_fitted_lognormal(&props).map(|(params, test)| FittedTest { params, test }),
        ),
        ks_lognormal_standard: Computed::from_result(if props.len() < 2 {
            Err(Error::InsufficientData("one publisher".into()))
        } else {
            stats::ks_one_sample(&props, &LogNormalParams::STANDARD)
        }),
        pearson_total_incorrect: Computed::from_result(stats::pearson(&totals, &incorrect)),
        pearson_log_total_incorrect: Computed::from_result(logs().and_then(|(lt, li)| stats::pearson(&lt, &li))),
        pearson_total_proportion: Computed::from_result(stats::pearson(&totals, &props)),
        scatter_line: Computed::from_result(
            stats::least_squares(&totals, &incorrect).map(|(slope, intercept)| ScatterLine { slope, intercept }),
        ),
    })
}

/// Full analysis of a set of publishers, grouped by country.
pub fn analyze(rows: &[PublisherCounts]) -> Result<MediaReport> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no publishers".into()));
    }
    let mut by_country: BTreeMap<Country, Vec<PublisherCounts>> = BTreeMap::new();
    for r in rows {
        by_country.entry(r.country).or_default().push(r.clone());
    }
    let countries = by_country
        .iter()
        .map(|(c, rows)| country_report(*c, rows))
        .collect::<Result<Vec<_>>>()?;

    let two_sample = if countries.len() == 2 {
        let props = |c: &CountryReport| -> Vec<f64> {
            c.per_publisher.iter().map(|p| p.incorrect_proportion).collect()
        };
        let (a, b) = (props(&countries[0]), props(&countries[1]));
        Computed::from_result(stats::ks_two_sample(&a, &b).map(|test| CrossCountryTest {
            first: countries[0].country,
            second: countries[1].country,
            asymptotic_p_value: stats::two_sample_asymptotic_p(a.len(), b.len(), test.statistic),
            test,
        }))
    } else {
        Computed::Missing {
            insufficient_data: "cross-country test needs exactly two countries".into(),
        }
    };

    Ok(MediaReport { countries, two_sample })
}

fn pct(v: &Computed<f64>) -> String {
    v.value().map_or("n/a".into(), |v| format!("{:.1}%", 100.0 * v))
}

fn corr(v: &Computed<f64>) -> String {
    v.value().map_or("n/a".into(), |v| format!("{v:.3}"))
}

fn test_line(t: Option<&TestResult>) -> String {
    t.map_or("n/a".into(), |t| format!("D={:.4} p={:.4} [{}]", t.statistic, t.p_value, t.method))
}

/// Human-readable summary: percentages to 1 decimal, correlations to 3,
/// p-values to 4.
pub fn render_text(report: &MediaReport) -> String {
    let mut s = String::new();
    for c in &report.countries {
        let _ = writeln!(s, "== {} ({} publishers) ==", c.country, c.publishers);
        let _ = writeln!(s, "{:<24} {:>10}", "publisher", "incorrect");
        for p in &c.per_publisher {
            let _ = writeln!(s, "{:<24} {:>9.1}%", p.name, 100.0 * p.incorrect_proportion);
        }
        let _ = writeln!(s, "macro average            {}", pct(&c.macro_average));
        let _ = writeln!(s, "macro sample std         {}", pct(&c.macro_sample_std));
        let _ = writeln!(s, "pooled                   {:.1}%", 100.0 * c.pooled);
        let _ = writeln!(
            s,
            "KS vs fitted log-normal  {}",
            test_line(c.ks_lognormal_fitted.value().map(|f| &f.test))
        );
        let _ = writeln!(
            s,
            "KS vs standard log-norm  {}",
            test_line(c.ks_lognormal_standard.value())
        );
        let _ = writeln!(s, "r(total, incorrect)      {}", corr(&c.pearson_total_incorrect));
        let _ = writeln!(s, "r(log total, log incorr) {}", corr(&c.pearson_log_total_incorrect));
        let _ = writeln!(s, "r(total, proportion)     {}", corr(&c.pearson_total_proportion));
        s.push('\n');
    }
    match &report.two_sample {
        Computed::Value(t) => {
            let _ = writeln!(
                s,
                "two-sample KS {} vs {}: {} asymptotic p={:.4}",
                t.first,
                t.second,
                test_line(Some(&t.test)),
                t.asymptotic_p_value
            );
        }
        Computed::Missing { insufficient_data } => {
            let _ = writeln!(s, "two-sample KS: n/a ({insufficient_data})");
        }
    }
    s
}

/// Summary as a flat CSV, one row per publisher.
pub fn render_csv(report: &MediaReport) -> String {
    let mut s = String::from("country,name,incorrect_proportion\n");
    for c in &report.countries {
        for p in &c.per_publisher {
            let name = if p.name.contains(',') || p.name.contains('"') {
                format!("\"{}\"", p.name.replace('"', "\"\""))
            } else {
                p.name.clone()
            };
            let _ = writeln!(s, "{},{},{}", c.country, name, p.incorrect_proportion);
        }
    }
    s
}
