//! CSV and JSON file formats.
//!
//! Readers report schema problems as [`Error::Schema`] with the 1-based line
//! number (the header is line 1) and the offending column.

use std::io::{Read, Write};

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::error::{Error, Result};
use crate::media::PublisherCounts;
use crate::sim::DeathRecord;
use crate::survival::{Cohort, Subject, SurvivalCurve};

pub const COUNTS_HEADER: [&str; 6] = ["name", "country", "medium", "with", "from", "of"];
pub const CURVE_HEADER: [&str; 5] = ["t", "d", "n", "s", "var"];
pub const DEATHS_HEADER: [&str; 3] = ["death_time", "first_positive_test_time", "covid_on_certificate"];

struct Source<'a> {
    path: &'a str,
}

impl Source<'_> {
    fn err(&self, row: usize, column: &str, message: impl Into<String>) -> Error {
        Error::Schema {
            path: self.path.to_string(),
            row,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, rec: &StringRecord, idx: usize, row: usize, column: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = rec.get(idx).ok_or_else(|| self.err(row, column, "missing field"))?;
        raw.trim()
            .parse::<T>()
            .map_err(|e| self.err(row, column, format!("cannot parse `{raw}`: {e}")))
    }

    fn check_header(&self, header: &StringRecord, expected: &[&str]) -> Result<()> {
        for (i, want) in expected.iter().enumerate() {
            match header.get(i) {
                Some(got) if got == *want => {}
                Some(got) => return Err(self.err(1, want, format!("expected header `{want}`, found `{got}`"))),
                None => return Err(self.err(1, want, "header column missing")),
            }
        }
        Ok(())
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input)
}

/// A cohort read from CSV together with its covariate column names.
#[derive(Debug, Clone)]
pub struct CohortTable {
    pub cohort: Cohort,
    pub covariate_names: Vec<String>,
}

/// Read `id,time,event[,x1,...]`.
pub fn read_cohort<R: Read>(input: R, path: &str) -> Result<CohortTable> {
    let src = Source { path };
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    src.check_header(&header, &["id", "time", "event"])?;
    let covariate_names: Vec<String> = header.iter().skip(3).map(str::to_string).collect();

    let mut subjects = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(src.err(row, "*", format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        let id = rec[0].to_string();
        let time: f64 = src.parse(&rec, 1, row, "time")?;
        if !time.is_finite() || time < 0.0 {
            return Err(src.err(row, "time", format!("time must be finite and non-negative, got {time}")));
        }
        let event = match rec[2].trim() {
            "1" => true,
            "0" => false,
            other => return Err(src.err(row, "event", format!("event must be 0 or 1, got `{other}`"))),
        };
        let covariates = covariate_names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let v: f64 = src.parse(&rec, 3 + k, row, name)?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(src.err(row, name, "covariate must be finite"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        subjects.push(Subject::new(id, time, event).with_covariates(covariates));
    }
    if subjects.is_empty() {
        return Err(src.err(1, "*", "cohort file has no rows"));
    }
    let label = std::path::Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string());
    Ok(CohortTable {
        cohort: Cohort::new(label, subjects)?,
        covariate_names,
    })
}

pub fn write_cohort<W: Write>(out: W, cohort: &Cohort, covariate_names: &[String]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    let mut header = vec!["id".to_string(), "time".into(), "event".into()];
    header.extend(covariate_names.iter().cloned());
    w.write_record(&header)?;
    for s in cohort.subjects() {
        let mut row = vec![
            s.id.clone(),
            s.observed_time.to_string(),
            if s.event { "1".into() } else { "0".into() },
        ];
        row.extend(s.covariates.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve_csv<W: Write>(out: W, curve: &SurvivalCurve) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for s in &curve.steps {
        w.write_record([
            s.time.to_string(),
            s.deaths.to_string(),
            s.at_risk.to_string(),
            s.estimate.to_string(),
            s.variance.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn curve_to_json(curve: &SurvivalCurve) -> Result<String> {
    serde_json::to_string_pretty(&curve.steps).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Read a counts CSV with header `name,country,medium,with,from,of`.
pub fn read_counts<R: Read>(input: R, path: &str) -> Result<Vec<PublisherCounts>> {
    let src = Source { path };
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    src.check_header(&header, &COUNTS_HEADER)?;
    if header.len() != COUNTS_HEADER.len() {
        return Err(src.err(1, "*", format!("expected {} columns, found {}", COUNTS_HEADER.len(), header.len())));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != COUNTS_HEADER.len() {
            return Err(src.err(row, "*", format!("expected 6 fields, found {}", rec.len())));
        }
        let name = rec[0].to_string();
        if name.is_empty() {
            return Err(src.err(row, "name", "empty publisher name"));
        }
        out.push(PublisherCounts {
            name,
            country: src.parse(&rec, 1, row, "country")?,
            medium: src.parse(&rec, 2, row, "medium")?,
            with_count: src.parse(&rec, 3, row, "with")?,
            from_count: src.parse(&rec, 4, row, "from")?,
            of_count: src.parse(&rec, 5, row, "of")?,
        });
    }
    Ok(out)
}

pub fn write_counts<W: Write>(out: W, counts: &[PublisherCounts]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    w.write_record(COUNTS_HEADER)?;
    for c in counts {
        w.write_record([
            c.name.clone(),
            c.country.to_string(),
            c.medium.to_string(),
            c.with_count.to_string(),
            c.from_count.to_string(),
            c.of_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_flag(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

/// Read `death_time,first_positive_test_time,covid_on_certificate`; an empty
/// test field means no positive test.
pub fn read_death_records<R: Read>(input: R, path: &str) -> Result<Vec<DeathRecord>> {
    let src = Source { path };
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    src.check_header(&header, &DEATHS_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != DEATHS_HEADER.len() {
            return Err(src.err(row, "*", format!("expected 3 fields, found {}", rec.len())));
        }
        let death_time: f64 = src.parse(&rec, 0, row, "death_time")?;
        if !death_time.is_finite() || death_time < 0.0 {
            return Err(src.err(row, "death_time", "must be finite and non-negative"));
        }
        let first_positive_test_time = if rec[1].trim().is_empty() {
            None
        } else {
            let t: f64 = src.parse(&rec, 1, row, "first_positive_test_time")?;
            if !t.is_finite() || t < 0.0 {
                return Err(src.err(row, "first_positive_test_time", "must be finite and non-negative"));
            }
            Some(t)
        };
        let covid_on_certificate = parse_flag(&rec[2])
            .ok_or_else(|| src.err(row, "covid_on_certificate", format!("expected 0/1, got `{}`", &rec[2])))?;
        out.push(DeathRecord {
            death_time,
            first_positive_test_time,
            covid_on_certificate,
        });
    }
    Ok(out)
}

pub fn write_death_records<W: Write>(out: W, records: &[DeathRecord]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(out);
    w.write_record(DEATHS_HEADER)?;
    for r in records {
        w.write_record([
            r.death_time.to_string(),
            r.first_positive_test_time.map(|t| t.to_string()).unwrap_or_default(),
            if r.covid_on_certificate { "1".into() } else { "0".into() },
        ])?;
    }
    w.flush()?;
    Ok(())
}
