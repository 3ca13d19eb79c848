//! Publisher phrase counts and the aggregate proportions built from them.
//!
//! An article phrased "deaths with COVID" counts as correct; "deaths from
//! COVID" and "deaths of COVID" count as incorrect.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Country {
    #[serde(rename = "UK")]
    Uk,
    #[serde(rename = "USA")]
    Usa,
}

impl fmt::Display for Country {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Country::Uk => "UK",
            Country::Usa => "USA",
        })
    }
}

impl FromStr for Country {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "UK" => Ok(Country::Uk),
            "USA" => Ok(Country::Usa),
            other => Err(format!("unknown country `{other}` (expected UK or USA)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Medium {
    Newspaper,
    Tv,
}

impl fmt::Display for Medium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Medium::Newspaper => "newspaper",
            Medium::Tv => "tv",
        })
    }
}

impl FromStr for Medium {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "newspaper" => Ok(Medium::Newspaper),
            "tv" => Ok(Medium::Tv),
            other => Err(format!("unknown medium `{other}` (expected newspaper or tv)")),
        }
    }
}

/// One outlet's article counts per phrasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublisherCounts {
    pub name: String,
    pub country: Country,
    pub medium: Medium,
    #[serde(rename = "with")]
    pub with_count: u64,
    #[serde(rename = "from")]
    pub from_count: u64,
    #[serde(rename = "of")]
    pub of_count: u64,
}

impl PublisherCounts {
    pub fn correct(&self) -> u64 {
        self.with_count
    }

    pub fn incorrect(&self) -> u64 {
        self.from_count + self.of_count
    }

    pub fn total(&self) -> u64 {
        self.correct() + self.incorrect()
    }
}

/// (from + of) / (with + from + of).
pub fn incorrect_proportion(p: &PublisherCounts) -> Result<f64> {
    match p.total() {
        0 => Err(Error::NoArticles { name: p.name.clone() }),
        total => Ok(p.incorrect() as f64 / total as f64),
    }
}

/// Unweighted mean of per-publisher incorrect proportions and its sample
/// (n − 1) standard deviation.
pub fn macro_average(publishers: &[PublisherCounts]) -> Result<(f64, f64)> {
    if publishers.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "macro average needs at least 2 publishers, got {}",
            publishers.len()
        )));
    }
    let props = publishers
        .iter()
        .map(incorrect_proportion)
        .collect::<Result<Vec<_>>>()?;
    let n = props.len() as f64;
    let mean = props.iter().sum::<f64>() / n;
    let var = props.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Article-weighted proportion: Σ incorrect / Σ total.
pub fn pooled_proportion(publishers: &[PublisherCounts]) -> Result<f64> {
    let incorrect: u64 = publishers.iter().map(PublisherCounts::incorrect).sum();
    let total: u64 = publishers.iter().map(PublisherCounts::total).sum();
    if total == 0 {
        return Err(Error::NoArticles {
            name: publishers
                .iter()
                .map(|p| p.name.as_str())
                .collect::<Vec<_>>()
                .join(", "),
        });
    }
    Ok(incorrect as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublisherProportion {
    pub name: String,
    pub incorrect_proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub macro_average: f64,
    pub macro_sample_std: f64,
    pub pooled: f64,
    pub per_publisher: Vec<PublisherProportion>,
}

pub fn aggregate_proportions(publishers: &[PublisherCounts]) -> Result<Vec<PublisherProportion>> {
    publishers
        .iter()
        .map(|p| {
            Ok(PublisherProportion {
                name: p.name.clone(),
                incorrect_proportion: incorrect_proportion(p)?,
            })
        })
        .collect()
}

pub fn aggregate(publishers: &[PublisherCounts]) -> Result<AggregateReport> {
    let per_publisher = aggregate_proportions(publishers)?;
    let (macro_average, macro_sample_std) = macro_average(publishers)?;
    Ok(AggregateReport {
        macro_average,
        macro_sample_std,
        pooled: pooled_proportion(publishers)?,
        per_publisher,
    })
}

pub const PHRASE_WITH: &str = "deaths with covid";
pub const PHRASE_FROM: &str = "deaths from covid";
pub const PHRASE_OF: &str = "deaths of covid";

/// One raw document tagged with its publisher.
#[derive(Debug, Clone)]
pub struct Document {
    pub publisher: String,
    pub bytes: Vec<u8>,
}

/// Documents containing each phrase at least once.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseTally {
    pub with_count: u64,
    pub from_count: u64,
    pub of_count: u64,
}

impl PhraseTally {
    pub fn merge(self, other: PhraseTally) -> PhraseTally {
        PhraseTally {
            with_count: self.with_count + other.with_count,
            from_count: self.from_count + other.from_count,
            of_count: self.of_count + other.of_count,
        }
    }
}

/// Phrase presence in a single document. Matching ignores ASCII case and
/// treats each phrase as a plain substring, so "COVID-19" matches "covid".
pub fn tally_document(text: &str) -> PhraseTally {
    let lowered = text.to_ascii_lowercase();
    let has = |p: &str| u64::from(lowered.contains(p));
    PhraseTally {
        with_count: has(PHRASE_WITH),
        from_count: has(PHRASE_FROM),
        of_count: has(PHRASE_OF),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanResult {
    pub tallies: BTreeMap<String, PhraseTally>,
    /// Documents skipped because they were not valid UTF-8.
    pub skipped: usize,
}

impl ScanResult {
    fn merge(mut self, other: ScanResult) -> ScanResult {
        for (name, t) in other.tallies {
            let e = self.tallies.entry(name).or_default();
            *e = e.merge(t);
        }
        self.skipped += other.skipped;
        self
    }

    /// Attach country and medium to every scanned publisher, sorted by name.
    pub fn into_counts(self, country: Country, medium: Medium) -> Vec<PublisherCounts> {
        self.tallies
            .into_iter()
            .map(|(name, t)| PublisherCounts {
                name,
                country,
                medium,
                with_count: t.with_count,
                from_count: t.from_count,
                of_count: t.of_count,
            })
            .collect()
    }
}

/// Count, per publisher, the documents containing each phrase.
pub fn phrase_scan(documents: &[Document]) -> ScanResult {
    phrase_scan_with(Execution::default(), documents)
}

pub fn phrase_scan_with(exec: Execution, documents: &[Document]) -> ScanResult {
    par::map_reduce(
        exec,
        documents,
        ScanResult::default(),
        |doc| {
            let mut out = ScanResult::default();
            match std::str::from_utf8(&doc.bytes) {
                Ok(text) => {
                    out.tallies.insert(doc.publisher.clone(), tally_document(text));
                }
                Err(e) => {
                    log::warn!("skipping undecodable document from `{}`: {e}", doc.publisher);
                    out.skipped = 1;
                }
            }
            out
        },
        ScanResult::merge,
    )
}
