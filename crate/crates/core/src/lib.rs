//! Statistics for mortality recording and reporting.
//!
//! - [`survival`]: Kaplan–Meier curves with Greenwood variance
//! - [`cox`]: Cox proportional-hazards fitting (Breslow ties)
//! - [`stats`]: log-normal fitting, one- and two-sample KS tests, Pearson's r
//! - [`media`]: publisher phrase counts, corpus scanning and aggregation
//! - [`report`]: the per-country media analysis built on the above
//! - [`sim`]: synthetic cohorts, contamination bias, England death indicators
//! - [`io`]: CSV/JSON file formats

pub mod cox;
pub mod error;
pub mod io;
pub mod media;
pub mod par;
pub mod report;
pub mod sim;
pub mod stats;
pub mod survival;

pub use error::{Error, Result};
