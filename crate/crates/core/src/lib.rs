//! Anti-adblock detection pipeline: site-list ingestion, A/B page capture,
//! filter-list simulation, DOM feature diffing, classification and reports.

pub mod capture;
pub mod dom;
pub mod features;
pub mod filterlist;
pub mod ingest;
pub mod ml;
pub mod report;

pub use features::{FeatureVector, Label, RawCounts};
pub use ingest::{LabeledDataset, SiteRecord};
