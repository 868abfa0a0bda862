//! Site-list construction: category-listing XML, plain site lists, saved
//! issue-tracker pages, regional de-duplication and the labeled dataset CSV.

mod awis;
mod dataset;
mod issues;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

pub use awis::{build_awis_request, parse_awis_xml, AWIS_ENDPOINT, AWIS_MAX_COUNT};
pub use dataset::{read_dataset, write_dataset, LabeledDataset, DATASET_HEADER};
pub use issues::{parse_issue_corpus, POSITIVE_CANDIDATE_TAG};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("remote status {0:?}")]
    RemoteStatus(String),
    #[error("invalid site url {0:?}")]
    InvalidUrl(String),
    #[error("dataset row {row}: {message}")]
    Dataset { row: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Liveness of a site as last observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Liveness {
    #[default]
    Unknown,
    Alive,
    Dead,
}

/// A ranked site taken from a regional or category listing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteRecord {
    pub url: String,
    pub title: Option<String>,
    pub rank: u32,
    pub source_tag: String,
    #[serde(default)]
    pub alive: Liveness,
}

impl SiteRecord {
    /// Builds a record, normalizing bare hosts such as `example.com` to
    /// `http://example.com/`-style absolute URLs.
    pub fn new(url: &str, rank: u32, source_tag: &str) -> Result<Self, IngestError> {
        if rank == 0 {
            return Err(IngestError::Parameter("rank must be >= 1".into()));
        }
        let url = absolutize(url).ok_or_else(|| IngestError::InvalidUrl(url.to_string()))?;
        Ok(SiteRecord {
            url,
            title: None,
            rank,
            source_tag: source_tag.to_string(),
            alive: Liveness::Unknown,
        })
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn host(&self) -> String {
        normalize_host(&self.url)
    }
}

/// Returns `raw` as an absolute http(s) URL string, adding `http://` when no
/// scheme is present. The original spelling is kept when it already parses.
pub fn absolutize(raw: &str) -> Option<String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    let candidate = if raw.contains("://") {
        raw.to_string()
    } else {
        format!("http://{raw}")
    };
    let parsed = Url::parse(&candidate).ok()?;
    match parsed.scheme() {
        "http" | "https" if parsed.host_str().is_some_and(|h| !h.is_empty()) => Some(candidate),
        _ => None,
    }
}

/// Host key used for de-duplication: lowercase, leading `www.` removed, no
/// trailing slash.
pub fn normalize_host(url: &str) -> String {
    let trimmed = url.trim();
    let with_scheme = if trimmed.contains("://") {
        trimmed.to_string()
    } else {
        format!("http://{trimmed}")
    };
    let host = match Url::parse(&with_scheme) {
        Ok(u) => u.host_str().unwrap_or_default().to_ascii_lowercase(),
        Err(_) => {
            let rest = with_scheme.split_once("://").map_or(trimmed, |(_, r)| r);
            rest.split(['/', '?', '#']).next().unwrap_or_default().to_ascii_lowercase()
        }
    };
    let host = host.trim_end_matches('/').trim_end_matches('.');
    host.strip_prefix("www.").unwrap_or(host).to_string()
}

/// Union of several site lists, unique by [`normalize_host`]. The first
/// occurrence of each host wins and output keeps first-seen order.
pub fn dedupe_union(lists: &[Vec<SiteRecord>]) -> Vec<SiteRecord> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for site in lists.iter().flatten() {
        if seen.insert(site.host()) {
            out.push(site.clone());
        }
    }
    out
}

/// Parses a plain site-list file: one URL per line, `#` starts a comment.
/// Ranks follow line order starting at 1.
pub fn parse_site_list(text: &str, source_tag: &str) -> Result<Vec<SiteRecord>, IngestError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let rank = out.len() as u32 + 1;
        out.push(SiteRecord::new(line, rank, source_tag)?);
    }
    Ok(out)
}

pub fn write_site_list(sites: &[SiteRecord]) -> String {
    let mut out = String::new();
    for site in sites {
        out.push_str(&site.url);
        out.push('\n');
    }
    out
}
