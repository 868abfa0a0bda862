//! Paired page snapshots: live over WebDriver, offline from a snapshot
//! directory, or simulated from a filter list.

mod store;
mod synth;
pub mod webdriver;

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, Utc};
use reqwest::blocking::Client;
use reqwest::redirect::Policy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Liveness, SiteRecord};

pub use store::{load_pair, load_pair_dir, save_pair, META_FILE};
pub use synth::{
    generate_corpus, synth_pair, synth_reloaded_pair, write_corpus, CorpusSpec, SyntheticSite, MINI_FILTER_LIST,
};
pub use webdriver::{SessionConfig, WebDriverClient, WebDriverError};

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("snapshot for {host} is missing the {variant} variant")]
    MissingVariant { host: String, variant: Variant },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: invalid metadata: {message}")]
    Meta { path: String, message: String },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Baseline,
    Blocked,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Blocked => "blocked",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotMode {
    Live,
    Offline,
    Simulated,
}

/// One captured page variant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageSnapshot {
    pub requested_url: String,
    pub final_url: String,
    pub variant: Variant,
    pub html: String,
    #[serde(skip)]
    pub screenshot: Option<Vec<u8>>,
    pub captured_at: DateTime<Utc>,
    pub mode: SnapshotMode,
}

impl PageSnapshot {
    pub fn new(
        requested_url: &str,
        final_url: &str,
        variant: Variant,
        html: &str,
        mode: SnapshotMode,
    ) -> Self {
        PageSnapshot {
            requested_url: requested_url.to_string(),
            final_url: final_url.to_string(),
            variant,
            html: html.to_string(),
            screenshot: None,
            captured_at: Utc::now(),
            mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum CaptureStatus {
    Ok,
    Dead,
    Failed(String),
}

impl fmt::Display for CaptureStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaptureStatus::Ok => f.write_str("ok"),
            CaptureStatus::Dead => f.write_str("dead"),
            CaptureStatus::Failed(reason) => write!(f, "failed ({reason})"),
        }
    }
}

/// Baseline and blocked snapshots of one site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapturePair {
    pub site: SiteRecord,
    pub baseline: Option<PageSnapshot>,
    pub blocked: Option<PageSnapshot>,
    pub status: CaptureStatus,
}

impl CapturePair {
    pub fn dead(mut site: SiteRecord) -> Self {
        site.alive = Liveness::Dead;
        CapturePair {
            site,
            baseline: None,
            blocked: None,
            status: CaptureStatus::Dead,
        }
    }

    pub fn failed(site: SiteRecord, reason: impl Into<String>) -> Self {
        CapturePair {
            site,
            baseline: None,
            blocked: None,
            status: CaptureStatus::Failed(reason.into()),
        }
    }

    pub fn snapshot(&self, variant: Variant) -> Option<&PageSnapshot> {
        match variant {
            Variant::Baseline => self.baseline.as_ref(),
            Variant::Blocked => self.blocked.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureCategory {
    Dns,
    Timeout,
    Tls,
    Connect,
    Status,
    Redirects,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliveCheck {
    pub alive: bool,
    pub final_url: String,
    pub failure: Option<FailureCategory>,
}

pub const MAX_REDIRECTS: usize = 10;

fn categorize(err: &reqwest::Error) -> FailureCategory {
    if err.is_timeout() {
        return FailureCategory::Timeout;
    }
    if err.is_redirect() {
        return FailureCategory::Redirects;
    }
    let mut chain = String::new();
    let mut source: Option<&dyn std::error::Error> = Some(err);
    while let Some(e) = source {
        chain.push_str(&e.to_string().to_lowercase());
        chain.push(' ');
        source = e.source();
    }
    if chain.contains("dns") || chain.contains("resolve") || chain.contains("lookup") {
        FailureCategory::Dns
    } else if chain.contains("certificate") || chain.contains("tls") || chain.contains("ssl") {
        FailureCategory::Tls
    } else if err.is_connect() {
        FailureCategory::Connect
    } else {
        FailureCategory::Other
    }
}

/// GETs `url`, following up to ten redirects. Alive iff the final response
/// has a 2xx/3xx status within `timeout`.
pub fn check_alive(url: &str, timeout: Duration) -> Result<AliveCheck, CaptureError> {
    if timeout.is_zero() {
        return Err(CaptureError::Parameter("timeout must be > 0".into()));
    }
    let client = Client::builder()
        .timeout(timeout)
        .connect_timeout(timeout)
        .redirect(Policy::limited(MAX_REDIRECTS))
        .build()
        .map_err(|e| CaptureError::Parameter(e.to_string()))?;
    let dead = |failure| AliveCheck {
        alive: false,
        final_url: url.to_string(),
        failure: Some(failure),
    };
    Ok(match client.get(url).send() {
        Ok(resp) => {
            let code = resp.status().as_u16();
            if (200..400).contains(&code) {
                AliveCheck {
                    alive: true,
                    final_url: resp.url().to_string(),
                    failure: None,
                }
            } else {
                AliveCheck {
                    alive: false,
                    final_url: resp.url().to_string(),
                    failure: Some(FailureCategory::Status),
                }
            }
        }
        Err(e) => dead(categorize(&e)),
    })
}

/// Timing knobs of a live capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureOptions {
    /// Wait after navigation before reading the page, giving detection
    /// scripts time to run.
    pub settle_delay: Duration,
    pub liveness_timeout: Duration,
    /// Upper bound for any single WebDriver command.
    pub command_timeout: Duration,
}

impl Default for CaptureOptions {
    fn default() -> Self {
        CaptureOptions {
            settle_delay: Duration::from_secs(5),
            liveness_timeout: Duration::from_secs(15),
            command_timeout: Duration::from_secs(60),
        }
    }
}

fn capture_variant(
    url: &str,
    config: &SessionConfig,
    variant: Variant,
    options: &CaptureOptions,
) -> Result<PageSnapshot, String> {
    let fail = |stage: &str| format!("{variant}: {stage}");
    let client = WebDriverClient::new(&config.endpoint, options.command_timeout)
        .map_err(|_| fail("session"))?;
    let session = client
        .new_session(&config.capabilities)
        .map_err(|_| fail("session"))?;

    let result = (|| {
        session.navigate(url).map_err(|_| fail("navigate"))?;
        std::thread::sleep(options.settle_delay);
        let final_url = session.current_url().map_err(|_| fail("url"))?;
        let html = session.page_source().map_err(|_| fail("source"))?;
        // Screenshots are kept for manual review only; losing one is not fatal.
        let screenshot = session.screenshot().ok();
        let mut snapshot = PageSnapshot::new(url, &final_url, variant, &html, SnapshotMode::Live);
        snapshot.screenshot = screenshot;
        if snapshot.html.trim().is_empty() {
            return Err(fail("empty page"));
        }
        Ok(snapshot)
    })();
    let deleted = session.delete();
    match (result, deleted) {
        (Ok(snapshot), Ok(())) => Ok(snapshot),
        (Ok(_), Err(_)) => Err(fail("delete session")),
        (Err(e), _) => Err(e),
    }
}

/// Captures baseline then blocked variants of one site. A site that fails
/// the liveness check yields a `Dead` pair without opening any session.
pub fn capture_pair(
    site: &SiteRecord,
    baseline: &SessionConfig,
    blocked: &SessionConfig,
    options: &CaptureOptions,
) -> CapturePair {
    let alive = match check_alive(&site.url, options.liveness_timeout) {
        Ok(check) => check.alive,
        Err(e) => return CapturePair::failed(site.clone(), format!("liveness: {e}")),
    };
    if !alive {
        return CapturePair::dead(site.clone());
    }
    let mut site = site.clone();
    site.alive = Liveness::Alive;

    let base = match capture_variant(&site.url, baseline, Variant::Baseline, options) {
        Ok(s) => s,
        Err(reason) => return CapturePair::failed(site, reason),
    };
    let block = match capture_variant(&site.url, blocked, Variant::Blocked, options) {
        Ok(s) => s,
        Err(reason) => return CapturePair::failed(site, reason),
    };
    CapturePair {
        site,
        baseline: Some(base),
        blocked: Some(block),
        status: CaptureStatus::Ok,
    }
}

/// Runs `work` over every site with at most `parallelism` sites in flight.
/// Results keep the input order.
pub fn for_each_site<F>(sites: &[SiteRecord], parallelism: usize, work: F) -> Vec<CapturePair>
where
    F: Fn(&SiteRecord) -> CapturePair + Sync,
{
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<CapturePair>>> = Mutex::new(vec![None; sites.len()]);
    std::thread::scope(|scope| {
        for _ in 0..parallelism.clamp(1, sites.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(site) = sites.get(i) else {
                    break;
                };
                let pair = work(site);
                results.lock().expect("worker panicked")[i] = Some(pair);
            });
        }
    });
    results
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|p| p.expect("every site processed"))
        .collect()
}

/// Live capture of many sites, up to `parallelism` concurrently.
pub fn capture_sites(
    sites: &[SiteRecord],
    baseline: &SessionConfig,
    blocked: &SessionConfig,
    options: &CaptureOptions,
    parallelism: usize,
) -> Vec<CapturePair> {
    for_each_site(sites, parallelism, |site| {
        capture_pair(site, baseline, blocked, options)
    })
}
