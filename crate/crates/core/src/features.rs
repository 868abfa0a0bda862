//! Per-variant feature counts and the signed blocked-minus-baseline diff.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use scraper::Html;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::capture::{self, CapturePair, CaptureStatus};
use crate::dom;
use crate::ingest::LabeledDataset;

/// Integer diff columns, in dataset order.
pub const COUNT_FEATURES: [&str; 14] = [
    "a", "div", "h1", "h2", "h3", "img", "table", "p", "iframe", "textnodes", "tags", "lines",
    "words", "chars",
];

/// Every feature column (integer diffs followed by the two flags).
pub const FEATURE_NAMES: [&str; 16] = [
    "a", "div", "h1", "h2", "h3", "img", "table", "p", "iframe", "textnodes", "tags", "lines",
    "words", "chars", "keyword", "url_change",
];

/// Features carried as booleans rather than counts.
pub const BOOLEAN_FEATURES: [&str; 2] = ["keyword", "url_change"];

pub const DEFAULT_KEYWORDS: [&str; 8] = [
    "adblocker",
    "adblock",
    "ad block",
    "ad-block",
    "whitelist",
    "block-adblock",
    "pagefair",
    "fuckadblock",
];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("pair for {site} is not OK ({status})")]
    NotOk { site: String, status: String },
    #[error("cannot read snapshot root {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Lowercased substring keywords signalling an anti-adblock message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keywords(Vec<String>);

impl Default for Keywords {
    fn default() -> Self {
        Keywords(DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect())
    }
}

impl Keywords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Keywords(
            words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn detect(&self, text: &str) -> bool {
        let lower = text.to_lowercase();
        self.0.iter().any(|k| lower.contains(k.as_str()))
    }

    /// Byte offsets (in the lowercased text) of every keyword occurrence.
    pub fn positions(&self, lower_text: &str) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .0
            .iter()
            .flat_map(|k| lower_text.match_indices(k.as_str()).map(|(i, _)| i))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// True iff the lowercased text contains any default keyword.
pub fn detect_keywords(text: &str) -> bool {
    Keywords::default().detect(text)
}

/// Label attached to a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "TRUE")]
    True,
    #[serde(rename = "FALSE")]
    False,
    #[default]
    #[serde(rename = "?")]
    Unlabeled,
}

impl Label {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Label::True => Some(true),
            Label::False => Some(false),
            Label::Unlabeled => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Label::True => "TRUE",
            Label::False => "FALSE",
            Label::Unlabeled => "?",
        }
    }
}

impl From<bool> for Label {
    fn from(b: bool) -> Self {
        if b {
            Label::True
        } else {
            Label::False
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TRUE" => Ok(Label::True),
            "FALSE" => Ok(Label::False),
            "?" => Ok(Label::Unlabeled),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// Feature counts of one page variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCounts {
    pub a: u64,
    pub div: u64,
    pub h1: u64,
    pub h2: u64,
    pub h3: u64,
    pub img: u64,
    pub table: u64,
    pub p: u64,
    pub iframe: u64,
    pub text_nodes: u64,
    pub tags_total: u64,
    pub lines: u64,
    pub words: u64,
    pub chars: u64,
    pub keywords_present: bool,
}

impl RawCounts {
    /// Counts in [`COUNT_FEATURES`] order.
    pub fn to_array(&self) -> [u64; 14] {
        [
            self.a,
            self.div,
            self.h1,
            self.h2,
            self.h3,
            self.img,
            self.table,
            self.p,
            self.iframe,
            self.text_nodes,
            self.tags_total,
            self.lines,
            self.words,
            self.chars,
        ]
    }

    fn tag_slot(&mut self, name: &str) -> Option<&mut u64> {
        Some(match name {
            "a" => &mut self.a,
            "div" => &mut self.div,
            "h1" => &mut self.h1,
            "h2" => &mut self.h2,
            "h3" => &mut self.h3,
            "img" => &mut self.img,
            "table" => &mut self.table,
            "p" => &mut self.p,
            "iframe" => &mut self.iframe,
            _ => return None,
        })
    }
}

/// Counts features of `html` using the default keyword list.
pub fn count_features(html: &str) -> RawCounts {
    count_features_with(html, &Keywords::default())
}

/// Counts features of `html`. Input that is empty or whitespace-only yields
/// all zeros rather than the parser's synthesized `html/head/body` skeleton.
pub fn count_features_with(html: &str, keywords: &Keywords) -> RawCounts {
    if html.trim().is_empty() {
        return RawCounts::default();
    }
    counts_of_document(&dom::parse_document(html), keywords)
}

pub(crate) fn counts_of_document(doc: &Html, keywords: &Keywords) -> RawCounts {
    let mut counts = RawCounts::default();
    for node in doc.tree.root().descendants() {
        if let Some(element) = node.value().as_element() {
            counts.tags_total += 1;
            // html5ever already lowercases HTML element names.
            if let Some(slot) = counts.tag_slot(element.name()) {
                *slot += 1;
            }
        }
    }
    let nodes = dom::visible_text_nodes(doc);
    let text = nodes.join("\n");
    counts.text_nodes = nodes.len() as u64;
    counts.lines = text.lines().filter(|l| !l.trim().is_empty()).count() as u64;
    counts.words = text.split_whitespace().count() as u64;
    counts.chars = text.chars().count() as u64;
    counts.keywords_present = keywords.detect(&text);
    counts
}

/// Signed per-feature diff (blocked minus baseline) for one site.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub site: String,
    pub diffs: [i64; 14],
    pub keyword: bool,
    pub url_change: bool,
    pub label: Label,
}

impl FeatureVector {
    pub fn zero(site: impl Into<String>) -> Self {
        FeatureVector {
            site: site.into(),
            diffs: [0; 14],
            keyword: false,
            url_change: false,
            label: Label::Unlabeled,
        }
    }

    /// Numeric value of a feature column; flags map to 0/1.
    pub fn value(&self, name: &str) -> Option<f64> {
        match name {
            "keyword" => Some(f64::from(u8::from(self.keyword))),
            "url_change" => Some(f64::from(u8::from(self.url_change))),
            _ => COUNT_FEATURES
                .iter()
                .position(|f| *f == name)
                .map(|i| self.diffs[i] as f64),
        }
    }

    pub fn diff(&self, name: &str) -> Option<i64> {
        COUNT_FEATURES
            .iter()
            .position(|f| *f == name)
            .map(|i| self.diffs[i])
    }
}

/// Builds the diff vector of two variants' counts.
pub fn diff_counts(
    site: impl Into<String>,
    baseline: &RawCounts,
    blocked: &RawCounts,
    url_change: bool,
) -> FeatureVector {
    let (b, x) = (baseline.to_array(), blocked.to_array());
    let mut diffs = [0i64; 14];
    for i in 0..14 {
        diffs[i] = x[i] as i64 - b[i] as i64;
    }
    FeatureVector {
        site: site.into(),
        diffs,
        keyword: blocked.keywords_present && !baseline.keywords_present,
        url_change,
        label: Label::Unlabeled,
    }
}

/// URL form compared for redirect detection: parsed, fragment dropped,
/// trailing slash removed.
pub fn normalize_final_url(raw: &str) -> String {
    let mut s = match Url::parse(raw.trim()) {
        Ok(mut u) => {
            u.set_fragment(None);
            u.to_string()
        }
        Err(_) => raw.trim().to_string(),
    };
    while s.ends_with('/') {
        s.pop();
    }
    s
}

pub fn diff_features(pair: &CapturePair) -> Result<FeatureVector, FeatureError> {
    diff_features_with(pair, &Keywords::default())
}

pub fn diff_features_with(
    pair: &CapturePair,
    keywords: &Keywords,
) -> Result<FeatureVector, FeatureError> {
    let (Some(baseline), Some(blocked)) = (&pair.baseline, &pair.blocked) else {
        return Err(FeatureError::NotOk {
            site: pair.site.url.clone(),
            status: pair.status.to_string(),
        });
    };
    if pair.status != CaptureStatus::Ok {
        return Err(FeatureError::NotOk {
            site: pair.site.url.clone(),
            status: pair.status.to_string(),
        });
    }
    let base_counts = count_features_with(&baseline.html, keywords);
    let block_counts = count_features_with(&blocked.html, keywords);
    let url_change =
        normalize_final_url(&baseline.final_url) != normalize_final_url(&blocked.final_url);
    Ok(diff_counts(pair.site.host(), &base_counts, &block_counts, url_change))
}

/// A snapshot directory that did not produce a feature row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub host: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusExtraction {
    pub dataset: LabeledDataset,
    pub skipped: Vec<SkippedPair>,
}

/// Diffs every pair under a snapshot root. Rows come out sorted by host
/// directory name; pairs that are not OK (or fail to load) go to the skip
/// report.
pub fn extract_corpus(root: &Path, keywords: &Keywords) -> Result<CorpusExtraction, FeatureError> {
    let io_err = |source| FeatureError::Io {
        path: root.display().to_string(),
        source,
    };
    let mut hosts = Vec::new();
    for entry in std::fs::read_dir(root).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        if entry.file_type().map_err(io_err)?.is_dir() {
            hosts.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    hosts.sort();

    let results: Vec<Result<FeatureVector, SkippedPair>> = hosts
        .par_iter()
        .map(|host| {
            let skip = |reason: String| SkippedPair {
                host: host.clone(),
                reason,
            };
            let pair = capture::load_pair_dir(&root.join(host)).map_err(|e| skip(e.to_string()))?;
            if pair.status != CaptureStatus::Ok {
                return Err(skip(pair.status.to_string()));
            }
            let mut vector = diff_features_with(&pair, keywords).map_err(|e| skip(e.to_string()))?;
            vector.site = host.clone();
            Ok(vector)
        })
        .collect();

    let mut dataset = LabeledDataset::default();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(v) => dataset.rows.push(v),
            Err(s) => skipped.push(s),
        }
    }
    Ok(CorpusExtraction { dataset, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{PageSnapshot, SnapshotMode, Variant};
    use crate::ingest::SiteRecord;

    fn pair(base: &str, blocked: &str, base_url: &str, blocked_url: &str) -> CapturePair {
        let site = SiteRecord::new("http://site.example", 1, "T").unwrap();
        CapturePair {
            baseline: Some(PageSnapshot::new(&site.url, base_url, Variant::Baseline, base, SnapshotMode::Offline)),
            blocked: Some(PageSnapshot::new(&site.url, blocked_url, Variant::Blocked, blocked, SnapshotMode::Offline)),
            site,
            status: CaptureStatus::Ok,
        }
    }

    #[test]
    fn counts_simple_document() {
        let c = count_features("<div><p>hello world</p></div>");
        assert_eq!((c.div, c.p, c.text_nodes, c.lines, c.words, c.chars), (1, 1, 1, 1, 2, 11));
        // html, head, body are synthesized by the parser, plus div and p.
        assert_eq!(c.tags_total, 5);
        assert!(!c.keywords_present);
    }

    #[test]
    fn empty_input_is_all_zero() {
        assert_eq!(count_features(""), RawCounts::default());
        assert_eq!(count_features(" \n\t"), RawCounts::default());
    }

    #[test]
    fn script_text_is_not_visible() {
        let c = count_features("<script>var adblock=1</script>");
        assert_eq!(c.words, 0);
        assert!(!c.keywords_present);
    }

    #[test]
    fn tag_names_are_case_insensitive() {
        let c = count_features("<DIV><Div></div></DIV><IMG src=x><IFrame></iframe><TABLE></TABLE>");
        assert_eq!((c.div, c.img, c.iframe, c.table), (2, 1, 1, 1));
    }

    #[test]
    fn lines_words_chars() {
        let c = count_features("<p>one two</p><p>three</p>\n<h1>  four\nfive </h1>");
        assert_eq!(c.text_nodes, 3);
        // "one two\nthree\nfour\nfive"
        assert_eq!((c.lines, c.words, c.chars), (4, 5, 23));
    }

    #[test]
    fn keyword_list() {
        assert!(detect_keywords("Please disable your AdBlocker"));
        assert!(!detect_keywords("weather report"));
        assert!(detect_keywords("Whitelist us!"));
        assert!(detect_keywords("powered by PageFair"));
        assert!(detect_keywords("turn off your ad block"));
    }

    #[test]
    fn custom_keywords() {
        let k = Keywords::new(["Werbeblocker"]);
        assert!(k.detect("Bitte deaktivieren Sie Ihren WERBEBLOCKER"));
        assert!(!k.detect("adblock"));
    }

    #[test]
    fn identical_variants_diff_to_zero() {
        let html = "<div><p>text</p><a href=x>y</a></div>";
        let v = diff_features(&pair(html, html, "http://s/", "http://s/")).unwrap();
        assert_eq!(v.diffs, [0; 14]);
        assert!(!v.keyword && !v.url_change);
        assert_eq!(v.label, Label::Unlabeled);
        assert_eq!(v.site, "site.example");
    }

    #[test]
    fn wall_diff_hand_count() {
        let base = "<html><body><div><p>news of the day</p></div></body></html>";
        let blocked = "<html><body><div><p>news of the day</p></div>\
                       <div class=\"wall\"><p>disable adblock please now</p></div></body></html>";
        let v = diff_features(&pair(base, blocked, "http://s/", "http://s/")).unwrap();
        let d = |n| v.diff(n).unwrap();
        assert_eq!((d("div"), d("p"), d("textnodes"), d("words"), d("tags")), (1, 1, 1, 4, 2));
        assert_eq!(d("lines"), 1);
        // "disable adblock please now" (26) plus one newline separator.
        assert_eq!(d("chars"), 27);
        assert!(v.keyword);
    }

    #[test]
    fn redirect_sets_url_change() {
        let html = "<p>x</p>";
        let v = diff_features(&pair(html, html, "http://s/", "http://s/adblock-notice")).unwrap();
        assert!(v.url_change);
        let v = diff_features(&pair(html, html, "http://s/", "http://s#frag")).unwrap();
        assert!(!v.url_change);
    }

    #[test]
    fn keyword_in_both_variants_is_not_flagged() {
        let html = "<p>Why adblock usage is rising</p>";
        let v = diff_features(&pair(html, html, "http://s/", "http://s/")).unwrap();
        assert!(!v.keyword);
    }

    #[test]
    fn non_ok_pair_is_rejected() {
        let mut p = pair("<p>x</p>", "<p>x</p>", "http://s/", "http://s/");
        p.status = CaptureStatus::Dead;
        assert!(matches!(diff_features(&p), Err(FeatureError::NotOk { .. })));
    }

    #[test]
    fn feature_value_lookup() {
        let mut v = FeatureVector::zero("s");
        v.diffs[1] = -3;
        v.url_change = true;
        assert_eq!(v.value("div"), Some(-3.0));
        assert_eq!(v.value("url_change"), Some(1.0));
        assert_eq!(v.value("keyword"), Some(0.0));
        assert_eq!(v.value("bogus"), None);
    }
}
