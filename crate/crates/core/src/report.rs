//! Regional aggregation of classifier output against manual verification,
//! and Cost/Invisibility/Availability labels for detected walls.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::{CapturePair, CaptureStatus};
use crate::features::{count_features_with, Keywords, Label};
use crate::ingest::normalize_host;
use crate::ml::Prediction;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{classifier}: predicted site {site} has no verification verdict")]
    MissingVerification { classifier: String, site: String },
    #[error("pair for {site} is not OK ({status})")]
    NotOk { site: String, status: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// One classifier's row of a regional table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRow {
    pub classifier: String,
    pub predicted: u64,
    pub tp: u64,
    pub fp: u64,
    /// `tp / predicted`, or 0 when nothing was predicted.
    pub precision: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub precision_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub region: String,
    pub rows: Vec<ClassifierRow>,
    pub total_sites: u64,
    /// Verified anti-adblock sites found by any classifier.
    pub confirmed: u64,
    /// `confirmed / total_sites`.
    pub positive_rate: f64,
}

fn parse_verdict(token: &str) -> Option<bool> {
    match token.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn csv_records(text: &[u8]) -> Result<Vec<(usize, csv::StringRecord)>, ReportError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ReportError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        // An optional header row starts with "host".
        if out.is_empty() && record.get(0).map(str::trim) == Some("host") {
            continue;
        }
        out.push((line, record));
    }
    Ok(out)
}

/// Reads a `host,verdict` file (verdict `true`/`false`). Hosts are
/// normalised; an optional header row is skipped.
pub fn read_verification(text: &[u8]) -> Result<BTreeMap<String, bool>, ReportError> {
    let mut map = BTreeMap::new();
    for (line, record) in csv_records(text)? {
        let host = record.get(0).map(str::trim).unwrap_or_default();
        let verdict = record
            .get(1)
            .and_then(parse_verdict)
            .ok_or_else(|| ReportError::Parse {
                line,
                message: format!("expected host,verdict with verdict true/false, got {:?}", record.iter().collect::<Vec<_>>()),
            })?;
        if host.is_empty() {
            return Err(ReportError::Parse {
                line,
                message: "empty host".into(),
            });
        }
        map.insert(normalize_host(host), verdict);
    }
    Ok(map)
}

/// Counts one classifier's TRUE predictions and checks each against the
/// verification map.
pub fn aggregate_classifier(
    classifier: &str,
    predictions: &[Prediction],
    verified: &BTreeMap<String, bool>,
) -> Result<ClassifierRow, ReportError> {
    let mut predicted = 0;
    let mut tp = 0;
    for p in predictions.iter().filter(|p| p.label == Label::True) {
        predicted += 1;
        let host = normalize_host(&p.site);
        match verified.get(&host) {
            Some(true) => tp += 1,
            Some(false) => {}
            None => {
                return Err(ReportError::MissingVerification {
                    classifier: classifier.to_string(),
                    site: p.site.clone(),
                })
            }
        }
    }
    let precision_undefined = predicted == 0;
    Ok(ClassifierRow {
        classifier: classifier.to_string(),
        predicted,
        tp,
        fp: predicted - tp,
        precision: if precision_undefined {
            0.0
        } else {
            tp as f64 / predicted as f64
        },
        precision_undefined,
    })
}

/// Builds the regional table. Each run is `(classifier name, predictions)`
/// over the same site population; the site total is the number of distinct
/// sites classified by any run.
pub fn aggregate_region(
    region: &str,
    runs: &[(String, Vec<Prediction>)],
    verified: &BTreeMap<String, bool>,
) -> Result<RegionReport, ReportError> {
    let mut rows = Vec::with_capacity(runs.len());
    let mut sites = BTreeSet::new();
    let mut confirmed = BTreeSet::new();
    for (name, predictions) in runs {
        rows.push(aggregate_classifier(name, predictions, verified)?);
        for p in predictions {
            let host = normalize_host(&p.site);
            if p.label == Label::True && verified.get(&host) == Some(&true) {
                confirmed.insert(host.clone());
            }
            sites.insert(host);
        }
    }
    let total_sites = sites.len() as u64;
    let confirmed = confirmed.len() as u64;
    Ok(RegionReport {
        region: region.to_string(),
        rows,
        total_sites,
        confirmed,
        positive_rate: if total_sites == 0 {
            0.0
        } else {
            confirmed as f64 / total_sites as f64
        },
    })
}

impl RegionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Region: {} ({} sites)", self.region, self.total_sites);
        let _ = writeln!(out, "{:<14} {:>9} {:>5} {:>5} {:>9}", "Classifier", "Predicted", "TP", "FP", "Precision");
        for r in &self.rows {
            let precision = if r.precision_undefined {
                "-".to_string()
            } else {
                format!("{:.3}", r.precision)
            };
            let _ = writeln!(
                out,
                "{:<14} {:>9} {:>5} {:>5} {:>9}",
                r.classifier, r.predicted, r.tp, r.fp, precision
            );
        }
        let _ = writeln!(
            out,
            "Positive rate: {:.1}% ({}/{})",
            self.positive_rate * 100.0,
            self.confirmed,
            self.total_sites
        );
        out
    }
}

/// How a site responds once it detects an ad-blocker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseCategory {
    Cost,
    Invisibility,
    Availability,
    None,
}

impl fmt::Display for ResponseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResponseCategory::Cost => "Cost",
            ResponseCategory::Invisibility => "Invisibility",
            ResponseCategory::Availability => "Availability",
            ResponseCategory::None => "None",
        })
    }
}

impl FromStr for ResponseCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cost" | "c" => Ok(ResponseCategory::Cost),
            "invisibility" | "i" => Ok(ResponseCategory::Invisibility),
            "availability" | "a" => Ok(ResponseCategory::Availability),
            "none" | "" => Ok(ResponseCategory::None),
            other => Err(format!("unknown response category {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelSource {
    Heuristic,
    Manual,
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelSource::Heuristic => "Heuristic",
            LabelSource::Manual => "Manual",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseLabel {
    pub category: ResponseCategory,
    pub evidence: String,
    pub source: LabelSource,
}

/// Words that signal a paid or donation alternative to ads. Terms are
/// matched at a word start; those flagged `true` must also end the word.
pub const COST_TERMS: [(&str, bool); 5] = [
    ("subscribe", false),
    ("pay", true),
    ("donat", false),
    ("pro version", false),
    ("abo", true),
];

/// Knobs of the response heuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseThresholds {
    /// Blocked/baseline visible-text ratio below which content counts as hidden.
    pub invisibility_ratio: f64,
    /// Ratio at or above which content counts as still available.
    pub availability_ratio: f64,
    /// Maximum distance in bytes between a cost term and a keyword.
    pub cost_proximity: usize,
}

impl Default for ResponseThresholds {
    fn default() -> Self {
        ResponseThresholds {
            invisibility_ratio: 0.3,
            availability_ratio: 0.8,
            cost_proximity: 150,
        }
    }
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(char::is_alphanumeric)
}

fn cost_term_near_keyword(lower: &str, keyword_at: &[usize], proximity: usize) -> Option<&'static str> {
    for (term, whole) in COST_TERMS {
        for (at, _) in lower.match_indices(term) {
            let before = lower[..at].chars().next_back();
            let after = lower[at + term.len()..].chars().next();
            if is_word_char(before) || (whole && is_word_char(after)) {
                continue;
            }
            if keyword_at.iter().any(|&k| k.abs_diff(at) <= proximity) {
                return Some(term);
            }
        }
    }
    None
}

/// Heuristic response label of an OK pair. Sites without a new keyword in
/// the blocked variant get `None`.
pub fn label_response(
    pair: &CapturePair,
    thresholds: &ResponseThresholds,
    keywords: &Keywords,
) -> Result<ResponseLabel, ReportError> {
    let (Some(baseline), Some(blocked), CaptureStatus::Ok) = (&pair.baseline, &pair.blocked, &pair.status) else {
        return Err(ReportError::NotOk {
            site: pair.site.host(),
            status: pair.status.to_string(),
        });
    };
    let base = count_features_with(&baseline.html, keywords);
    let block = count_features_with(&blocked.html, keywords);
    let label = |category, evidence: String| ResponseLabel {
        category,
        evidence,
        source: LabelSource::Heuristic,
    };
    if !block.keywords_present || base.keywords_present {
        return Ok(label(ResponseCategory::None, "no new ad-blocker keyword".into()));
    }
    let text = crate::dom::visible_text(&crate::dom::parse_document(&blocked.html)).to_lowercase();
    let keyword_at = keywords.positions(&text);
    if let Some(term) = cost_term_near_keyword(&text, &keyword_at, thresholds.cost_proximity) {
        return Ok(label(ResponseCategory::Cost, format!("cost term {term:?} near keyword")));
    }
    let ratio = if base.chars == 0 {
        1.0
    } else {
        block.chars as f64 / base.chars as f64
    };
    let retained = format!("blocked text {}/{} chars ({:.0}%)", block.chars, base.chars, ratio * 100.0);
    Ok(if ratio < thresholds.invisibility_ratio {
        label(ResponseCategory::Invisibility, retained)
    } else if ratio >= thresholds.availability_ratio {
        label(ResponseCategory::Availability, retained)
    } else {
        label(ResponseCategory::None, retained)
    })
}

/// Reads manual labels from `host,category[,evidence]` lines.
pub fn read_manual_labels(text: &[u8]) -> Result<BTreeMap<String, ResponseLabel>, ReportError> {
    let mut map = BTreeMap::new();
    for (line, record) in csv_records(text)? {
        let host = record.get(0).map(str::trim).unwrap_or_default();
        let category = record
            .get(1)
            .ok_or_else(|| ReportError::Parse {
                line,
                message: "expected host,category".into(),
            })?
            .parse::<ResponseCategory>()
            .map_err(|message| ReportError::Parse { line, message })?;
        map.insert(
            normalize_host(host),
            ResponseLabel {
                category,
                evidence: record.get(2).unwrap_or("manual").trim().to_string(),
                source: LabelSource::Manual,
            },
        );
    }
    Ok(map)
}

/// Overlays manual labels on heuristic ones. Manual entries replace
/// heuristic labels for the same host and hosts only labelled manually are
/// added. The result is sorted by host.
pub fn merge_labels(
    heuristic: Vec<(String, ResponseLabel)>,
    manual: &BTreeMap<String, ResponseLabel>,
) -> Vec<(String, ResponseLabel)> {
    let mut merged: BTreeMap<String, ResponseLabel> = heuristic
        .into_iter()
        .map(|(host, label)| (normalize_host(&host), label))
        .collect();
    for (host, label) in manual {
        merged.insert(host.clone(), label.clone());
    }
    merged.into_iter().collect()
}

/// `host,category,source,evidence` CSV of merged labels.
pub fn write_labels(labels: &[(String, ResponseLabel)]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["host", "category", "source", "evidence"])
        .expect("in-memory write");
    for (host, l) in labels {
        w.write_record([
            host.as_str(),
            &l.category.to_string(),
            &l.source.to_string(),
            &l.evidence,
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{PageSnapshot, SnapshotMode, Variant};
    use crate::ingest::SiteRecord;

    fn preds(n_true: usize, n_false: usize) -> Vec<Prediction> {
        (0..n_true + n_false)
            .map(|i| Prediction {
                site: format!("s{i}.example"),
                label: Label::from(i < n_true),
                score: if i < n_true { 0.9 } else { 0.1 },
            })
            .collect()
    }

    fn verified(n_true: usize, n_false: usize) -> BTreeMap<String, bool> {
        (0..n_true + n_false)
            .map(|i| (format!("s{i}.example"), i < n_true))
            .collect()
    }

    #[test]
    fn row_counts() {
        let r = aggregate_classifier("rf", &preds(26, 392), &verified(8, 18)).unwrap();
        assert_eq!((r.predicted, r.tp, r.fp), (26, 8, 18));
        assert!((r.precision - 0.308).abs() < 1e-3);
    }

    #[test]
    fn nothing_predicted_is_flagged() {
        let r = aggregate_classifier("nb", &preds(0, 5), &BTreeMap::new()).unwrap();
        assert_eq!(r.precision, 0.0);
        assert!(r.precision_undefined);
    }

    #[test]
    fn missing_verification_names_site() {
        let err = aggregate_classifier("j48", &preds(3, 0), &verified(2, 0)).unwrap_err();
        assert!(err.to_string().contains("s2.example"));
    }

    #[test]
    fn region_positive_rate_counts_union() {
        let runs = vec![("nb".to_string(), preds(3, 415)), ("rf".to_string(), preds(26, 392))];
        let r = aggregate_region("de", &runs, &verified(8, 18)).unwrap();
        assert_eq!(r.total_sites, 418);
        assert_eq!(r.confirmed, 8);
        assert!((r.positive_rate - 8.0 / 418.0).abs() < 1e-12);
        let text = r.render_text();
        assert!(text.contains("Positive rate: 1.9% (8/418)"));
    }

    #[test]
    fn verification_file() {
        let v = read_verification(b"host,verdict\nwww.Example.com,true\nb.example,FALSE\n").unwrap();
        assert_eq!(v.get("example.com"), Some(&true));
        assert_eq!(v.get("b.example"), Some(&false));
        assert!(read_verification(b"a.example,maybe\n").is_err());
    }

    fn pair(baseline: &str, blocked: &str) -> CapturePair {
        let snap = |variant, html: &str| {
            PageSnapshot::new(
                "http://a.example/",
                "http://a.example/",
                variant,
                html,
                SnapshotMode::Offline,
            )
        };
        CapturePair {
            site: SiteRecord::new("a.example", 1, "test").unwrap(),
            baseline: Some(snap(Variant::Baseline, baseline)),
            blocked: Some(snap(Variant::Blocked, blocked)),
            status: CaptureStatus::Ok,
        }
    }

    fn story() -> String {
        "<p>The council met on Tuesday to discuss the new cycling lanes planned for the old town.</p>".repeat(4)
    }

    #[test]
    fn cost_wall() {
        let wall = "<div><p>We noticed you are using an ad blocker. Subscribe or pay to view up to 90% less adverts.</p></div>";
        let p = pair(&story(), &format!("{}{wall}", story()));
        let l = label_response(&p, &ResponseThresholds::default(), &Keywords::default()).unwrap();
        assert_eq!(l.category, ResponseCategory::Cost);
        assert_eq!(l.source, LabelSource::Heuristic);
    }

    #[test]
    fn pay_inside_a_word_is_not_cost() {
        let wall = "<p>Adblock detected. Payment details of our paywall partner.</p>";
        let p = pair(&story(), &format!("{}{wall}", story()));
        let l = label_response(&p, &ResponseThresholds::default(), &Keywords::default()).unwrap();
        assert_eq!(l.category, ResponseCategory::Availability);
    }

    #[test]
    fn collapsed_page_is_invisibility() {
        let p = pair(&story(), "<p>Please disable your adblocker.</p>");
        let l = label_response(&p, &ResponseThresholds::default(), &Keywords::default()).unwrap();
        assert_eq!(l.category, ResponseCategory::Invisibility);
    }

    #[test]
    fn identical_variants_are_none() {
        let p = pair(&story(), &story());
        let l = label_response(&p, &ResponseThresholds::default(), &Keywords::default()).unwrap();
        assert_eq!(l.category, ResponseCategory::None);
    }

    #[test]
    fn non_ok_pair_is_rejected() {
        let p = CapturePair::dead(SiteRecord::new("gone.example", 1, "test").unwrap());
        assert!(label_response(&p, &ResponseThresholds::default(), &Keywords::default()).is_err());
    }

    #[test]
    fn manual_wins() {
        let heuristic = vec![(
            "a.example".to_string(),
            ResponseLabel {
                category: ResponseCategory::Availability,
                evidence: "x".into(),
                source: LabelSource::Heuristic,
            },
        )];
        let manual = read_manual_labels(b"host,category,evidence\na.example,cost,paywall seen\nb.example,I\n").unwrap();
        let merged = merge_labels(heuristic, &manual);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].1.category, ResponseCategory::Cost);
        assert_eq!(merged[0].1.source, LabelSource::Manual);
        assert_eq!(merged[1].1.category, ResponseCategory::Invisibility);
        let csv = String::from_utf8(write_labels(&merged)).unwrap();
        assert!(csv.starts_with("host,category,source,evidence\na.example,Cost,Manual,paywall seen\n"));
    }
}
