use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use scraper::{Html, Selector};

use super::{normalize_host, IngestError, SiteRecord};

pub const POSITIVE_CANDIDATE_TAG: &str = "positive-candidate";

// Generic TLDs accepted as domain endings. Two-letter endings are treated as
// country codes unless they collide with a common file extension.
const GENERIC_TLDS: &[&str] = &[
    "com", "net", "org", "info", "biz", "edu", "gov", "io", "tv", "news", "online", "site",
    "club", "xyz", "blog", "media", "live", "today", "world", "top", "app", "dev", "moe",
];
const FILE_EXTENSIONS: &[&str] = &["js", "md", "py", "rb", "sh", "ts", "cs", "rs", "go", "pl", "gz"];

fn domain_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(r"(?i)(?:[a-z0-9](?:[a-z0-9-]{0,61}[a-z0-9])?\.)+[a-z]{2,24}").unwrap()
    })
}

fn title_selector() -> &'static Selector {
    static SELECTOR: OnceLock<Selector> = OnceLock::new();
    SELECTOR.get_or_init(|| {
        Selector::parse("a.issue-title, a.js-navigation-open, a[id^=\"issue_\"], [data-issue-title]")
            .unwrap()
    })
}

/// Returns every domain-shaped token in `title`, lowercased.
fn domains_in(title: &str) -> Vec<String> {
    let bytes = title.as_bytes();
    let mut out = Vec::new();
    for m in domain_pattern().find_iter(title) {
        // Reject tokens glued to surrounding word characters, emails and paths.
        let before = m.start().checked_sub(1).map(|i| bytes[i]);
        let after = bytes.get(m.end()).copied();
        if before.is_some_and(|b| b.is_ascii_alphanumeric() || b == b'@' || b == b'/' || b == b'.') {
            continue;
        }
        if after.is_some_and(|b| b.is_ascii_alphanumeric() || b == b'@' || b == b'_') {
            continue;
        }
        let token = m.as_str().to_ascii_lowercase();
        let tld = token.rsplit('.').next().unwrap_or_default();
        let accepted = if tld.len() == 2 {
            !FILE_EXTENSIONS.contains(&tld)
        } else {
            GENERIC_TLDS.contains(&tld)
        };
        if accepted {
            out.push(token);
        }
    }
    out
}

/// Scans a saved issue-tracker listing page for candidate positive sites.
///
/// Issue titles are taken from `a.issue-title`, `a.js-navigation-open`,
/// `a[id^=issue_]` or any element carrying `data-issue-title`. Every
/// domain-shaped token yields one candidate; candidates still need manual
/// confirmation before they are used as positive labels.
pub fn parse_issue_corpus(html: &[u8]) -> Result<Vec<SiteRecord>, IngestError> {
    let text = String::from_utf8_lossy(html);
    let doc = Html::parse_document(&text);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for element in doc.select(title_selector()) {
        let title = match element.value().attr("data-issue-title") {
            Some(t) => t.to_string(),
            None => element.text().collect::<String>(),
        };
        for domain in domains_in(&title) {
            if !seen.insert(normalize_host(&domain)) {
                continue;
            }
            let rank = out.len() as u32 + 1;
            let record = SiteRecord::new(&domain, rank, POSITIVE_CANDIDATE_TAG)?
                .with_title(title.trim());
            out.push(record);
        }
    }
    Ok(out)
}
