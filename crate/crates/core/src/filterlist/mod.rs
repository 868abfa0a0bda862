//! Adblock-Plus filter lists: parsing, anti-adblock section removal, network
//! request matching and element hiding.

mod domain;
mod hiding;
mod matcher;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use domain::registrable_domain;
pub use hiding::{
    apply_element_hiding, simulate_blocking, HidingOutcome, SimpleSelector, SelectorError,
};
pub use matcher::{match_url, BlockDecision, ResourceType};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("not an absolute URL: {0:?}")]
    RelativeUrl(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    NetworkBlock,
    NetworkException,
    ElementHide,
    Comment,
}

/// One line of a filter list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRule {
    pub kind: RuleKind,
    /// Rule text with kind markers (`@@`, anchors, options) removed. For
    /// comments this is the text after `!`.
    pub pattern: String,
    pub anchored_domain: bool,
    pub anchor_start: bool,
    pub anchor_end: bool,
    pub options: BTreeSet<String>,
    /// CSS selector of an element-hiding rule.
    pub selector: String,
    /// Domains an element-hiding rule is restricted to (`a.com,b.com##...`).
    pub hide_domains: Vec<String>,
    /// 1-based line number in the source text.
    pub source_line: usize,
    /// Why the line could not be used, when it was demoted or is inert.
    pub diagnostic: Option<String>,
}

impl FilterRule {
    fn blank(kind: RuleKind, source_line: usize) -> Self {
        FilterRule {
            kind,
            pattern: String::new(),
            anchored_domain: false,
            anchor_start: false,
            anchor_end: false,
            options: BTreeSet::new(),
            selector: String::new(),
            hide_domains: Vec::new(),
            source_line,
            diagnostic: None,
        }
    }

    /// Parses a single non-empty line.
    pub fn parse(line: &str, source_line: usize) -> FilterRule {
        let line = line.trim();
        if let Some(text) = line.strip_prefix('!') {
            let mut rule = FilterRule::blank(RuleKind::Comment, source_line);
            rule.pattern = text.trim().to_string();
            return rule;
        }
        if line.starts_with('[') && line.ends_with(']') {
            let mut rule = FilterRule::blank(RuleKind::Comment, source_line);
            rule.pattern = line.to_string();
            rule.diagnostic = Some("list header".into());
            return rule;
        }
        for marker in ["#@#", "#$#", "#?#", "#%#"] {
            if line.contains(marker) {
                let mut rule = FilterRule::blank(RuleKind::Comment, source_line);
                rule.pattern = line.to_string();
                rule.diagnostic = Some(format!("unsupported cosmetic rule type {marker}"));
                return rule;
            }
        }
        if let Some((domains, selector)) = line.split_once("##") {
            return parse_hiding_rule(domains, selector, source_line);
        }
        parse_network_rule(line, source_line)
    }

    /// Option tokens outside the supported subset make a network rule inert.
    pub fn unsupported_options(&self) -> Vec<&str> {
        self.options
            .iter()
            .map(String::as_str)
            .filter(|o| !matcher::is_supported_option(o))
            .collect()
    }
}

impl fmt::Display for FilterRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RuleKind::Comment => write!(f, "!{}", self.pattern),
            RuleKind::ElementHide => write!(f, "{}##{}", self.hide_domains.join(","), self.selector),
            RuleKind::NetworkBlock | RuleKind::NetworkException => {
                if self.kind == RuleKind::NetworkException {
                    f.write_str("@@")?;
                }
                if self.anchored_domain {
                    f.write_str("||")?;
                } else if self.anchor_start {
                    f.write_str("|")?;
                }
                f.write_str(&self.pattern)?;
                if self.anchor_end {
                    f.write_str("|")?;
                }
                if !self.options.is_empty() {
                    let opts: Vec<&str> = self.options.iter().map(String::as_str).collect();
                    write!(f, "${}", opts.join(","))?;
                }
                Ok(())
            }
        }
    }
}

fn parse_hiding_rule(domains: &str, selector: &str, source_line: usize) -> FilterRule {
    let mut rule = FilterRule::blank(RuleKind::ElementHide, source_line);
    rule.selector = selector.trim().to_string();
    rule.pattern = rule.selector.clone();
    rule.hide_domains = domains
        .split(',')
        .map(|d| d.trim().to_ascii_lowercase())
        .filter(|d| !d.is_empty())
        .collect();
    if let Err(e) = SimpleSelector::parse_list(&rule.selector) {
        rule.diagnostic = Some(format!("unsupported selector: {e}"));
    } else if rule.hide_domains.iter().any(|d| d.starts_with('~')) {
        rule.diagnostic = Some("negated hiding domains are not supported".into());
    }
    rule
}

fn looks_like_options(s: &str) -> bool {
    !s.is_empty()
        && s.split(',').all(|opt| {
            !opt.is_empty()
                && opt
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_~=|.*".contains(c))
        })
}

fn parse_network_rule(line: &str, source_line: usize) -> FilterRule {
    let (kind, mut body) = match line.strip_prefix("@@") {
        Some(rest) => (RuleKind::NetworkException, rest),
        None => (RuleKind::NetworkBlock, line),
    };
    let mut rule = FilterRule::blank(kind, source_line);

    if let Some(idx) = body.rfind('$') {
        let opts = &body[idx + 1..];
        if looks_like_options(opts) {
            rule.options = opts.split(',').map(|o| o.to_ascii_lowercase()).collect();
            body = &body[..idx];
        }
    }
    if body.len() > 1 && body.starts_with('/') && body.ends_with('/') {
        rule.pattern = body.to_string();
        rule.diagnostic = Some("regular-expression rules are not supported".into());
        return rule;
    }
    if let Some(rest) = body.strip_prefix("||") {
        rule.anchored_domain = true;
        body = rest;
    } else if let Some(rest) = body.strip_prefix('|') {
        rule.anchor_start = true;
        body = rest;
    }
    if let Some(rest) = body.strip_suffix('|') {
        rule.anchor_end = true;
        body = rest;
    }
    rule.pattern = body.to_ascii_lowercase();

    let unsupported = rule.unsupported_options();
    if !unsupported.is_empty() {
        rule.diagnostic = Some(format!(
            "inapplicable: unsupported options {}",
            unsupported.join(",")
        ));
    }
    rule
}

/// A `!---`-style banner comment and the span of lines it heads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub title: String,
    pub start_line: usize,
    pub end_line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterList {
    pub rules: Vec<FilterRule>,
    pub sections: Vec<Section>,
}

/// Title of a banner comment such as `!--- Anti-Adblock ---!`.
fn banner_title(comment: &str) -> Option<String> {
    let inner = comment.strip_prefix("---")?;
    let title = inner.trim_end_matches('!').trim_matches('-').trim();
    Some(title.to_string())
}

pub fn is_antiadblock_marker(text: &str) -> bool {
    let lower = text.to_lowercase();
    ["anti adblock", "anti-adblock", "anti ad-block"]
        .iter()
        .any(|m| lower.contains(m))
}

impl FilterList {
    pub fn parse(text: &str) -> FilterList {
        parse_filter_list(text)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules_of(&self, kind: RuleKind) -> impl Iterator<Item = &FilterRule> {
        self.rules.iter().filter(move |r| r.kind == kind)
    }

    /// Rules paired with a human-readable note on why they are inert.
    pub fn diagnostics(&self) -> impl Iterator<Item = (&FilterRule, &str)> {
        self.rules
            .iter()
            .filter_map(|r| r.diagnostic.as_deref().map(|d| (r, d)))
    }
}

/// Parses list text. Every non-empty line becomes exactly one rule.
pub fn parse_filter_list(text: &str) -> FilterList {
    let mut rules = Vec::new();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        last_line = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        rules.push(FilterRule::parse(line, i + 1));
    }

    let mut sections: Vec<Section> = Vec::new();
    for rule in &rules {
        if rule.kind != RuleKind::Comment {
            continue;
        }
        if let Some(title) = banner_title(&rule.pattern) {
            if let Some(open) = sections.last_mut() {
                open.end_line = rule.source_line - 1;
            }
            sections.push(Section {
                title,
                start_line: rule.source_line,
                end_line: last_line,
            });
        }
    }
    FilterList { rules, sections }
}

/// Removes the rules of every anti-adblock section, plus the rules directly
/// following a standalone anti-adblock comment up to the next comment.
/// Comment lines themselves are kept.
pub fn strip_antiadblock(list: &FilterList) -> FilterList {
    let marked: Vec<&Section> = list
        .sections
        .iter()
        .filter(|s| is_antiadblock_marker(&s.title))
        .collect();
    let mut in_marked_run = false;
    let mut rules = Vec::with_capacity(list.rules.len());
    for rule in &list.rules {
        if rule.kind == RuleKind::Comment {
            in_marked_run = banner_title(&rule.pattern).is_none()
                && is_antiadblock_marker(&rule.pattern);
            rules.push(rule.clone());
            continue;
        }
        let in_section = marked
            .iter()
            .any(|s| (s.start_line..=s.end_line).contains(&rule.source_line));
        if !in_section && !in_marked_run {
            rules.push(rule.clone());
        }
    }
    FilterList {
        rules,
        sections: list.sections.clone(),
    }
}
