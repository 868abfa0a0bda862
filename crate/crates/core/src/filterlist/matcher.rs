use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use url::Url;

use super::domain::registrable_domain;
use super::{FilterError, FilterList, FilterRule, RuleKind};

/// Kind of resource a request loads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceType {
    Script,
    Image,
    Frame,
    Other,
}

impl FromStr for ResourceType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "script" => Ok(ResourceType::Script),
            "image" | "img" => Ok(ResourceType::Image),
            "frame" | "subdocument" | "iframe" => Ok(ResourceType::Frame),
            "other" => Ok(ResourceType::Other),
            other => Err(format!("unknown resource type {other:?}")),
        }
    }
}

impl fmt::Display for ResourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResourceType::Script => "script",
            ResourceType::Image => "image",
            ResourceType::Frame => "frame",
            ResourceType::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDecision {
    pub blocked: bool,
    pub deciding_rule: Option<FilterRule>,
}

const TYPE_OPTIONS: [&str; 3] = ["script", "image", "subdocument"];

pub(super) fn is_supported_option(opt: &str) -> bool {
    if opt == "third-party" || TYPE_OPTIONS.contains(&opt) {
        return true;
    }
    match opt.strip_prefix("domain=") {
        Some(d) => !d.is_empty() && !d.contains(['|', '~', '*']),
        None => false,
    }
}

fn is_separator(b: u8) -> bool {
    !(b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b'%'))
}

/// Byte range of the host inside a lowercased absolute URL string.
fn host_span(url: &str) -> (usize, usize) {
    let start = url.find("://").map_or(0, |i| i + 3);
    let rest = &url[start..];
    let authority_end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let authority = &rest[..authority_end];
    let host_start = authority.rfind('@').map_or(0, |i| i + 1);
    let host = &authority[host_start..];
    let host_len = if host.starts_with('[') {
        host.find(']').map_or(host.len(), |i| i + 1)
    } else {
        host.find(':').unwrap_or(host.len())
    };
    (start + host_start, start + host_start + host_len)
}

/// Matches a rule pattern (with `*` and `^`) against `text`, starting at any
/// of `starts`. Simulates the pattern as a set of reachable text offsets.
fn pattern_matches(pattern: &[u8], text: &[u8], starts: &[usize], anchor_end: bool) -> bool {
    let n = text.len();
    let mut states = vec![false; n + 1];
    for &s in starts {
        states[s] = true;
    }
    let mut next = vec![false; n + 1];
    for &p in pattern {
        next.iter_mut().for_each(|x| *x = false);
        match p {
            b'*' => {
                if let Some(first) = states.iter().position(|&x| x) {
                    next[first..].iter_mut().for_each(|x| *x = true);
                }
            }
            b'^' => {
                for j in 0..n {
                    if states[j] && is_separator(text[j]) {
                        next[j + 1] = true;
                    }
                }
                if states[n] {
                    next[n] = true;
                }
            }
            c => {
                for j in 0..n {
                    if states[j] && text[j] == c {
                        next[j + 1] = true;
                    }
                }
            }
        }
        std::mem::swap(&mut states, &mut next);
        if !states.iter().any(|&x| x) {
            return false;
        }
    }
    if anchor_end {
        states[n]
    } else {
        states.iter().any(|&x| x)
    }
}

struct Request<'a> {
    url: &'a str,
    host: String,
    doc_host: String,
    resource_type: ResourceType,
}

fn pattern_hits(rule: &FilterRule, req: &Request<'_>) -> bool {
    let text = req.url.as_bytes();
    let starts: Vec<usize> = if rule.anchored_domain {
        let (hs, he) = host_span(req.url);
        std::iter::once(hs)
            .chain((hs..he).filter(|&i| text[i] == b'.').map(|i| i + 1))
            .collect()
    } else if rule.anchor_start {
        vec![0]
    } else {
        (0..=text.len()).collect()
    };
    pattern_matches(rule.pattern.as_bytes(), text, &starts, rule.anchor_end)
}

fn options_allow(rule: &FilterRule, req: &Request<'_>) -> bool {
    let mut type_constrained = false;
    let mut type_ok = false;
    for opt in &rule.options {
        match opt.as_str() {
            "third-party" => {
                if registrable_domain(&req.host) == registrable_domain(&req.doc_host) {
                    return false;
                }
            }
            t @ ("script" | "image" | "subdocument") => {
                type_constrained = true;
                type_ok |= matches!(
                    (t, req.resource_type),
                    ("script", ResourceType::Script)
                        | ("image", ResourceType::Image)
                        | ("subdocument", ResourceType::Frame)
                );
            }
            other => match other.strip_prefix("domain=") {
                Some(d) if is_supported_option(other) => {
                    let d = d.to_ascii_lowercase();
                    if req.doc_host != d && !req.doc_host.ends_with(&format!(".{d}")) {
                        return false;
                    }
                }
                // Unsupported options make the rule inapplicable.
                _ => return false,
            },
        }
    }
    !type_constrained || type_ok
}

fn rule_matches(rule: &FilterRule, req: &Request<'_>) -> bool {
    // Rules carrying a diagnostic are regex or unsupported-option rules.
    rule.diagnostic.is_none() && options_allow(rule, req) && pattern_hits(rule, req)
}

/// Decides whether a request is blocked: some block rule matches and no
/// exception rule does. Exceptions always win.
pub fn match_url(
    list: &FilterList,
    url: &str,
    doc_host: &str,
    resource_type: ResourceType,
) -> Result<BlockDecision, FilterError> {
    let parsed = Url::parse(url).map_err(|_| FilterError::RelativeUrl(url.to_string()))?;
    let host = parsed
        .host_str()
        .ok_or_else(|| FilterError::RelativeUrl(url.to_string()))?
        .to_ascii_lowercase();
    let lowered = url.to_ascii_lowercase();
    let req = Request {
        url: &lowered,
        host,
        doc_host: doc_host.trim_end_matches('.').to_ascii_lowercase(),
        resource_type,
    };

    let blocking = list
        .rules_of(RuleKind::NetworkBlock)
        .find(|r| rule_matches(r, &req));
    let Some(blocking) = blocking else {
        return Ok(BlockDecision {
            blocked: false,
            deciding_rule: None,
        });
    };
    if let Some(exception) = list
        .rules_of(RuleKind::NetworkException)
        .find(|r| rule_matches(r, &req))
    {
        return Ok(BlockDecision {
            blocked: false,
            deciding_rule: Some(exception.clone()),
        });
    }
    Ok(BlockDecision {
        blocked: true,
        deciding_rule: Some(blocking.clone()),
    })
}
