use std::collections::HashSet;

use ego_tree::NodeId;
use scraper::node::Element;
use scraper::Html;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use super::matcher::{match_url, ResourceType};
use super::{FilterList, RuleKind};
use crate::dom;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectorError {
    #[error("empty selector")]
    Empty,
    #[error("unsupported syntax {0:?}")]
    Unsupported(char),
    #[error("missing name after {0:?}")]
    MissingName(char),
}

/// A compound selector of the supported subset: optional tag name plus any
/// number of `.class` and `#id` parts, e.g. `div.ad#top`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimpleSelector {
    pub tag: Option<String>,
    pub classes: Vec<String>,
    pub ids: Vec<String>,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '_'
}

impl SimpleSelector {
    pub fn parse(text: &str) -> Result<SimpleSelector, SelectorError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(SelectorError::Empty);
        }
        let mut sel = SimpleSelector::default();
        let mut chars = text.chars().peekable();
        let take_ident = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                s.push(c);
                chars.next();
            }
            s
        };
        if chars.peek().is_some_and(|c| is_ident_char(*c) || *c == '*') {
            if chars.peek() == Some(&'*') {
                chars.next();
            } else {
                sel.tag = Some(take_ident(&mut chars).to_ascii_lowercase());
            }
        }
        while let Some(c) = chars.next() {
            let name = match c {
                '.' | '#' => take_ident(&mut chars),
                other => return Err(SelectorError::Unsupported(other)),
            };
            if name.is_empty() {
                return Err(SelectorError::MissingName(c));
            }
            if c == '.' {
                sel.classes.push(name);
            } else {
                sel.ids.push(name);
            }
        }
        Ok(sel)
    }

    /// Parses a comma-separated selector group.
    pub fn parse_list(text: &str) -> Result<Vec<SimpleSelector>, SelectorError> {
        text.split(',').map(SimpleSelector::parse).collect()
    }

    pub fn matches(&self, element: &Element) -> bool {
        if let Some(tag) = &self.tag {
            if element.name() != tag {
                return false;
            }
        }
        if !self.ids.iter().all(|id| element.id() == Some(id.as_str())) {
            return false;
        }
        self.classes
            .iter()
            .all(|c| element.classes().any(|have| have == c))
    }
}

/// Serialized document after filtering, with removal counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HidingOutcome {
    pub html: String,
    /// Subtrees removed by element-hiding rules.
    pub hidden: usize,
    /// `script`/`img`/`iframe` elements removed because their source is blocked.
    pub blocked_resources: usize,
}

fn hiding_selectors(list: &FilterList, doc_host: Option<&str>) -> Vec<SimpleSelector> {
    let doc_host = doc_host.map(str::to_ascii_lowercase);
    list.rules_of(RuleKind::ElementHide)
        .filter(|r| r.diagnostic.is_none())
        .filter(|r| {
            r.hide_domains.is_empty()
                || doc_host.as_deref().is_some_and(|h| {
                    r.hide_domains
                        .iter()
                        .any(|d| h == d || h.ends_with(&format!(".{d}")))
                })
        })
        .filter_map(|r| SimpleSelector::parse_list(&r.selector).ok())
        .flatten()
        .collect()
}

/// Detaches the given nodes, skipping any already inside a removed subtree.
/// Returns the number of subtrees removed.
fn remove_subtrees(doc: &mut Html, targets: Vec<NodeId>) -> usize {
    let target_set: HashSet<NodeId> = targets.iter().copied().collect();
    let mut removed = 0;
    for id in targets {
        let Some(node) = doc.tree.get(id) else {
            continue;
        };
        if node.ancestors().any(|a| target_set.contains(&a.id())) {
            continue;
        }
        if let Some(mut node) = doc.tree.get_mut(id) {
            node.detach();
            removed += 1;
        }
    }
    removed
}

fn hide_in_document(doc: &mut Html, selectors: &[SimpleSelector]) -> usize {
    if selectors.is_empty() {
        return 0;
    }
    let targets: Vec<NodeId> = doc
        .tree
        .root()
        .descendants()
        .filter(|n| {
            n.value()
                .as_element()
                .is_some_and(|e| selectors.iter().any(|s| s.matches(e)))
        })
        .map(|n| n.id())
        .collect();
    remove_subtrees(doc, targets)
}

/// Removes every element matched by a generic element-hiding rule, along
/// with its subtree, and re-serializes the document.
pub fn apply_element_hiding(html: &str, list: &FilterList) -> HidingOutcome {
    let mut doc = dom::parse_document(html);
    let hidden = hide_in_document(&mut doc, &hiding_selectors(list, None));
    HidingOutcome {
        html: doc.html(),
        hidden,
        blocked_resources: 0,
    }
}

fn resource_type_of(tag: &str) -> Option<ResourceType> {
    match tag {
        "script" => Some(ResourceType::Script),
        "img" => Some(ResourceType::Image),
        "iframe" => Some(ResourceType::Frame),
        _ => None,
    }
}

/// Offline stand-in for a browser with an ad blocker: applies element hiding
/// (generic rules and rules for the page's host), then drops `script`, `img`
/// and `iframe` elements whose resolved `src` the list blocks. No script is
/// executed.
pub fn simulate_blocking(html: &str, base_url: &str, list: &FilterList) -> HidingOutcome {
    let base = Url::parse(base_url).ok();
    let doc_host = base
        .as_ref()
        .and_then(|u| u.host_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();

    let mut doc = dom::parse_document(html);
    let selectors = hiding_selectors(list, Some(&doc_host));
    let hidden = hide_in_document(&mut doc, &selectors);

    let targets: Vec<NodeId> = doc
        .tree
        .root()
        .descendants()
        .filter(|n| {
            let Some(element) = n.value().as_element() else {
                return false;
            };
            let Some(kind) = resource_type_of(element.name()) else {
                return false;
            };
            let Some(src) = element.attr("src").map(str::trim).filter(|s| !s.is_empty()) else {
                return false;
            };
            let resolved = match &base {
                Some(b) => b.join(src).ok(),
                None => Url::parse(src).ok(),
            };
            resolved.is_some_and(|u| {
                match_url(list, u.as_str(), &doc_host, kind).is_ok_and(|d| d.blocked)
            })
        })
        .map(|n| n.id())
        .collect();
    let blocked_resources = remove_subtrees(&mut doc, targets);

    HidingOutcome {
        html: doc.html(),
        hidden,
        blocked_resources,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterlist::parse_filter_list;

    fn canonical(html: &str) -> String {
        dom::parse_document(html).html()
    }

    #[test]
    fn selector_subset() {
        let s = SimpleSelector::parse("div.ad.wide#top").unwrap();
        assert_eq!(s.tag.as_deref(), Some("div"));
        assert_eq!(s.classes, ["ad", "wide"]);
        assert_eq!(s.ids, ["top"]);
        assert_eq!(SimpleSelector::parse("*.x").unwrap().tag, None);
        assert_eq!(SimpleSelector::parse("a[href]"), Err(SelectorError::Unsupported('[')));
        assert_eq!(SimpleSelector::parse(".a > .b"), Err(SelectorError::Unsupported(' ')));
        assert_eq!(SimpleSelector::parse("div."), Err(SelectorError::MissingName('.')));
        assert_eq!(SimpleSelector::parse_list(".a, #b").unwrap().len(), 2);
    }

    #[test]
    fn hides_matching_subtrees() {
        let page = r#"<body><div class="ad-banner"><img src="a.png"><p>buy</p></div>
            <p>story</p><div class="x ad-banner"><span>more</span></div></body>"#;
        let out = apply_element_hiding(page, &parse_filter_list("##.ad-banner"));
        assert_eq!(out.hidden, 2);
        assert!(!out.html.contains("ad-banner"));
        assert!(!out.html.contains("buy") && !out.html.contains("more"));
        assert!(out.html.contains("<p>story</p>"));
    }

    #[test]
    fn nested_matches_count_once() {
        let page = r#"<div class="ad"><div class="ad">x</div></div>"#;
        let out = apply_element_hiding(page, &parse_filter_list("##.ad"));
        assert_eq!(out.hidden, 1);
    }

    #[test]
    fn empty_list_is_identity() {
        let page = "<html><body><div id=a><p>t</p></div></body></html>";
        let out = apply_element_hiding(page, &FilterList::default());
        assert_eq!(out.html, canonical(page));
        assert_eq!(out.hidden, 0);
    }

    #[test]
    fn unsupported_selectors_match_nothing() {
        let list = parse_filter_list("##a[href^=\"http://ads.\"]\n##.content > .ad");
        assert_eq!(list.diagnostics().count(), 2);
        let page = r#"<div class="content"><a href="http://ads.x/" class="ad">x</a></div>"#;
        assert_eq!(apply_element_hiding(page, &list).hidden, 0);
    }

    #[test]
    fn domain_specific_hiding_needs_host() {
        let list = parse_filter_list("news.example##.promo");
        let page = r#"<div class="promo">p</div>"#;
        assert_eq!(apply_element_hiding(page, &list).hidden, 0);
        assert_eq!(simulate_blocking(page, "http://www.news.example/", &list).hidden, 1);
        assert_eq!(simulate_blocking(page, "http://other.example/", &list).hidden, 0);
    }

    #[test]
    fn blocks_resources_by_src() {
        let list = parse_filter_list("||ads.example.com^\n/ads/*.gif");
        let page = r#"<body><script src="http://ads.example.com/a.js"></script>
            <img src="/ads/x.gif"><img src="/logo.png"><iframe src="//ads.example.com/f"></iframe>
            <script>inline()</script></body>"#;
        let out = simulate_blocking(page, "http://site.example/", &list);
        assert_eq!(out.blocked_resources, 3);
        assert!(!out.html.contains("ads.example.com"));
        assert!(!out.html.contains("x.gif"));
        assert!(out.html.contains("logo.png") && out.html.contains("inline()"));
    }

    #[test]
    fn no_matches_is_identity() {
        let list = parse_filter_list("||ads.example.com^\n##.ad");
        let page = r#"<body><script src="/app.js"></script><p class="story">x</p></body>"#;
        assert_eq!(simulate_blocking(page, "http://s.example/", &list).html, canonical(page));
    }
}
