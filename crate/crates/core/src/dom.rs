//! Error-tolerant HTML parsing shared by the feature extractor and the
//! element-hiding engine.

use html5ever::driver::ParseOpts;
use html5ever::tendril::TendrilSink;
use html5ever::tree_builder::TreeBuilderOpts;
use scraper::{ElementRef, Html, Node};

/// Parses a full document with scripting disabled, so `<noscript>` content is
/// built as ordinary elements and text instead of one raw text blob.
pub fn parse_document(html: &str) -> Html {
    let opts = ParseOpts {
        tree_builder: TreeBuilderOpts {
            scripting_enabled: false,
            ..Default::default()
        },
        ..Default::default()
    };
    html5ever::driver::parse_document(Html::new_document(), opts).one(html)
}

/// Decodes bytes as UTF-8, replacing invalid sequences.
pub fn parse_bytes(bytes: &[u8]) -> Html {
    parse_document(&String::from_utf8_lossy(bytes))
}

pub fn element_count(doc: &Html) -> usize {
    doc.tree.root().descendants().filter(|n| n.value().is_element()).count()
}

/// Elements whose text never reaches the rendered page.
pub(crate) fn is_invisible_container(name: &str) -> bool {
    matches!(name, "script" | "style" | "template")
}

/// Visible text nodes in document order, trimmed, skipping whitespace-only
/// nodes and anything under `script`, `style` or `template`.
pub fn visible_text_nodes(doc: &Html) -> Vec<String> {
    let mut out = Vec::new();
    for node in doc.tree.root().descendants() {
        let Node::Text(text) = node.value() else {
            continue;
        };
        let hidden = node.ancestors().any(|a| {
            ElementRef::wrap(a).is_some_and(|e| is_invisible_container(e.value().name()))
        });
        if hidden {
            continue;
        }
        let trimmed = text.trim();
        if !trimmed.is_empty() {
            out.push(trimmed.to_string());
        }
    }
    out
}

/// Visible text nodes joined by newlines.
pub fn visible_text(doc: &Html) -> String {
    visible_text_nodes(doc).join("\n")
}
