//! Segmentation of a document into candidate content blocks.

use serde::{Deserialize, Serialize};

use super::dom::{HtmlDocument, NodeId, NodeKind, WalkEvent};
use super::text::{is_skipped, render_text, visible_chars};

/// Elements that are always candidate blocks.
pub const CANDIDATE_TAGS: &[&str] = &[
    "p",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "li",
    "td",
    "blockquote",
    "pre",
    "figcaption",
    "dd",
    "dt",
];

/// Containers that are candidates only when they hold text directly.
pub const CONTAINER_TAGS: &[&str] = &["div", "section", "article"];

/// Tags that mark their whole subtree as boilerplate.
pub const PENALTY_TAGS: &[&str] = &["nav", "header", "footer", "aside", "form"];

/// class/id tokens that mark an element's subtree as boilerplate.
pub const PENALTY_TOKENS: &[&str] = &[
    "nav",
    "menu",
    "footer",
    "header",
    "sidebar",
    "banner",
    "ad",
    "ads",
    "advert",
    "promo",
    "cookie",
    "consent",
    "share",
    "social",
    "comment",
    "related",
    "breadcrumb",
    "widget",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockReason {
    Kept,
    Penalized,
    TooShort,
    TooLinky,
}

impl BlockReason {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockReason::Kept => "kept",
            BlockReason::Penalized => "penalized",
            BlockReason::TooShort => "too_short",
            BlockReason::TooLinky => "too_linky",
        }
    }
}

/// One keep/drop decision unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub tag: String,
    pub text: String,
    pub char_count: usize,
    pub link_char_count: usize,
    /// `link_char_count / max(char_count, 1)`.
    pub link_density: f64,
    pub penalty: bool,
    pub doc_order: usize,
    pub kept: bool,
    pub reason: BlockReason,
}

fn is_candidate(doc: &HtmlDocument, id: NodeId) -> bool {
    let Some(tag) = doc.tag(id) else {
        return false;
    };
    if CANDIDATE_TAGS.contains(&tag) {
        return true;
    }
    CONTAINER_TAGS.contains(&tag)
        && doc.children(id).iter().any(|&c| {
            doc.text(c)
                .is_some_and(|t| t.chars().any(|ch| !ch.is_whitespace()))
        })
}

/// Splits a class or id value on `-`, `_` and whitespace.
pub fn attribute_tokens(value: &str) -> impl Iterator<Item = String> + '_ {
    value
        .split(|c: char| c == '-' || c == '_' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

fn marks_boilerplate(doc: &HtmlDocument, id: NodeId) -> bool {
    let Some(tag) = doc.tag(id) else {
        return false;
    };
    if PENALTY_TAGS.contains(&tag) {
        return true;
    }
    ["class", "id"].iter().any(|attr| {
        doc.attr(id, attr)
            .is_some_and(|v| attribute_tokens(v).any(|t| PENALTY_TOKENS.contains(&t.as_str())))
    })
}

/// True if the element or any ancestor is blacklisted by tag or class/id.
pub fn is_penalized(doc: &HtmlDocument, id: NodeId) -> bool {
    std::iter::once(id)
        .chain(doc.ancestors(id))
        .any(|n| marks_boilerplate(doc, n))
}

/// Non-whitespace characters of the subtree that sit inside `<a>` elements
/// below `id`.
fn link_chars(doc: &HtmlDocument, id: NodeId) -> usize {
    let mut anchor_depth = 0usize;
    let mut count = 0;
    for ev in doc.walk(id, is_skipped) {
        match ev {
            WalkEvent::Enter(n) => match doc.kind(n) {
                NodeKind::Element { name, .. } if name == "a" && n != id => anchor_depth += 1,
                NodeKind::Text(t) if anchor_depth > 0 => count += visible_chars(t),
                _ => {}
            },
            WalkEvent::Exit(n) => {
                if n != id && doc.tag(n) == Some("a") {
                    anchor_depth -= 1;
                }
            }
        }
    }
    count
}

/// Candidate blocks in document order. Candidates nested inside an already
/// collected candidate are not collected again, and candidates without any
/// visible text are skipped. Blocks come back unclassified
/// (`kept = false`, `reason = TooShort`) until [`super::classify_block`] runs.
pub fn segment_blocks(doc: &HtmlDocument) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut stack = vec![doc.root()];
    while let Some(id) = stack.pop() {
        if is_skipped(doc, id) {
            continue;
        }
        if is_candidate(doc, id) {
            let text = render_text(doc, id);
            if text.is_empty() {
                continue;
            }
            let char_count = visible_chars(&text);
            let link_char_count = link_chars(doc, id);
            blocks.push(Block {
                tag: doc.tag(id).unwrap_or_default().to_string(),
                char_count,
                link_char_count,
                link_density: link_char_count as f64 / char_count.max(1) as f64,
                penalty: is_penalized(doc, id),
                doc_order: blocks.len(),
                kept: false,
                reason: BlockReason::TooShort,
                text,
            });
            continue;
        }
        stack.extend(doc.children(id).iter().rev().copied());
    }
    blocks
}
