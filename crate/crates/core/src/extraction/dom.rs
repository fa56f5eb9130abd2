//! Owned, arena-backed HTML tree.
//!
//! Parsing goes through html5ever's tree builder (via `scraper`), which
//! recovers from any malformed input the way browsers do. The parsed tree is
//! copied into plain owned nodes so a document can be shared across threads.

use std::sync::OnceLock;

use encoding_rs::{Encoding, UTF_16BE, UTF_16LE, UTF_8, WINDOWS_1252, X_USER_DEFINED};
use regex::bytes::Regex;
use scraper::Html;

/// How many leading bytes are searched for a `<meta>` charset declaration.
pub const CHARSET_SNIFF_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Document,
    Element {
        name: String,
        attrs: Vec<(String, String)>,
    },
    Text(String),
    Comment(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NodeData {
    kind: NodeKind,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
}

/// A parsed HTML document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HtmlDocument {
    nodes: Vec<NodeData>,
    source_charset: &'static str,
}

/// Parses HTML bytes. Never fails.
///
/// A byte-order mark decides the encoding outright. Failing that it is
/// chosen from `charset_hint` if it names a known encoding, otherwise from
/// a `<meta>` declaration within the first [`CHARSET_SNIFF_LIMIT`] bytes,
/// otherwise UTF-8. Undecodable sequences become U+FFFD.
pub fn parse_document(bytes: &[u8], charset_hint: Option<&str>) -> HtmlDocument {
    let encoding = Encoding::for_bom(bytes)
        .map(|(enc, _)| enc)
        .or_else(|| charset_hint.and_then(|label| Encoding::for_label(label.trim().as_bytes())))
        .or_else(|| sniff_meta_charset(bytes))
        .unwrap_or(UTF_8);
    let (text, _) = encoding.decode_with_bom_removal(bytes);
    let mut doc = HtmlDocument::parse_str(&text);
    doc.source_charset = encoding.name();
    doc
}

/// Looks for `<meta charset=..>` or `<meta http-equiv content="..; charset=..">`
/// in the sniffing window.
pub fn sniff_meta_charset(bytes: &[u8]) -> Option<&'static Encoding> {
    let window = &bytes[..bytes.len().min(CHARSET_SNIFF_LIMIT)];
    let caps = meta_charset().captures(window)?;
    let encoding = Encoding::for_label(caps.get(1)?.as_bytes())?;
    // A meta tag can't truthfully declare UTF-16 since the tag itself was
    // readable as ASCII.
    Some(if encoding == UTF_16LE || encoding == UTF_16BE {
        UTF_8
    } else if encoding == X_USER_DEFINED {
        WINDOWS_1252
    } else {
        encoding
    })
}

fn meta_charset() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?i-u)<meta\b[^>]*?charset\s*=\s*["']?\s*([a-z0-9_\-:.]+)"#).unwrap()
    })
}

impl HtmlDocument {
    /// Parses already-decoded markup.
    pub fn parse_str(markup: &str) -> Self {
        let html = Html::parse_document(markup);
        let mut nodes = vec![NodeData {
            kind: NodeKind::Document,
            parent: None,
            children: Vec::new(),
        }];
        // ego_tree traversal is iterative, so arbitrarily deep nesting is safe.
        let mut stack: Vec<NodeId> = Vec::new();
        for edge in html.tree.root().traverse() {
            match edge {
                ego_tree::iter::Edge::Open(node) => {
                    let kind = match node.value() {
                        scraper::Node::Element(el) => NodeKind::Element {
                            name: el.name().to_ascii_lowercase(),
                            attrs: el
                                .attrs()
                                .map(|(k, v)| (k.to_ascii_lowercase(), v.to_string()))
                                .collect(),
                        },
                        scraper::Node::Text(t) => NodeKind::Text(t.text.to_string()),
                        scraper::Node::Comment(c) => NodeKind::Comment(c.comment.to_string()),
                        // Doctype, processing instructions, fragments: not content.
                        _ => {
                            stack.push(NodeId(usize::MAX));
                            continue;
                        }
                    };
                    let parent = stack
                        .iter()
                        .rev()
                        .copied()
                        .find(|id| id.0 != usize::MAX)
                        .unwrap_or(NodeId(0));
                    let id = NodeId(nodes.len());
                    nodes.push(NodeData {
                        kind,
                        parent: Some(parent),
                        children: Vec::new(),
                    });
                    nodes[parent.0].children.push(id);
                    stack.push(id);
                }
                ego_tree::iter::Edge::Close(_) => {
                    stack.pop();
                }
            }
        }
        HtmlDocument {
            nodes,
            source_charset: UTF_8.name(),
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    /// Name of the encoding the bytes were decoded with.
    pub fn source_charset(&self) -> &'static str {
        self.source_charset
    }

    pub fn kind(&self, id: NodeId) -> &NodeKind {
        &self.nodes[id.0].kind
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].children
    }

    /// Lowercase tag name, or `None` for non-element nodes.
    pub fn tag(&self, id: NodeId) -> Option<&str> {
        match &self.nodes[id.0].kind {
            NodeKind::Element { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn attr(&self, id: NodeId, attr: &str) -> Option<&str> {
        match &self.nodes[id.0].kind {
            NodeKind::Element { attrs, .. } => attrs
                .iter()
                .find(|(k, _)| k == attr)
                .map(|(_, v)| v.as_str()),
            _ => None,
        }
    }

    pub fn text(&self, id: NodeId) -> Option<&str> {
        match &self.nodes[id.0].kind {
            NodeKind::Text(t) => Some(t),
            _ => None,
        }
    }

    /// Strict ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent(id), move |&p| self.parent(p))
    }

    /// All elements with the given tag, in document order.
    pub fn elements_named<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = NodeId> + 'a {
        self.descendants(self.root())
            .filter(move |&id| self.tag(id) == Some(tag))
    }

    /// Pre-order traversal of the subtree rooted at `id`, including `id`.
    pub fn descendants(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let mut stack = vec![id];
        std::iter::from_fn(move || {
            let next = stack.pop()?;
            stack.extend(self.children(next).iter().rev().copied());
            Some(next)
        })
    }

    /// Enter/exit events for the subtree at `id`. Subtrees for which `skip`
    /// returns true produce no events at all.
    pub(crate) fn walk<'a>(
        &'a self,
        id: NodeId,
        skip: impl Fn(&HtmlDocument, NodeId) -> bool + 'a,
    ) -> impl Iterator<Item = WalkEvent> + 'a {
        let mut stack = vec![(id, false)];
        std::iter::from_fn(move || loop {
            let (node, exiting) = stack.pop()?;
            if exiting {
                return Some(WalkEvent::Exit(node));
            }
            if skip(self, node) {
                continue;
            }
            stack.push((node, true));
            stack.extend(self.children(node).iter().rev().map(|&c| (c, false)));
            return Some(WalkEvent::Enter(node));
        })
    }

    /// Debug-friendly serialization of the tree, e.g. `p(b("nested"))`.
    pub fn outline(&self, id: NodeId) -> String {
        let mut out = String::new();
        for ev in self.walk(id, |_, _| false) {
            match ev {
                WalkEvent::Enter(n) => {
                    if !out.is_empty() && !out.ends_with('(') {
                        out.push(' ');
                    }
                    match self.kind(n) {
                        NodeKind::Document => out.push_str("#document("),
                        NodeKind::Element { name, .. } => {
                            out.push_str(name);
                            out.push('(');
                        }
                        NodeKind::Text(t) => out.push_str(&format!("{t:?}")),
                        NodeKind::Comment(_) => out.push_str("#comment"),
                    }
                }
                WalkEvent::Exit(n) => {
                    if matches!(self.kind(n), NodeKind::Document | NodeKind::Element { .. }) {
                        out.push(')');
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WalkEvent {
    Enter(NodeId),
    Exit(NodeId),
}
