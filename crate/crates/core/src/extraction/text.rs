//! Markup-free text rendering and whitespace normalization.

use super::dom::{HtmlDocument, NodeId, NodeKind, WalkEvent};

/// Elements whose entire subtree is invisible text-wise.
pub const SKIPPED_TAGS: &[&str] = &["script", "style", "noscript", "template", "iframe", "svg"];

/// Elements that start and end on their own line.
pub const BLOCK_LEVEL_TAGS: &[&str] = &[
    "p",
    "div",
    "li",
    "ul",
    "ol",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "td",
    "tr",
    "table",
    "blockquote",
    "pre",
    "br",
    "article",
    "section",
    "header",
    "footer",
    "nav",
    "aside",
    "figure",
    "figcaption",
    "dd",
    "dt",
    "dl",
];

pub(crate) fn is_skipped(doc: &HtmlDocument, id: NodeId) -> bool {
    match doc.kind(id) {
        NodeKind::Comment(_) => true,
        NodeKind::Element { name, .. } => SKIPPED_TAGS.contains(&name.as_str()),
        _ => false,
    }
}

fn is_block_level(tag: &str) -> bool {
    BLOCK_LEVEL_TAGS.contains(&tag)
}

/// Text of the whole document with all markup removed.
pub fn extract_raw_text(doc: &HtmlDocument) -> String {
    render_text(doc, doc.root())
}

/// Text of the subtree at `id`, following the same rules as
/// [`extract_raw_text`].
pub fn render_text(doc: &HtmlDocument, id: NodeId) -> String {
    let mut sink = TextSink::default();
    let mut pre_depth = 0usize;
    for ev in doc.walk(id, is_skipped) {
        match ev {
            WalkEvent::Enter(n) => match doc.kind(n) {
                NodeKind::Text(t) => sink.push_text(t, pre_depth > 0),
                NodeKind::Element { name, .. } => {
                    if name == "br" {
                        sink.hard_break();
                    } else if is_block_level(name) {
                        sink.soft_break();
                    }
                    if name == "pre" {
                        pre_depth += 1;
                    }
                }
                _ => {}
            },
            WalkEvent::Exit(n) => {
                if let Some(name) = doc.tag(n) {
                    if name == "pre" {
                        pre_depth -= 1;
                    }
                    if name != "br" && is_block_level(name) {
                        sink.soft_break();
                    }
                }
            }
        }
    }
    sink.finish()
}

/// Accumulates text and line breaks before final normalization.
#[derive(Debug, Default)]
struct TextSink {
    buf: String,
}

impl TextSink {
    fn push_text(&mut self, text: &str, preformatted: bool) {
        for c in text.chars() {
            if preformatted && c == '\n' {
                self.buf.push('\n');
            } else if c.is_whitespace() {
                if !self.buf.ends_with(' ') {
                    self.buf.push(' ');
                }
            } else {
                self.buf.push(c);
            }
        }
    }

    /// Ends the current line unless it holds nothing visible yet.
    fn soft_break(&mut self) {
        let line = self.buf.rsplit('\n').next().unwrap_or("");
        if line.chars().any(|c| !c.is_whitespace()) {
            self.buf.push('\n');
        }
    }

    fn hard_break(&mut self) {
        self.buf.push('\n');
    }

    fn finish(self) -> String {
        normalize_whitespace(&self.buf)
    }
}

/// Collapses whitespace runs within each line to one space, trims every
/// line, collapses runs of blank lines to a single blank line and trims the
/// whole text. Idempotent.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_blank = false;
    for raw_line in text.split('\n') {
        let line = collapse_line(raw_line);
        if line.is_empty() {
            pending_blank = !out.is_empty();
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
            if pending_blank {
                out.push('\n');
            }
        }
        pending_blank = false;
        out.push_str(&line);
    }
    out
}

fn collapse_line(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    for word in line.split(char::is_whitespace).filter(|w| !w.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Number of non-whitespace characters.
pub fn visible_chars(text: &str) -> usize {
    text.chars().filter(|c| !c.is_whitespace()).count()
}
