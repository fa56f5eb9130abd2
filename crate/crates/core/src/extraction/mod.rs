//! Raw and cleaned text views of scraped HTML.
//!
//! The raw view keeps every visible text node. The cleaned view keeps only
//! the candidate blocks that survive a length / link-density / blacklist
//! heuristic, which drops navigation, footers, ads and similar boilerplate.

mod blocks;
mod dom;
mod text;

use serde::{Deserialize, Serialize};

pub use blocks::{
    attribute_tokens, is_penalized, segment_blocks, Block, BlockReason, CANDIDATE_TAGS,
    CONTAINER_TAGS, PENALTY_TAGS, PENALTY_TOKENS,
};
pub use dom::{
    parse_document, sniff_meta_charset, HtmlDocument, NodeId, NodeKind, CHARSET_SNIFF_LIMIT,
};
pub use text::{
    extract_raw_text, normalize_whitespace, render_text, visible_chars, BLOCK_LEVEL_TAGS,
    SKIPPED_TAGS,
};

/// Keep/drop thresholds for [`classify_block`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub heading_min_chars: usize,
    pub heading_max_link_density: f64,
    pub item_min_chars: usize,
    pub item_max_link_density: f64,
    pub min_chars: usize,
    pub max_link_density: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            heading_min_chars: 3,
            heading_max_link_density: 0.2,
            item_min_chars: 60,
            item_max_link_density: 0.2,
            min_chars: 25,
            max_link_density: 0.33,
        }
    }
}

/// Both text views plus the blocks that produced the cleaned one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub raw_text: String,
    pub clean_text: String,
    pub blocks: Vec<Block>,
}

impl ExtractionResult {
    pub fn empty() -> Self {
        Self {
            raw_text: String::new(),
            clean_text: String::new(),
            blocks: Vec::new(),
        }
    }
}

/// Decides whether a block is content. Pure in its arguments.
pub fn classify_block(block: &Block, thresholds: &ClassifierConfig) -> (bool, BlockReason) {
    if block.penalty {
        return (false, BlockReason::Penalized);
    }
    let (min_chars, max_density) = match block.tag.as_str() {
        "h1" | "h2" | "h3" | "h4" | "h5" | "h6" => (
            thresholds.heading_min_chars,
            thresholds.heading_max_link_density,
        ),
        "li" | "td" | "dd" | "dt" => (thresholds.item_min_chars, thresholds.item_max_link_density),
        _ => (thresholds.min_chars, thresholds.max_link_density),
    };
    if block.char_count < min_chars {
        (false, BlockReason::TooShort)
    } else if block.link_density > max_density {
        (false, BlockReason::TooLinky)
    } else {
        (true, BlockReason::Kept)
    }
}

/// Runs segmentation and classification with default thresholds.
pub fn extract_clean_text(doc: &HtmlDocument) -> ExtractionResult {
    extract_with(doc, &ClassifierConfig::default())
}

pub fn extract_with(doc: &HtmlDocument, thresholds: &ClassifierConfig) -> ExtractionResult {
    let mut blocks = segment_blocks(doc);
    for block in &mut blocks {
        (block.kept, block.reason) = classify_block(block, thresholds);
    }
    let clean_text = blocks
        .iter()
        .filter(|b| b.kept)
        .map(|b| b.text.as_str())
        .collect::<Vec<_>>()
        .join("\n\n");
    ExtractionResult {
        raw_text: extract_raw_text(doc),
        clean_text,
        blocks,
    }
}

/// Parse and extract in one step.
pub fn extract_html(bytes: &[u8], charset_hint: Option<&str>) -> ExtractionResult {
    extract_clean_text(&parse_document(bytes, charset_hint))
}
