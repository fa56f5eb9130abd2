//! RFC 4180 CSV export.

use std::borrow::Cow;

use super::log::{format_timestamp, Annotation};
use crate::config::{Corpus, LabelConfig};

pub const EXPORT_HEADER: &str = "task_id,url,annotator_id,labels,comment,edited_text,updated_at";

/// Quotes a field if it contains a comma, quote or line break.
pub fn csv_field(value: &str) -> Cow<'_, str> {
    if value.contains([',', '"', '\n', '\r']) {
        Cow::Owned(format!("\"{}\"", value.replace('"', "\"\"")))
    } else {
        Cow::Borrowed(value)
    }
}

/// Labels joined by `|` in label-config order.
pub fn join_labels(labels: &[String], config: &LabelConfig) -> String {
    let mut sorted: Vec<&String> = labels.iter().collect();
    sorted.sort_by_key(|k| config.rank(k).unwrap_or(usize::MAX));
    sorted
        .iter()
        .map(|s| s.as_str())
        .collect::<Vec<_>>()
        .join("|")
}

/// Writes header and rows. `rows` must already be in export order; empty
/// (deleted) annotations are skipped.
pub fn write_csv<'a>(
    rows: impl IntoIterator<Item = &'a Annotation>,
    corpus: &Corpus,
    config: &LabelConfig,
) -> String {
    let mut out = String::from(EXPORT_HEADER);
    out.push('\n');
    for a in rows {
        if a.is_empty() {
            continue;
        }
        let url = corpus.get(&a.task_id).map_or("", |t| t.url.as_str());
        let fields = [
            csv_field(&a.task_id),
            csv_field(url),
            csv_field(&a.annotator_id),
            Cow::Owned(csv_field(&join_labels(&a.labels, config)).into_owned()),
            csv_field(&a.comment),
            csv_field(a.edited_text.as_deref().unwrap_or("")),
            Cow::Owned(format_timestamp(&a.updated_at)),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
