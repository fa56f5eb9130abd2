//! Append-only JSON Lines log of annotation records.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::StoreError;

/// One annotator's judgement of one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub task_id: String,
    pub annotator_id: String,
    pub labels: Vec<String>,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub edited_text: Option<String>,
    #[serde(with = "timestamp")]
    pub updated_at: DateTime<Utc>,
}

impl Annotation {
    /// A record with no labels, no comment and no edited text is a deletion.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty() && self.comment.is_empty() && self.edited_text.is_none()
    }
}

/// ISO-8601 UTC with whole seconds, e.g. `2024-01-01T00:00:00Z`.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

mod timestamp {
    use chrono::{DateTime, Utc};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(D::Error::custom)
    }
}

/// Live state recovered from a log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Replay {
    /// Latest record per task id.
    pub annotations: HashMap<String, Annotation>,
    /// Number of complete records applied.
    pub records: usize,
    /// Incomplete trailing records that were ignored (0 or 1).
    pub truncated: usize,
    /// Byte length of the complete-record prefix.
    pub valid_len: u64,
}

/// Rebuilds last-write-wins state from a log. A missing file is an empty
/// log. Bytes after the final newline are a torn write and are ignored; an
/// unparsable complete line is corruption.
pub fn replay_log(path: &Path) -> Result<Replay, StoreError> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Replay::default()),
        Err(source) => {
            return Err(StoreError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    replay_bytes(&bytes).map_err(|line| StoreError::CorruptLog {
        path: path.to_path_buf(),
        line,
    })
}

/// Replays raw log bytes; the error is the 1-based line that failed.
pub fn replay_bytes(bytes: &[u8]) -> Result<Replay, usize> {
    let mut replay = Replay::default();
    let complete_len = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    for (i, line) in bytes[..complete_len].split(|&b| b == b'\n').enumerate() {
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let record: Annotation = serde_json::from_slice(line).map_err(|_| i + 1)?;
        replay.records += 1;
        replay.annotations.insert(record.task_id.clone(), record);
    }
    if bytes[complete_len..]
        .iter()
        .any(|b| !b.is_ascii_whitespace())
    {
        replay.truncated = 1;
    }
    replay.valid_len = complete_len as u64;
    Ok(replay)
}

/// Serializes one record as a log line, newline included.
pub fn encode_record(a: &Annotation) -> String {
    let mut line = serde_json::to_string(a).expect("annotation serializes");
    line.push('\n');
    line
}

/// Appends a line and flushes it to disk. On failure the file is cut back
/// to its previous length so no torn record is left behind.
pub(super) fn append_durably(file: &mut File, line: &[u8]) -> std::io::Result<()> {
    let before = file.metadata()?.len();
    let result = file.write_all(line).and_then(|_| file.sync_data());
    if result.is_err() {
        let _ = file.set_len(before);
    }
    result
}

pub(super) fn open_append(path: &Path) -> std::io::Result<File> {
    OpenOptions::new().create(true).append(true).open(path)
}

#[cfg(test)]
mod tests {
    use chrono::TimeZone;

    use super::*;

    fn ann(task: &str, labels: &[&str], secs: i64) -> Annotation {
        Annotation {
            task_id: task.into(),
            annotator_id: "alice".into(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            comment: String::new(),
            edited_text: None,
            updated_at: Utc.timestamp_opt(1_704_067_200 + secs, 0).unwrap(),
        }
    }

    fn log(records: &[Annotation]) -> Vec<u8> {
        records
            .iter()
            .flat_map(|r| encode_record(r).into_bytes())
            .collect()
    }

    #[test]
    fn timestamp_wire_format() {
        let a = ann("t1", &["x"], 0);
        let line = encode_record(&a);
        assert!(
            line.contains(r#""updated_at":"2024-01-01T00:00:00Z""#),
            "{line}"
        );
        assert!(line.ends_with('\n'));
    }

    #[test]
    fn three_upserts_two_live() {
        let bytes = log(&[
            ann("t1", &["a"], 0),
            ann("t2", &["b"], 1),
            ann("t1", &["c"], 2),
        ]);
        let r = replay_bytes(&bytes).unwrap();
        assert_eq!(r.annotations.len(), 2);
        assert_eq!(r.annotations["t1"].labels, ["c"]);
        assert_eq!(r.records, 3);
        assert_eq!(r.truncated, 0);
    }

    #[test]
    fn empty_log() {
        assert_eq!(replay_bytes(b"").unwrap(), Replay::default());
        let missing = replay_log(Path::new("/definitely/not/here.jsonl")).unwrap();
        assert!(missing.annotations.is_empty());
    }

    #[test]
    fn truncated_final_line_is_ignored() {
        let mut bytes = log(&[ann("t1", &["a"], 0), ann("t2", &["b"], 1)]);
        let full = bytes.len();
        let third = encode_record(&ann("t3", &["c"], 2));
        bytes.extend_from_slice(&third.as_bytes()[..third.len() / 2]);
        let r = replay_bytes(&bytes).unwrap();
        assert_eq!(r.annotations.len(), 2);
        assert_eq!(r.truncated, 1);
        assert_eq!(r.valid_len, full as u64);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let mut bytes = log(&[ann("t1", &["a"], 0)]);
        bytes.extend_from_slice(b"{not json}\n");
        bytes.extend_from_slice(&log(&[ann("t2", &["a"], 0)]));
        assert_eq!(replay_bytes(&bytes), Err(2));
    }
}
