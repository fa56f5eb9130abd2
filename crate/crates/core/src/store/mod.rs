//! Durable per-annotator annotation storage.
//!
//! Each annotator owns one append-only log, `<dir>/<annotator_id>.jsonl`.
//! All writes go through a single critical section and are flushed to disk
//! before they are reported as committed; reads see the latest committed
//! state. Replaying a log with last-write-wins reproduces the live state.

mod export;
mod log;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, SubsecRound, Utc};
use parking_lot::{Mutex, RwLock};
use serde::Deserialize;
use thiserror::Error;

use crate::config::{AnnotationMode, Corpus, LabelConfig};

pub use export::{csv_field, join_labels, write_csv, EXPORT_HEADER};
pub use log::{encode_record, format_timestamp, replay_bytes, replay_log, Annotation, Replay};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("invalid annotator id {0:?}: use letters, digits, `_` or `-`")]
    InvalidAnnotatorId(String),
    #[error("annotation could not be stored: {0}")]
    StorageFailure(#[source] std::io::Error),
    #[error("log {path} is corrupt at line {line}")]
    CorruptLog { path: PathBuf, line: usize },
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Annotator ids are path components, so they are restricted to `[A-Za-z0-9_-]+`.
pub fn is_valid_annotator_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// What a client submits; the store assigns the timestamp.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct AnnotationDraft {
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub edited_text: Option<String>,
}

/// Which annotators an export covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExportScope {
    All,
    Annotator(String),
}

impl ExportScope {
    /// `all` or a valid annotator id.
    pub fn parse(s: &str) -> Option<Self> {
        if s == "all" {
            Some(ExportScope::All)
        } else if is_valid_annotator_id(s) {
            Some(ExportScope::Annotator(s.to_string()))
        } else {
            None
        }
    }
}

type Clock = Box<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub struct AnnotationStore {
    dir: PathBuf,
    corpus: Arc<Corpus>,
    labels: Arc<LabelConfig>,
    state: RwLock<BTreeMap<String, HashMap<String, Annotation>>>,
    writers: Mutex<HashMap<String, File>>,
    clock: Clock,
}

impl std::fmt::Debug for AnnotationStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnnotationStore")
            .field("dir", &self.dir)
            .finish_non_exhaustive()
    }
}

impl AnnotationStore {
    /// Opens (creating if needed) an annotations directory and replays every
    /// `<annotator>.jsonl` in it. Torn trailing records are cut off the file.
    pub fn open(
        dir: impl Into<PathBuf>,
        corpus: Arc<Corpus>,
        labels: Arc<LabelConfig>,
    ) -> Result<Self, StoreError> {
        let dir = dir.into();
        let io_err = |source| StoreError::Io {
            path: dir.clone(),
            source,
        };
        std::fs::create_dir_all(&dir).map_err(io_err)?;
        let mut state = BTreeMap::new();
        for entry in std::fs::read_dir(&dir).map_err(io_err)? {
            let path = entry.map_err(io_err)?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") || !path.is_file() {
                continue;
            }
            let Some(annotator) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            if !is_valid_annotator_id(annotator) {
                tracing::warn!(path = %path.display(), "skipping log with invalid annotator id");
                continue;
            }
            let replay = replay_log(&path)?;
            if replay.truncated > 0 {
                tracing::warn!(path = %path.display(), "dropping torn trailing record");
                let file = std::fs::OpenOptions::new()
                    .write(true)
                    .open(&path)
                    .map_err(|source| StoreError::Io {
                        path: path.clone(),
                        source,
                    })?;
                file.set_len(replay.valid_len)
                    .and_then(|_| file.sync_all())
                    .map_err(|source| StoreError::Io {
                        path: path.clone(),
                        source,
                    })?;
            }
            let live: HashMap<_, _> = replay
                .annotations
                .into_iter()
                .filter(|(task_id, a)| {
                    let keep = corpus.index_of(task_id).is_some() && a.annotator_id == annotator;
                    if !keep {
                        tracing::warn!(task_id, annotator, "ignoring record not in corpus");
                    }
                    keep
                })
                .collect();
            state.insert(annotator.to_string(), live);
        }
        Ok(Self {
            dir,
            corpus,
            labels,
            state: RwLock::new(state),
            writers: Mutex::new(HashMap::new()),
            clock: Box::new(Utc::now),
        })
    }

    /// Replaces the commit-time clock.
    pub fn with_clock(mut self, clock: impl Fn() -> DateTime<Utc> + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn labels(&self) -> &Arc<LabelConfig> {
        &self.labels
    }

    pub fn log_path(&self, annotator_id: &str) -> PathBuf {
        self.dir.join(format!("{annotator_id}.jsonl"))
    }

    fn validate(
        &self,
        task_id: &str,
        annotator_id: &str,
        draft: &AnnotationDraft,
    ) -> Result<(), StoreError> {
        if !is_valid_annotator_id(annotator_id) {
            return Err(StoreError::InvalidAnnotatorId(annotator_id.to_string()));
        }
        if self.corpus.index_of(task_id).is_none() {
            return Err(StoreError::UnknownTask(task_id.to_string()));
        }
        let mut seen = HashSet::new();
        for key in &draft.labels {
            if self.labels.label(key).is_none() {
                return Err(StoreError::InvalidLabels(format!("unknown label `{key}`")));
            }
            if !seen.insert(key) {
                return Err(StoreError::InvalidLabels(format!(
                    "label `{key}` given twice"
                )));
            }
        }
        if self.labels.mode == AnnotationMode::Single && draft.labels.len() > 1 {
            return Err(StoreError::InvalidLabels(
                "single-label mode accepts at most one label".into(),
            ));
        }
        Ok(())
    }

    /// Durably records an annotation and makes it visible to readers.
    /// An empty `edited_text` is stored as absent.
    pub fn upsert(
        &self,
        task_id: &str,
        annotator_id: &str,
        draft: AnnotationDraft,
    ) -> Result<Annotation, StoreError> {
        self.validate(task_id, annotator_id, &draft)?;
        let mut writers = self.writers.lock();
        let annotation = Annotation {
            task_id: task_id.to_string(),
            annotator_id: annotator_id.to_string(),
            labels: draft.labels,
            comment: draft.comment,
            edited_text: draft.edited_text.filter(|t| !t.is_empty()),
            updated_at: (self.clock)().trunc_subsecs(0),
        };
        let line = encode_record(&annotation);
        let file = match writers.entry(annotator_id.to_string()) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                let file = log::open_append(&self.log_path(annotator_id))
                    .map_err(StoreError::StorageFailure)?;
                e.insert(file)
            }
        };
        if let Err(e) = log::append_durably(file, line.as_bytes()) {
            writers.remove(annotator_id);
            return Err(StoreError::StorageFailure(e));
        }
        self.state
            .write()
            .entry(annotator_id.to_string())
            .or_default()
            .insert(task_id.to_string(), annotation.clone());
        Ok(annotation)
    }

    /// This annotator's annotation of the task, never anyone else's.
    pub fn get(&self, task_id: &str, annotator_id: &str) -> Option<Annotation> {
        self.state.read().get(annotator_id)?.get(task_id).cloned()
    }

    /// Corpus indices this annotator has labelled.
    pub fn annotated_indices(&self, annotator_id: &str) -> HashSet<usize> {
        self.state
            .read()
            .get(annotator_id)
            .map(|m| {
                m.values()
                    .filter(|a| !a.labels.is_empty())
                    .filter_map(|a| self.corpus.index_of(&a.task_id))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn annotators(&self) -> Vec<String> {
        self.state.read().keys().cloned().collect()
    }

    /// Every non-empty live annotation in export order: by annotator id,
    /// then corpus order.
    pub fn live_annotations(&self, scope: &ExportScope) -> Vec<Annotation> {
        let state = self.state.read();
        let mut rows = Vec::new();
        for (annotator, by_task) in state.iter() {
            if let ExportScope::Annotator(id) = scope {
                if id != annotator {
                    continue;
                }
            }
            let mut mine: Vec<&Annotation> = by_task.values().filter(|a| !a.is_empty()).collect();
            mine.sort_by_key(|a| self.corpus.index_of(&a.task_id));
            rows.extend(mine.into_iter().cloned());
        }
        rows
    }

    /// CSV export, UTF-8 with LF line endings.
    pub fn export_csv(&self, scope: &ExportScope) -> String {
        write_csv(&self.live_annotations(scope), &self.corpus, &self.labels)
    }
}

/// Loads a store directory read-only style and exports it.
pub fn export_dir(
    dir: &Path,
    corpus: Arc<Corpus>,
    labels: Arc<LabelConfig>,
    scope: &ExportScope,
) -> Result<String, StoreError> {
    Ok(AnnotationStore::open(dir, corpus, labels)?.export_csv(scope))
}

#[cfg(test)]
mod tests {
    use chrono::TimeZone;

    use super::*;
    use crate::config::{parse_labels, parse_tasks};

    fn fixture(mode: &str) -> (tempfile::TempDir, AnnotationStore) {
        let corpus = parse_tasks(
            "task_id,url,html_path\nt1,https://a.io,\nt2,https://b.io,\nt3,https://c.io,\n"
                .as_bytes(),
        )
        .unwrap();
        let labels = parse_labels(&format!(
            r#"{{"mode":"{mode}","labels":[{{"key":"news","name":"News","shortcut":"1"}},{{"key":"pol","name":"Politics","shortcut":"2"}}]}}"#
        ))
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let store = AnnotationStore::open(dir.path(), Arc::new(corpus), Arc::new(labels))
            .unwrap()
            .with_clock(|| Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap());
        (dir, store)
    }

    fn draft(labels: &[&str], comment: &str) -> AnnotationDraft {
        AnnotationDraft {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            comment: comment.into(),
            edited_text: None,
        }
    }

    #[test]
    fn read_your_write() {
        let (_d, store) = fixture("single");
        let a = store.upsert("t1", "alice", draft(&["news"], "ok")).unwrap();
        assert_eq!(store.get("t1", "alice"), Some(a.clone()));
        assert_eq!(a.labels, ["news"]);
        assert_eq!(a.comment, "ok");
    }

    #[test]
    fn last_write_wins() {
        let (_d, store) = fixture("single");
        store.upsert("t1", "alice", draft(&["news"], "")).unwrap();
        store.upsert("t1", "alice", draft(&["pol"], "")).unwrap();
        assert_eq!(store.get("t1", "alice").unwrap().labels, ["pol"]);
    }

    #[test]
    fn single_mode_rejects_two_labels() {
        let (_d, store) = fixture("single");
        let err = store
            .upsert("t1", "alice", draft(&["news", "pol"], ""))
            .unwrap_err();
        assert!(matches!(err, StoreError::InvalidLabels(_)));
        assert_eq!(store.get("t1", "alice"), None);
    }

    #[test]
    fn multi_mode_accepts_two_labels_but_not_unknown() {
        let (_d, store) = fixture("multi");
        store
            .upsert("t1", "alice", draft(&["pol", "news"], ""))
            .unwrap();
        assert!(matches!(
            store.upsert("t1", "alice", draft(&["sports"], "")),
            Err(StoreError::InvalidLabels(_))
        ));
        assert!(matches!(
            store.upsert("t1", "alice", draft(&["pol", "pol"], "")),
            Err(StoreError::InvalidLabels(_))
        ));
    }

    #[test]
    fn unknown_task_and_bad_annotator() {
        let (_d, store) = fixture("single");
        assert!(matches!(
            store.upsert("nope", "alice", draft(&[], "")),
            Err(StoreError::UnknownTask(_))
        ));
        assert!(matches!(
            store.upsert("t1", "a b", draft(&[], "")),
            Err(StoreError::InvalidAnnotatorId(_))
        ));
        assert!(matches!(
            store.upsert("t1", "../x", draft(&[], "")),
            Err(StoreError::InvalidAnnotatorId(_))
        ));
    }

    #[test]
    fn annotators_are_isolated() {
        let (_d, store) = fixture("single");
        assert_eq!(store.get("t1", "alice"), None);
        store.upsert("t1", "alice", draft(&["news"], "")).unwrap();
        assert_eq!(store.get("t1", "bob"), None);
        assert!(store.get("t1", "alice").is_some());
        assert!(store.annotated_indices("bob").is_empty());
    }

    #[test]
    fn storage_failure_leaves_state_unchanged() {
        let (dir, store) = fixture("single");
        std::fs::create_dir(dir.path().join("bob.jsonl")).unwrap();
        let err = store.upsert("t1", "bob", draft(&["news"], "")).unwrap_err();
        assert!(matches!(err, StoreError::StorageFailure(_)));
        assert_eq!(store.get("t1", "bob"), None);
    }

    #[test]
    fn reopen_replays_state() {
        let (dir, store) = fixture("multi");
        store.upsert("t1", "alice", draft(&["news"], "a")).unwrap();
        store.upsert("t2", "alice", draft(&["pol"], "b")).unwrap();
        store
            .upsert("t1", "alice", draft(&["pol", "news"], "c"))
            .unwrap();
        store
            .upsert("t3", "bob", draft(&[], "only comment"))
            .unwrap();
        let before = store.export_csv(&ExportScope::All);
        let reopened =
            AnnotationStore::open(dir.path(), store.corpus().clone(), store.labels().clone())
                .unwrap();
        assert_eq!(reopened.get("t1", "alice"), store.get("t1", "alice"));
        assert_eq!(reopened.export_csv(&ExportScope::All), before);
        assert_eq!(reopened.annotators(), ["alice", "bob"]);
    }

    #[test]
    fn torn_tail_is_cut_on_open() {
        let (dir, store) = fixture("single");
        store.upsert("t1", "alice", draft(&["news"], "")).unwrap();
        let path = store.log_path("alice");
        let good_len = std::fs::metadata(&path).unwrap().len();
        std::fs::OpenOptions::new()
            .append(true)
            .open(&path)
            .and_then(|mut f| std::io::Write::write_all(&mut f, b"{\"task_id\":\"t2\",\"anno"))
            .unwrap();
        let (c, l) = (store.corpus().clone(), store.labels().clone());
        drop(store);
        let reopened = AnnotationStore::open(dir.path(), c, l).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), good_len);
        reopened.upsert("t2", "alice", draft(&["pol"], "")).unwrap();
        let replay = replay_log(&path).unwrap();
        assert_eq!(replay.annotations.len(), 2);
        assert_eq!(replay.truncated, 0);
    }

    #[test]
    fn export_example_row() {
        let (_d, store) = fixture("single");
        store
            .upsert("t1", "alice", draft(&["news"], r#"said "hi""#))
            .unwrap();
        assert_eq!(
            store.export_csv(&ExportScope::All),
            "task_id,url,annotator_id,labels,comment,edited_text,updated_at\n\
             t1,https://a.io,alice,news,\"said \"\"hi\"\"\",,2024-01-01T00:00:00Z\n"
        );
    }

    #[test]
    fn export_empty_is_header_only() {
        let (_d, store) = fixture("single");
        assert_eq!(
            store.export_csv(&ExportScope::All),
            format!("{EXPORT_HEADER}\n")
        );
    }

    #[test]
    fn export_order_scope_and_deletions() {
        let (_d, store) = fixture("multi");
        store.upsert("t3", "bob", draft(&["news"], "")).unwrap();
        store
            .upsert("t2", "alice", draft(&["pol", "news"], ""))
            .unwrap();
        store.upsert("t1", "bob", draft(&["pol"], "")).unwrap();
        store.upsert("t1", "alice", draft(&["news"], "")).unwrap();
        store.upsert("t1", "alice", draft(&[], "")).unwrap();
        let csv = store.export_csv(&ExportScope::All);
        let keys: Vec<_> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').take(4).collect::<Vec<_>>().join(","))
            .collect();
        assert_eq!(
            keys,
            [
                "t2,https://b.io,alice,news|pol",
                "t1,https://a.io,bob,pol",
                "t3,https://c.io,bob,news"
            ]
        );
        let bob = store.export_csv(&ExportScope::Annotator("bob".into()));
        assert_eq!(bob.lines().count(), 3);
        assert!(bob.lines().skip(1).all(|l| l.contains(",bob,")));
    }

    #[test]
    fn empty_edited_text_is_absent() {
        let (_d, store) = fixture("single");
        let a = store
            .upsert(
                "t1",
                "alice",
                AnnotationDraft {
                    edited_text: Some(String::new()),
                    ..draft(&["news"], "")
                },
            )
            .unwrap();
        assert_eq!(a.edited_text, None);
    }

    #[test]
    fn scope_parsing() {
        assert_eq!(ExportScope::parse("all"), Some(ExportScope::All));
        assert_eq!(
            ExportScope::parse("bob_2"),
            Some(ExportScope::Annotator("bob_2".into()))
        );
        assert_eq!(ExportScope::parse("a b"), None);
        assert_eq!(ExportScope::parse(""), None);
    }
}
