//! Task corpus and label configuration files.

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shortcut characters the annotation UI keeps for navigation.
pub const RESERVED_SHORTCUTS: &[char] = &['n', 'p', 'u', 'e', 'c', '?'];

/// Keys that are reserved but are not printable characters.
pub const RESERVED_KEYS: &[&str] = &["Enter", "Escape"];

pub const MIN_KEYWORD_LEN: usize = 3;

pub const TASK_COLUMNS: [&str; 3] = ["task_id", "url", "html_path"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed tasks file: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed labels file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("tasks file is missing column `{0}`")]
    MissingColumn(String),
    #[error("duplicate task id `{0}`")]
    DuplicateTaskId(String),
    #[error("invalid task id {0:?}: must be nonempty and free of line breaks")]
    InvalidTaskId(String),
    #[error("html path {0:?} must be relative and stay inside the html directory")]
    UnsafeHtmlPath(String),
    #[error("tasks file has no tasks")]
    EmptyCorpus,
    #[error("labels file defines no labels")]
    NoLabels,
    #[error("invalid label key {0:?}: use letters, digits, `_`, `-` or `.`")]
    InvalidKey(String),
    #[error("duplicate label key `{0}`")]
    DuplicateKey(String),
    #[error("shortcut {0:?} must be a single printable character")]
    InvalidShortcut(String),
    #[error("shortcut `{0}` is used by more than one label")]
    DuplicateShortcut(char),
    #[error("shortcut `{0}` is reserved for navigation")]
    ReservedShortcut(char),
    #[error("keyword {0:?} is shorter than {MIN_KEYWORD_LEN} characters")]
    KeywordTooShort(String),
}

/// One page to annotate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub url: String,
    /// Path of the scraped HTML, relative to the HTML directory.
    pub html_path: Option<String>,
}

/// Tasks in canonical (file) order.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    tasks: Vec<Task>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(tasks: Vec<Task>) -> Result<Self, ConfigError> {
        if tasks.is_empty() {
            return Err(ConfigError::EmptyCorpus);
        }
        let mut index = HashMap::with_capacity(tasks.len());
        for (i, task) in tasks.iter().enumerate() {
            if task.task_id.is_empty() || task.task_id.contains(['\r', '\n']) {
                return Err(ConfigError::InvalidTaskId(task.task_id.clone()));
            }
            if index.insert(task.task_id.clone(), i).is_some() {
                return Err(ConfigError::DuplicateTaskId(task.task_id.clone()));
            }
        }
        Ok(Self { tasks, index })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn index_of(&self, task_id: &str) -> Option<usize> {
        self.index.get(task_id).copied()
    }

    pub fn get(&self, task_id: &str) -> Option<&Task> {
        self.index_of(task_id).map(|i| &self.tasks[i])
    }
}

/// Reads a tasks CSV with columns `task_id,url,html_path`.
pub fn load_tasks(path: &Path) -> Result<Corpus, ConfigError> {
    let file = std::fs::File::open(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_tasks(file)
}

pub fn parse_tasks(reader: impl Read) -> Result<Corpus, ConfigError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 3];
    for (slot, name) in cols.iter_mut().zip(TASK_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ConfigError::MissingColumn(name.to_string()))?;
    }
    let mut tasks = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let field = |i: usize| record.get(cols[i]).unwrap_or_default();
        let html_path = match field(2).trim() {
            "" => None,
            p if is_safe_relative(p) => Some(p.to_string()),
            p => return Err(ConfigError::UnsafeHtmlPath(p.to_string())),
        };
        tasks.push(Task {
            task_id: field(0).to_string(),
            url: field(1).trim().to_string(),
            html_path,
        });
    }
    Corpus::new(tasks)
}

fn is_safe_relative(p: &str) -> bool {
    Path::new(p)
        .components()
        .all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationMode {
    Single,
    Multi,
}

impl AnnotationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationMode::Single => "single",
            AnnotationMode::Multi => "multi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDef {
    pub key: String,
    pub name: String,
    pub shortcut: char,
    #[serde(default)]
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelConfig {
    pub mode: AnnotationMode,
    pub labels: Vec<LabelDef>,
}

#[derive(Deserialize)]
struct RawLabelConfig {
    mode: AnnotationMode,
    labels: Vec<RawLabel>,
}

#[derive(Deserialize)]
struct RawLabel {
    key: String,
    #[serde(default)]
    name: Option<String>,
    shortcut: String,
    #[serde(default)]
    keywords: Vec<String>,
}

impl LabelConfig {
    /// Validates labels and lowercases their keywords.
    pub fn new(mode: AnnotationMode, labels: Vec<LabelDef>) -> Result<Self, ConfigError> {
        if labels.is_empty() {
            return Err(ConfigError::NoLabels);
        }
        let mut keys = HashSet::new();
        let mut shortcuts = HashSet::new();
        let mut out = Vec::with_capacity(labels.len());
        for mut label in labels {
            if label.key.is_empty()
                || !label
                    .key
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
            {
                return Err(ConfigError::InvalidKey(label.key));
            }
            if !keys.insert(label.key.clone()) {
                return Err(ConfigError::DuplicateKey(label.key));
            }
            let sc = label.shortcut;
            if sc.is_control() || sc.is_whitespace() {
                return Err(ConfigError::InvalidShortcut(sc.to_string()));
            }
            if RESERVED_SHORTCUTS.contains(&sc) {
                return Err(ConfigError::ReservedShortcut(sc));
            }
            if !shortcuts.insert(sc) {
                return Err(ConfigError::DuplicateShortcut(sc));
            }
            for kw in &mut label.keywords {
                *kw = kw.trim().to_ascii_lowercase();
                if kw.chars().count() < MIN_KEYWORD_LEN {
                    return Err(ConfigError::KeywordTooShort(kw.clone()));
                }
            }
            if label.name.is_empty() {
                label.name = label.key.clone();
            }
            out.push(label);
        }
        Ok(Self { mode, labels: out })
    }

    pub fn label(&self, key: &str) -> Option<&LabelDef> {
        self.labels.iter().find(|l| l.key == key)
    }

    /// Position of a key in config order.
    pub fn rank(&self, key: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.key == key)
    }
}

pub fn load_labels(path: &Path) -> Result<LabelConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_labels(&text)
}

/// Parses `{"mode": "single"|"multi", "labels": [{"key","name","shortcut","keywords"}]}`.
pub fn parse_labels(json: &str) -> Result<LabelConfig, ConfigError> {
    let raw: RawLabelConfig = serde_json::from_str(json)?;
    let mut labels = Vec::with_capacity(raw.labels.len());
    for l in raw.labels {
        let mut chars = l.shortcut.chars();
        let shortcut = match (chars.next(), chars.next()) {
            (Some(c), None) => c,
            _ => return Err(ConfigError::InvalidShortcut(l.shortcut)),
        };
        labels.push(LabelDef {
            name: l.name.unwrap_or_default(),
            key: l.key,
            shortcut,
            keywords: l.keywords,
        });
    }
    LabelConfig::new(raw.mode, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tasks(csv: &str) -> Result<Corpus, ConfigError> {
        parse_tasks(csv.as_bytes())
    }

    #[test]
    fn tasks_keep_file_order() {
        let c = tasks("task_id,url,html_path\nt2,https://b.io,b.html\nt1,https://a.io,\nt3,https://c.io,sub/c.html\n")
            .unwrap();
        let ids: Vec<_> = c.tasks().iter().map(|t| t.task_id.as_str()).collect();
        assert_eq!(ids, ["t2", "t1", "t3"]);
        assert_eq!(c.get("t1").unwrap().html_path, None);
        assert_eq!(c.index_of("t3"), Some(2));
    }

    #[test]
    fn duplicate_task_id() {
        let err = tasks("task_id,url,html_path\nt1,a,\nt1,b,\n").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateTaskId(id) if id == "t1"));
    }

    #[test]
    fn header_only_is_empty_corpus() {
        assert!(matches!(
            tasks("task_id,url,html_path\n"),
            Err(ConfigError::EmptyCorpus)
        ));
    }

    #[test]
    fn missing_column() {
        let err = tasks("task_id,link\nt1,a\n").unwrap_err();
        assert!(matches!(err, ConfigError::MissingColumn(c) if c == "url"));
    }

    #[test]
    fn task_id_with_newline_is_rejected() {
        let err = tasks("task_id,url,html_path\n\"a\nb\",u,\n").unwrap_err();
        assert!(matches!(err, ConfigError::InvalidTaskId(_)));
        assert!(matches!(
            tasks("task_id,url,html_path\n,u,\n"),
            Err(ConfigError::InvalidTaskId(_))
        ));
    }

    #[test]
    fn html_path_cannot_escape() {
        assert!(matches!(
            tasks("task_id,url,html_path\nt,u,../etc/passwd\n"),
            Err(ConfigError::UnsafeHtmlPath(_))
        ));
        assert!(matches!(
            tasks("task_id,url,html_path\nt,u,/abs.html\n"),
            Err(ConfigError::UnsafeHtmlPath(_))
        ));
    }

    const TWO_LABELS: &str = r#"{"mode": "single", "labels": [
        {"key": "pol", "name": "Politics", "shortcut": "1", "keywords": ["Politics", "election"]},
        {"key": "news", "name": "News", "shortcut": "2"}
    ]}"#;

    #[test]
    fn valid_two_label_config() {
        let cfg = parse_labels(TWO_LABELS).unwrap();
        assert_eq!(cfg.mode, AnnotationMode::Single);
        assert_eq!(cfg.labels.len(), 2);
        assert_eq!(cfg.labels[0].keywords, ["politics", "election"]);
        assert_eq!(cfg.labels[1].shortcut, '2');
        assert_eq!(cfg.rank("news"), Some(1));
    }

    #[test]
    fn shared_shortcut() {
        let err = parse_labels(
            r#"{"mode":"multi","labels":[{"key":"a","name":"A","shortcut":"1"},{"key":"b","name":"B","shortcut":"1"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateShortcut('1')));
    }

    #[test]
    fn short_keyword() {
        let err = parse_labels(
            r#"{"mode":"multi","labels":[{"key":"a","name":"A","shortcut":"1","keywords":["tv"]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::KeywordTooShort(k) if k == "tv"));
    }

    #[test]
    fn other_label_errors() {
        let bad = |labels: &str| parse_labels(&format!(r#"{{"mode":"single","labels":{labels}}}"#));
        assert!(matches!(bad("[]"), Err(ConfigError::NoLabels)));
        assert!(matches!(
            bad(r#"[{"key":"a","name":"A","shortcut":"1"},{"key":"a","name":"B","shortcut":"2"}]"#),
            Err(ConfigError::DuplicateKey(_))
        ));
        assert!(matches!(
            bad(r#"[{"key":"a","name":"A","shortcut":"n"}]"#),
            Err(ConfigError::ReservedShortcut('n'))
        ));
        assert!(matches!(
            bad(r#"[{"key":"a","name":"A","shortcut":"12"}]"#),
            Err(ConfigError::InvalidShortcut(_))
        ));
        assert!(matches!(
            bad(r#"[{"key":"a|b","name":"A","shortcut":"1"}]"#),
            Err(ConfigError::InvalidKey(_))
        ));
        assert!(matches!(
            parse_labels(r#"{"mode":"both","labels":[]}"#),
            Err(ConfigError::Json(_))
        ));
    }
}
