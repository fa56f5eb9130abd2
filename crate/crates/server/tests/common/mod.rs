#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tagpag_core::archive::{
    availability_url, HttpResponse, Transport, TransportError, WaybackClient, AVAILABILITY_ENDPOINT,
};
use tagpag_core::config::{load_labels, load_tasks};
use tagpag_core::store::AnnotationStore;
use tagpag_server::{router, AppState};
use tower::ServiceExt;

pub const ARTICLE_URL: &str = "https://news.example.com/politics/budget-vote";
pub const ARCHIVED_URL: &str = "https://example.com/";
pub const FAILING_URL: &str = "https://down.example.net/page";

pub fn core_fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// Availability responses keyed by page URL. Unknown URLs get a
/// connection error.
pub struct RecordedWayback {
    responses: HashMap<String, HttpResponse>,
}

impl RecordedWayback {
    pub fn standard() -> Self {
        let read = |name: &str| std::fs::read(core_fixtures().join("wayback").join(name)).unwrap();
        let mut responses = HashMap::new();
        responses.insert(
            availability_url(AVAILABILITY_ENDPOINT, ARCHIVED_URL),
            HttpResponse {
                status: 200,
                body: read("available_archived.json"),
            },
        );
        responses.insert(
            availability_url(AVAILABILITY_ENDPOINT, ARTICLE_URL),
            HttpResponse {
                status: 200,
                body: read("available_none.json"),
            },
        );
        Self { responses }
    }
}

#[async_trait]
impl Transport for RecordedWayback {
    async fn get(&self, url: &str, _timeout: Duration) -> Result<HttpResponse, TransportError> {
        self.responses
            .get(url)
            .cloned()
            .ok_or_else(|| TransportError::Connect("no recorded response".into()))
    }
}

pub const ARTICLE_HTML: &str = "<html><head><title>Budget</title></head><body>\
<nav><a href=\"/\">Home</a> <a href=\"/politics\">Politics</a></nav>\
<p>The council approved the municipal budget after a long public hearing on Tuesday night.</p>\
<script>var leaked = 'XQZSCRIPT';</script>\
<footer class=\"footer\">Copyright Example News</footer></body></html>";

/// A served corpus on disk.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub app: Router,
    pub state: Arc<AppState>,
}

impl Fixture {
    pub fn annotations_dir(&self) -> PathBuf {
        self.dir.path().join("annotations")
    }
}

fn labels_json(mode: &str) -> String {
    format!(
        r#"{{"mode":"{mode}","labels":[
            {{"key":"news","name":"News","shortcut":"1","keywords":["politics","budget"]}},
            {{"key":"sport","name":"Sport","shortcut":"2","keywords":["football"]}},
            {{"key":"other","name":"Other","shortcut":"3"}}]}}"#
    )
}

/// Builds a served corpus from `(task_id, url, html)` rows; `None` html
/// leaves `html_path` empty.
pub fn fixture_with(mode: &str, tasks: &[(&str, &str, Option<&str>)]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let html_dir = dir.path().join("html");
    std::fs::create_dir_all(&html_dir).unwrap();
    let mut csv = String::from("task_id,url,html_path\n");
    for (id, url, html) in tasks {
        let rel = match html {
            Some(body) => {
                let rel = format!("{id}.html");
                std::fs::write(html_dir.join(&rel), body).unwrap();
                rel
            }
            None => String::new(),
        };
        csv.push_str(&format!("{id},{url},{rel}\n"));
    }
    std::fs::write(dir.path().join("tasks.csv"), csv).unwrap();
    std::fs::write(dir.path().join("labels.json"), labels_json(mode)).unwrap();

    let ui = dir.path().join("ui");
    std::fs::create_dir_all(ui.join("assets")).unwrap();
    std::fs::write(
        ui.join("index.html"),
        "<!doctype html><title>ui</title><div id=app></div>",
    )
    .unwrap();
    std::fs::write(ui.join("assets/app.js"), "console.log('app');").unwrap();

    let corpus = Arc::new(load_tasks(&dir.path().join("tasks.csv")).unwrap());
    let labels = Arc::new(load_labels(&dir.path().join("labels.json")).unwrap());
    let store = AnnotationStore::open(dir.path().join("annotations"), corpus, labels).unwrap();
    let wayback = WaybackClient::new(Arc::new(RecordedWayback::standard()));
    let state =
        Arc::new(AppState::new(Arc::new(store), Arc::new(wayback), html_dir).with_ui_dir(Some(ui)));
    Fixture {
        app: router(state.clone()),
        state,
        dir,
    }
}

/// Five tasks: stored article, archived page, no HTML, dangling HTML
/// path, and a URL whose archive lookup fails.
pub fn standard_fixture(mode: &str) -> Fixture {
    let f = fixture_with(
        mode,
        &[
            ("t1", ARTICLE_URL, Some(ARTICLE_HTML)),
            (
                "t2",
                ARCHIVED_URL,
                Some("<p>Archived landing page with enough words to be kept.</p>"),
            ),
            ("t3", "https://nohtml.example.org/football/results", None),
            (
                "t4",
                "https://gone.example.org/",
                Some("<p>soon deleted</p>"),
            ),
            ("t5", FAILING_URL, None),
        ],
    );
    std::fs::remove_file(f.dir.path().join("html/t4.html")).unwrap();
    f
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("not JSON ({e}): {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }
}

pub async fn send(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<serde_json::Value>,
) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    Reply {
        status,
        headers,
        body,
    }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Method::GET, uri, None).await
}

pub async fn put(app: &Router, uri: &str, body: serde_json::Value) -> Reply {
    send(app, Method::PUT, uri, Some(body)).await
}
