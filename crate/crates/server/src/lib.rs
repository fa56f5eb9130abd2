//! HTTP service for the annotation tool.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Request, State};
use axum::response::Response;
use axum::routing::{any, get, put};
use axum::Router;
use tagpag_core::archive::WaybackClient;
use tagpag_core::config::{Corpus, LabelConfig};
use tagpag_core::extraction::ExtractionResult;
use tagpag_core::session::SessionOrder;
use tagpag_core::store::AnnotationStore;
use tokio::sync::OnceCell;

pub mod api;
mod assets;
pub mod error;

pub use error::ApiError;

/// Extraction of one task's stored HTML, computed once.
#[derive(Debug)]
pub struct CachedExtraction {
    pub result: ExtractionResult,
    pub html_missing: bool,
}

pub struct AppState {
    pub store: Arc<AnnotationStore>,
    pub wayback: Arc<WaybackClient>,
    pub html_dir: PathBuf,
    pub ui_dir: Option<PathBuf>,
    pub randomize: bool,
    pub seed: u64,
    extractions: Vec<OnceCell<Arc<CachedExtraction>>>,
}

impl AppState {
    pub fn new(
        store: Arc<AnnotationStore>,
        wayback: Arc<WaybackClient>,
        html_dir: impl Into<PathBuf>,
    ) -> Self {
        let n = store.corpus().len();
        Self {
            store,
            wayback,
            html_dir: html_dir.into(),
            ui_dir: None,
            randomize: false,
            seed: 0,
            extractions: (0..n).map(|_| OnceCell::new()).collect(),
        }
    }

    pub fn with_ui_dir(mut self, dir: Option<PathBuf>) -> Self {
        self.ui_dir = dir;
        self
    }

    pub fn with_order(mut self, randomize: bool, seed: u64) -> Self {
        self.randomize = randomize;
        self.seed = seed;
        self
    }

    pub fn corpus(&self) -> &Corpus {
        self.store.corpus()
    }

    pub fn labels(&self) -> &LabelConfig {
        self.store.labels()
    }

    pub fn order_for(&self, annotator_id: &str) -> SessionOrder {
        SessionOrder::new(annotator_id, self.seed, self.corpus().len(), self.randomize)
    }

    /// Extraction for the task at `index`, reading and parsing its HTML on
    /// first use.
    pub async fn extraction(&self, index: usize) -> Arc<CachedExtraction> {
        self.extractions[index]
            .get_or_init(|| async {
                let task = &self.corpus().tasks()[index];
                let Some(rel) = &task.html_path else {
                    return Arc::new(CachedExtraction {
                        result: ExtractionResult::empty(),
                        html_missing: true,
                    });
                };
                let path = self.html_dir.join(rel);
                let bytes = match tokio::fs::read(&path).await {
                    Ok(b) => b,
                    Err(e) => {
                        tracing::warn!(path = %path.display(), error = %e, "stored HTML unreadable");
                        return Arc::new(CachedExtraction {
                            result: ExtractionResult::empty(),
                            html_missing: true,
                        });
                    }
                };
                let result = tokio::task::spawn_blocking(move || {
                    tagpag_core::extraction::extract_html(&bytes, None)
                })
                .await
                .unwrap_or_else(|_| ExtractionResult::empty());
                Arc::new(CachedExtraction {
                    result,
                    html_missing: false,
                })
            })
            .await
            .clone()
    }
}

async fn static_fallback(State(state): State<Arc<AppState>>, req: Request) -> Response {
    assets::serve(state.ui_dir.as_deref(), req.uri()).await
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/config", get(api::config))
        .route("/api/session", get(api::session))
        .route("/api/tasks/:task_id", get(api::task))
        .route("/api/tasks/:task_id/annotation", put(api::annotate))
        .route("/api/tasks/:task_id/html", get(api::task_html))
        .route("/api/wayback", get(api::wayback))
        .route("/api/export.csv", get(api::export))
        .route("/api", any(api::not_found))
        .route("/api/*rest", any(api::not_found))
        .fallback(static_fallback)
        .with_state(state)
}
