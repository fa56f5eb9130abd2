//! Static files for the browser UI.

use std::path::{Component, Path, PathBuf};

use axum::http::{header, StatusCode, Uri};
use axum::response::{Html, IntoResponse, Response};

const PLACEHOLDER: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>tagpag</title></head>
<body><p>The annotation UI bundle is not installed. Start the server with
<code>--ui-dir</code> pointing at the built bundle; the JSON API is under <code>/api/</code>.</p></body></html>
";

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" | "map" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "woff2" => "font/woff2",
        "txt" => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

/// Request path as a relative file path, or `None` if it tries to escape.
fn relative_path(uri: &Uri) -> Option<PathBuf> {
    let path = PathBuf::from(uri.path().trim_start_matches('/'));
    path.components()
        .all(|c| matches!(c, Component::Normal(_)))
        .then_some(path)
}

async fn file(path: &Path) -> Option<Response> {
    let bytes = tokio::fs::read(path).await.ok()?;
    Some(([(header::CONTENT_TYPE, content_type(path))], bytes).into_response())
}

/// Serves a bundle file if one matches, otherwise the entry document so
/// client-side routes resolve.
pub async fn serve(ui_dir: Option<&Path>, uri: &Uri) -> Response {
    let Some(dir) = ui_dir else {
        return Html(PLACEHOLDER).into_response();
    };
    if let Some(rel) = relative_path(uri).filter(|p| !p.as_os_str().is_empty()) {
        let candidate = dir.join(rel);
        if candidate.is_file() {
            if let Some(resp) = file(&candidate).await {
                return resp;
            }
        }
    }
    match file(&dir.join("index.html")).await {
        Some(resp) => resp,
        None => (StatusCode::NOT_FOUND, "UI entry document missing").into_response(),
    }
}
