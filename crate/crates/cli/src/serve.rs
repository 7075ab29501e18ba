//! Read-only HTTP access to a directory of flow-graph files.

use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use procmine::flow::{FlowDocument, SourceRef};
use procmine::pipeline::FLOW_SUFFIX;
use serde::Serialize;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcedureSummary {
    pub id: String,
    pub title: String,
    pub source: SourceRef,
}

struct Flows {
    dir: PathBuf,
}

fn error(status: StatusCode, code: &str) -> Response {
    (status, Json(serde_json::json!({ "error": code }))).into_response()
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Summaries of every readable flow file in `dir`, sorted by id.
pub fn list_procedures(dir: &Path) -> std::io::Result<Vec<ProcedureSummary>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(FLOW_SUFFIX))
        .collect();
    names.sort();
    let mut out = Vec::new();
    for name in names {
        let id = name.trim_end_matches(FLOW_SUFFIX).to_string();
        let parsed = std::fs::read_to_string(dir.join(&name))
            .map_err(|e| e.to_string())
            .and_then(|t| FlowDocument::from_json(&t).map_err(|e| e.to_string()));
        match parsed {
            Ok(doc) => out.push(ProcedureSummary {
                id,
                title: doc.title,
                source: doc.source,
            }),
            Err(e) => log::error!("skipping {name}: {e}"),
        }
    }
    Ok(out)
}

async fn procedures(State(flows): State<Arc<Flows>>) -> Response {
    let dir = flows.dir.clone();
    match tokio::task::spawn_blocking(move || list_procedures(&dir)).await {
        Ok(Ok(list)) => Json(list).into_response(),
        Ok(Err(e)) => {
            log::error!("{}: {e}", flows.dir.display());
            error(StatusCode::INTERNAL_SERVER_ERROR, "unreadable")
        }
        Err(e) => {
            log::error!("listing task failed: {e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, "internal")
        }
    }
}

async fn flow(State(flows): State<Arc<Flows>>, UrlPath(id): UrlPath<String>) -> Response {
    if !valid_id(&id) {
        return error(StatusCode::NOT_FOUND, "not_found");
    }
    let path = flows.dir.join(format!("{id}{FLOW_SUFFIX}"));
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) if e.kind() == ErrorKind::NotFound => error(StatusCode::NOT_FOUND, "not_found"),
        Err(e) => {
            log::error!("{}: {e}", path.display());
            error(StatusCode::INTERNAL_SERVER_ERROR, "unreadable")
        }
    }
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "not_found")
}

/// Routes for the flow directory; `ui_dir`, when given, is served at `/`.
pub fn router(flows_dir: PathBuf, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/procedures", get(procedures))
        .route("/api/procedures/{id}/flow", get(flow))
        .with_state(Arc::new(Flows { dir: flows_dir }));
    let app = match ui_dir {
        Some(ui) => api.fallback_service(ServeDir::new(ui)),
        None => api.fallback(not_found),
    };
    app.layer(CorsLayer::permissive())
}

pub async fn serve(listener: tokio::net::TcpListener, flows_dir: PathBuf, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(flows_dir, ui_dir)).await
}
