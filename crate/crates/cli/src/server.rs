//! HTTP API for the preview client.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/api/sites` | |
//! | GET | `/api/sites/{id}/grid` | |
//! | POST | `/api/sites/{id}/option` | `{algorithm, level, logo_as_gui}` |
//! | POST | `/api/transform` | multipart: `frame`, `sidecar`, `site` or `grid`, `option` |
//! | GET | `/api/model` | |

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use anyhow::Context;
use axum::extract::multipart::Multipart;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use oledcolor::layout::LayoutSidecar;
use oledcolor::optimizer::{ColorMap, OptimizeError, OptionGrid};
use oledcolor::pipeline::SavingsReport;
use oledcolor::powermodel::SystemPowerModel;
use serde::Serialize;
use serde_json::json;

use crate::profile::{ProfileStore, Selection};
use crate::service::{self, CellSummary};
use crate::ServiceError;

pub struct AppState {
    pub store: ProfileStore,
    pub model: SystemPowerModel,
    writes: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl AppState {
    pub fn new(store: ProfileStore, model: SystemPowerModel) -> Arc<Self> {
        Arc::new(Self { store, model, writes: Mutex::new(HashMap::new()) })
    }

    /// Writers to one site profile take this lock.
    fn site_lock(&self, site: &str) -> Arc<Mutex<()>> {
        self.writes.lock().unwrap().entry(site.to_string()).or_default().clone()
    }
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownSite(_) | ServiceError::NoGrid(_) => StatusCode::NOT_FOUND,
            ServiceError::UnknownCell { .. }
            | ServiceError::Invalid(_)
            | ServiceError::Frame(_)
            | ServiceError::Layout(_)
            | ServiceError::Pipeline(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Optimize(OptimizeError::Format(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}

/// Run file and pixel work off the async threads.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ServiceError::Io(std::io::Error::other(e)))?
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/sites", get(list_sites))
        .route("/api/sites/{id}/grid", get(site_grid))
        .route("/api/sites/{id}/option", post(set_option))
        .route("/api/transform", post(transform))
        .route("/api/model", get(model))
        .layer(DefaultBodyLimit::max(64 << 20))
        .with_state(state)
}

async fn list_sites(State(s): State<Arc<AppState>>) -> Result<Response, ServiceError> {
    let out = blocking(move || {
        let profiles = s.store.list()?;
        profiles.iter().map(|p| service::site_summary(&s.store, &s.model, p)).collect::<Result<Vec<_>, _>>()
    })
    .await?;
    Ok(Json(out).into_response())
}

#[derive(Serialize)]
struct GridResponse {
    site: String,
    cells: Vec<CellSummary>,
}

async fn site_grid(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let out = blocking(move || {
        let site = ProfileStore::site_key(&id).map_err(|_| ServiceError::UnknownSite(id.clone()))?;
        let p = s.store.require(&site)?;
        let grid = service::load_grid(&s.store, &s.model, &p)?;
        Ok(GridResponse { site, cells: service::grid_summary(&grid) })
    })
    .await?;
    Ok(Json(out).into_response())
}

async fn set_option(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<Selection>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let out = blocking(move || {
        let site = ProfileStore::site_key(&id).map_err(|_| ServiceError::UnknownSite(id.clone()))?;
        s.store.require(&site)?;
        let Json(sel) = body.map_err(|e| ServiceError::Invalid(e.body_text()))?;
        let lock = s.site_lock(&site);
        let _guard = lock.lock().unwrap();
        service::set_option(&s.store, &s.model, &site, sel)
    })
    .await?;
    Ok(Json(out).into_response())
}

#[derive(Serialize)]
struct TransformResponse {
    site: Option<String>,
    option: Selection,
    report: SavingsReport,
    png_base64: String,
}

#[derive(Default)]
struct TransformForm {
    frame: Option<Vec<u8>>,
    sidecar: Option<String>,
    site: Option<String>,
    grid: Option<Vec<u8>>,
    option: Option<String>,
}

async fn read_form(mut mp: Multipart) -> Result<TransformForm, ServiceError> {
    let bad = |e: axum::extract::multipart::MultipartError| ServiceError::Invalid(e.body_text());
    let mut form = TransformForm::default();
    while let Some(field) = mp.next_field().await.map_err(bad)? {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field.bytes().await.map_err(bad)?.to_vec();
        let text = || String::from_utf8(bytes.clone()).map_err(|_| ServiceError::Invalid(format!("field `{name}` is not UTF-8")));
        match name.as_str() {
            "frame" => form.frame = Some(bytes.clone()),
            "grid" => form.grid = Some(bytes.clone()),
            "sidecar" => form.sidecar = Some(text()?),
            "site" => form.site = Some(text()?),
            "option" => form.option = Some(text()?),
            other => return Err(ServiceError::Invalid(format!("unexpected field `{other}`"))),
        }
    }
    Ok(form)
}

async fn transform(State(s): State<Arc<AppState>>, mp: Multipart) -> Result<Response, ServiceError> {
    let form = read_form(mp).await?;
    let out = blocking(move || {
        let frame = form.frame.ok_or_else(|| ServiceError::Invalid("missing `frame`".into()))?;
        let sidecar = match &form.sidecar {
            Some(t) => LayoutSidecar::parse(t)?,
            None => LayoutSidecar::default(),
        };
        let (site, maps, stored): (Option<String>, Vec<ColorMap>, Option<Selection>) = match (form.site, form.grid) {
            (Some(_), Some(_)) => return Err(ServiceError::Invalid("give `site` or `grid`, not both".into())),
            (Some(id), None) => {
                let site = ProfileStore::site_key(&id).map_err(|_| ServiceError::UnknownSite(id.clone()))?;
                let p = s.store.require(&site)?;
                let maps = OptionGrid::read_maps(&s.store.grid_bytes(&p)?)?;
                (Some(site), maps, p.option)
            }
            (None, Some(g)) => (None, OptionGrid::read_maps(&g)?, None),
            (None, None) => return Err(ServiceError::Invalid("missing `site` or `grid`".into())),
        };
        let option = match form.option {
            Some(t) => serde_json::from_str(&t).map_err(|e| ServiceError::Invalid(format!("option: {e}")))?,
            None => stored.ok_or_else(|| ServiceError::Invalid("missing `option` and no stored option".into()))?,
        };
        let out = service::transform_frame(&s.model, &frame, &sidecar, &maps, option)?;
        Ok(TransformResponse {
            site,
            option,
            report: out.report,
            png_base64: base64::engine::general_purpose::STANDARD.encode(out.png),
        })
    })
    .await?;
    Ok(Json(out).into_response())
}

async fn model(State(s): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let m = &s.model;
    let n = m.pixel_count as f64;
    Json(json!({
        "a": m.pixel.a,
        "b": m.pixel.b,
        "c": m.pixel.c,
        "p_black": m.p_black,
        "pixel_count": m.pixel_count,
        "full_screen_watts": { "red": m.pixel.a * n, "green": m.pixel.b * n, "blue": m.pixel.c * n },
    }))
}

/// Bind `addr` and serve until Ctrl-C.
pub async fn serve(addr: &str, state: Arc<AppState>) -> anyhow::Result<()> {
    state.store.list().with_context(|| format!("cannot read profiles in {}", state.store.root().display()))?;
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot listen on {addr}"))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
