//! JSON/PPM HTTP API over one loaded model.
//!
//! | route | |
//! |---|---|
//! | `GET /api/model` | model summary |
//! | `GET /api/projection` | embedded points, labels and extent |
//! | `POST /api/infer` | `{"points": [[x, y], ...]}` to instances |
//! | `POST /api/interpolate` | `{"a": [x, y], "b": [x, y], "steps": n}` |
//! | `GET /api/map/{kind}?r=&a=&b=` | gradient, agreement or roundtrip map as PPM |

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use anyhow::Context;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ndarray::Array2;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::OnceCell;
use tower_http::services::ServeDir;

use unproject::data::Dataset;
use unproject::densemaps::{
    agreement_map, gradient_map, render, roundtrip_map_for, write_ppm, Colormap, PixelGrid,
};
use unproject::model::{interpolate, NNInvModel};
use unproject::projection::Embedding;

use crate::cli::{fit_agreement_ensemble, open_session, ServeArgs};

pub const MAX_POINTS: usize = 10_000;
pub const MAX_RESOLUTION: usize = 2048;
pub const MAX_STEPS: usize = 10_000;
const MAP_MARGIN: f64 = 0.05;

type MapCell = Arc<OnceCell<Result<Arc<Vec<u8>>, ApiError>>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum MapKind {
    Gradient,
    Agreement,
    Roundtrip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct MapKey {
    kind: MapKind,
    resolution: usize,
    classes: Option<[u32; 2]>,
}

/// Model plus optional backdrop data; rendered maps are cached per request key.
pub struct Session {
    model: NNInvModel,
    data: Option<Dataset>,
    embedding: Option<Embedding>,
    maps: Mutex<HashMap<MapKey, MapCell>>,
}

impl Session {
    pub fn new(model: NNInvModel, data: Option<Dataset>, embedding: Option<Embedding>) -> Self {
        Self {
            model,
            data,
            embedding,
            maps: Mutex::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &NNInvModel {
        &self.model
    }
}

#[derive(Clone, Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(session: Arc<Session>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/model", get(model_info))
        .route("/api/projection", get(projection))
        .route("/api/infer", post(infer))
        .route("/api/interpolate", post(interpolate_route))
        .route("/api/map/{kind}", get(map_route))
        .with_state(session);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Blocks on a multi-threaded runtime until the server stops.
pub fn serve_blocking(args: ServeArgs) -> anyhow::Result<()> {
    let session = open_session(&args.model, args.data.as_deref(), args.embedding.as_deref())?;
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|_| crate::cli::anyhow_user(format!("invalid address {}:{}", args.host, args.port)))?;
    let app = router(Arc::new(session), args.static_dir);
    let rt = tokio::runtime::Runtime::new().context("cannot start async runtime")?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("cannot bind {addr}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await?;
        Ok(())
    })
}

fn rows_json(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

async fn model_info(State(s): State<Arc<Session>>) -> Json<Value> {
    let m = &s.model;
    let e = m.input_extent;
    Json(json!({
        "output_dim": m.output_dim(),
        "layers": m.network.specs().iter().map(|l| l.units).collect::<Vec<_>>(),
        "input_extent": [e.xmin, e.xmax, e.ymin, e.ymax],
        "projection": m.metadata.projection,
        "dataset": m.metadata.dataset,
        "parametric": m.pca().is_some(),
        "points": s.embedding.as_ref().map_or(0, Embedding::len),
        "labeled": s.data.as_ref().is_some_and(|d| d.labels.is_some()),
    }))
}

async fn projection(State(s): State<Arc<Session>>) -> ApiResult<Json<Value>> {
    let (Some(ds), Some(emb)) = (&s.data, &s.embedding) else {
        return Err(ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "no dataset loaded; start the server with --data",
        ));
    };
    let e = emb.extent;
    Ok(Json(json!({
        "points": rows_json(&emb.coords),
        "labels": ds.labels,
        "extent": [e.xmin, e.xmax, e.ymin, e.ymax],
    })))
}

fn parse_json(body: &[u8]) -> ApiResult<Value> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))
}

fn parse_point(v: &Value, what: &str) -> ApiResult<[f64; 2]> {
    let arr = v
        .as_array()
        .ok_or_else(|| ApiError::bad_request(format!("{what} must be an [x, y] array")))?;
    if arr.len() != 2 {
        return Err(ApiError::bad_request(format!(
            "{what} must have 2 coordinates, got {}",
            arr.len()
        )));
    }
    let mut out = [0.0; 2];
    for (o, c) in out.iter_mut().zip(arr) {
        *o = match c {
            Value::Number(n) => n.as_f64().filter(|x| x.is_finite()),
            Value::Null => None,
            _ => return Err(ApiError::bad_request(format!("{what} has a non-numeric coordinate"))),
        }
        .ok_or_else(|| ApiError::unprocessable(format!("{what} has a missing or non-finite coordinate")))?;
    }
    Ok(out)
}

async fn infer(State(s): State<Arc<Session>>, body: axum::body::Bytes) -> ApiResult<Json<Value>> {
    let v = parse_json(&body)?;
    let points = v
        .get("points")
        .and_then(Value::as_array)
        .ok_or_else(|| ApiError::bad_request("expected {\"points\": [[x, y], ...]}"))?;
    if points.len() > MAX_POINTS {
        return Err(ApiError::bad_request(format!(
            "at most {MAX_POINTS} points per request, got {}",
            points.len()
        )));
    }
    let mut flat = Vec::with_capacity(points.len() * 2);
    for (i, p) in points.iter().enumerate() {
        flat.extend(parse_point(p, &format!("point {i}"))?);
    }
    let pts = Array2::from_shape_vec((points.len(), 2), flat)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let out = tokio::task::spawn_blocking(move || {
        let inst = s.model.infer(pts.view())?;
        let raw = s.model.denormalize(inst.view());
        Ok::<_, unproject::Error>((inst, raw))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
    .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    Ok(Json(json!({
        "instances": rows_json(&out.0),
        "denormalized": rows_json(&out.1),
    })))
}

async fn interpolate_route(
    State(s): State<Arc<Session>>,
    body: axum::body::Bytes,
) -> ApiResult<Json<Value>> {
    let v = parse_json(&body)?;
    let a = parse_point(v.get("a").unwrap_or(&Value::Null), "a")?;
    let b = parse_point(v.get("b").unwrap_or(&Value::Null), "b")?;
    let steps = match v.get("steps") {
        None => 10,
        Some(n) => n
            .as_u64()
            .ok_or_else(|| ApiError::bad_request("steps must be a non-negative integer"))?
            as usize,
    };
    if !(2..=MAX_STEPS).contains(&steps) {
        return Err(ApiError::bad_request(format!(
            "steps must be in 2..={MAX_STEPS}, got {steps}"
        )));
    }
    let rows = interpolate(&s.model, a, b, steps).map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(Json(json!({ "instances": rows_json(&rows) })))
}

#[derive(Debug, Deserialize)]
struct MapQuery {
    r: Option<String>,
    a: Option<String>,
    b: Option<String>,
}

fn parse_query(q: &MapQuery) -> ApiResult<(usize, Option<[u32; 2]>)> {
    let r = match &q.r {
        None => 200,
        Some(s) => s
            .parse::<usize>()
            .ok()
            .filter(|r| (2..=MAX_RESOLUTION).contains(r))
            .ok_or_else(|| ApiError::bad_request(format!("r must be an integer in 2..={MAX_RESOLUTION}")))?,
    };
    let label = |s: &str| {
        s.parse::<u32>()
            .map_err(|_| ApiError::bad_request(format!("class label must be a non-negative integer, got {s:?}")))
    };
    let classes = match (&q.a, &q.b) {
        (None, None) => None,
        (Some(a), Some(b)) => Some([label(a)?, label(b)?]),
        _ => return Err(ApiError::bad_request("give both a and b, or neither")),
    };
    Ok((r, classes))
}

fn render_map(s: &Session, key: MapKey) -> ApiResult<Vec<u8>> {
    let grid = PixelGrid::new(key.resolution, s.model.input_extent.expanded(MAP_MARGIN))
        .map_err(|e| ApiError::conflict(e.to_string()))?;
    let rgb = match key.kind {
        MapKind::Gradient => render(&gradient_map(&s.model, &grid), Colormap::Viridis),
        MapKind::Roundtrip => {
            roundtrip_map_for(&s.model, s.model.pca(), &s.model.metadata.projection, &grid)
                .map_err(|e| ApiError::conflict(e.to_string()))?
                .rgb
        }
        MapKind::Agreement => {
            let ds = s
                .data
                .as_ref()
                .ok_or_else(|| ApiError::conflict("agreement maps need labeled data (--data)"))?;
            let ensemble =
                fit_agreement_ensemble(ds, key.classes).map_err(|e| ApiError::conflict(format!("{e:#}")))?;
            agreement_map(&s.model, &ensemble, &grid)
                .map_err(|e| ApiError::conflict(e.to_string()))?
                .rgb
        }
    };
    let mut buf = Vec::new();
    write_ppm(&rgb, &mut buf).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(buf)
}

async fn map_route(
    State(s): State<Arc<Session>>,
    Path(kind): Path<String>,
    Query(q): Query<MapQuery>,
) -> ApiResult<Response> {
    let kind = match kind.as_str() {
        "gradient" => MapKind::Gradient,
        "agreement" => MapKind::Agreement,
        "roundtrip" => MapKind::Roundtrip,
        other => {
            return Err(ApiError::new(
                StatusCode::NOT_FOUND,
                format!("unknown map kind {other:?}; expected gradient, agreement or roundtrip"),
            ))
        }
    };
    let (resolution, classes) = parse_query(&q)?;
    let key = MapKey {
        kind,
        resolution,
        classes: if kind == MapKind::Agreement { classes } else { None },
    };
    let cell = s
        .maps
        .lock()
        .map_err(|_| ApiError::internal("map cache poisoned"))?
        .entry(key)
        .or_default()
        .clone();
    let bytes = cell
        .get_or_init(|| {
            let s = s.clone();
            async move {
                tokio::task::spawn_blocking(move || render_map(&s, key).map(Arc::new))
                    .await
                    .unwrap_or_else(|e| Err(ApiError::internal(e.to_string())))
            }
        })
        .await
        .clone()?;
    Ok((
        [(header::CONTENT_TYPE, "image/x-portable-pixmap")],
        bytes.as_ref().clone(),
    )
        .into_response())
}
