//! HTTP handlers and the error-to-status mapping.

use crate::pipeline;
use crate::sniff::{sniff_mime, MediaKind};
use crate::state::AppState;
use crate::storage::Trigger;
use crate::{now_ms, GatewayError};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use camsense::raster::{decode_image, ImageFormat};
use camsense::sequence::{SensorReading, SequenceError};
use serde::{Deserialize, Serialize};
use serde_json::json;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/cameras", post(register_camera))
        .route("/api/cameras/{id}/frames", post(push_frame))
        .route("/api/cameras/{id}/state", get(camera_state))
        .route("/api/cameras/{id}/readings", get(camera_readings))
        .route("/api/cameras/{id}/subscriptions", post(add_subscription))
        .with_state(state)
}

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        let status = match &self {
            GatewayError::Unauthorized => StatusCode::UNAUTHORIZED,
            GatewayError::UnknownCamera(_) | GatewayError::NoReadingsYet(_) => {
                StatusCode::NOT_FOUND
            }
            GatewayError::UnsupportedMedia(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            GatewayError::CorruptImage(_) | GatewayError::BadRequest(_) => StatusCode::BAD_REQUEST,
            GatewayError::SequenceOverflow(_) => StatusCode::TOO_MANY_REQUESTS,
            GatewayError::DuplicateReading(_) => StatusCode::CONFLICT,
            GatewayError::Storage(_) | GatewayError::Model(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

#[derive(Deserialize)]
struct RegisterBody {
    label: String,
}

#[derive(Serialize)]
struct RegisterResponse {
    camera_id: String,
    token: String,
    label: String,
    registered_at: u64,
}

async fn register_camera(
    State(state): State<AppState>,
    Json(body): Json<RegisterBody>,
) -> Result<impl IntoResponse, GatewayError> {
    let record = state.0.store.register_camera(&body.label, now_ms())?;
    state
        .0
        .tracker
        .lock()
        .expect("tracker lock")
        .register_camera(&record.camera_id);
    tracing::info!(camera_id = %record.camera_id, label = %record.label, "camera registered");
    Ok((
        StatusCode::CREATED,
        Json(RegisterResponse {
            camera_id: record.camera_id,
            token: record.token,
            label: record.label,
            registered_at: record.registered_at,
        }),
    ))
}

fn bearer_token(headers: &HeaderMap) -> Result<&str, GatewayError> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or(GatewayError::Unauthorized)
}

#[derive(Serialize)]
struct FrameAccepted {
    sequence_id: String,
    frame_index: u32,
}

async fn push_frame(
    State(state): State<AppState>,
    Path(camera_id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, GatewayError> {
    let token = bearer_token(&headers)?;
    state.0.store.authenticate(&camera_id, token)?;

    let declared = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok());
    let kind = sniff_mime(declared, &body);
    match kind {
        MediaKind::XmlMessage => {
            // object-message protocol: acknowledged, not interpreted here
            tracing::info!(%camera_id, bytes = body.len(), "xml object message acknowledged");
            Ok((
                StatusCode::ACCEPTED,
                Json(json!({ "kind": "xml_message", "status": "accepted" })),
            )
                .into_response())
        }
        MediaKind::Unknown => Err(GatewayError::UnsupportedMedia(
            "payload is neither a known image format nor a declared XML message".into(),
        )),
        _ => {
            let hint = match kind {
                MediaKind::Jpeg => ImageFormat::Jpeg,
                MediaKind::Png => ImageFormat::Png,
                MediaKind::Pgm => ImageFormat::Pgm,
                _ => ImageFormat::Ppm,
            };
            let img = decode_image(&body, Some(hint)).map_err(|e| match e {
                camsense::raster::RasterError::UnsupportedMedia(m) => {
                    GatewayError::UnsupportedMedia(m)
                }
                other => GatewayError::CorruptImage(other.to_string()),
            })?;

            let ack = {
                let mut tracker = state.0.tracker.lock().expect("tracker lock");
                match tracker.ingest_frame(&camera_id, kind.extension(), now_ms()) {
                    Ok(ack) => ack,
                    Err(SequenceError::SequenceOverflow {
                        sequence_id,
                        cap,
                        closed,
                    }) => {
                        drop(tracker);
                        pipeline::enqueue_closed(&state, [*closed]);
                        return Err(GatewayError::SequenceOverflow(format!(
                            "sequence {sequence_id} hit the {cap}-frame cap; frame rejected"
                        )));
                    }
                    Err(SequenceError::UnknownCamera(id)) => {
                        return Err(GatewayError::UnknownCamera(id))
                    }
                    Err(other) => return Err(GatewayError::BadRequest(other.to_string())),
                }
            };

            if let Err(e) = state.0.store.write_frame(&ack.storage_path, &body) {
                let mut tracker = state.0.tracker.lock().expect("tracker lock");
                tracker.abort_last_frame(&camera_id);
                return Err(e);
            }
            if let Some(closed) = ack.closed_previous {
                pipeline::enqueue_closed(&state, [closed]);
            }
            tokio::spawn(pipeline::classify_frame(
                state.clone(),
                camera_id,
                ack.sequence_id.clone(),
                ack.frame_index,
                img,
            ));
            Ok(Json(FrameAccepted {
                sequence_id: ack.sequence_id,
                frame_index: ack.frame_index,
            })
            .into_response())
        }
    }
}

#[derive(Serialize)]
struct StateResponse {
    latest: SensorReading,
    history: Vec<SensorReading>,
    total_readings: usize,
}

async fn camera_state(
    State(state): State<AppState>,
    Path(camera_id): Path<String>,
) -> Result<Json<StateResponse>, GatewayError> {
    if !state.0.store.camera_exists(&camera_id) {
        return Err(GatewayError::UnknownCamera(camera_id));
    }
    let latest = state
        .0
        .store
        .latest_reading(&camera_id)
        .ok_or_else(|| GatewayError::NoReadingsYet(camera_id.clone()))?;
    let (history, total_readings) = state.0.store.readings_page(&camera_id, 0, 10);
    Ok(Json(StateResponse {
        latest,
        history,
        total_readings,
    }))
}

#[derive(Deserialize)]
struct PageParams {
    #[serde(default)]
    page: usize,
    #[serde(default = "default_page_size")]
    page_size: usize,
}

fn default_page_size() -> usize {
    20
}

#[derive(Serialize)]
struct ReadingsResponse {
    readings: Vec<SensorReading>,
    page: usize,
    page_size: usize,
    total: usize,
}

async fn camera_readings(
    State(state): State<AppState>,
    Path(camera_id): Path<String>,
    Query(params): Query<PageParams>,
) -> Result<Json<ReadingsResponse>, GatewayError> {
    if !state.0.store.camera_exists(&camera_id) {
        return Err(GatewayError::UnknownCamera(camera_id));
    }
    let (readings, total) = state
        .0
        .store
        .readings_page(&camera_id, params.page, params.page_size);
    Ok(Json(ReadingsResponse {
        readings,
        page: params.page,
        page_size: params.page_size,
        total,
    }))
}

#[derive(Deserialize)]
struct SubscriptionBody {
    trigger: Trigger,
    target_url: String,
    #[serde(default)]
    retries: u32,
}

async fn add_subscription(
    State(state): State<AppState>,
    Path(camera_id): Path<String>,
    Json(body): Json<SubscriptionBody>,
) -> Result<impl IntoResponse, GatewayError> {
    let subscription =
        state
            .0
            .store
            .add_subscription(&camera_id, body.trigger, &body.target_url, body.retries)?;
    Ok((StatusCode::CREATED, Json(subscription)))
}
