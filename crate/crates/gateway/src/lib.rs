//! Network-facing gateway: cameras push frames over HTTP, frames become
//! per-camera motion sequences, each closed sequence becomes one boolean
//! person-present reading, and readings trigger webhook actions.
//!
//! The HTTP surface:
//!
//! - `POST /api/cameras` registers a camera and returns its bearer token
//! - `POST /api/cameras/{id}/frames` ingests one frame (bearer auth; the
//!   payload kind is sniffed from magic bytes, not the declared type)
//! - `GET  /api/cameras/{id}/state` returns the latest reading plus a page
//!   of history
//! - `GET  /api/cameras/{id}/readings?page=N&page_size=M` pages history,
//!   newest first
//! - `POST /api/cameras/{id}/subscriptions` registers a webhook action
//!
//! Frame acknowledgment is synchronous after the durable write;
//! classification runs off the request path, and a closed sequence's
//! reading is recorded once every frame has its verdict.

pub mod pipeline;
pub mod routes;
pub mod sniff;
pub mod state;
pub mod storage;
pub mod webhook;

use camsense::cascade::{load_synthetic_cascade, parse_cascade, CascadeError, CascadeModel};
use camsense::detector::DetectionConfig;
use camsense::sequence::AggregationPolicy;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("unauthorized")]
    Unauthorized,
    #[error("unknown camera {0}")]
    UnknownCamera(String),
    #[error("camera {0} has no readings yet")]
    NoReadingsYet(String),
    #[error("unsupported media: {0}")]
    UnsupportedMedia(String),
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("{0}")]
    SequenceOverflow(String),
    #[error("reading for sequence {0} already recorded")]
    DuplicateReading(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("storage failure: {0}")]
    Storage(#[from] std::io::Error),
    #[error("model: {0}")]
    Model(#[from] CascadeError),
}

/// Everything the gateway needs to run. Field-for-field this is the flag
/// and environment surface of `camsense serve`.
#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub data_root: PathBuf,
    pub listen: SocketAddr,
    pub model_path: PathBuf,
    pub idle_timeout_ms: u64,
    /// k of the k-of-n sequence rule.
    pub k: u32,
    pub scale_factor: f64,
    pub min_neighbors: u32,
    pub min_size: (u32, u32),
    pub group_eps: f64,
    pub max_sequence_frames: usize,
    /// Base delay of the webhook retry backoff.
    pub webhook_backoff_ms: u64,
}

impl GatewayConfig {
    pub fn detection_config(&self) -> DetectionConfig {
        DetectionConfig {
            scale_factor: self.scale_factor,
            min_neighbors: self.min_neighbors,
            min_size: self.min_size,
            max_size: None,
            group_eps: self.group_eps,
        }
    }

    pub fn aggregation_policy(&self) -> AggregationPolicy {
        AggregationPolicy {
            k: self.k,
            idle_timeout_ms: self.idle_timeout_ms,
        }
    }
}

/// Loads a model file: XML content goes through the classic-format parser,
/// anything else through the synthetic text format.
pub fn load_model_file(path: &Path) -> Result<CascadeModel, GatewayError> {
    let bytes = std::fs::read(path)?;
    if bytes.trim_ascii_start().starts_with(b"<") {
        Ok(parse_cascade(&bytes)?)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| CascadeError::MalformedModel("model file is not UTF-8".into()))?;
        Ok(load_synthetic_cascade(&text)?)
    }
}

/// Milliseconds since the UNIX epoch.
pub fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
