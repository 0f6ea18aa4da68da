//! Shared gateway state and startup.

use crate::pipeline;
use crate::routes;
use crate::storage::FileStore;
use crate::webhook::Deliverer;
use crate::{load_model_file, GatewayConfig, GatewayError};
use camsense::cascade::{validate_cascade, CascadeModel};
use camsense::detector::DetectionConfig;
use camsense::sequence::{AggregationPolicy, SequenceBuffer, SequenceTracker, TrackerConfig};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use tokio::sync::Notify;
use tokio::task::JoinHandle;

pub struct Inner {
    pub store: FileStore,
    pub tracker: Mutex<SequenceTracker>,
    pub model: CascadeModel,
    pub detection: DetectionConfig,
    pub policy: AggregationPolicy,
    /// Closed sequences waiting for their last frame verdicts.
    pub pending: Mutex<Vec<SequenceBuffer>>,
    pub finalize_wakeup: Notify,
    pub deliverer: Deliverer,
}

/// Cheap-to-clone handle the routes and background tasks share.
#[derive(Clone)]
pub struct AppState(pub Arc<Inner>);

impl AppState {
    pub fn build(config: &GatewayConfig) -> Result<AppState, GatewayError> {
        let model = load_model_file(&config.model_path)?;
        let report = validate_cascade(&model);
        if !report.is_empty() {
            for entry in report.entries() {
                tracing::warn!(model = %model.name, "model validation: {entry}");
            }
        }
        let store = FileStore::open(&config.data_root)?;
        let mut tracker = SequenceTracker::new(TrackerConfig {
            idle_timeout_ms: config.idle_timeout_ms,
            max_sequence_frames: config.max_sequence_frames,
        });
        for camera_id in store.camera_ids() {
            tracker.register_camera(&camera_id);
        }
        Ok(AppState(Arc::new(Inner {
            store,
            tracker: Mutex::new(tracker),
            model,
            detection: config.detection_config(),
            policy: config.aggregation_policy(),
            pending: Mutex::new(Vec::new()),
            finalize_wakeup: Notify::new(),
            deliverer: Deliverer::new(config.webhook_backoff_ms),
        })))
    }
}

/// A started gateway: bound address plus handles to every spawned task.
pub struct RunningGateway {
    pub addr: SocketAddr,
    pub state: AppState,
    tasks: Vec<JoinHandle<()>>,
}

impl RunningGateway {
    /// Aborts the server and its background tasks.
    pub fn shutdown(self) {
        for task in &self.tasks {
            task.abort();
        }
    }
}

/// Binds the listener, spawns the server plus the sequence-closing and
/// reading-finalizing tasks, and returns immediately.
pub async fn start_gateway(config: GatewayConfig) -> Result<RunningGateway, GatewayError> {
    let state = AppState::build(&config)?;
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    let addr = listener.local_addr()?;
    let mut tasks = pipeline::spawn_background_tasks(state.clone());
    let app = routes::router(state.clone());
    tasks.push(tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!("server stopped: {e}");
        }
    }));
    tracing::info!(%addr, "gateway listening");
    Ok(RunningGateway { addr, state, tasks })
}
