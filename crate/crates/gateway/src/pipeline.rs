//! Off-request work: frame classification, idle closing, and turning
//! fully classified closed sequences into recorded readings plus webhook
//! deliveries.
//!
//! A closed sequence sits in the pending list until every frame has a
//! verdict. Frames whose classification failed outright (detector error,
//! panic) never get one; such sequences are dropped with an error log
//! after a grace period instead of guessing a value.

use crate::state::AppState;
use crate::webhook;
use crate::{now_ms, GatewayError};
use camsense::detector::detect;
use camsense::raster::GrayImage;
use camsense::sequence::{emit_reading, SequenceBuffer};
use std::time::Duration;
use tokio::task::JoinHandle;

/// How often idle sequences are swept.
const CLOSE_SWEEP: Duration = Duration::from_millis(250);
/// How long a closed sequence may wait for missing verdicts.
const CLASSIFY_GRACE_MS: u64 = 30_000;

pub fn spawn_background_tasks(state: AppState) -> Vec<JoinHandle<()>> {
    vec![
        tokio::spawn(closer_loop(state.clone())),
        tokio::spawn(finalizer_loop(state)),
    ]
}

async fn closer_loop(state: AppState) {
    let mut tick = tokio::time::interval(CLOSE_SWEEP);
    tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tick.tick().await;
        let closed = {
            let mut tracker = state.0.tracker.lock().expect("tracker lock");
            tracker.close_idle(now_ms())
        };
        if !closed.is_empty() {
            enqueue_closed(&state, closed);
        }
    }
}

/// Hands closed sequences to the finalizer.
pub fn enqueue_closed(state: &AppState, buffers: impl IntoIterator<Item = SequenceBuffer>) {
    let mut pending = state.0.pending.lock().expect("pending lock");
    pending.extend(buffers);
    drop(pending);
    state.0.finalize_wakeup.notify_one();
}

/// Runs the detector over one frame and records the verdict wherever the
/// sequence lives now: the tracker if still open, the pending list if
/// already closed.
pub async fn classify_frame(
    state: AppState,
    camera_id: String,
    sequence_id: String,
    frame_index: u32,
    img: GrayImage,
) {
    let verdict = {
        let state = state.clone();
        tokio::task::spawn_blocking(move || {
            detect(&img, &state.0.model, &state.0.detection).map(|r| r.person_found)
        })
        .await
    };
    let positive = match verdict {
        Ok(Ok(found)) => found,
        Ok(Err(e)) => {
            tracing::error!(%camera_id, %sequence_id, frame_index, "classification failed: {e}");
            return;
        }
        Err(e) => {
            tracing::error!(%camera_id, %sequence_id, frame_index, "classification task died: {e}");
            return;
        }
    };

    let applied = {
        let mut tracker = state.0.tracker.lock().expect("tracker lock");
        tracker.set_frame_result(&camera_id, &sequence_id, frame_index as usize, positive)
    };
    if !applied {
        let mut pending = state.0.pending.lock().expect("pending lock");
        if let Some(buffer) = pending.iter_mut().find(|b| b.sequence_id == sequence_id) {
            let _ = buffer.set_frame_result(frame_index as usize, positive);
        }
        // a result for a sequence we no longer know is stale; drop it
    }
    state.0.finalize_wakeup.notify_one();
}

async fn finalizer_loop(state: AppState) {
    loop {
        let _ = tokio::time::timeout(
            Duration::from_millis(200),
            state.0.finalize_wakeup.notified(),
        )
        .await;
        let now = now_ms();
        let ready: Vec<SequenceBuffer> = {
            let mut pending = state.0.pending.lock().expect("pending lock");
            let mut ready = Vec::new();
            pending.retain(|buffer| {
                if buffer.unclassified() == 0 {
                    ready.push(buffer.clone());
                    false
                } else if now.saturating_sub(buffer.closed_at.unwrap_or(now)) > CLASSIFY_GRACE_MS {
                    tracing::error!(
                        sequence_id = %buffer.sequence_id,
                        missing = buffer.unclassified(),
                        "dropping sequence with unclassifiable frames"
                    );
                    false
                } else {
                    true
                }
            });
            ready
        };
        for buffer in ready {
            finalize_sequence(&state, buffer).await;
        }
    }
}

/// Emits the reading, records it, and fires matching webhook actions.
async fn finalize_sequence(state: &AppState, buffer: SequenceBuffer) {
    let reading = match emit_reading(&buffer, &state.0.policy) {
        Ok(reading) => reading,
        Err(e) => {
            tracing::error!(sequence_id = %buffer.sequence_id, "no reading emitted: {e}");
            return;
        }
    };
    let previous = state
        .0
        .store
        .latest_reading(&reading.camera_id)
        .map(|r| r.value);
    match state.0.store.record_reading(&reading) {
        Ok(()) => {}
        Err(GatewayError::DuplicateReading(id)) => {
            tracing::warn!(sequence_id = %id, "reading already recorded; not refiring actions");
            return;
        }
        Err(e) => {
            tracing::error!(sequence_id = %reading.sequence_id, "reading not recorded: {e}");
            return;
        }
    }
    tracing::info!(
        camera_id = %reading.camera_id,
        sequence_id = %reading.sequence_id,
        value = reading.value,
        frames = reading.frame_count,
        positive = reading.positive_frames,
        "sensor reading recorded"
    );
    webhook::fire_actions(state, &reading, previous).await;
}
