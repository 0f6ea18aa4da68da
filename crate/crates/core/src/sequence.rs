//! Per-camera motion sequences and the boolean sensor readings they
//! produce.
//!
//! Cameras push frames in bursts while something moves. The
//! [`SequenceTracker`] groups each camera's frames into sequences: a frame
//! arriving within `idle_timeout_ms` of the previous one joins the open
//! sequence, a larger gap closes it and opens a fresh one, and
//! [`SequenceTracker::close_idle`] closes sequences that have simply gone
//! quiet (the gap test is inclusive: a gap of exactly `idle_timeout_ms`
//! closes). Every closed sequence collapses to one [`SensorReading`] whose
//! boolean value is the k-of-n rule of [`AggregationPolicy`]: true iff at
//! least `k` frames were classified positive.
//!
//! The tracker also owns the frame storage layout: frame `i` of a sequence
//! lives at `<camera_id>/<sequence_id>/<NNNNN>.<ext>` relative to the data
//! root, with the arrival index zero-padded to five digits.
//!
//! Time is caller-supplied milliseconds, so every law here is testable
//! with a simulated clock. Classification may land eagerly on arrival or
//! lazily after close; [`emit_reading`] only requires that every frame has
//! a result by then.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

pub type TimestampMs = u64;

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("camera {0} is not registered")]
    UnknownCamera(String),
    #[error(
        "sequence {sequence_id} reached the frame cap of {cap}; frame rejected, sequence closed"
    )]
    SequenceOverflow {
        sequence_id: String,
        cap: usize,
        /// The force-closed buffer; the caller still owes it a reading.
        closed: Box<SequenceBuffer>,
    },
    #[error("sequence has no frames")]
    EmptySequence,
    #[error("sequence {sequence_id} still open")]
    SequenceStillOpen { sequence_id: String },
    #[error("sequence {sequence_id} has {missing} unclassified frames")]
    IncompleteClassification { sequence_id: String, missing: usize },
    #[error("frame index {index} out of range for sequence {sequence_id}")]
    NoSuchFrame { sequence_id: String, index: usize },
}

/// One buffered frame of a sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub arrival_time: TimestampMs,
    /// Path relative to the data root, per the module layout.
    pub storage_path: String,
    /// Detector verdict for this frame, once classified.
    pub frame_positive: Option<bool>,
}

/// One camera's frames for one motion event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceBuffer {
    pub sequence_id: String,
    pub camera_id: String,
    pub frames: Vec<FrameRecord>,
    pub opened_at: TimestampMs,
    pub last_arrival: TimestampMs,
    /// Set when the sequence closes; open sequences carry `None`.
    pub closed_at: Option<TimestampMs>,
}

impl SequenceBuffer {
    pub fn is_closed(&self) -> bool {
        self.closed_at.is_some()
    }

    pub fn unclassified(&self) -> usize {
        self.frames
            .iter()
            .filter(|f| f.frame_positive.is_none())
            .count()
    }

    /// Records a frame's detector verdict.
    pub fn set_frame_result(&mut self, index: usize, positive: bool) -> Result<(), SequenceError> {
        match self.frames.get_mut(index) {
            Some(frame) => {
                frame.frame_positive = Some(positive);
                Ok(())
            }
            None => Err(SequenceError::NoSuchFrame {
                sequence_id: self.sequence_id.clone(),
                index,
            }),
        }
    }
}

/// How a closed sequence becomes a boolean: true iff at least `k` frames
/// were positive. `k = 1` is plain OR over the frames.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationPolicy {
    pub k: u32,
    pub idle_timeout_ms: u64,
}

impl Default for AggregationPolicy {
    fn default() -> Self {
        AggregationPolicy {
            k: 1,
            idle_timeout_ms: 5000,
        }
    }
}

/// The boolean sensor value a closed sequence produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub camera_id: String,
    pub sequence_id: String,
    pub value: bool,
    pub frame_count: u32,
    pub positive_frames: u32,
    /// positive/total as a percentage, rounded half-up to 2 decimals.
    pub detection_percent: f64,
    pub closed_at: TimestampMs,
}

/// Tracker limits. `max_sequence_frames` bounds memory under a stuck
/// camera that never goes idle.
#[derive(Debug, Clone)]
pub struct TrackerConfig {
    pub idle_timeout_ms: u64,
    pub max_sequence_frames: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            idle_timeout_ms: 5000,
            max_sequence_frames: 1000,
        }
    }
}

/// What [`SequenceTracker::ingest_frame`] hands back.
#[derive(Debug)]
pub struct IngestAck {
    pub sequence_id: String,
    pub frame_index: u32,
    /// Relative storage path assigned to the frame.
    pub storage_path: String,
    /// The previously open sequence, when this frame's gap closed it.
    pub closed_previous: Option<SequenceBuffer>,
}

/// Per-camera sequence state. Callers serialize access per camera (a
/// mutex around the tracker does); different cameras never interact.
#[derive(Debug)]
pub struct SequenceTracker {
    config: TrackerConfig,
    cameras: HashMap<String, CameraState>,
    next_sequence: u64,
}

#[derive(Debug, Default)]
struct CameraState {
    open: Option<SequenceBuffer>,
}

impl SequenceTracker {
    pub fn new(config: TrackerConfig) -> Self {
        SequenceTracker {
            config,
            cameras: HashMap::new(),
            next_sequence: 0,
        }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Makes a camera known to the tracker. Idempotent.
    pub fn register_camera(&mut self, camera_id: &str) {
        self.cameras.entry(camera_id.to_string()).or_default();
    }

    pub fn is_registered(&self, camera_id: &str) -> bool {
        self.cameras.contains_key(camera_id)
    }

    /// Routes one frame. Within the idle window it joins the camera's open
    /// sequence; a gap of `idle_timeout_ms` or more closes that sequence
    /// (returned in the ack) and opens a fresh one. At the frame cap the
    /// frame is rejected and the sequence force-closed via the error.
    pub fn ingest_frame(
        &mut self,
        camera_id: &str,
        ext: &str,
        now: TimestampMs,
    ) -> Result<IngestAck, SequenceError> {
        let idle = self.config.idle_timeout_ms;
        let cap = self.config.max_sequence_frames;
        let next_sequence = &mut self.next_sequence;
        let state = self
            .cameras
            .get_mut(camera_id)
            .ok_or_else(|| SequenceError::UnknownCamera(camera_id.to_string()))?;

        let mut closed_previous = None;
        if let Some(open) = state.open.as_mut() {
            // clock skew: never step backwards within a sequence
            let arrival = now.max(open.last_arrival);
            if arrival - open.last_arrival < idle {
                if open.frames.len() >= cap {
                    let mut closed = state.open.take().expect("open sequence present");
                    closed.closed_at = Some(now);
                    return Err(SequenceError::SequenceOverflow {
                        sequence_id: closed.sequence_id.clone(),
                        cap,
                        closed: Box::new(closed),
                    });
                }
                let index = open.frames.len() as u32;
                let storage_path = frame_storage_path(camera_id, &open.sequence_id, index, ext);
                open.frames.push(FrameRecord {
                    arrival_time: arrival,
                    storage_path: storage_path.clone(),
                    frame_positive: None,
                });
                open.last_arrival = arrival;
                return Ok(IngestAck {
                    sequence_id: open.sequence_id.clone(),
                    frame_index: index,
                    storage_path,
                    closed_previous: None,
                });
            }
            let mut closed = state.open.take().expect("open sequence present");
            closed.closed_at = Some(now);
            closed_previous = Some(closed);
        }

        let sequence_id = format!("s{now}-{}", *next_sequence);
        *next_sequence += 1;
        let storage_path = frame_storage_path(camera_id, &sequence_id, 0, ext);
        state.open = Some(SequenceBuffer {
            sequence_id: sequence_id.clone(),
            camera_id: camera_id.to_string(),
            frames: vec![FrameRecord {
                arrival_time: now,
                storage_path: storage_path.clone(),
                frame_positive: None,
            }],
            opened_at: now,
            last_arrival: now,
            closed_at: None,
        });
        Ok(IngestAck {
            sequence_id,
            frame_index: 0,
            storage_path,
            closed_previous,
        })
    }

    /// Drops the most recently ingested frame of the camera's open
    /// sequence. For callers whose durable write failed right after
    /// [`Self::ingest_frame`]; an empty sequence is removed entirely.
    pub fn abort_last_frame(&mut self, camera_id: &str) {
        if let Some(state) = self.cameras.get_mut(camera_id) {
            if let Some(open) = state.open.as_mut() {
                open.frames.pop();
                if open.frames.is_empty() {
                    state.open = None;
                } else if let Some(last) = open.frames.last() {
                    open.last_arrival = last.arrival_time;
                }
            }
        }
    }

    /// Closes and returns every open sequence idle for `idle_timeout_ms`
    /// or longer.
    pub fn close_idle(&mut self, now: TimestampMs) -> Vec<SequenceBuffer> {
        let idle = self.config.idle_timeout_ms;
        let mut closed = Vec::new();
        for state in self.cameras.values_mut() {
            let is_idle = state
                .open
                .as_ref()
                .is_some_and(|open| now.saturating_sub(open.last_arrival) >= idle);
            if is_idle {
                let mut buffer = state.open.take().expect("open sequence present");
                buffer.closed_at = Some(now);
                closed.push(buffer);
            }
        }
        closed.sort_by(|a, b| a.sequence_id.cmp(&b.sequence_id));
        closed
    }

    /// Applies a detector verdict to a frame of a still-open sequence.
    /// Returns false when that sequence is no longer open here, in which
    /// case the caller owns the closed buffer and applies the result there.
    pub fn set_frame_result(
        &mut self,
        camera_id: &str,
        sequence_id: &str,
        frame_index: usize,
        positive: bool,
    ) -> bool {
        let Some(state) = self.cameras.get_mut(camera_id) else {
            return false;
        };
        let Some(open) = state.open.as_mut() else {
            return false;
        };
        if open.sequence_id != sequence_id {
            return false;
        }
        open.set_frame_result(frame_index, positive).is_ok()
    }

    pub fn open_sequence(&self, camera_id: &str) -> Option<&SequenceBuffer> {
        self.cameras.get(camera_id).and_then(|s| s.open.as_ref())
    }
}

/// Canonical frame location relative to the data root.
pub fn frame_storage_path(camera_id: &str, sequence_id: &str, index: u32, ext: &str) -> String {
    format!("{camera_id}/{sequence_id}/{index:05}.{ext}")
}

/// The k-of-n rule over per-frame verdicts.
pub fn classify_sequence(
    frame_positives: &[bool],
    policy: &AggregationPolicy,
) -> Result<bool, SequenceError> {
    if frame_positives.is_empty() {
        return Err(SequenceError::EmptySequence);
    }
    let positives = frame_positives.iter().filter(|&&p| p).count() as u32;
    Ok(positives >= policy.k)
}

/// Percentage with two decimals, rounded half up, computed in integers.
fn percent_2dp(numerator: u32, denominator: u32) -> f64 {
    let scaled =
        (20_000 * u64::from(numerator) + u64::from(denominator)) / (2 * u64::from(denominator));
    scaled as f64 / 100.0
}

/// Collapses a closed, fully classified sequence into its sensor reading.
pub fn emit_reading(
    buffer: &SequenceBuffer,
    policy: &AggregationPolicy,
) -> Result<SensorReading, SequenceError> {
    let Some(closed_at) = buffer.closed_at else {
        return Err(SequenceError::SequenceStillOpen {
            sequence_id: buffer.sequence_id.clone(),
        });
    };
    if buffer.frames.is_empty() {
        return Err(SequenceError::EmptySequence);
    }
    let missing = buffer.unclassified();
    if missing > 0 {
        return Err(SequenceError::IncompleteClassification {
            sequence_id: buffer.sequence_id.clone(),
            missing,
        });
    }
    let frame_count = buffer.frames.len() as u32;
    let positive_frames = buffer
        .frames
        .iter()
        .filter(|f| f.frame_positive == Some(true))
        .count() as u32;
    Ok(SensorReading {
        camera_id: buffer.camera_id.clone(),
        sequence_id: buffer.sequence_id.clone(),
        value: positive_frames >= policy.k,
        frame_count,
        positive_frames,
        detection_percent: percent_2dp(positive_frames, frame_count),
        closed_at,
    })
}
