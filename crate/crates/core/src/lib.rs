//! Person detection over motion-triggered camera frames.
//!
//! The crate turns camera frames into a boolean "person present" sensor: a
//! from-scratch Haar-cascade detector scans each frame, frames are buffered
//! into per-camera motion sequences closed by an idle timeout, and each
//! closed sequence collapses to one boolean reading under a k-of-n rule. A
//! batch evaluation layer measures detector quality with per-picture and
//! per-sequence confusion matrices.
//!
//! Modules follow the pipeline order:
//!
//! - [`raster`]: grayscale images, netpbm codecs, integral tables, annotation
//! - [`cascade`]: cascade classifier models, the classic XML format, and a
//!   line-oriented synthetic format for testing
//! - [`detector`]: multi-scale sliding-window evaluation and rectangle
//!   grouping
//! - [`sequence`]: per-camera frame sequences, idle-timeout close, and
//!   sensor readings
//! - [`eval`]: confusion matrices, percentage formatting, and the two-phase
//!   batch evaluation over labeled corpora

pub mod cascade;
pub mod detector;
pub mod eval;
pub mod raster;
pub mod sequence;
