//! Compressed-domain semantic video label propagation.
//!
//! The crate is built around a toy lossless GOP codec (the `TAPV` container)
//! whose motion vectors and residuals drive three inference-time modules:
//!
//! - [`warp`]: fast feature warping, shifting the previous frame's score map
//!   through the current motion field instead of re-running a segmenter.
//! - [`guidance`]: residual-guided correction (pick the worst region of a
//!   warped frame and re-segment it) and residual-guided frame selection
//!   (treat high-residual frames as keyframes).
//! - [`pipeline`]: the per-frame orchestration over a decoded stream, with
//!   the module combinations toggleable.
//!
//! [`segmenters`] supplies pluggable per-frame backends (ground-truth oracle,
//! color rule, external process) and [`bench`] the synthetic moving-sprite
//! corpus plus mIoU / latency evaluation.

pub mod bench;
pub mod codec;
pub mod guidance;
pub mod pipeline;
pub mod segmenters;
pub mod warp;

pub use codec::{FrameBuffer, MotionField, MotionVector, ResidualMap, TapvStream};
pub use warp::{CellMotionField, ScoreMap};
