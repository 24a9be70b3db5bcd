//! Desk-scale benchmark kit: deterministic moving-sprite sequences with
//! exact ground truth, the mIoU harness, and the GOP timing model.

mod metrics;
mod pnm;
mod synth;

pub use metrics::{evaluate_miou, predict_avg_time, AccuracyMetrics, RunRow, CSV_HEADER};
pub use pnm::{read_pgm, read_ppm, write_pgm, write_ppm};
pub use synth::{
    class_color, generate_synthetic_sequence, LabelMap, SpriteConfig, SpriteShape,
    SyntheticSceneConfig,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
    #[error("sprite {index} ({w}x{h}) larger than the {fw}x{fh} frame")]
    SpriteTooLarge {
        index: usize,
        w: usize,
        h: usize,
        fw: usize,
        fh: usize,
    },
    #[error("sprite {index} velocity ({vx},{vy}) exceeds the representable 16 px/frame")]
    VelocityTooLarge { index: usize, vx: i32, vy: i32 },
    #[error("prediction/ground-truth shape mismatch at frame {frame}")]
    ShapeMismatch { frame: usize },
    #[error("label {label} at frame {frame} is not below the class count {classes}")]
    LabelOutOfRange {
        frame: usize,
        label: u8,
        classes: usize,
    },
    #[error("GOP size must be >= 1")]
    InvalidGop,
    #[error("negative time value")]
    NegativeTime,
    #[error("malformed {kind} file: {reason}")]
    MalformedImage { kind: &'static str, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
