//! Per-frame segmentation backends behind one contract.
//!
//! A backend turns a frame (or an aligned region of it) into a per-class
//! [`ScoreMap`] at its output stride. The pipeline stays agnostic of what is
//! behind the contract: the ground-truth oracle with controllable
//! corruption, the color-rule segmenter, a spawned external process, or any
//! of them wrapped with an artificial latency for timing experiments.

mod external;

pub use external::{read_tlfr, read_tlsc, write_tlfr, write_tlsc, ExternalSegmenter};

use thiserror::Error;

use crate::bench::LabelMap;
use crate::codec::FrameBuffer;
use crate::guidance::Region;
use crate::warp::ScoreMap;

#[derive(Debug, Error)]
pub enum SegmenterError {
    #[error("region {name}={value} is not aligned to the output stride {stride}")]
    UnalignedRegion {
        name: &'static str,
        value: usize,
        stride: usize,
    },
    #[error("region {x0},{y0} {w}x{h} extends outside the {fw}x{fh} frame")]
    RegionOutOfBounds {
        x0: usize,
        y0: usize,
        w: usize,
        h: usize,
        fw: usize,
        fh: usize,
    },
    #[error("frame {0}x{1} is not divisible by the output stride {2}")]
    StrideMismatch(usize, usize, usize),
    #[error("no ground truth for frame {frame}")]
    MissingGroundTruth { frame: usize },
    #[error("ground-truth label {label} is not below the class count {classes}")]
    LabelOutOfRange { label: u8, classes: usize },
    #[error("ground truth {gw}x{gh} does not match frame {fw}x{fh}")]
    GroundTruthShape {
        gw: usize,
        gh: usize,
        fw: usize,
        fh: usize,
    },
    #[error("empty palette")]
    EmptyPalette,
    #[error("corruption rate {0} outside [0, 1]")]
    InvalidCorruptionRate(f64),
    #[error("external segmenter failed on frame {frame}: exit {code:?}{stderr}")]
    ProcessFailure {
        frame: usize,
        code: Option<i32>,
        stderr: String,
    },
    #[error("malformed score file for frame {frame}: {reason}")]
    MalformedScores { frame: usize, reason: String },
    #[error("score file for frame {frame} has shape {got_w}x{got_h}x{got_c}, expected {want_w}x{want_h}x{want_c}")]
    DimensionMismatch {
        frame: usize,
        got_w: usize,
        got_h: usize,
        got_c: usize,
        want_w: usize,
        want_h: usize,
        want_c: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The per-frame segmenter contract.
///
/// Implementations must be deterministic for identical inputs (and seed) and
/// safe to call concurrently on distinct frames.
pub trait Segmenter: Send + Sync {
    fn num_classes(&self) -> usize;

    /// Output stride: score-map cells cover `ds x ds` pixel footprints.
    fn output_stride(&self) -> usize;

    /// Segment a whole frame. `t` is the frame index within the sequence;
    /// backends with per-frame state (ground truth, seeding) key off it.
    fn segment_full(&self, t: usize, frame: &FrameBuffer) -> Result<ScoreMap, SegmenterError>;

    /// Segment an aligned region; equivalent to `segment_full` on the
    /// cropped pixels. The default implementation does exactly that.
    fn segment_region(
        &self,
        t: usize,
        frame: &FrameBuffer,
        region: Region,
    ) -> Result<ScoreMap, SegmenterError> {
        check_region(self.output_stride(), frame, region)?;
        let crop = frame.crop(region.x0, region.y0, region.w, region.h);
        self.segment_full(t, &crop)
    }
}

fn check_region(ds: usize, frame: &FrameBuffer, region: Region) -> Result<(), SegmenterError> {
    for (name, value) in [
        ("x0", region.x0),
        ("y0", region.y0),
        ("w", region.w),
        ("h", region.h),
    ] {
        if value % ds != 0 {
            return Err(SegmenterError::UnalignedRegion {
                name,
                value,
                stride: ds,
            });
        }
    }
    if region.w == 0
        || region.h == 0
        || region.x0 + region.w > frame.width
        || region.y0 + region.h > frame.height
    {
        return Err(SegmenterError::RegionOutOfBounds {
            x0: region.x0,
            y0: region.y0,
            w: region.w,
            h: region.h,
            fw: frame.width,
            fh: frame.height,
        });
    }
    Ok(())
}

fn check_stride(ds: usize, width: usize, height: usize) -> Result<(), SegmenterError> {
    if ds == 0 || !width.is_multiple_of(ds) || !height.is_multiple_of(ds) {
        return Err(SegmenterError::StrideMismatch(width, height, ds));
    }
    Ok(())
}

// ── Ground-truth oracle ─────────────────────────────────────────

/// Controls how far the oracle deviates from perfect ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Probability that a cell's scores are replaced by a one-hot of a
    /// uniformly chosen wrong class.
    pub corruption_rate: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            corruption_rate: 0.0,
            seed: 0,
        }
    }
}

/// Ground-truth-backed segmenter.
///
/// Each cell scores its classes by their pixel share of the cell's `ds x ds`
/// footprint, so the argmax is the majority label (ties to the lowest class
/// id) and cells straddling object boundaries carry soft scores the way a
/// real per-frame model would. Corruption decisions are keyed on
/// `(seed, frame, absolute cell)` alone, which keeps the oracle local:
/// region outputs equal the cropped full-frame outputs cell for cell.
pub struct OracleSegmenter {
    labels: Vec<LabelMap>,
    num_classes: usize,
    ds: usize,
    cfg: OracleConfig,
}

fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn cell_hash(seed: u64, t: usize, cx: usize, cy: usize) -> u64 {
    let mut h = mix64(seed ^ 0x7461_7076);
    h = mix64(h ^ (t as u64 + 1));
    h = mix64(h ^ (cy as u64 + 1));
    mix64(h ^ (cx as u64 + 1))
}

#[inline]
fn unit_from_hash(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

impl OracleSegmenter {
    pub fn new(
        labels: Vec<LabelMap>,
        num_classes: usize,
        ds: usize,
        cfg: OracleConfig,
    ) -> Result<Self, SegmenterError> {
        if !(0.0..=1.0).contains(&cfg.corruption_rate) {
            return Err(SegmenterError::InvalidCorruptionRate(cfg.corruption_rate));
        }
        for map in &labels {
            check_stride(ds, map.width, map.height)?;
            if let Some(&label) = map.labels.iter().find(|&&l| l as usize >= num_classes) {
                return Err(SegmenterError::LabelOutOfRange {
                    label,
                    classes: num_classes,
                });
            }
        }
        Ok(Self {
            labels,
            num_classes,
            ds,
            cfg,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.labels.len()
    }

    /// Score the cells of an arbitrary pixel window of frame `t`.
    /// `(px0, py0)` is the window origin; it must be stride-aligned so cells
    /// keep absolute grid coordinates.
    fn score_window(
        &self,
        t: usize,
        px0: usize,
        py0: usize,
        w: usize,
        h: usize,
    ) -> Result<ScoreMap, SegmenterError> {
        let gt = self
            .labels
            .get(t)
            .ok_or(SegmenterError::MissingGroundTruth { frame: t })?;
        let ds = self.ds;
        let classes = self.num_classes;
        let (cw, ch) = (w / ds, h / ds);
        let mut out = ScoreMap::zeros(cw, ch, classes, ds);
        let mut counts = vec![0u32; classes];
        for cy in 0..ch {
            for cx in 0..cw {
                counts.fill(0);
                for dy in 0..ds {
                    for dx in 0..ds {
                        let label = gt.at(px0 + cx * ds + dx, py0 + cy * ds + dy);
                        counts[label as usize] += 1;
                    }
                }
                let cell = out.cell_mut(cx, cy);
                let abs_cx = px0 / ds + cx;
                let abs_cy = py0 / ds + cy;
                let h = cell_hash(self.cfg.seed, t, abs_cx, abs_cy);
                if unit_from_hash(h) < self.cfg.corruption_rate && classes > 1 {
                    let majority = counts
                        .iter()
                        .enumerate()
                        .max_by_key(|&(c, &n)| (n, std::cmp::Reverse(c)))
                        .map(|(c, _)| c)
                        .unwrap();
                    let pick = (mix64(h) % (classes as u64 - 1)) as usize;
                    let wrong = pick + usize::from(pick >= majority);
                    cell[wrong] = 1.0;
                } else {
                    let total = (ds * ds) as f32;
                    for (c, &n) in counts.iter().enumerate() {
                        cell[c] = n as f32 / total;
                    }
                }
            }
        }
        Ok(out)
    }
}

impl Segmenter for OracleSegmenter {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn output_stride(&self) -> usize {
        self.ds
    }

    fn segment_full(&self, t: usize, frame: &FrameBuffer) -> Result<ScoreMap, SegmenterError> {
        check_stride(self.ds, frame.width, frame.height)?;
        let gt = self
            .labels
            .get(t)
            .ok_or(SegmenterError::MissingGroundTruth { frame: t })?;
        if gt.width != frame.width || gt.height != frame.height {
            return Err(SegmenterError::GroundTruthShape {
                gw: gt.width,
                gh: gt.height,
                fw: frame.width,
                fh: frame.height,
            });
        }
        self.score_window(t, 0, 0, frame.width, frame.height)
    }

    fn segment_region(
        &self,
        t: usize,
        frame: &FrameBuffer,
        region: Region,
    ) -> Result<ScoreMap, SegmenterError> {
        check_region(self.ds, frame, region)?;
        self.score_window(t, region.x0, region.y0, region.w, region.h)
    }
}

// ── Color-rule segmenter ────────────────────────────────────────

/// Score below every real distance negation; fills classes without a
/// palette entry.
const NO_PALETTE_SCORE: f32 = -1.0e6;

/// A real (non-oracle) backend: per cell, the score of each class is the
/// negated Euclidean distance from the cell's mean RGB to that class's
/// palette center, so closer colors score higher.
pub struct ColorRuleSegmenter {
    palette: Vec<([u8; 3], u8)>,
    num_classes: usize,
    ds: usize,
}

impl ColorRuleSegmenter {
    pub fn new(palette: Vec<([u8; 3], u8)>, ds: usize) -> Result<Self, SegmenterError> {
        if palette.is_empty() {
            return Err(SegmenterError::EmptyPalette);
        }
        let num_classes = palette.iter().map(|&(_, c)| c as usize + 1).max().unwrap();
        Ok(Self {
            palette,
            num_classes,
            ds,
        })
    }
}

impl Segmenter for ColorRuleSegmenter {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn output_stride(&self) -> usize {
        self.ds
    }

    fn segment_full(&self, _t: usize, frame: &FrameBuffer) -> Result<ScoreMap, SegmenterError> {
        check_stride(self.ds, frame.width, frame.height)?;
        let ds = self.ds;
        let (cw, ch) = (frame.width / ds, frame.height / ds);
        let mut out = ScoreMap::zeros(cw, ch, self.num_classes, ds);
        for cy in 0..ch {
            for cx in 0..cw {
                let mut sum = [0u32; 3];
                for dy in 0..ds {
                    for dx in 0..ds {
                        let rgb = frame.rgb(cx * ds + dx, cy * ds + dy);
                        for ch_i in 0..3 {
                            sum[ch_i] += rgb[ch_i] as u32;
                        }
                    }
                }
                let n = (ds * ds) as f32;
                let mean = [sum[0] as f32 / n, sum[1] as f32 / n, sum[2] as f32 / n];
                let cell = out.cell_mut(cx, cy);
                cell.fill(NO_PALETTE_SCORE);
                for &(center, class) in &self.palette {
                    let dist = (0..3)
                        .map(|i| {
                            let d = mean[i] - center[i] as f32;
                            d * d
                        })
                        .sum::<f32>()
                        .sqrt();
                    // A class with several centers keeps its closest one.
                    cell[class as usize] = cell[class as usize].max(-dist);
                }
            }
        }
        Ok(out)
    }
}

// ── Constant backend ────────────────────────────────────────────

/// Emits the same one-hot class everywhere. Handy as the inner backend of
/// latency experiments and as the reference behavior of the external stub.
pub struct ConstantSegmenter {
    pub class_id: usize,
    pub num_classes: usize,
    pub ds: usize,
}

impl Segmenter for ConstantSegmenter {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn output_stride(&self) -> usize {
        self.ds
    }

    fn segment_full(&self, _t: usize, frame: &FrameBuffer) -> Result<ScoreMap, SegmenterError> {
        check_stride(self.ds, frame.width, frame.height)?;
        let mut out = ScoreMap::zeros(
            frame.width / self.ds,
            frame.height / self.ds,
            self.num_classes,
            self.ds,
        );
        for i in 0..out.width_s * out.height_s {
            out.scores[i * self.num_classes + self.class_id] = 1.0;
        }
        Ok(out)
    }
}

// ── Latency injection ───────────────────────────────────────────

/// Wraps any backend with a fixed full-frame latency; region calls cost time
/// proportional to their pixel share. Makes the GOP timing model measurable
/// without a real model.
pub struct FixedLatency<S> {
    inner: S,
    full_ms: f64,
}

impl<S: Segmenter> FixedLatency<S> {
    pub fn new(inner: S, full_ms: f64) -> Self {
        Self { inner, full_ms }
    }
}

impl<S: Segmenter> Segmenter for FixedLatency<S> {
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    fn output_stride(&self) -> usize {
        self.inner.output_stride()
    }

    fn segment_full(&self, t: usize, frame: &FrameBuffer) -> Result<ScoreMap, SegmenterError> {
        std::thread::sleep(std::time::Duration::from_secs_f64(self.full_ms / 1000.0));
        self.inner.segment_full(t, frame)
    }

    fn segment_region(
        &self,
        t: usize,
        frame: &FrameBuffer,
        region: Region,
    ) -> Result<ScoreMap, SegmenterError> {
        let share = (region.w * region.h) as f64 / (frame.width * frame.height) as f64;
        std::thread::sleep(std::time::Duration::from_secs_f64(
            self.full_ms * share / 1000.0,
        ));
        self.inner.segment_region(t, frame, region)
    }
}
