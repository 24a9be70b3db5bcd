//! Per-frame orchestration over a TAPV stream.
//!
//! I-records are always fully segmented. For every P-record, in order:
//! residual-guided frame selection may promote the frame to a keyframe
//! (full segmentation, no warping), otherwise the previous frame's published
//! score map is warped through the motion field, and residual-guided
//! correction may re-segment the worst region and blend it back in. The map
//! a frame publishes (after any correction) is what the next frame warps.

use std::time::Instant;

use thiserror::Error;

use crate::bench::{predict_avg_time, AccuracyMetrics, LabelMap};
use crate::codec::{motion_compensate_decode, CodecError, FrameBuffer, FrameRecord, TapvStream};
use crate::guidance::{
    align_region_to, blend_region, rgc_select, rgfs_score, select_keyframe, FrameSelectConfig,
    GuidanceError, Region, RegionGridConfig,
};
use crate::segmenters::{Segmenter, SegmenterError};
use crate::warp::{downscale_motion_field, ffw_warp, ScoreMap, WarpError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid module combination: RGC and RGFS require FFW")]
    InvalidModuleCombination,
    #[error("stream/backend mismatch: {0}")]
    BackendMismatch(String),
    #[error("stream has no frames")]
    EmptyStream,
    #[error("frame {frame}: P-record has no reference frame")]
    MissingReference { frame: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error("backend failed on frame {frame}: {source}")]
    Backend {
        frame: usize,
        source: SegmenterError,
    },
}

/// Module toggles. The valid combinations are the per-frame baseline (all
/// off) and FFW with any subset of {RGC, RGFS} on top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModuleFlags {
    pub ffw: bool,
    pub rgc: bool,
    pub rgfs: bool,
}

impl ModuleFlags {
    pub const PER_FRAME: Self = Self {
        ffw: false,
        rgc: false,
        rgfs: false,
    };
    pub const FFW: Self = Self {
        ffw: true,
        rgc: false,
        rgfs: false,
    };
    pub const FFW_RGC: Self = Self {
        ffw: true,
        rgc: true,
        rgfs: false,
    };
    pub const FFW_RGFS: Self = Self {
        ffw: true,
        rgc: false,
        rgfs: true,
    };
    pub const ALL: Self = Self {
        ffw: true,
        rgc: true,
        rgfs: true,
    };

    pub fn validate(&self) -> Result<(), PipelineError> {
        if (self.rgc || self.rgfs) && !self.ffw {
            return Err(PipelineError::InvalidModuleCombination);
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        if !self.ffw {
            return "per-frame".into();
        }
        let mut parts = vec!["ffw"];
        if self.rgc {
            parts.push("rgc");
        }
        if self.rgfs {
            parts.push("rgfs");
        }
        parts.join("+")
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub modules: ModuleFlags,
    pub region_cfg: RegionGridConfig,
    pub frame_cfg: FrameSelectConfig,
    pub alpha: f32,
    pub ds: usize,
    pub num_classes: usize,
    /// Overlap the RGC region segmentation with the warp of the same frame.
    /// Outputs are identical either way.
    pub parallel: bool,
}

impl PipelineConfig {
    /// Defaults for a stream: geometry and thresholds scaled to its frame
    /// size, blend weight 0.7, output stride 4.
    pub fn for_stream(stream: &TapvStream, modules: ModuleFlags, num_classes: usize) -> Self {
        let (w, h) = (stream.header.width, stream.header.height);
        Self {
            modules,
            region_cfg: RegionGridConfig::scaled_for(w, h),
            frame_cfg: FrameSelectConfig::scaled_for(w, h),
            alpha: 0.7,
            ds: 4,
            num_classes,
            parallel: false,
        }
    }
}

/// How a frame's score map was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    /// I-record, full segmentation.
    Intra,
    /// P-record promoted by RGFS, full segmentation.
    Keyframe,
    /// P-record fully segmented because FFW is off (per-frame baseline).
    FullP,
    /// P-record propagated by FFW (with or without RGC).
    Warped,
}

impl FrameKind {
    pub fn is_full_segmentation(&self) -> bool {
        !matches!(self, FrameKind::Warped)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FrameStat {
    pub kind: FrameKind,
    /// Segmentation-path time: warp, selection, region segmentation,
    /// blending, and label extraction. Decode is reported separately.
    pub seg_ms: f64,
    pub decode_ms: f64,
}

/// Everything a run reports besides the label maps themselves.
#[derive(Debug, Clone, Default)]
pub struct RunMetrics {
    pub frame_stats: Vec<FrameStat>,
    /// P-frames promoted to keyframes by RGFS.
    pub keyframes: usize,
    /// Aligned regions corrected by RGC, per frame index.
    pub corrected_regions: Vec<(usize, Region)>,
    /// Backend failures that were absorbed by falling back to propagation.
    pub fallbacks: Vec<String>,
    /// Wall time of the whole run loop, seconds.
    pub total_seconds: f64,
    /// Filled by the caller once ground truth is available.
    pub accuracy: Option<AccuracyMetrics>,
}

impl RunMetrics {
    pub fn frame_count(&self) -> usize {
        self.frame_stats.len()
    }

    pub fn mean_fps(&self) -> f64 {
        if self.total_seconds > 0.0 {
            self.frame_count() as f64 / self.total_seconds
        } else {
            0.0
        }
    }

    pub fn p_frame_count(&self) -> usize {
        self.frame_stats
            .iter()
            .filter(|s| s.kind != FrameKind::Intra)
            .count()
    }

    /// Percentage of P-frames promoted to keyframes.
    pub fn keyframe_pct(&self) -> f64 {
        let p = self.p_frame_count();
        if p == 0 {
            0.0
        } else {
            100.0 * self.keyframes as f64 / p as f64
        }
    }

    fn mean_seg_ms(&self, full: bool) -> f64 {
        let times: Vec<f64> = self
            .frame_stats
            .iter()
            .filter(|s| s.kind.is_full_segmentation() == full)
            .map(|s| s.seg_ms)
            .collect();
        if times.is_empty() {
            0.0
        } else {
            times.iter().sum::<f64>() / times.len() as f64
        }
    }
}

/// Nearest-neighbor upsampling of the per-cell argmax to pixel resolution.
pub fn score_to_labels(map: &ScoreMap, width: usize, height: usize) -> LabelMap {
    let ds = map.ds;
    let mut cell_labels = vec![0u8; map.width_s * map.height_s];
    for cy in 0..map.height_s {
        for cx in 0..map.width_s {
            cell_labels[cy * map.width_s + cx] = map.argmax(cx, cy) as u8;
        }
    }
    let mut out = LabelMap::filled(width, height, 0);
    for y in 0..height {
        let cy = (y / ds).min(map.height_s - 1);
        for x in 0..width {
            let cx = (x / ds).min(map.width_s - 1);
            out.set(x, y, cell_labels[cy * map.width_s + cx]);
        }
    }
    out
}

fn check_backend<S: Segmenter + ?Sized>(
    stream: &TapvStream,
    backend: &S,
    cfg: &PipelineConfig,
) -> Result<(), PipelineError> {
    let mismatch = |msg: String| Err(PipelineError::BackendMismatch(msg));
    if backend.num_classes() != cfg.num_classes {
        return mismatch(format!(
            "backend has {} classes, config expects {}",
            backend.num_classes(),
            cfg.num_classes
        ));
    }
    if cfg.num_classes == 0 || cfg.num_classes > 256 {
        return mismatch(format!("class count {} outside 1..=256", cfg.num_classes));
    }
    if backend.output_stride() != cfg.ds {
        return mismatch(format!(
            "backend stride {} differs from config stride {}",
            backend.output_stride(),
            cfg.ds
        ));
    }
    let (w, h) = (stream.header.width, stream.header.height);
    if cfg.ds == 0 || w % cfg.ds != 0 || h % cfg.ds != 0 {
        return mismatch(format!("frame {w}x{h} not divisible by stride {}", cfg.ds));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return mismatch(format!("alpha {} outside [0, 1]", cfg.alpha));
    }
    Ok(())
}

/// Full segmentation with the contract's failure policy: the first frame
/// must succeed; later frames absorb backend failures by carrying the
/// previous published map (warped through the motion field when one exists).
#[allow(clippy::too_many_arguments)]
fn full_segment_or_fallback<S: Segmenter + ?Sized>(
    backend: &S,
    t: usize,
    frame: &FrameBuffer,
    record: &FrameRecord,
    prev_score: Option<&ScoreMap>,
    cfg: &PipelineConfig,
    fallbacks: &mut Vec<String>,
) -> Result<ScoreMap, PipelineError> {
    match backend.segment_full(t, frame) {
        Ok(map) => Ok(map),
        Err(source) => match prev_score {
            Some(prev) if t > 0 => {
                fallbacks.push(format!(
                    "frame {t}: backend failed ({source}); kept propagated scores"
                ));
                match record {
                    FrameRecord::P { mv, .. } => {
                        let cmv = downscale_motion_field(
                            mv,
                            cfg.ds,
                            frame.width / cfg.ds,
                            frame.height / cfg.ds,
                        )?;
                        Ok(ffw_warp(prev, &cmv)?)
                    }
                    FrameRecord::I(_) => Ok(prev.clone()),
                }
            }
            _ => Err(PipelineError::Backend { frame: t, source }),
        },
    }
}

/// Run the inference loop over a stream.
///
/// Returns one label map per frame, in frame order, plus run metrics.
/// Identical inputs produce identical outputs regardless of `cfg.parallel`.
pub fn run_pipeline<S: Segmenter + ?Sized>(
    stream: &TapvStream,
    backend: &S,
    cfg: &PipelineConfig,
) -> Result<(Vec<LabelMap>, RunMetrics), PipelineError> {
    cfg.modules.validate()?;
    check_backend(stream, backend, cfg)?;
    if stream.frames.is_empty() {
        return Err(PipelineError::EmptyStream);
    }

    let (w, h) = (stream.header.width, stream.header.height);
    let (cells_w, cells_h) = (w / cfg.ds, h / cfg.ds);

    let mut labels = Vec::with_capacity(stream.frames.len());
    let mut metrics = RunMetrics::default();
    let mut prev_frame: Option<FrameBuffer> = None;
    let mut prev_score: Option<ScoreMap> = None;

    let run_start = Instant::now();
    for (t, record) in stream.frames.iter().enumerate() {
        let decode_start = Instant::now();
        let frame = match record {
            FrameRecord::I(frame) => frame.clone(),
            FrameRecord::P { mv, residual } => {
                let reference = prev_frame
                    .as_ref()
                    .ok_or(PipelineError::MissingReference { frame: t })?;
                motion_compensate_decode(reference, mv, residual)?
            }
        };
        let decode_ms = decode_start.elapsed().as_secs_f64() * 1000.0;

        let seg_start = Instant::now();
        let (score, kind) = match record {
            FrameRecord::I(_) => (
                full_segment_or_fallback(
                    backend,
                    t,
                    &frame,
                    record,
                    prev_score.as_ref(),
                    cfg,
                    &mut metrics.fallbacks,
                )?,
                FrameKind::Intra,
            ),
            FrameRecord::P { mv, residual } => {
                if !cfg.modules.ffw {
                    (
                        full_segment_or_fallback(
                            backend,
                            t,
                            &frame,
                            record,
                            prev_score.as_ref(),
                            cfg,
                            &mut metrics.fallbacks,
                        )?,
                        FrameKind::FullP,
                    )
                } else if cfg.modules.rgfs
                    && select_keyframe(rgfs_score(residual) as f64, &cfg.frame_cfg)
                {
                    metrics.keyframes += 1;
                    (
                        full_segment_or_fallback(
                            backend,
                            t,
                            &frame,
                            record,
                            prev_score.as_ref(),
                            cfg,
                            &mut metrics.fallbacks,
                        )?,
                        FrameKind::Keyframe,
                    )
                } else {
                    let prev = prev_score
                        .as_ref()
                        .ok_or(PipelineError::MissingReference { frame: t })?;
                    let cmv = downscale_motion_field(mv, cfg.ds, cells_w, cells_h)?;
                    let score = if cfg.modules.rgc {
                        let select_and_segment =
                            || -> Result<(Region, Result<ScoreMap, SegmenterError>), GuidanceError> {
                                let region = rgc_select(residual, &cfg.region_cfg)?;
                                let aligned = align_region_to(region, cfg.ds, w, h);
                                Ok((aligned, backend.segment_region(t, &frame, aligned)))
                            };
                        let (warped, selected) = if cfg.parallel {
                            rayon::join(|| ffw_warp(prev, &cmv), select_and_segment)
                        } else {
                            (ffw_warp(prev, &cmv), select_and_segment())
                        };
                        let warped = warped?;
                        let (aligned, region_scores) = selected?;
                        match region_scores {
                            Ok(recomputed) => {
                                metrics.corrected_regions.push((t, aligned));
                                blend_region(&warped, &recomputed, aligned, cfg.alpha)?
                            }
                            Err(e) => {
                                metrics.fallbacks.push(format!(
                                    "frame {t}: region segmentation failed ({e}); kept warped scores"
                                ));
                                warped
                            }
                        }
                    } else {
                        ffw_warp(prev, &cmv)?
                    };
                    (score, FrameKind::Warped)
                }
            }
        };
        labels.push(score_to_labels(&score, w, h));
        let seg_ms = seg_start.elapsed().as_secs_f64() * 1000.0;

        metrics.frame_stats.push(FrameStat {
            kind,
            seg_ms,
            decode_ms,
        });
        prev_score = Some(score);
        prev_frame = Some(frame);
    }
    metrics.total_seconds = run_start.elapsed().as_secs_f64();
    Ok((labels, metrics))
}

/// Measured mean latencies of the two frame populations.
#[derive(Debug, Clone, Copy)]
pub struct TimingModel {
    /// Mean segmentation-path time of fully segmented frames, ms.
    pub t_i_ms: f64,
    /// Mean segmentation-path time of propagated frames, ms.
    pub t_p_ms: f64,
}

#[derive(Debug, Clone)]
pub struct TimingReport {
    pub model: TimingModel,
    /// Mean segmentation-path time over all frames, ms.
    pub measured_avg_ms: f64,
    /// The GOP model evaluated at the measured T_I and T_P, ms.
    pub predicted_avg_ms: f64,
    /// Mean decode time, ms; reported separately from the model.
    pub decode_avg_ms: f64,
    pub fps: f64,
    pub full_frames: usize,
    pub propagated_frames: usize,
    pub metrics: RunMetrics,
}

/// Run the pipeline and partition per-frame wall times into fully segmented
/// and propagated frames, reporting the measured average next to the GOP
/// model's prediction from the measured means.
pub fn measure_timing<S: Segmenter + ?Sized>(
    stream: &TapvStream,
    backend: &S,
    cfg: &PipelineConfig,
) -> Result<TimingReport, PipelineError> {
    let (_, metrics) = run_pipeline(stream, backend, cfg)?;
    let t_i_ms = metrics.mean_seg_ms(true);
    let t_p_ms = metrics.mean_seg_ms(false);
    let n = metrics.frame_count() as f64;
    let measured_avg_ms = metrics.frame_stats.iter().map(|s| s.seg_ms).sum::<f64>() / n;
    let decode_avg_ms = metrics.frame_stats.iter().map(|s| s.decode_ms).sum::<f64>() / n;
    let predicted_avg_ms = predict_avg_time(stream.header.gop_size, t_i_ms, t_p_ms)
        .expect("gop size validated by the container");
    let full_frames = metrics
        .frame_stats
        .iter()
        .filter(|s| s.kind.is_full_segmentation())
        .count();
    Ok(TimingReport {
        model: TimingModel { t_i_ms, t_p_ms },
        measured_avg_ms,
        predicted_avg_ms,
        decode_avg_ms,
        fps: 1000.0 / measured_avg_ms.max(1e-9),
        full_frames,
        propagated_frames: metrics.frame_count() - full_frames,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{
        generate_synthetic_sequence, SpriteConfig, SpriteShape, SyntheticSceneConfig,
    };
    use crate::codec::encode_sequence;
    use crate::segmenters::{OracleConfig, OracleSegmenter};

    const CLASSES: usize = 4;

    fn scene(sprite_velocity: (i32, i32)) -> (Vec<FrameBuffer>, Vec<LabelMap>) {
        generate_synthetic_sequence(&SyntheticSceneConfig {
            width: 64,
            height: 64,
            frame_count: 12,
            num_classes: CLASSES,
            background_class: 0,
            sprites: vec![
                SpriteConfig {
                    shape: SpriteShape::Rectangle,
                    class_id: 1,
                    size: 20,
                    velocity: sprite_velocity,
                    start: Some((4, 10)),
                    entry_frame: None,
                },
                SpriteConfig {
                    shape: SpriteShape::Disk,
                    class_id: 2,
                    size: 18,
                    velocity: (0, 0),
                    start: Some((38, 36)),
                    entry_frame: None,
                },
            ],
            seed: 21,
        })
        .unwrap()
    }

    fn oracle(labels: &[LabelMap], rate: f64) -> OracleSegmenter {
        OracleSegmenter::new(
            labels.to_vec(),
            CLASSES,
            4,
            OracleConfig {
                corruption_rate: rate,
                seed: 5,
            },
        )
        .unwrap()
    }

    fn small_region_cfg() -> RegionGridConfig {
        RegionGridConfig {
            region_w: 32,
            region_h: 32,
            stride: 16,
            thr_rgc: 30,
        }
    }

    fn config(modules: ModuleFlags) -> PipelineConfig {
        PipelineConfig {
            modules,
            region_cfg: small_region_cfg(),
            frame_cfg: FrameSelectConfig::scaled_for(64, 64),
            alpha: 0.7,
            ds: 4,
            num_classes: CLASSES,
            parallel: false,
        }
    }

    #[test]
    fn static_scene_repeats_the_intra_frame_labels() {
        let (frames, labels) = scene((0, 0));
        let stream = encode_sequence(&frames, 12, 32).unwrap();
        // A static scene encodes to all-zero vectors and residuals.
        for record in &stream.frames {
            if let FrameRecord::P { mv, residual } = record {
                assert!(mv.vectors.iter().all(|v| v.dx == 0 && v.dy == 0));
                assert!(residual.values.iter().all(|&v| v == 0));
            }
        }
        let backend = oracle(&labels, 0.0);
        let (out, _) = run_pipeline(&stream, &backend, &config(ModuleFlags::FFW)).unwrap();
        for t in 1..out.len() {
            assert_eq!(out[t], out[0], "frame {t}");
        }
    }

    #[test]
    fn zero_residuals_select_no_keyframes() {
        let (frames, labels) = scene((0, 0));
        let stream = encode_sequence(&frames, 12, 32).unwrap();
        let backend = oracle(&labels, 0.0);
        let (_, metrics) = run_pipeline(&stream, &backend, &config(ModuleFlags::FFW_RGFS)).unwrap();
        assert_eq!(metrics.keyframes, 0);
    }

    #[test]
    fn per_frame_baseline_equals_independent_segmentation() {
        let (frames, labels) = scene((3, 1));
        let stream = encode_sequence(&frames, 6, 32).unwrap();
        let backend = oracle(&labels, 0.1);
        let (out, metrics) =
            run_pipeline(&stream, &backend, &config(ModuleFlags::PER_FRAME)).unwrap();
        for (t, frame) in frames.iter().enumerate() {
            let map = backend.segment_full(t, frame).unwrap();
            assert_eq!(out[t], score_to_labels(&map, 64, 64), "frame {t}");
        }
        assert!(metrics
            .frame_stats
            .iter()
            .all(|s| s.kind.is_full_segmentation()));
    }

    #[test]
    fn rgfs_keyframes_equal_full_segmentation_of_those_frames() {
        let (frames, labels) = scene((4, 2));
        let stream = encode_sequence(&frames, 12, 32).unwrap();
        let backend = oracle(&labels, 0.0);
        let mut cfg = config(ModuleFlags::FFW_RGFS);
        // Force plenty of keyframes.
        cfg.frame_cfg = FrameSelectConfig { thr_rgfs: 1000.0 };
        let (out, metrics) = run_pipeline(&stream, &backend, &cfg).unwrap();
        assert!(metrics.keyframes > 0);
        for (t, stat) in metrics.frame_stats.iter().enumerate() {
            if stat.kind == FrameKind::Keyframe {
                let map = backend.segment_full(t, &frames[t]).unwrap();
                assert_eq!(out[t], score_to_labels(&map, 64, 64), "frame {t}");
            }
        }
    }

    #[test]
    fn parallel_mode_produces_identical_output() {
        let (frames, labels) = scene((3, -2));
        let stream = encode_sequence(&frames, 6, 32).unwrap();
        let backend = oracle(&labels, 0.05);
        let serial_cfg = config(ModuleFlags::ALL);
        let mut parallel_cfg = config(ModuleFlags::ALL);
        parallel_cfg.parallel = true;
        let (serial, sm) = run_pipeline(&stream, &backend, &serial_cfg).unwrap();
        let (parallel, pm) = run_pipeline(&stream, &backend, &parallel_cfg).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(sm.keyframes, pm.keyframes);
        assert_eq!(sm.corrected_regions, pm.corrected_regions);
    }

    #[test]
    fn warp_source_is_the_corrected_map() {
        // With RGC on, a corrected region must influence the next frame's
        // warped output (the published map feeds the next warp).
        let (frames, labels) = scene((4, 0));
        let stream = encode_sequence(&frames, 12, 32).unwrap();
        let backend = oracle(&labels, 0.0);
        let with_rgc = run_pipeline(&stream, &backend, &config(ModuleFlags::FFW_RGC))
            .unwrap()
            .0;
        let without = run_pipeline(&stream, &backend, &config(ModuleFlags::FFW))
            .unwrap()
            .0;
        assert_ne!(with_rgc, without);
    }

    #[test]
    fn invalid_module_combinations_are_rejected() {
        let flags = ModuleFlags {
            ffw: false,
            rgc: true,
            rgfs: false,
        };
        assert!(matches!(
            flags.validate(),
            Err(PipelineError::InvalidModuleCombination)
        ));
        assert_eq!(ModuleFlags::ALL.label(), "ffw+rgc+rgfs");
        assert_eq!(ModuleFlags::PER_FRAME.label(), "per-frame");
    }

    #[test]
    fn backend_mismatch_is_rejected() {
        let (frames, labels) = scene((0, 0));
        let stream = encode_sequence(&frames, 12, 32).unwrap();
        let backend = oracle(&labels, 0.0);
        let mut cfg = config(ModuleFlags::FFW);
        cfg.num_classes = 7;
        assert!(matches!(
            run_pipeline(&stream, &backend, &cfg),
            Err(PipelineError::BackendMismatch(_))
        ));
    }

    #[test]
    fn timing_report_partitions_frames() {
        let (frames, labels) = scene((2, 2));
        let stream = encode_sequence(&frames, 4, 32).unwrap();
        let backend = oracle(&labels, 0.0);
        let report = measure_timing(&stream, &backend, &config(ModuleFlags::FFW)).unwrap();
        assert_eq!(report.full_frames, 3); // frames 0, 4, 8
        assert_eq!(report.propagated_frames, 9);
        assert!(report.measured_avg_ms >= 0.0);
        assert!(report.predicted_avg_ms >= 0.0);
    }

    #[test]
    fn gop_one_average_is_the_full_frame_time() {
        use crate::segmenters::{ConstantSegmenter, FixedLatency};
        let (frames, _) = scene((0, 0));
        let stream = encode_sequence(&frames[..6], 1, 32).unwrap();
        let backend = FixedLatency::new(
            ConstantSegmenter {
                class_id: 0,
                num_classes: CLASSES,
                ds: 4,
            },
            5.0,
        );
        let report = measure_timing(&stream, &backend, &config(ModuleFlags::FFW)).unwrap();
        assert_eq!(report.propagated_frames, 0);
        // With every frame an I-frame, the average is the intra time itself.
        assert_eq!(report.measured_avg_ms, report.model.t_i_ms);
        assert!((report.predicted_avg_ms - report.model.t_i_ms).abs() < 1e-9);
        assert!(report.model.t_i_ms >= 5.0);
    }
}
