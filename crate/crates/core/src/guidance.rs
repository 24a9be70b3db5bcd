//! Residual-guided scheduling: pick the region a warped frame got most wrong
//! (RGC), blend its re-segmentation back in, and promote whole frames to
//! keyframes when their total residual magnitude is too high (RGFS).
//!
//! The per-pixel residual magnitude used throughout is the channel-summed L1
//! norm `|r| + |g| + |b|`.

use thiserror::Error;

use crate::codec::ResidualMap;
use crate::warp::ScoreMap;

/// Reference frame size for the default RGFS threshold.
const REFERENCE_PIXELS: f64 = 1024.0 * 2048.0;

#[derive(Debug, Error)]
pub enum GuidanceError {
    #[error("region {x0},{y0} {w}x{h} extends outside the {fw}x{fh} frame")]
    RegionOutOfBounds {
        x0: usize,
        y0: usize,
        w: usize,
        h: usize,
        fw: usize,
        fh: usize,
    },
    #[error("frame {fw}x{fh} is smaller than one {rw}x{rh} region")]
    FrameSmallerThanRegion {
        fw: usize,
        fh: usize,
        rw: usize,
        rh: usize,
    },
    #[error(
        "recomputed map {got_w}x{got_h} does not cover the region footprint {want_w}x{want_h}"
    )]
    FootprintMismatch {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("region coordinate {0} is not aligned to stride {1}")]
    UnalignedRegion(usize, usize),
    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f32),
    #[error("class counts differ: {0} vs {1}")]
    ClassMismatch(usize, usize),
    #[error("empty score list")]
    EmptyScores,
    #[error("target fraction {0} outside [0, 1]")]
    InvalidTarget(f64),
}

/// Axis-aligned pixel rectangle, `x0, y0` top-left inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Region {
    pub fn new(x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Self { x0, y0, w, h }
    }

    fn check_inside(&self, fw: usize, fh: usize) -> Result<(), GuidanceError> {
        if self.w == 0 || self.h == 0 || self.x0 + self.w > fw || self.y0 + self.h > fh {
            return Err(GuidanceError::RegionOutOfBounds {
                x0: self.x0,
                y0: self.y0,
                w: self.w,
                h: self.h,
                fw,
                fh,
            });
        }
        Ok(())
    }
}

/// Candidate-region geometry and the per-pixel noise threshold for RGC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionGridConfig {
    pub region_w: usize,
    pub region_h: usize,
    /// Anchor spacing along each axis; at most the region side, so candidates
    /// tile or overlap.
    pub stride: usize,
    /// Channel-summed magnitude above which a pixel counts as inconsistent.
    pub thr_rgc: u32,
}

impl Default for RegionGridConfig {
    fn default() -> Self {
        Self {
            region_w: 512,
            region_h: 512,
            stride: 256,
            thr_rgc: 30,
        }
    }
}

impl RegionGridConfig {
    /// Default geometry scaled to a frame size: half the shorter side as the
    /// region, half of that as the stride. Reproduces the 512/256 defaults at
    /// 1024x2048 and keeps the candidate grid overlapping at any size.
    pub fn scaled_for(width: usize, height: usize) -> Self {
        let short = width.min(height);
        let region = (short / 2).max(32) / 16 * 16;
        Self {
            region_w: region.min(width),
            region_h: region.min(height),
            stride: (region / 2).max(16),
            thr_rgc: 30,
        }
    }
}

/// RGFS keyframe threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSelectConfig {
    pub thr_rgfs: f64,
}

impl Default for FrameSelectConfig {
    fn default() -> Self {
        Self { thr_rgfs: 3.6e7 }
    }
}

impl FrameSelectConfig {
    /// The default threshold rescaled by pixel count: the frame score is an
    /// unnormalized sum, so it grows linearly with frame area.
    pub fn scaled_for(width: usize, height: usize) -> Self {
        Self {
            thr_rgfs: 3.6e7 * (width * height) as f64 / REFERENCE_PIXELS,
        }
    }
}

#[inline]
fn magnitude(res: &ResidualMap, x: usize, y: usize) -> u32 {
    let [r, g, b] = res.at(x, y);
    r.unsigned_abs() as u32 + g.unsigned_abs() as u32 + b.unsigned_abs() as u32
}

/// Number of pixels in `region` whose channel-summed residual magnitude
/// strictly exceeds `thr`.
pub fn residual_exceedance_count(
    res: &ResidualMap,
    region: Region,
    thr: u32,
) -> Result<usize, GuidanceError> {
    region.check_inside(res.width, res.height)?;
    let mut count = 0;
    for y in region.y0..region.y0 + region.h {
        for x in region.x0..region.x0 + region.w {
            if magnitude(res, x, y) > thr {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Anchor positions along one axis: every `stride` step that keeps the region
/// inside, plus a final clamped anchor flush with the far edge.
fn anchor_positions(frame: usize, region: usize, stride: usize) -> Vec<usize> {
    let mut anchors = Vec::new();
    let mut a = 0;
    while a + region <= frame {
        anchors.push(a);
        a += stride;
    }
    if let Some(&last) = anchors.last() {
        if last + region < frame {
            anchors.push(frame - region);
        }
    }
    anchors
}

/// All candidate regions in row-major scan order (y anchors outer).
pub fn candidate_regions(
    frame_w: usize,
    frame_h: usize,
    cfg: &RegionGridConfig,
) -> Result<Vec<Region>, GuidanceError> {
    if cfg.region_w > frame_w || cfg.region_h > frame_h {
        return Err(GuidanceError::FrameSmallerThanRegion {
            fw: frame_w,
            fh: frame_h,
            rw: cfg.region_w,
            rh: cfg.region_h,
        });
    }
    let xs = anchor_positions(frame_w, cfg.region_w, cfg.stride.max(1));
    let ys = anchor_positions(frame_h, cfg.region_h, cfg.stride.max(1));
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &y0 in &ys {
        for &x0 in &xs {
            out.push(Region::new(x0, y0, cfg.region_w, cfg.region_h));
        }
    }
    Ok(out)
}

/// Select the candidate region with the most residual exceedances; ties go
/// to the smallest candidate index in scan order.
pub fn rgc_select(res: &ResidualMap, cfg: &RegionGridConfig) -> Result<Region, GuidanceError> {
    let candidates = candidate_regions(res.width, res.height, cfg)?;
    let mut best = candidates[0];
    let mut best_count = residual_exceedance_count(res, best, cfg.thr_rgc)?;
    for &candidate in &candidates[1..] {
        let count = residual_exceedance_count(res, candidate, cfg.thr_rgc)?;
        if count > best_count {
            best_count = count;
            best = candidate;
        }
    }
    Ok(best)
}

/// Expand a pixel region outward to the next multiple of `ds` on every side,
/// clamped to the frame.
pub fn align_region_to(region: Region, ds: usize, frame_w: usize, frame_h: usize) -> Region {
    let x0 = region.x0 / ds * ds;
    let y0 = region.y0 / ds * ds;
    let x1 = ((region.x0 + region.w).div_ceil(ds) * ds).min(frame_w);
    let y1 = ((region.y0 + region.h).div_ceil(ds) * ds).min(frame_h);
    Region::new(x0, y0, x1 - x0, y1 - y0)
}

/// Blend a recomputed region back into a warped map:
/// inside the region `out = (1 - alpha) * warped + alpha * recomputed`,
/// outside it the warped values pass through unchanged.
///
/// `recomputed` must cover exactly the region's cell footprint (the region
/// must be aligned to the score-map stride).
pub fn blend_region(
    warped: &ScoreMap,
    recomputed: &ScoreMap,
    region: Region,
    alpha: f32,
) -> Result<ScoreMap, GuidanceError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(GuidanceError::InvalidAlpha(alpha));
    }
    if recomputed.num_classes != warped.num_classes {
        return Err(GuidanceError::ClassMismatch(
            warped.num_classes,
            recomputed.num_classes,
        ));
    }
    let ds = warped.ds;
    for value in [region.x0, region.y0, region.w, region.h] {
        if value % ds != 0 {
            return Err(GuidanceError::UnalignedRegion(value, ds));
        }
    }
    let (cx0, cy0) = (region.x0 / ds, region.y0 / ds);
    let (cw, ch) = (region.w / ds, region.h / ds);
    if recomputed.width_s != cw || recomputed.height_s != ch {
        return Err(GuidanceError::FootprintMismatch {
            got_w: recomputed.width_s,
            got_h: recomputed.height_s,
            want_w: cw,
            want_h: ch,
        });
    }
    if cx0 + cw > warped.width_s || cy0 + ch > warped.height_s {
        return Err(GuidanceError::RegionOutOfBounds {
            x0: region.x0,
            y0: region.y0,
            w: region.w,
            h: region.h,
            fw: warped.width_s * ds,
            fh: warped.height_s * ds,
        });
    }

    let mut out = warped.clone();
    for ry in 0..ch {
        for rx in 0..cw {
            let dst = out.cell_mut(cx0 + rx, cy0 + ry);
            let src = recomputed.cell(rx, ry);
            for c in 0..dst.len() {
                dst[c] = (1.0 - alpha) * dst[c] + alpha * src[c];
            }
        }
    }
    Ok(out)
}

/// Frame-level residual score: the sum of absolute values over every pixel
/// and channel, in exact integer arithmetic.
pub fn rgfs_score(res: &ResidualMap) -> u64 {
    res.values.iter().map(|&v| v.unsigned_abs() as u64).sum()
}

/// A frame becomes a keyframe when its score strictly exceeds the threshold.
pub fn select_keyframe(score: f64, cfg: &FrameSelectConfig) -> bool {
    score > cfg.thr_rgfs
}

/// Empirical nearest-rank `(1 - fraction)`-quantile of the scores: the
/// returned threshold selects (strictly above) at most the target fraction,
/// and as much of it as the score multiset allows.
///
/// A target of 1 has no attainable quantile under a strict comparison, so the
/// threshold is placed one unit below the minimum score.
pub fn calibrate_rgfs_threshold(
    scores: &[f64],
    target_keyframe_fraction: f64,
) -> Result<f64, GuidanceError> {
    if scores.is_empty() {
        return Err(GuidanceError::EmptyScores);
    }
    if !(0.0..=1.0).contains(&target_keyframe_fraction) {
        return Err(GuidanceError::InvalidTarget(target_keyframe_fraction));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if target_keyframe_fraction >= 1.0 {
        return Ok(sorted[0] - 1.0);
    }
    let n = sorted.len();
    let rank = ((1.0 - target_keyframe_fraction) * n as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}
