//! Fast feature warping: propagate a per-class score map through the motion
//! field with pure integer gathers, `out[p] = prev[clamp(p - mv[p])]`.
//!
//! Score maps live at an output stride `ds` below pixel resolution, so the
//! macroblock-level motion field is first resampled to the cell grid.

use thiserror::Error;

use crate::codec::{MotionField, MACROBLOCK};

#[derive(Debug, Error)]
pub enum WarpError {
    #[error("score map dimensions {0}x{1} do not match motion field {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("cell grid {out_w}x{out_h} at stride {ds} is inconsistent with a {grid_w}x{grid_h} macroblock grid")]
    InconsistentGrid {
        out_w: usize,
        out_h: usize,
        ds: usize,
        grid_w: usize,
        grid_h: usize,
    },
    #[error("score buffer length {got} does not match {cells} cells x {classes} classes")]
    BadBufferLength {
        cells: usize,
        classes: usize,
        got: usize,
    },
}

/// Per-class real-valued score grid at output stride `ds`.
///
/// Layout is row-major over cells with the `num_classes` scores of a cell
/// stored contiguously: `scores[(y * width_s + x) * num_classes + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    pub width_s: usize,
    pub height_s: usize,
    pub num_classes: usize,
    pub ds: usize,
    pub scores: Vec<f32>,
}

impl ScoreMap {
    pub fn zeros(width_s: usize, height_s: usize, num_classes: usize, ds: usize) -> Self {
        Self {
            width_s,
            height_s,
            num_classes,
            ds,
            scores: vec![0.0; width_s * height_s * num_classes],
        }
    }

    pub fn from_scores(
        width_s: usize,
        height_s: usize,
        num_classes: usize,
        ds: usize,
        scores: Vec<f32>,
    ) -> Result<Self, WarpError> {
        if scores.len() != width_s * height_s * num_classes {
            return Err(WarpError::BadBufferLength {
                cells: width_s * height_s,
                classes: num_classes,
                got: scores.len(),
            });
        }
        Ok(Self {
            width_s,
            height_s,
            num_classes,
            ds,
            scores,
        })
    }

    #[inline]
    pub fn cell(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width_s + x) * self.num_classes;
        &self.scores[i..i + self.num_classes]
    }

    #[inline]
    pub fn cell_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = (y * self.width_s + x) * self.num_classes;
        &mut self.scores[i..i + self.num_classes]
    }

    /// Highest-scoring class of a cell; ties go to the lowest class id.
    #[inline]
    pub fn argmax(&self, x: usize, y: usize) -> usize {
        let cell = self.cell(x, y);
        let mut best = 0;
        for (c, &score) in cell.iter().enumerate().skip(1) {
            if score > cell[best] {
                best = c;
            }
        }
        best
    }
}

/// Per-cell integer displacements in cell units at the score-map stride.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMotionField {
    pub width_s: usize,
    pub height_s: usize,
    pub vectors: Vec<(i32, i32)>,
}

impl CellMotionField {
    pub fn zeros(width_s: usize, height_s: usize) -> Self {
        Self {
            width_s,
            height_s,
            vectors: vec![(0, 0); width_s * height_s],
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (i32, i32) {
        self.vectors[y * self.width_s + x]
    }
}

/// Round `v / ds` to the nearest integer, ties away from zero.
#[inline]
fn round_to_cells(v: i32, ds: usize) -> i32 {
    let ds = ds as i32;
    let mag = (2 * v.abs() + ds) / (2 * ds);
    if v < 0 {
        -mag
    } else {
        mag
    }
}

/// Resample the macroblock motion field onto the `ds`-stride cell grid.
///
/// Cell `(x, y)` takes the vector of the macroblock containing the pixel at
/// its center `(x*ds + ds/2, y*ds + ds/2)`; components are converted from
/// pixels to cells by nearest-integer division with ties away from zero.
pub fn downscale_motion_field(
    mv: &MotionField,
    ds: usize,
    out_w: usize,
    out_h: usize,
) -> Result<CellMotionField, WarpError> {
    let fits = |cells: usize, blocks: usize| (cells - 1) * ds + ds / 2 < blocks * MACROBLOCK;
    if ds == 0 || out_w == 0 || out_h == 0 || !fits(out_w, mv.grid_w) || !fits(out_h, mv.grid_h) {
        return Err(WarpError::InconsistentGrid {
            out_w,
            out_h,
            ds,
            grid_w: mv.grid_w,
            grid_h: mv.grid_h,
        });
    }

    let mut out = CellMotionField::zeros(out_w, out_h);
    for y in 0..out_h {
        let py = y * ds + ds / 2;
        for x in 0..out_w {
            let px = x * ds + ds / 2;
            let v = mv.at_pixel(px, py);
            out.vectors[y * out_w + x] = (
                round_to_cells(v.dx as i32, ds),
                round_to_cells(v.dy as i32, ds),
            );
        }
    }
    Ok(out)
}

/// Warp the previous score map through the cell motion field.
///
/// Every output cell gathers the full class vector of its source cell,
/// `clamp(p - mv[p])`; the input map is left untouched.
pub fn ffw_warp(prev: &ScoreMap, cmv: &CellMotionField) -> Result<ScoreMap, WarpError> {
    if prev.width_s != cmv.width_s || prev.height_s != cmv.height_s {
        return Err(WarpError::DimensionMismatch(
            prev.width_s,
            prev.height_s,
            cmv.width_s,
            cmv.height_s,
        ));
    }
    let (w, h, classes) = (prev.width_s, prev.height_s, prev.num_classes);
    let mut out = ScoreMap::zeros(w, h, classes, prev.ds);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = cmv.at(x, y);
            let sx = (x as i64 - dx as i64).clamp(0, w as i64 - 1) as usize;
            let sy = (y as i64 - dy as i64).clamp(0, h as i64 - 1) as usize;
            out.cell_mut(x, y).copy_from_slice(prev.cell(sx, sy));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::MotionVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Naive double-loop gather, the independent reference for ffw_warp.
    fn naive_gather(prev: &ScoreMap, cmv: &CellMotionField) -> ScoreMap {
        let mut out = ScoreMap::zeros(prev.width_s, prev.height_s, prev.num_classes, prev.ds);
        for y in 0..prev.height_s {
            for x in 0..prev.width_s {
                let (dx, dy) = cmv.at(x, y);
                let sx = (x as i64 - dx as i64).clamp(0, prev.width_s as i64 - 1) as usize;
                let sy = (y as i64 - dy as i64).clamp(0, prev.height_s as i64 - 1) as usize;
                for c in 0..prev.num_classes {
                    out.cell_mut(x, y)[c] = prev.cell(sx, sy)[c];
                }
            }
        }
        out
    }

    fn random_map(w: usize, h: usize, classes: usize, seed: u64) -> ScoreMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores = (0..w * h * classes)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        ScoreMap::from_scores(w, h, classes, 4, scores).unwrap()
    }

    fn uniform_field(w: usize, h: usize, v: (i32, i32)) -> CellMotionField {
        CellMotionField {
            width_s: w,
            height_s: h,
            vectors: vec![v; w * h],
        }
    }

    #[test]
    fn zero_motion_field_downscales_to_zero_cells() {
        let mv = MotionField::zeros(4, 4);
        let cmv = downscale_motion_field(&mv, 4, 16, 16).unwrap();
        assert!(cmv.vectors.iter().all(|&v| v == (0, 0)));
    }

    #[test]
    fn uniform_vectors_downscale_by_the_stride() {
        let mut mv = MotionField::zeros(4, 2);
        for v in &mut mv.vectors {
            *v = MotionVector { dx: 16, dy: -8 };
        }
        let cmv = downscale_motion_field(&mv, 8, 8, 4).unwrap();
        assert!(cmv.vectors.iter().all(|&v| v == (2, -1)));
    }

    #[test]
    fn half_cell_components_round_away_from_zero() {
        let mut mv = MotionField::zeros(2, 2);
        for v in &mut mv.vectors {
            *v = MotionVector { dx: 4, dy: 4 };
        }
        let cmv = downscale_motion_field(&mv, 8, 4, 4).unwrap();
        assert!(cmv.vectors.iter().all(|&v| v == (1, 1)));

        for v in &mut mv.vectors {
            *v = MotionVector { dx: -4, dy: 12 };
        }
        let cmv = downscale_motion_field(&mv, 8, 4, 4).unwrap();
        assert!(cmv.vectors.iter().all(|&v| v == (-1, 2)));
    }

    #[test]
    fn zero_motion_warp_is_identity() {
        let map = random_map(6, 5, 3, 1);
        let warped = ffw_warp(&map, &uniform_field(6, 5, (0, 0))).unwrap();
        assert_eq!(warped, map);
    }

    #[test]
    fn unit_shift_copies_the_left_neighbor() {
        // 4x4 single class, cell value = column index.
        let scores: Vec<f32> = (0..16).map(|i| (i % 4) as f32).collect();
        let map = ScoreMap::from_scores(4, 4, 1, 4, scores).unwrap();
        let warped = ffw_warp(&map, &uniform_field(4, 4, (1, 0))).unwrap();
        // Column 0 repeats itself through clamping; others take the left value.
        let expected: Vec<f32> = (0..16usize)
            .map(|i| (i % 4).saturating_sub(1) as f32)
            .collect();
        assert_eq!(warped.scores, expected);
    }

    #[test]
    fn random_fields_match_the_naive_gather() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..20 {
            let map = random_map(8, 8, 3, 50 + seed);
            let vectors = (0..64)
                .map(|_| (rng.gen_range(-2..=2), rng.gen_range(-2..=2)))
                .collect();
            let cmv = CellMotionField {
                width_s: 8,
                height_s: 8,
                vectors,
            };
            assert_eq!(ffw_warp(&map, &cmv).unwrap(), naive_gather(&map, &cmv));
        }
    }

    #[test]
    fn warping_never_invents_values() {
        let map = random_map(8, 8, 2, 77);
        let cmv = uniform_field(8, 8, (3, -2));
        let warped = ffw_warp(&map, &cmv).unwrap();
        let source: std::collections::HashSet<u32> =
            map.scores.iter().map(|v| v.to_bits()).collect();
        assert!(warped.scores.iter().all(|v| source.contains(&v.to_bits())));
    }

    #[test]
    fn uniform_translations_compose_on_interior_cells() {
        let map = random_map(10, 10, 2, 5);
        let u = (1, 2);
        let v = (2, -1);
        let once = ffw_warp(
            &ffw_warp(&map, &uniform_field(10, 10, u)).unwrap(),
            &uniform_field(10, 10, v),
        )
        .unwrap();
        let combined = ffw_warp(&map, &uniform_field(10, 10, (u.0 + v.0, u.1 + v.1))).unwrap();
        // Interior cells whose both gathers stayed in bounds.
        for y in 3..9 {
            for x in 3..9 {
                assert_eq!(once.cell(x, y), combined.cell(x, y), "cell ({x},{y})");
            }
        }
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let map = random_map(4, 4, 2, 3);
        let cmv = uniform_field(5, 4, (0, 0));
        assert!(matches!(
            ffw_warp(&map, &cmv),
            Err(WarpError::DimensionMismatch(..))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn warp_equals_naive_gather(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = rng.gen_range(1..10);
            let h = rng.gen_range(1..10);
            let classes = rng.gen_range(1..4);
            let scores = (0..w * h * classes).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let map = ScoreMap::from_scores(w, h, classes, 4, scores).unwrap();
            let vectors = (0..w * h)
                .map(|_| (rng.gen_range(-4..=4), rng.gen_range(-4..=4)))
                .collect();
            let cmv = CellMotionField { width_s: w, height_s: h, vectors };
            prop_assert_eq!(ffw_warp(&map, &cmv).unwrap(), naive_gather(&map, &cmv));
        }
    }
}
