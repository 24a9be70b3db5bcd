//! Toy GOP codec: block-matching encoder, motion-compensating decoder, and
//! the bit-exact `TAPV` container.
//!
//! Streams hold only I-records (raw pixels) and P-records (per-macroblock
//! motion vectors plus an exact residual), so every round trip is lossless.
//! The displacement convention throughout is: content at pixel `p` of frame
//! `t` originates at `p - mv[p]` in frame `t - 1`.

mod container;

pub use container::{read_tapv, write_tapv};

use thiserror::Error;

/// Macroblock side in pixels. One motion vector is shared per block.
pub const MACROBLOCK: usize = 16;

/// Default block-matching search radius in pixels.
pub const DEFAULT_SEARCH_RADIUS: usize = 32;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("frame dimensions {0}x{1} and {2}x{3} do not match")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("frame dimensions {0}x{1} are not multiples of {MACROBLOCK}")]
    NotMacroblockAligned(usize, usize),
    #[error("pixel buffer length {got} does not match {width}x{height}x3")]
    BadBufferLength {
        width: usize,
        height: usize,
        got: usize,
    },
    #[error("motion field {0}x{1} blocks inconsistent with residual {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("bad magic: not a TAPV stream")]
    BadMagic,
    #[error("unsupported TAPV version {0}")]
    UnsupportedVersion(u16),
    #[error("invalid TAPV header: {0}")]
    InvalidHeader(String),
    #[error("truncated record at frame {frame}")]
    TruncatedRecord { frame: usize },
    #[error("invalid record at frame {frame}: {reason}")]
    InvalidRecord { frame: usize, reason: String },
    #[error("GOP cadence violation at frame {frame}: expected an I-record at every index divisible by the GOP size")]
    GopCadenceViolation { frame: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Full-resolution interleaved RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameBuffer {
    pub width: usize,
    pub height: usize,
    /// RGB24, row-major, length `width * height * 3`.
    pub pixels: Vec<u8>,
}

impl FrameBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height * 3],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, CodecError> {
        if pixels.len() != width * height * 3 {
            return Err(CodecError::BadBufferLength {
                width,
                height,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    #[inline]
    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn set_rgb(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copy out a sub-rectangle. The caller guarantees it lies inside.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> FrameBuffer {
        let mut out = FrameBuffer::new(w, h);
        for y in 0..h {
            let src = ((y0 + y) * self.width + x0) * 3;
            let dst = y * w * 3;
            out.pixels[dst..dst + w * 3].copy_from_slice(&self.pixels[src..src + w * 3]);
        }
        out
    }

    fn require_macroblock_aligned(&self) -> Result<(), CodecError> {
        if self.width == 0
            || self.height == 0
            || !self.width.is_multiple_of(MACROBLOCK)
            || !self.height.is_multiple_of(MACROBLOCK)
        {
            return Err(CodecError::NotMacroblockAligned(self.width, self.height));
        }
        Ok(())
    }
}

/// Per-macroblock integer displacement, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MotionVector {
    pub dx: i16,
    pub dy: i16,
}

/// Displacement grid with one vector per 16x16 macroblock.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionField {
    pub grid_w: usize,
    pub grid_h: usize,
    pub vectors: Vec<MotionVector>,
}

impl MotionField {
    pub fn zeros(grid_w: usize, grid_h: usize) -> Self {
        Self {
            grid_w,
            grid_h,
            vectors: vec![MotionVector::default(); grid_w * grid_h],
        }
    }

    /// Vector of the macroblock containing pixel `(x, y)`.
    #[inline]
    pub fn at_pixel(&self, x: usize, y: usize) -> MotionVector {
        self.vectors[(y / MACROBLOCK) * self.grid_w + x / MACROBLOCK]
    }

    #[inline]
    pub fn at_block(&self, bx: usize, by: usize) -> MotionVector {
        self.vectors[by * self.grid_w + bx]
    }
}

/// Signed per-pixel per-channel difference between a frame and its
/// motion-compensated prediction. Values lie in `[-255, 255]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualMap {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB-interleaved, length `width * height * 3`.
    pub values: Vec<i16>,
}

impl ResidualMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0; width * height * 3],
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> [i16; 3] {
        let i = (y * self.width + x) * 3;
        [self.values[i], self.values[i + 1], self.values[i + 2]]
    }
}

/// Stream header. `search_radius` records the encoder setting so readers can
/// validate vector bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TapvHeader {
    pub width: usize,
    pub height: usize,
    pub gop_size: usize,
    pub frame_count: usize,
    pub search_radius: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrameRecord {
    I(FrameBuffer),
    P {
        mv: MotionField,
        residual: ResidualMap,
    },
}

impl FrameRecord {
    pub fn is_intra(&self) -> bool {
        matches!(self, FrameRecord::I(_))
    }
}

/// A decoded-in-memory TAPV stream: header plus the frame records in order.
///
/// Invariants: frame 0 is an I-record and an I-record sits at every index
/// divisible by `gop_size`. There are no B-records.
#[derive(Debug, Clone, PartialEq)]
pub struct TapvStream {
    pub header: TapvHeader,
    pub frames: Vec<FrameRecord>,
}

/// Clamp a displaced source coordinate into `[0, limit)`.
#[inline]
fn clamp_coord(v: isize, limit: usize) -> usize {
    v.clamp(0, limit as isize - 1) as usize
}

/// Source pixel for destination `(x, y)` under displacement `(dx, dy)`,
/// with out-of-frame coordinates clamped to the nearest valid pixel.
#[inline]
fn source_xy(x: usize, y: usize, dx: i16, dy: i16, width: usize, height: usize) -> (usize, usize) {
    (
        clamp_coord(x as isize - dx as isize, width),
        clamp_coord(y as isize - dy as isize, height),
    )
}

/// Sum of absolute differences between the current block and the displaced
/// (clamp-padded) reference block, aborting once `abort_at` is reached.
fn block_sad(
    current: &FrameBuffer,
    reference: &FrameBuffer,
    bx0: usize,
    by0: usize,
    dx: i16,
    dy: i16,
    abort_at: u32,
) -> u32 {
    let (w, h) = (current.width, current.height);
    let mut sum = 0u32;
    for y in by0..by0 + MACROBLOCK {
        let sy = clamp_coord(y as isize - dy as isize, h);
        // Fast path: the whole displaced row is inside the frame.
        let x0 = bx0 as isize - dx as isize;
        let x1 = x0 + MACROBLOCK as isize;
        if x0 >= 0 && x1 <= w as isize {
            let cur = &current.pixels[(y * w + bx0) * 3..(y * w + bx0 + MACROBLOCK) * 3];
            let sx = x0 as usize;
            let refr = &reference.pixels[(sy * w + sx) * 3..(sy * w + sx + MACROBLOCK) * 3];
            for (a, b) in cur.iter().zip(refr) {
                sum += (*a as i32 - *b as i32).unsigned_abs();
            }
        } else {
            for x in bx0..bx0 + MACROBLOCK {
                let sx = clamp_coord(x as isize - dx as isize, w);
                let c = current.rgb(x, y);
                let r = reference.rgb(sx, sy);
                for ch in 0..3 {
                    sum += (c[ch] as i32 - r[ch] as i32).unsigned_abs();
                }
            }
        }
        if sum >= abort_at {
            return sum;
        }
    }
    sum
}

/// Search offsets for a radius, in tie-break order: ascending
/// `(|dx| + |dy|, dy, dx)`. Scanning this order and keeping the first strict
/// SAD improvement realizes the tie-break exactly.
fn search_offsets(radius: usize) -> Vec<(i16, i16)> {
    let r = radius as i16;
    let mut offs = Vec::with_capacity((2 * radius + 1).pow(2));
    for dy in -r..=r {
        for dx in -r..=r {
            offs.push((dx, dy));
        }
    }
    offs.sort_by_key(|&(dx, dy)| (dx.abs() as i32 + dy.abs() as i32, dy, dx));
    offs
}

/// Block-matching motion estimation.
///
/// For each macroblock the returned vector minimizes the
/// sum-of-absolute-differences over the clamped search window; ties are
/// broken by smallest `|dx| + |dy|`, then smallest `dy`, then smallest `dx`.
/// The residual is `current - prediction`, exact per channel, so decoding
/// always reproduces `current` bit-for-bit.
pub fn block_match_encode(
    current: &FrameBuffer,
    reference: &FrameBuffer,
    search_radius: usize,
) -> Result<(MotionField, ResidualMap), CodecError> {
    if current.width != reference.width || current.height != reference.height {
        return Err(CodecError::DimensionMismatch(
            current.width,
            current.height,
            reference.width,
            reference.height,
        ));
    }
    current.require_macroblock_aligned()?;

    let (w, h) = (current.width, current.height);
    let grid_w = w / MACROBLOCK;
    let grid_h = h / MACROBLOCK;
    let offsets = search_offsets(search_radius);

    let mut mv = MotionField::zeros(grid_w, grid_h);
    for by in 0..grid_h {
        for bx in 0..grid_w {
            let (bx0, by0) = (bx * MACROBLOCK, by * MACROBLOCK);
            let mut best = MotionVector::default();
            let mut best_sad = u32::MAX;
            for &(dx, dy) in &offsets {
                let sad = block_sad(current, reference, bx0, by0, dx, dy, best_sad);
                if sad < best_sad {
                    best_sad = sad;
                    best = MotionVector { dx, dy };
                    if best_sad == 0 {
                        break;
                    }
                }
            }
            mv.vectors[by * grid_w + bx] = best;
        }
    }

    let mut residual = ResidualMap::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let v = mv.at_pixel(x, y);
            let (sx, sy) = source_xy(x, y, v.dx, v.dy, w, h);
            let cur = current.rgb(x, y);
            let pred = reference.rgb(sx, sy);
            let i = (y * w + x) * 3;
            for ch in 0..3 {
                residual.values[i + ch] = cur[ch] as i16 - pred[ch] as i16;
            }
        }
    }
    Ok((mv, residual))
}

/// Motion-compensated reconstruction:
/// `out[p] = clamp(reference[clamp(p - mv[p])] + res[p], 0, 255)`.
pub fn motion_compensate_decode(
    reference: &FrameBuffer,
    mv: &MotionField,
    res: &ResidualMap,
) -> Result<FrameBuffer, CodecError> {
    let (w, h) = (reference.width, reference.height);
    if res.width != w || res.height != h {
        return Err(CodecError::DimensionMismatch(w, h, res.width, res.height));
    }
    if mv.grid_w * MACROBLOCK != w || mv.grid_h * MACROBLOCK != h {
        return Err(CodecError::ShapeMismatch(
            mv.grid_w, mv.grid_h, res.width, res.height,
        ));
    }

    let mut out = FrameBuffer::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let v = mv.at_pixel(x, y);
            let (sx, sy) = source_xy(x, y, v.dx, v.dy, w, h);
            let pred = reference.rgb(sx, sy);
            let i = (y * w + x) * 3;
            for (ch, &p) in pred.iter().enumerate() {
                let value = p as i16 + res.values[i + ch];
                out.pixels[i + ch] = value.clamp(0, 255) as u8;
            }
        }
    }
    Ok(out)
}

/// Encode a frame sequence into a TAPV stream: an I-record at every index
/// divisible by `gop_size`, P-records (predicted from the previous frame)
/// everywhere else.
pub fn encode_sequence(
    frames: &[FrameBuffer],
    gop_size: usize,
    search_radius: usize,
) -> Result<TapvStream, CodecError> {
    if frames.is_empty() {
        return Err(CodecError::InvalidHeader("empty frame sequence".into()));
    }
    if gop_size == 0 {
        return Err(CodecError::InvalidHeader("GOP size must be >= 1".into()));
    }
    let first = &frames[0];
    first.require_macroblock_aligned()?;

    let mut records = Vec::with_capacity(frames.len());
    for (t, frame) in frames.iter().enumerate() {
        if frame.width != first.width || frame.height != first.height {
            return Err(CodecError::DimensionMismatch(
                first.width,
                first.height,
                frame.width,
                frame.height,
            ));
        }
        if t % gop_size == 0 {
            records.push(FrameRecord::I(frame.clone()));
        } else {
            let (mv, residual) = block_match_encode(frame, &frames[t - 1], search_radius)?;
            records.push(FrameRecord::P { mv, residual });
        }
    }
    Ok(TapvStream {
        header: TapvHeader {
            width: first.width,
            height: first.height,
            gop_size,
            frame_count: frames.len(),
            search_radius,
        },
        frames: records,
    })
}

/// Reconstruct every frame of a stream.
pub fn decode_sequence(stream: &TapvStream) -> Result<Vec<FrameBuffer>, CodecError> {
    let mut out: Vec<FrameBuffer> = Vec::with_capacity(stream.frames.len());
    for (t, record) in stream.frames.iter().enumerate() {
        let frame = match record {
            FrameRecord::I(frame) => frame.clone(),
            FrameRecord::P { mv, residual } => {
                let reference = out
                    .last()
                    .ok_or(CodecError::GopCadenceViolation { frame: t })?;
                motion_compensate_decode(reference, mv, residual)?
            }
        };
        out.push(frame);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(w: usize, h: usize, seed: u64) -> FrameBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pixels = (0..w * h * 3).map(|_| rng.gen()).collect();
        FrameBuffer::from_pixels(w, h, pixels).unwrap()
    }

    /// Independent exhaustive-search oracle: full scan of the window, same
    /// tie-break, no early exit and no candidate ordering tricks.
    fn oracle_best_vector(
        current: &FrameBuffer,
        reference: &FrameBuffer,
        bx0: usize,
        by0: usize,
        radius: i16,
    ) -> (MotionVector, u32) {
        let mut best: Option<(u32, i32, i16, i16)> = None;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let mut sad = 0u32;
                for y in by0..by0 + MACROBLOCK {
                    for x in bx0..bx0 + MACROBLOCK {
                        let sx = clamp_coord(x as isize - dx as isize, current.width);
                        let sy = clamp_coord(y as isize - dy as isize, current.height);
                        let c = current.rgb(x, y);
                        let r = reference.rgb(sx, sy);
                        for ch in 0..3 {
                            sad += (c[ch] as i32 - r[ch] as i32).unsigned_abs();
                        }
                    }
                }
                let key = (sad, dx.abs() as i32 + dy.abs() as i32, dy, dx);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        let (sad, _, dy, dx) = best.unwrap();
        (MotionVector { dx, dy }, sad)
    }

    #[test]
    fn identical_frames_give_zero_vectors_and_residuals() {
        let frame = random_frame(48, 32, 1);
        let (mv, res) = block_match_encode(&frame, &frame, 8).unwrap();
        assert!(mv.vectors.iter().all(|v| *v == MotionVector::default()));
        assert!(res.values.iter().all(|&v| v == 0));
    }

    #[test]
    fn pure_translation_recovers_the_shift() {
        // current(x) = reference(x - 8): interior content moved right by 8 px.
        let reference = random_frame(96, 48, 2);
        let mut current = FrameBuffer::new(96, 48);
        for y in 0..48 {
            for x in 0..96usize {
                let sx = x.saturating_sub(8);
                current.set_rgb(x, y, reference.rgb(sx, y));
            }
        }
        let (mv, res) = block_match_encode(&current, &reference, 16).unwrap();
        // Interior blocks (content fully inside the window) must report (8, 0)
        // with zero residual; verify against the exhaustive oracle as well.
        for by in 0..3 {
            for bx in 1..5 {
                let got = mv.at_block(bx, by);
                assert_eq!((got.dx, got.dy), (8, 0), "block ({bx},{by})");
                let (oracle, sad) = oracle_best_vector(&current, &reference, bx * 16, by * 16, 16);
                assert_eq!(got, oracle);
                assert_eq!(sad, 0);
                for y in by * 16..(by + 1) * 16 {
                    for x in bx * 16..(bx + 1) * 16 {
                        assert_eq!(res.at(x, y), [0, 0, 0]);
                    }
                }
            }
        }
    }

    #[test]
    fn emitted_vectors_match_the_exhaustive_oracle() {
        // Random 32x32 pairs: every emitted vector must carry the minimum SAD
        // and the stated tie-break.
        for seed in 0..6 {
            let current = random_frame(32, 32, 100 + seed);
            let reference = random_frame(32, 32, 200 + seed);
            let (mv, _) = block_match_encode(&current, &reference, 8).unwrap();
            for by in 0..2 {
                for bx in 0..2 {
                    let (oracle, oracle_sad) =
                        oracle_best_vector(&current, &reference, bx * 16, by * 16, 8);
                    let got = mv.at_block(bx, by);
                    let got_sad = block_sad(
                        &current,
                        &reference,
                        bx * 16,
                        by * 16,
                        got.dx,
                        got.dy,
                        u32::MAX,
                    );
                    assert_eq!(got_sad, oracle_sad, "seed {seed} block ({bx},{by})");
                    assert_eq!(got, oracle, "seed {seed} block ({bx},{by})");
                }
            }
        }
    }

    #[test]
    fn round_trip_is_bit_exact_on_noise() {
        let reference = random_frame(64, 48, 7);
        let current = random_frame(64, 48, 8);
        let (mv, res) = block_match_encode(&current, &reference, 4).unwrap();
        let decoded = motion_compensate_decode(&reference, &mv, &res).unwrap();
        assert_eq!(decoded, current);
    }

    #[test]
    fn zero_vectors_zero_residual_is_identity() {
        let reference = random_frame(32, 32, 11);
        let mv = MotionField::zeros(2, 2);
        let res = ResidualMap::zeros(32, 32);
        let out = motion_compensate_decode(&reference, &mv, &res).unwrap();
        assert_eq!(out, reference);
    }

    #[test]
    fn out_of_frame_sources_clamp_to_the_border() {
        let reference = random_frame(32, 32, 12);
        let mut mv = MotionField::zeros(2, 2);
        // Points 100 px outside: every source clamps to the frame edge.
        mv.vectors[0] = MotionVector { dx: 100, dy: 100 };
        let res = ResidualMap::zeros(32, 32);
        let out = motion_compensate_decode(&reference, &mv, &res).unwrap();
        assert_eq!(out.rgb(0, 0), reference.rgb(0, 0));
        assert_eq!(out.rgb(15, 15), reference.rgb(0, 0));
        // Other blocks untouched.
        assert_eq!(out.rgb(20, 20), reference.rgb(20, 20));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = random_frame(32, 32, 1);
        let b = random_frame(48, 32, 1);
        assert!(matches!(
            block_match_encode(&a, &b, 4),
            Err(CodecError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn unaligned_dimensions_are_rejected() {
        let a = FrameBuffer::new(30, 32);
        let b = FrameBuffer::new(30, 32);
        assert!(matches!(
            block_match_encode(&a, &b, 4),
            Err(CodecError::NotMacroblockAligned(30, 32))
        ));
    }

    #[test]
    fn sequence_round_trip_is_lossless() {
        let frames: Vec<_> = (0..7).map(|t| random_frame(48, 32, 40 + t)).collect();
        let stream = encode_sequence(&frames, 3, 4).unwrap();
        assert!(stream.frames[0].is_intra());
        assert!(stream.frames[3].is_intra());
        assert!(stream.frames[6].is_intra());
        assert_eq!(stream.frames.iter().filter(|r| r.is_intra()).count(), 3);
        let decoded = decode_sequence(&stream).unwrap();
        assert_eq!(decoded, frames);
    }
}
