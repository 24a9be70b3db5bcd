//! Bit-exact reader/writer for the `TAPV` container.
//!
//! Layout, all multi-byte integers little-endian:
//!
//! ```text
//! magic "TAPV" | u16 version=1 | u16 reserved=0
//! u32 width | u32 height | u32 gop_size | u32 frame_count | u32 search_radius
//! then per frame: u8 type (0 = I, 1 = P)
//!   I: width*height*3 bytes, RGB24 row-major
//!   P: grid_h*grid_w pairs of i16 (dx, dy), then width*height*3 i16 residuals
//! ```

use std::io::{Read, Write};

use super::{
    CodecError, FrameBuffer, FrameRecord, MotionField, MotionVector, ResidualMap, TapvHeader,
    TapvStream, MACROBLOCK,
};

pub const MAGIC: [u8; 4] = *b"TAPV";
pub const VERSION: u16 = 1;

fn validate_stream(stream: &TapvStream) -> Result<(), CodecError> {
    let h = &stream.header;
    if h.width == 0
        || h.height == 0
        || !h.width.is_multiple_of(MACROBLOCK)
        || !h.height.is_multiple_of(MACROBLOCK)
    {
        return Err(CodecError::NotMacroblockAligned(h.width, h.height));
    }
    if h.gop_size == 0 {
        return Err(CodecError::InvalidHeader("GOP size must be >= 1".into()));
    }
    if h.frame_count != stream.frames.len() {
        return Err(CodecError::InvalidHeader(format!(
            "header frame_count {} != {} records",
            h.frame_count,
            stream.frames.len()
        )));
    }
    let grid_w = h.width / MACROBLOCK;
    let grid_h = h.height / MACROBLOCK;
    for (t, record) in stream.frames.iter().enumerate() {
        match record {
            FrameRecord::I(frame) => {
                if frame.width != h.width || frame.height != h.height {
                    return Err(CodecError::InvalidRecord {
                        frame: t,
                        reason: "I-record dimensions differ from header".into(),
                    });
                }
                if frame.pixels.len() != h.width * h.height * 3 {
                    return Err(CodecError::InvalidRecord {
                        frame: t,
                        reason: "I-record pixel buffer length mismatch".into(),
                    });
                }
            }
            FrameRecord::P { mv, residual } => {
                if t % h.gop_size == 0 {
                    return Err(CodecError::GopCadenceViolation { frame: t });
                }
                if mv.grid_w != grid_w || mv.grid_h != grid_h {
                    return Err(CodecError::InvalidRecord {
                        frame: t,
                        reason: "motion grid dimensions differ from header".into(),
                    });
                }
                if mv.vectors.len() != grid_w * grid_h {
                    return Err(CodecError::InvalidRecord {
                        frame: t,
                        reason: "motion vector count mismatch".into(),
                    });
                }
                let r = h.search_radius as i16;
                if mv.vectors.iter().any(|v| v.dx.abs() > r || v.dy.abs() > r) {
                    return Err(CodecError::InvalidRecord {
                        frame: t,
                        reason: "motion vector exceeds the search radius".into(),
                    });
                }
                if residual.width != h.width
                    || residual.height != h.height
                    || residual.values.len() != h.width * h.height * 3
                {
                    return Err(CodecError::InvalidRecord {
                        frame: t,
                        reason: "residual dimensions differ from header".into(),
                    });
                }
                if residual.values.iter().any(|&v| !(-255..=255).contains(&v)) {
                    return Err(CodecError::InvalidRecord {
                        frame: t,
                        reason: "residual value outside [-255, 255]".into(),
                    });
                }
            }
        }
    }
    if let Some(first) = stream.frames.first() {
        if !first.is_intra() {
            return Err(CodecError::GopCadenceViolation { frame: 0 });
        }
    }
    Ok(())
}

/// Serialize a stream. Returns the number of bytes written.
pub fn write_tapv(stream: &TapvStream, sink: &mut impl Write) -> Result<u64, CodecError> {
    validate_stream(stream)?;
    let h = &stream.header;

    let mut written = 0u64;
    let mut put = |sink: &mut dyn Write, bytes: &[u8]| -> Result<(), CodecError> {
        sink.write_all(bytes)?;
        written += bytes.len() as u64;
        Ok(())
    };

    put(sink, &MAGIC)?;
    put(sink, &VERSION.to_le_bytes())?;
    put(sink, &0u16.to_le_bytes())?;
    for field in [
        h.width,
        h.height,
        h.gop_size,
        h.frame_count,
        h.search_radius,
    ] {
        put(sink, &(field as u32).to_le_bytes())?;
    }

    for record in &stream.frames {
        match record {
            FrameRecord::I(frame) => {
                put(sink, &[0u8])?;
                put(sink, &frame.pixels)?;
            }
            FrameRecord::P { mv, residual } => {
                put(sink, &[1u8])?;
                let mut payload =
                    Vec::with_capacity(mv.vectors.len() * 4 + residual.values.len() * 2);
                for v in &mv.vectors {
                    payload.extend_from_slice(&v.dx.to_le_bytes());
                    payload.extend_from_slice(&v.dy.to_le_bytes());
                }
                for value in &residual.values {
                    payload.extend_from_slice(&value.to_le_bytes());
                }
                put(sink, &payload)?;
            }
        }
    }
    Ok(written)
}

fn read_exact_or(
    source: &mut impl Read,
    buf: &mut [u8],
    on_eof: impl FnOnce() -> CodecError,
) -> Result<(), CodecError> {
    source.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            on_eof()
        } else {
            CodecError::Io(e)
        }
    })
}

fn read_u16(source: &mut impl Read) -> Result<u16, CodecError> {
    let mut buf = [0u8; 2];
    read_exact_or(source, &mut buf, || {
        CodecError::InvalidHeader("truncated header".into())
    })?;
    Ok(u16::from_le_bytes(buf))
}

fn read_u32(source: &mut impl Read) -> Result<u32, CodecError> {
    let mut buf = [0u8; 4];
    read_exact_or(source, &mut buf, || {
        CodecError::InvalidHeader("truncated header".into())
    })?;
    Ok(u32::from_le_bytes(buf))
}

/// Parse a stream, validating magic, version, GOP cadence, vector bounds,
/// and residual ranges. Truncation errors name the offending frame index.
pub fn read_tapv(source: &mut impl Read) -> Result<TapvStream, CodecError> {
    let mut magic = [0u8; 4];
    read_exact_or(source, &mut magic, || CodecError::BadMagic)?;
    if magic != MAGIC {
        return Err(CodecError::BadMagic);
    }
    let version = read_u16(source)?;
    if version != VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    let reserved = read_u16(source)?;
    if reserved != 0 {
        return Err(CodecError::InvalidHeader(format!(
            "nonzero reserved field {reserved}"
        )));
    }
    let width = read_u32(source)? as usize;
    let height = read_u32(source)? as usize;
    let gop_size = read_u32(source)? as usize;
    let frame_count = read_u32(source)? as usize;
    let search_radius = read_u32(source)? as usize;

    if width == 0
        || height == 0
        || !width.is_multiple_of(MACROBLOCK)
        || !height.is_multiple_of(MACROBLOCK)
    {
        return Err(CodecError::InvalidHeader(format!(
            "dimensions {width}x{height} are not positive multiples of {MACROBLOCK}"
        )));
    }
    if gop_size == 0 {
        return Err(CodecError::InvalidHeader("GOP size must be >= 1".into()));
    }

    let grid_w = width / MACROBLOCK;
    let grid_h = height / MACROBLOCK;
    let pixel_len = width * height * 3;
    let radius = search_radius as i16;

    let mut frames = Vec::new();
    for t in 0..frame_count {
        let mut kind = [0u8; 1];
        read_exact_or(source, &mut kind, || CodecError::TruncatedRecord {
            frame: t,
        })?;
        match kind[0] {
            0 => {
                let mut pixels = vec![0u8; pixel_len];
                read_exact_or(source, &mut pixels, || CodecError::TruncatedRecord {
                    frame: t,
                })?;
                frames.push(FrameRecord::I(FrameBuffer {
                    width,
                    height,
                    pixels,
                }));
            }
            1 => {
                if t % gop_size == 0 {
                    return Err(CodecError::GopCadenceViolation { frame: t });
                }
                let mut raw = vec![0u8; grid_w * grid_h * 4];
                read_exact_or(source, &mut raw, || CodecError::TruncatedRecord {
                    frame: t,
                })?;
                let vectors: Vec<MotionVector> = raw
                    .chunks_exact(4)
                    .map(|c| MotionVector {
                        dx: i16::from_le_bytes([c[0], c[1]]),
                        dy: i16::from_le_bytes([c[2], c[3]]),
                    })
                    .collect();
                if vectors
                    .iter()
                    .any(|v| v.dx.abs() > radius || v.dy.abs() > radius)
                {
                    return Err(CodecError::InvalidRecord {
                        frame: t,
                        reason: "motion vector exceeds the search radius".into(),
                    });
                }
                let mut raw = vec![0u8; pixel_len * 2];
                read_exact_or(source, &mut raw, || CodecError::TruncatedRecord {
                    frame: t,
                })?;
                let values: Vec<i16> = raw
                    .chunks_exact(2)
                    .map(|c| i16::from_le_bytes([c[0], c[1]]))
                    .collect();
                if values.iter().any(|&v| !(-255..=255).contains(&v)) {
                    return Err(CodecError::InvalidRecord {
                        frame: t,
                        reason: "residual value outside [-255, 255]".into(),
                    });
                }
                frames.push(FrameRecord::P {
                    mv: MotionField {
                        grid_w,
                        grid_h,
                        vectors,
                    },
                    residual: ResidualMap {
                        width,
                        height,
                        values,
                    },
                });
            }
            other => {
                return Err(CodecError::InvalidRecord {
                    frame: t,
                    reason: format!("unknown record type {other}"),
                })
            }
        }
    }
    Ok(TapvStream {
        header: TapvHeader {
            width,
            height,
            gop_size,
            frame_count,
            search_radius,
        },
        frames,
    })
}
