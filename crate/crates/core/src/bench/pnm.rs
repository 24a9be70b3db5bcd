//! Binary PPM (P6) frame dumps and PGM (P5) label dumps.
//!
//! The writers emit one canonical header form so identical content always
//! produces identical bytes.

use std::io::{Read, Write};

use super::{BenchError, LabelMap};
use crate::codec::FrameBuffer;

pub fn write_ppm(frame: &FrameBuffer, sink: &mut impl Write) -> Result<(), BenchError> {
    write!(sink, "P6\n{} {}\n255\n", frame.width, frame.height)?;
    sink.write_all(&frame.pixels)?;
    Ok(())
}

pub fn write_pgm(labels: &LabelMap, sink: &mut impl Write) -> Result<(), BenchError> {
    write!(sink, "P5\n{} {}\n255\n", labels.width, labels.height)?;
    sink.write_all(&labels.labels)?;
    Ok(())
}

fn malformed(kind: &'static str, reason: impl Into<String>) -> BenchError {
    BenchError::MalformedImage {
        kind,
        reason: reason.into(),
    }
}

/// Read one whitespace-delimited ASCII token, skipping `#` comment lines.
fn read_token(source: &mut impl Read, kind: &'static str) -> Result<String, BenchError> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    let mut in_comment = false;
    loop {
        if source.read(&mut byte)? == 0 {
            if token.is_empty() {
                return Err(malformed(kind, "unexpected end of header"));
            }
            return Ok(token);
        }
        let c = byte[0];
        if in_comment {
            if c == b'\n' {
                in_comment = false;
            }
            continue;
        }
        match c {
            b'#' if token.is_empty() => in_comment = true,
            c if c.is_ascii_whitespace() => {
                if !token.is_empty() {
                    return Ok(token);
                }
            }
            c => token.push(c as char),
        }
    }
}

fn read_header(
    source: &mut impl Read,
    magic: &str,
    kind: &'static str,
) -> Result<(usize, usize), BenchError> {
    if read_token(source, kind)? != magic {
        return Err(malformed(kind, format!("expected magic {magic}")));
    }
    let parse = |token: String| -> Result<usize, BenchError> {
        token
            .parse()
            .map_err(|_| malformed(kind, format!("bad header token {token}")))
    };
    let width = parse(read_token(source, kind)?)?;
    let height = parse(read_token(source, kind)?)?;
    let maxval = parse(read_token(source, kind)?)?;
    if maxval != 255 {
        return Err(malformed(kind, format!("unsupported maxval {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(malformed(kind, "zero dimension"));
    }
    Ok((width, height))
}

pub fn read_ppm(source: &mut impl Read) -> Result<FrameBuffer, BenchError> {
    let (width, height) = read_header(source, "P6", "PPM")?;
    let mut pixels = vec![0u8; width * height * 3];
    source
        .read_exact(&mut pixels)
        .map_err(|_| malformed("PPM", "truncated pixel data"))?;
    Ok(FrameBuffer {
        width,
        height,
        pixels,
    })
}

pub fn read_pgm(source: &mut impl Read) -> Result<LabelMap, BenchError> {
    let (width, height) = read_header(source, "P5", "PGM")?;
    let mut labels = vec![0u8; width * height];
    source
        .read_exact(&mut labels)
        .map_err(|_| malformed("PGM", "truncated label data"))?;
    Ok(LabelMap {
        width,
        height,
        labels,
    })
}
