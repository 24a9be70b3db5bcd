//! External-process backend and its wire formats.
//!
//! The frame travels to the helper process as a `TLFR` file and the scores
//! come back as a `TLSC` file; both paths are passed as trailing command
//! arguments. Formats, little-endian throughout:
//!
//! ```text
//! TLFR: magic "TLFR" | u32 width | u32 height | raw RGB24
//! TLSC: magic "TLSC" | u32 width_s | u32 height_s | u32 classes
//!       | width_s * height_s * classes f32, class-major per cell
//! ```

use std::io::{self, Read, Write};
use std::process::Command;
use std::sync::{Condvar, Mutex};

use super::{check_stride, Segmenter, SegmenterError};
use crate::codec::FrameBuffer;
use crate::warp::ScoreMap;

const TLFR_MAGIC: [u8; 4] = *b"TLFR";
const TLSC_MAGIC: [u8; 4] = *b"TLSC";

fn bad_data(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn read_u32(source: &mut impl Read) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    source.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn write_tlfr(frame: &FrameBuffer, sink: &mut impl Write) -> io::Result<()> {
    sink.write_all(&TLFR_MAGIC)?;
    sink.write_all(&(frame.width as u32).to_le_bytes())?;
    sink.write_all(&(frame.height as u32).to_le_bytes())?;
    sink.write_all(&frame.pixels)
}

pub fn read_tlfr(source: &mut impl Read) -> io::Result<FrameBuffer> {
    let mut magic = [0u8; 4];
    source.read_exact(&mut magic)?;
    if magic != TLFR_MAGIC {
        return Err(bad_data("not a TLFR file"));
    }
    let width = read_u32(source)? as usize;
    let height = read_u32(source)? as usize;
    if width == 0 || height == 0 {
        return Err(bad_data("zero TLFR dimension"));
    }
    let mut pixels = vec![0u8; width * height * 3];
    source.read_exact(&mut pixels)?;
    Ok(FrameBuffer {
        width,
        height,
        pixels,
    })
}

pub fn write_tlsc(map: &ScoreMap, sink: &mut impl Write) -> io::Result<()> {
    sink.write_all(&TLSC_MAGIC)?;
    sink.write_all(&(map.width_s as u32).to_le_bytes())?;
    sink.write_all(&(map.height_s as u32).to_le_bytes())?;
    sink.write_all(&(map.num_classes as u32).to_le_bytes())?;
    let mut payload = Vec::with_capacity(map.scores.len() * 4);
    for value in &map.scores {
        payload.extend_from_slice(&value.to_le_bytes());
    }
    sink.write_all(&payload)
}

/// Parse a TLSC file. The stride is not part of the wire format; the caller
/// supplies the one it expects.
pub fn read_tlsc(source: &mut impl Read, ds: usize) -> io::Result<ScoreMap> {
    let mut magic = [0u8; 4];
    source.read_exact(&mut magic)?;
    if magic != TLSC_MAGIC {
        return Err(bad_data("not a TLSC file"));
    }
    let width_s = read_u32(source)? as usize;
    let height_s = read_u32(source)? as usize;
    let classes = read_u32(source)? as usize;
    if width_s == 0 || height_s == 0 || classes == 0 {
        return Err(bad_data("zero TLSC dimension"));
    }
    let mut raw = vec![0u8; width_s * height_s * classes * 4];
    source.read_exact(&mut raw)?;
    let scores: Vec<f32> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(bad_data("non-finite score value"));
    }
    Ok(ScoreMap {
        width_s,
        height_s,
        num_classes: classes,
        ds,
        scores,
    })
}

/// Counting semaphore bounding concurrent helper processes.
struct WorkerPool {
    permits: Mutex<usize>,
    available: Condvar,
}

impl WorkerPool {
    fn new(workers: usize) -> Self {
        Self {
            permits: Mutex::new(workers.max(1)),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> PoolGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        PoolGuard { pool: self }
    }
}

struct PoolGuard<'a> {
    pool: &'a WorkerPool,
}

impl Drop for PoolGuard<'_> {
    fn drop(&mut self) {
        *self.pool.permits.lock().unwrap() += 1;
        self.pool.available.notify_one();
    }
}

/// Runs a helper command per segmentation request:
/// `program [args...] <input.tlfr> <output.tlsc>`.
///
/// Every failure mode is distinct and carries the frame index: nonzero exit,
/// malformed score file, and score dimensions that disagree with the frame.
pub struct ExternalSegmenter {
    program: String,
    args: Vec<String>,
    num_classes: usize,
    ds: usize,
    pool: WorkerPool,
}

impl ExternalSegmenter {
    pub fn new(
        program: impl Into<String>,
        args: Vec<String>,
        num_classes: usize,
        ds: usize,
        workers: usize,
    ) -> Self {
        Self {
            program: program.into(),
            args,
            num_classes,
            ds,
            pool: WorkerPool::new(workers),
        }
    }
}

impl Segmenter for ExternalSegmenter {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn output_stride(&self) -> usize {
        self.ds
    }

    fn segment_full(&self, t: usize, frame: &FrameBuffer) -> Result<ScoreMap, SegmenterError> {
        check_stride(self.ds, frame.width, frame.height)?;
        let _permit = self.pool.acquire();

        let dir = tempfile::tempdir()?;
        let input = dir.path().join("frame.tlfr");
        let output = dir.path().join("scores.tlsc");
        let mut file = std::io::BufWriter::new(std::fs::File::create(&input)?);
        write_tlfr(frame, &mut file)?;
        file.flush()?;
        drop(file);

        let run = Command::new(&self.program)
            .args(&self.args)
            .arg(&input)
            .arg(&output)
            .output()
            .map_err(|e| SegmenterError::ProcessFailure {
                frame: t,
                code: None,
                stderr: format!(": failed to spawn {}: {e}", self.program),
            })?;
        if !run.status.success() {
            let stderr = String::from_utf8_lossy(&run.stderr);
            let stderr = stderr.trim();
            return Err(SegmenterError::ProcessFailure {
                frame: t,
                code: run.status.code(),
                stderr: if stderr.is_empty() {
                    String::new()
                } else {
                    format!(": {stderr}")
                },
            });
        }

        let mut reader = std::io::BufReader::new(std::fs::File::open(&output).map_err(|e| {
            SegmenterError::MalformedScores {
                frame: t,
                reason: format!("missing output file: {e}"),
            }
        })?);
        let map = read_tlsc(&mut reader, self.ds).map_err(|e| SegmenterError::MalformedScores {
            frame: t,
            reason: e.to_string(),
        })?;

        let (want_w, want_h) = (frame.width / self.ds, frame.height / self.ds);
        if map.width_s != want_w || map.height_s != want_h || map.num_classes != self.num_classes {
            return Err(SegmenterError::DimensionMismatch {
                frame: t,
                got_w: map.width_s,
                got_h: map.height_s,
                got_c: map.num_classes,
                want_w,
                want_h,
                want_c: self.num_classes,
            });
        }
        Ok(map)
    }
}
