//! Reference external segmenter: reads a TLFR frame and writes a constant
//! one-hot TLSC score map. Doubles as the protocol test double: `--fail`
//! exits nonzero and `--garbage` emits an invalid score file.
//!
//! Usage: tapv-constseg [--classes N] [--stride N] [--class K] [--fail|--garbage] <in.tlfr> <out.tlsc>

use std::io::Write;
use std::process::ExitCode;

use tapv_core::segmenters::{read_tlfr, write_tlsc};
use tapv_core::warp::ScoreMap;

fn usage() -> ExitCode {
    eprintln!(
        "usage: tapv-constseg [--classes N] [--stride N] [--class K] [--fail|--garbage] <in.tlfr> <out.tlsc>"
    );
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let mut classes = 3usize;
    let mut stride = 4usize;
    let mut class_id = 0usize;
    let mut fail = false;
    let mut garbage = false;
    let mut paths = Vec::new();

    let mut args = std::env::args().skip(1);
    while let Some(arg) = args.next() {
        let numeric = |args: &mut dyn Iterator<Item = String>| -> Option<usize> {
            args.next().and_then(|v| v.parse().ok())
        };
        match arg.as_str() {
            "--classes" => match numeric(&mut args) {
                Some(v) if v > 0 => classes = v,
                _ => return usage(),
            },
            "--stride" => match numeric(&mut args) {
                Some(v) if v > 0 => stride = v,
                _ => return usage(),
            },
            "--class" => match numeric(&mut args) {
                Some(v) => class_id = v,
                _ => return usage(),
            },
            "--fail" => fail = true,
            "--garbage" => garbage = true,
            _ => paths.push(arg),
        }
    }
    if paths.len() != 2 || class_id >= classes {
        return usage();
    }
    if fail {
        eprintln!("tapv-constseg: simulated failure");
        return ExitCode::from(1);
    }

    let run = || -> std::io::Result<()> {
        let mut input = std::io::BufReader::new(std::fs::File::open(&paths[0])?);
        let frame = read_tlfr(&mut input)?;
        let mut output = std::io::BufWriter::new(std::fs::File::create(&paths[1])?);
        if garbage {
            output.write_all(b"not scores at all")?;
            return output.flush();
        }
        if frame.width % stride != 0 || frame.height % stride != 0 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!(
                    "frame {}x{} not divisible by stride {stride}",
                    frame.width, frame.height
                ),
            ));
        }
        let mut map = ScoreMap::zeros(frame.width / stride, frame.height / stride, classes, stride);
        for i in 0..map.width_s * map.height_s {
            map.scores[i * classes + class_id] = 1.0;
        }
        write_tlsc(&map, &mut output)?;
        output.flush()
    };

    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tapv-constseg: {e}");
            ExitCode::from(2)
        }
    }
}
