//! `tapv`: synth/encode/decode a toy compressed-video container and run the
//! motion-vector label-propagation pipeline over it.

mod cmd;
mod conf;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit code 2 for input problems, 3 for backend failures.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Backend(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Backend(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<tapv_core::pipeline::PipelineError> for CliError {
    fn from(e: tapv_core::pipeline::PipelineError) -> Self {
        match e {
            tapv_core::pipeline::PipelineError::Backend { .. } => CliError::Backend(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "tapv",
    about = "Compressed-domain video label propagation: toy codec, warping pipeline, benchmark harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic sprite scene into a TAPV stream plus ground truth
    Synth(SynthArgs),
    /// Encode a directory of PPM frames into a TAPV stream
    Encode(EncodeArgs),
    /// Decode a TAPV stream into PPM frames
    Decode(DecodeArgs),
    /// Run the segmentation pipeline over a TAPV stream
    Run(RunArgs),
    /// Measure per-frame latency with a stub-latency backend
    Bench(BenchArgs),
    /// Run FFW+RGC over a grid of blend weights and report accuracy per alpha
    SweepAlpha(SweepAlphaArgs),
    /// Derive an RGFS threshold from a list of frame scores
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scene description file (`key = value` plus `sprite = ...` lines)
    #[arg(long)]
    config: PathBuf,
    /// Output TAPV stream
    #[arg(long)]
    tapv: PathBuf,
    /// Directory for ground-truth PGM label maps
    #[arg(long)]
    labels_dir: Option<PathBuf>,
    /// Directory for rendered PPM frames
    #[arg(long)]
    frames_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    gop: usize,
    #[arg(long, default_value_t = tapv_core::codec::DEFAULT_SEARCH_RADIUS)]
    radius: usize,
}

#[derive(Args)]
struct EncodeArgs {
    /// Directory of PPM frames, encoded in filename order
    #[arg(long)]
    input: PathBuf,
    /// Output TAPV stream
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 12)]
    gop: usize,
    #[arg(long, default_value_t = tapv_core::codec::DEFAULT_SEARCH_RADIUS)]
    radius: usize,
}

#[derive(Args)]
struct DecodeArgs {
    /// Input TAPV stream
    #[arg(long)]
    input: PathBuf,
    /// Directory for decoded PPM frames
    #[arg(long)]
    output: PathBuf,
}

/// Options shared by `run` and `sweep-alpha`. Every value can also come
/// from `--config`; explicit flags win over the file.
#[derive(Args, Clone)]
struct RunArgs {
    /// Input TAPV stream
    #[arg(long)]
    input: PathBuf,
    /// Option file (`key = value`)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Backend: oracle | color | external | const
    #[arg(long)]
    backend: Option<String>,
    /// Ground-truth PGM directory (oracle backend input)
    #[arg(long)]
    labels_dir: Option<PathBuf>,
    /// PGM directory to score the run against (mIoU)
    #[arg(long)]
    gt_dir: Option<PathBuf>,
    /// Palette file for the color backend
    #[arg(long)]
    palette: Option<PathBuf>,
    /// Program run per frame by the external backend
    #[arg(long)]
    command: Option<String>,
    /// Extra argument for the external command (repeatable)
    #[arg(long, allow_hyphen_values = true)]
    command_arg: Vec<String>,
    /// Concurrent external workers
    #[arg(long)]
    workers: Option<usize>,
    /// Oracle corruption rate in [0, 1]
    #[arg(long)]
    corruption: Option<f64>,
    /// Oracle corruption seed
    #[arg(long)]
    seed: Option<u64>,
    /// Class count (inferred from ground truth when possible)
    #[arg(long)]
    classes: Option<usize>,
    /// Constant backend class id
    #[arg(long)]
    class: Option<usize>,
    /// Enable fast feature warping for P-frames
    #[arg(long)]
    ffw: bool,
    /// Enable residual-guided region correction (implies nothing else)
    #[arg(long)]
    rgc: bool,
    /// Enable residual-guided frame selection
    #[arg(long)]
    rgfs: bool,
    /// Force the per-frame baseline (overrides the module flags)
    #[arg(long)]
    per_frame: bool,
    /// Blend weight for corrected regions
    #[arg(long)]
    alpha: Option<f32>,
    /// Re-group the stream to this GOP size before running
    #[arg(long)]
    gop: Option<usize>,
    /// RGC per-pixel residual threshold
    #[arg(long)]
    thr_rgc: Option<u32>,
    /// RGFS frame score threshold (default scales with frame area)
    #[arg(long)]
    thr_rgfs: Option<f64>,
    /// Score-map output stride
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    region_w: Option<usize>,
    #[arg(long)]
    region_h: Option<usize>,
    #[arg(long)]
    region_stride: Option<usize>,
    /// Overlap RGC segmentation with warping (identical outputs)
    #[arg(long)]
    parallel: bool,
    /// Directory for predicted PGM label maps
    #[arg(long)]
    out_labels: Option<PathBuf>,
    /// CSV file to append the run row to
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Injected full-frame segmentation latency, ms
    #[arg(long, default_value_t = 30.0)]
    ti_ms: f64,
    /// CSV file to append the timing row to
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepAlphaArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated blend weights to evaluate
    #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
    alphas: String,
    /// CSV file to append one row per alpha to
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// File with one frame score per line
    #[arg(long)]
    scores: PathBuf,
    /// Target keyframe fraction
    #[arg(long, default_value_t = 0.10)]
    target: f64,
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (e.g. `tapv run ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => cmd::synth(args),
        Command::Encode(args) => cmd::encode(args),
        Command::Decode(args) => cmd::decode(args),
        Command::Run(args) => cmd::run(args),
        Command::Bench(args) => cmd::bench(args),
        Command::SweepAlpha(args) => cmd::sweep_alpha(args),
        Command::Calibrate(args) => cmd::calibrate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("tapv: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Backend(msg)) => {
            eprintln!("tapv: backend failure: {msg}");
            ExitCode::from(3)
        }
    }
}
