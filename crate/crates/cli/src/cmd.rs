//! Subcommand implementations.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use tapv_core::bench::{
    evaluate_miou, generate_synthetic_sequence, read_pgm, read_ppm, write_pgm, write_ppm, LabelMap,
    RunRow, CSV_HEADER,
};
use tapv_core::codec::{
    decode_sequence, encode_sequence, read_tapv, write_tapv, FrameBuffer, TapvStream,
};
use tapv_core::guidance::{calibrate_rgfs_threshold, FrameSelectConfig, RegionGridConfig};
use tapv_core::pipeline::{measure_timing, run_pipeline, ModuleFlags, PipelineConfig, RunMetrics};
use tapv_core::segmenters::{
    ColorRuleSegmenter, ConstantSegmenter, ExternalSegmenter, FixedLatency, OracleConfig,
    OracleSegmenter, Segmenter,
};

use crate::conf::{load_palette, load_scene, parse_bool, parse_kv_file, parse_value};
use crate::{
    BenchArgs, CalibrateArgs, CliError, DecodeArgs, EncodeArgs, RunArgs, SweepAlphaArgs, SynthArgs,
};

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

// ── Directory and stream IO ─────────────────────────────────────

fn read_stream(path: &Path) -> Result<TapvStream, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| input(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = std::io::BufReader::new(file);
    read_tapv(&mut reader).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write_stream(stream: &TapvStream, path: &Path) -> Result<u64, CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| input(format!("cannot create {}: {e}", path.display())))?;
    let mut writer = std::io::BufWriter::new(file);
    let bytes = write_tapv(stream, &mut writer).map_err(input)?;
    writer.flush().map_err(input)?;
    Ok(bytes)
}

fn sorted_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| input(format!("cannot read directory {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == extension))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(input(format!("no .{extension} files in {}", dir.display())));
    }
    Ok(files)
}

fn read_frames_dir(dir: &Path) -> Result<Vec<FrameBuffer>, CliError> {
    sorted_files(dir, "ppm")?
        .iter()
        .map(|path| {
            let file = std::fs::File::open(path).map_err(input)?;
            read_ppm(&mut std::io::BufReader::new(file))
                .map_err(|e| input(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn read_labels_dir(dir: &Path) -> Result<Vec<LabelMap>, CliError> {
    sorted_files(dir, "pgm")?
        .iter()
        .map(|path| {
            let file = std::fs::File::open(path).map_err(input)?;
            read_pgm(&mut std::io::BufReader::new(file))
                .map_err(|e| input(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn write_labels_dir(labels: &[LabelMap], dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| input(format!("cannot create {}: {e}", dir.display())))?;
    for (t, map) in labels.iter().enumerate() {
        let path = dir.join(format!("label_{t:04}.pgm"));
        let file = std::fs::File::create(&path).map_err(input)?;
        let mut writer = std::io::BufWriter::new(file);
        write_pgm(map, &mut writer).map_err(input)?;
        writer.flush().map_err(input)?;
    }
    Ok(())
}

fn write_frames_dir(frames: &[FrameBuffer], dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| input(format!("cannot create {}: {e}", dir.display())))?;
    for (t, frame) in frames.iter().enumerate() {
        let path = dir.join(format!("frame_{t:04}.ppm"));
        let file = std::fs::File::create(&path).map_err(input)?;
        let mut writer = std::io::BufWriter::new(file);
        write_ppm(frame, &mut writer).map_err(input)?;
        writer.flush().map_err(input)?;
    }
    Ok(())
}

fn append_csv(path: &Path, header: &str, row: &str) -> Result<(), CliError> {
    let fresh = !path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| input(format!("cannot open {}: {e}", path.display())))?;
    if fresh {
        writeln!(file, "{header}").map_err(input)?;
    }
    writeln!(file, "{row}").map_err(input)?;
    Ok(())
}

// ── Option resolution (file < flags) ────────────────────────────

struct ResolvedRun {
    stream: TapvStream,
    cfg: PipelineConfig,
    backend: Box<dyn Segmenter>,
    gt: Option<Vec<LabelMap>>,
    modules_label: String,
}

fn resolve(args: &RunArgs, default_modules: ModuleFlags) -> Result<ResolvedRun, CliError> {
    let file: HashMap<String, String> = match &args.config {
        Some(path) => parse_kv_file(path)?.0,
        None => HashMap::new(),
    };

    let mut stream = read_stream(&args.input)?;
    let gop = args
        .gop
        .or(parse_value(&file, "gop")?)
        .unwrap_or(stream.header.gop_size);
    if gop != stream.header.gop_size {
        // Re-group in memory: decode fully, encode at the requested cadence.
        let frames = decode_sequence(&stream).map_err(input)?;
        stream = encode_sequence(&frames, gop, stream.header.search_radius).map_err(input)?;
    }
    let (w, h) = (stream.header.width, stream.header.height);

    let ds = args.stride.or(parse_value(&file, "stride")?).unwrap_or(4);
    let alpha = args.alpha.or(parse_value(&file, "alpha")?).unwrap_or(0.7);
    let thr_rgc = args
        .thr_rgc
        .or(parse_value(&file, "thr-rgc")?)
        .unwrap_or(30);
    let thr_rgfs = args.thr_rgfs.or(parse_value(&file, "thr-rgfs")?);
    let parallel = args.parallel || parse_bool(&file, "parallel")?.unwrap_or(false);

    let scaled = RegionGridConfig::scaled_for(w, h);
    let region_cfg = RegionGridConfig {
        region_w: args
            .region_w
            .or(parse_value(&file, "region-w")?)
            .unwrap_or(scaled.region_w),
        region_h: args
            .region_h
            .or(parse_value(&file, "region-h")?)
            .unwrap_or(scaled.region_h),
        stride: args
            .region_stride
            .or(parse_value(&file, "region-stride")?)
            .unwrap_or(scaled.stride),
        thr_rgc,
    };
    let frame_cfg = match thr_rgfs {
        Some(thr) => FrameSelectConfig { thr_rgfs: thr },
        None => FrameSelectConfig::scaled_for(w, h),
    };

    let modules = if args.per_frame {
        ModuleFlags::PER_FRAME
    } else {
        let flags = ModuleFlags {
            ffw: args.ffw || parse_bool(&file, "ffw")?.unwrap_or(false),
            rgc: args.rgc || parse_bool(&file, "rgc")?.unwrap_or(false),
            rgfs: args.rgfs || parse_bool(&file, "rgfs")?.unwrap_or(false),
        };
        if flags == ModuleFlags::PER_FRAME {
            default_modules
        } else {
            flags
        }
    };

    let gt_dir = args
        .gt_dir
        .clone()
        .or_else(|| file.get("gt-dir").map(PathBuf::from));
    let gt = gt_dir.as_deref().map(read_labels_dir).transpose()?;
    if let Some(gt) = &gt {
        if gt.len() < stream.frames.len() {
            return Err(input(format!(
                "{} ground-truth maps for {} frames in --gt-dir",
                gt.len(),
                stream.frames.len()
            )));
        }
    }

    let backend_kind = args
        .backend
        .clone()
        .or_else(|| file.get("backend").cloned())
        .unwrap_or_else(|| "oracle".into());
    let classes_flag = args.classes.or(parse_value(&file, "classes")?);
    let labels_dir = args
        .labels_dir
        .clone()
        .or_else(|| file.get("labels-dir").map(PathBuf::from));

    let (backend, num_classes): (Box<dyn Segmenter>, usize) = match backend_kind.as_str() {
        "oracle" => {
            let dir = labels_dir.ok_or_else(|| input("the oracle backend needs --labels-dir"))?;
            let labels = read_labels_dir(&dir)?;
            if labels.len() < stream.frames.len() {
                return Err(input(format!(
                    "{} ground-truth maps for {} frames",
                    labels.len(),
                    stream.frames.len()
                )));
            }
            let inferred = labels
                .iter()
                .flat_map(|l| l.labels.iter())
                .copied()
                .max()
                .unwrap_or(0) as usize
                + 1;
            let classes = classes_flag.unwrap_or(inferred).max(2);
            let cfg = OracleConfig {
                corruption_rate: args
                    .corruption
                    .or(parse_value(&file, "corruption")?)
                    .unwrap_or(0.0),
                seed: args.seed.or(parse_value(&file, "seed")?).unwrap_or(0),
            };
            (
                Box::new(OracleSegmenter::new(labels, classes, ds, cfg).map_err(input)?),
                classes,
            )
        }
        "color" => {
            let path = args
                .palette
                .clone()
                .or_else(|| file.get("palette").map(PathBuf::from))
                .ok_or_else(|| input("the color backend needs --palette"))?;
            let palette = load_palette(&path)?;
            let seg = ColorRuleSegmenter::new(palette, ds).map_err(input)?;
            let classes = classes_flag
                .unwrap_or_else(|| seg.num_classes())
                .max(seg.num_classes());
            if classes != seg.num_classes() {
                return Err(input(format!(
                    "--classes {} disagrees with the palette's {} classes",
                    classes,
                    seg.num_classes()
                )));
            }
            (Box::new(seg), classes)
        }
        "external" => {
            let command = args
                .command
                .clone()
                .or_else(|| file.get("command").cloned())
                .ok_or_else(|| input("the external backend needs --command"))?;
            let classes =
                classes_flag.ok_or_else(|| input("the external backend needs --classes"))?;
            let workers = args.workers.or(parse_value(&file, "workers")?).unwrap_or(1);
            (
                Box::new(ExternalSegmenter::new(
                    command,
                    args.command_arg.clone(),
                    classes,
                    ds,
                    workers,
                )),
                classes,
            )
        }
        "const" => {
            let class_id = args.class.or(parse_value(&file, "class")?).unwrap_or(0);
            let classes = classes_flag.unwrap_or(2).max(class_id + 1);
            (
                Box::new(ConstantSegmenter {
                    class_id,
                    num_classes: classes,
                    ds,
                }),
                classes,
            )
        }
        other => return Err(input(format!("unknown backend `{other}`"))),
    };

    let cfg = PipelineConfig {
        modules,
        region_cfg,
        frame_cfg,
        alpha,
        ds,
        num_classes,
        parallel,
    };
    Ok(ResolvedRun {
        stream,
        cfg,
        backend,
        gt,
        modules_label: modules.label(),
    })
}

fn run_row(resolved: &ResolvedRun, metrics: &RunMetrics) -> RunRow {
    RunRow {
        modules: resolved.modules_label.clone(),
        gop: resolved.stream.header.gop_size,
        alpha: resolved.cfg.alpha,
        thr_rgc: resolved.cfg.region_cfg.thr_rgc,
        thr_rgfs: resolved.cfg.frame_cfg.thr_rgfs,
        miou: metrics.accuracy.as_ref().map(|a| a.miou),
        fps: metrics.mean_fps(),
        keyframe_pct: metrics.keyframe_pct(),
    }
}

// ── Subcommands ─────────────────────────────────────────────────

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    let scene = load_scene(&args.config)?;
    let (frames, labels) = generate_synthetic_sequence(&scene).map_err(input)?;
    let stream = encode_sequence(&frames, args.gop, args.radius).map_err(input)?;
    let bytes = write_stream(&stream, &args.tapv)?;
    if let Some(dir) = &args.labels_dir {
        write_labels_dir(&labels, dir)?;
    }
    if let Some(dir) = &args.frames_dir {
        write_frames_dir(&frames, dir)?;
    }
    println!(
        "{} frames {}x{} (gop {}, {} classes) -> {} ({bytes} bytes)",
        frames.len(),
        scene.width,
        scene.height,
        args.gop,
        scene.num_classes,
        args.tapv.display()
    );
    Ok(())
}

pub fn encode(args: EncodeArgs) -> Result<(), CliError> {
    let frames = read_frames_dir(&args.input)?;
    let stream = encode_sequence(&frames, args.gop, args.radius).map_err(input)?;
    let bytes = write_stream(&stream, &args.output)?;
    println!(
        "{} frames -> {} ({bytes} bytes, gop {})",
        frames.len(),
        args.output.display(),
        args.gop
    );
    Ok(())
}

pub fn decode(args: DecodeArgs) -> Result<(), CliError> {
    let stream = read_stream(&args.input)?;
    let frames = decode_sequence(&stream).map_err(input)?;
    write_frames_dir(&frames, &args.output)?;
    println!("{} frames -> {}", frames.len(), args.output.display());
    Ok(())
}

pub fn run(args: RunArgs) -> Result<(), CliError> {
    let metrics_path = args.metrics.clone();
    let out_labels = args.out_labels.clone();
    let resolved = resolve(&args, ModuleFlags::PER_FRAME)?;

    let (labels, mut metrics) =
        run_pipeline(&resolved.stream, resolved.backend.as_ref(), &resolved.cfg)?;
    if let Some(gt) = &resolved.gt {
        let accuracy =
            evaluate_miou(&labels, &gt[..labels.len()], resolved.cfg.num_classes).map_err(input)?;
        metrics.accuracy = Some(accuracy);
    }
    if let Some(dir) = &out_labels {
        write_labels_dir(&labels, dir)?;
    }

    let row = run_row(&resolved, &metrics);
    println!("{}", row.pretty());
    if let Some(accuracy) = &metrics.accuracy {
        let per_class: Vec<String> = accuracy
            .per_class_iou
            .iter()
            .enumerate()
            .map(|(c, iou)| match iou {
                Some(v) => format!("{c}:{:.3}", v),
                None => format!("{c}:-"),
            })
            .collect();
        println!("per-class IoU: {}", per_class.join(" "));
    }
    println!(
        "keyframes: {} of {} P-frames; corrected regions: {}",
        metrics.keyframes,
        metrics.p_frame_count(),
        metrics.corrected_regions.len()
    );
    for event in &metrics.fallbacks {
        eprintln!("warning: {event}");
    }
    if let Some(path) = &metrics_path {
        append_csv(path, CSV_HEADER, &row.csv_line())?;
    }
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<(), CliError> {
    let csv = args.csv.clone();
    let mut run_args = args.run;
    // The stub needs no ground truth; default to the constant backend.
    if run_args.backend.is_none() {
        run_args.backend = Some("const".into());
    }
    let resolved = resolve(&run_args, ModuleFlags::FFW)?;
    let backend = FixedLatency::new(BoxedSegmenter(resolved.backend), args.ti_ms);
    let report = measure_timing(&resolved.stream, &backend, &resolved.cfg)?;

    println!(
        "modules={} g={} frames={} (full {}, propagated {})",
        resolved.modules_label,
        resolved.stream.header.gop_size,
        report.metrics.frame_count(),
        report.full_frames,
        report.propagated_frames
    );
    println!(
        "measured:  T_I={:.3} ms  T_P={:.3} ms  T_avg={:.3} ms  ({:.1} FPS)",
        report.model.t_i_ms, report.model.t_p_ms, report.measured_avg_ms, report.fps
    );
    println!(
        "predicted: T_avg={:.3} ms (GOP timing model)",
        report.predicted_avg_ms
    );
    println!(
        "decode:    {:.3} ms/frame, reported separately",
        report.decode_avg_ms
    );
    if let Some(path) = &csv {
        append_csv(
            path,
            "modules,gop,t_i_ms,t_p_ms,measured_avg_ms,predicted_avg_ms,decode_avg_ms,fps",
            &format!(
                "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.2}",
                resolved.modules_label,
                resolved.stream.header.gop_size,
                report.model.t_i_ms,
                report.model.t_p_ms,
                report.measured_avg_ms,
                report.predicted_avg_ms,
                report.decode_avg_ms,
                report.fps
            ),
        )?;
    }
    Ok(())
}

/// Boxed trait object as a value type, so wrappers can own any backend.
struct BoxedSegmenter(Box<dyn Segmenter>);

impl Segmenter for BoxedSegmenter {
    fn num_classes(&self) -> usize {
        self.0.num_classes()
    }
    fn output_stride(&self) -> usize {
        self.0.output_stride()
    }
    fn segment_full(
        &self,
        t: usize,
        frame: &FrameBuffer,
    ) -> Result<tapv_core::warp::ScoreMap, tapv_core::segmenters::SegmenterError> {
        self.0.segment_full(t, frame)
    }
    fn segment_region(
        &self,
        t: usize,
        frame: &FrameBuffer,
        region: tapv_core::guidance::Region,
    ) -> Result<tapv_core::warp::ScoreMap, tapv_core::segmenters::SegmenterError> {
        self.0.segment_region(t, frame, region)
    }
}

pub fn sweep_alpha(args: SweepAlphaArgs) -> Result<(), CliError> {
    let csv = args.csv.clone();
    let alphas: Vec<f32> = args
        .alphas
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| input(format!("bad alpha `{s}` in --alphas")))
        })
        .collect::<Result<_, _>>()?;
    if alphas.is_empty() {
        return Err(input("--alphas is empty"));
    }

    let mut run_args = args.run;
    // The sweep isolates the correction blend: FFW+RGC, alpha varying.
    run_args.per_frame = false;
    run_args.ffw = true;
    run_args.rgc = true;
    run_args.rgfs = false;
    let mut resolved = resolve(&run_args, ModuleFlags::FFW_RGC)?;
    let gt = resolved
        .gt
        .take()
        .ok_or_else(|| input("sweep-alpha needs --gt-dir to score runs"))?;

    let mut best: Option<(f32, f64)> = None;
    for &alpha in &alphas {
        resolved.cfg.alpha = alpha;
        let (labels, mut metrics) =
            run_pipeline(&resolved.stream, resolved.backend.as_ref(), &resolved.cfg)?;
        let accuracy =
            evaluate_miou(&labels, &gt[..labels.len()], resolved.cfg.num_classes).map_err(input)?;
        metrics.accuracy = Some(accuracy);
        let row = run_row(&resolved, &metrics);
        println!("{}", row.pretty());
        if let Some(path) = &csv {
            append_csv(path, CSV_HEADER, &row.csv_line())?;
        }
        let miou = metrics.accuracy.unwrap().miou;
        if best.is_none_or(|(_, b)| miou > b) {
            best = Some((alpha, miou));
        }
    }
    let (alpha, miou) = best.unwrap();
    println!("best alpha = {alpha} (mIoU {:.4})", miou);
    Ok(())
}

pub fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.scores)
        .map_err(|e| input(format!("cannot read {}: {e}", args.scores.display())))?;
    let scores: Vec<f64> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse().map_err(|_| input(format!("bad score `{l}`"))))
        .collect::<Result<_, _>>()?;
    let threshold = calibrate_rgfs_threshold(&scores, args.target).map_err(input)?;
    let selected = scores.iter().filter(|&&s| s > threshold).count();
    println!("threshold = {threshold}");
    println!(
        "selects {selected} of {} scores ({:.2}%)",
        scores.len(),
        100.0 * selected as f64 / scores.len() as f64
    );
    Ok(())
}
