//! End-to-end CLI behavior: subcommand flows, config-file precedence, and
//! the exit-code contract (0 success, 2 input error, 3 backend failure).

use std::path::Path;
use std::process::{Command, Output};

fn tapv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tapv"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

const SCENE: &str = "\
width = 64
height = 64
frames = 10
classes = 3
background = 0
seed = 4
sprite = rect class=1 size=20 vel=3,0 at=4,10
sprite = disk class=2 size=16 vel=0,2 at=40,6
";

fn synth_into(dir: &Path) {
    write(&dir.join("scene.cfg"), SCENE);
    let output = tapv()
        .current_dir(dir)
        .args(["synth", "--config", "scene.cfg", "--tapv", "clip.tapv"])
        .args(["--labels-dir", "gt", "--frames-dir", "frames", "--gop", "5"])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn synth_decode_reencode_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());

    let output = tapv()
        .current_dir(dir.path())
        .args(["decode", "--input", "clip.tapv", "--output", "decoded"])
        .output()
        .unwrap();
    assert!(output.status.success());

    // Decoded frames match the rendered ones byte for byte.
    for t in 0..10 {
        let name = format!("frame_{t:04}.ppm");
        let rendered = std::fs::read(dir.path().join("frames").join(&name)).unwrap();
        let decoded = std::fs::read(dir.path().join("decoded").join(&name)).unwrap();
        assert_eq!(rendered, decoded, "frame {t}");
    }

    // Re-encoding the decoded frames reproduces the stream bytes.
    let output = tapv()
        .current_dir(dir.path())
        .args([
            "encode",
            "--input",
            "decoded",
            "--output",
            "again.tapv",
            "--gop",
            "5",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let original = std::fs::read(dir.path().join("clip.tapv")).unwrap();
    let again = std::fs::read(dir.path().join("again.tapv")).unwrap();
    assert_eq!(original, again);
}

#[test]
fn run_reports_metrics_and_respects_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    write(
        &dir.path().join("run.cfg"),
        "ffw = true\nrgc = true\nalpha = 0.3\nthr-rgc = 25\n",
    );

    // Config file alone: alpha 0.3.
    let output = tapv()
        .current_dir(dir.path())
        .args(["run", "--input", "clip.tapv", "--config", "run.cfg"])
        .args([
            "--backend",
            "oracle",
            "--labels-dir",
            "gt",
            "--gt-dir",
            "gt",
        ])
        .args(["--metrics", "m.csv"])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(stdout(&output).contains("modules=ffw+rgc"));

    // Explicit flag wins over the file.
    let output = tapv()
        .current_dir(dir.path())
        .args([
            "run",
            "--input",
            "clip.tapv",
            "--config",
            "run.cfg",
            "--alpha",
            "0.9",
        ])
        .args([
            "--backend",
            "oracle",
            "--labels-dir",
            "gt",
            "--gt-dir",
            "gt",
        ])
        .args(["--metrics", "m.csv"])
        .output()
        .unwrap();
    assert!(output.status.success());

    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3, "header plus two runs:\n{csv}");
    let alpha_of = |row: &str| row.split(',').nth(2).unwrap().to_string();
    assert_eq!(alpha_of(rows[1]), "0.3");
    assert_eq!(alpha_of(rows[2]), "0.9");
    let miou_field = rows[1].split(',').nth(5).unwrap();
    assert!(miou_field.parse::<f64>().unwrap() > 0.5);
}

#[test]
fn run_without_module_flags_is_the_per_frame_baseline() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let output = tapv()
        .current_dir(dir.path())
        .args(["run", "--input", "clip.tapv"])
        .args([
            "--backend",
            "oracle",
            "--labels-dir",
            "gt",
            "--gt-dir",
            "gt",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(stdout(&output).contains("modules=per-frame"));
    // The exact oracle at per-frame settings is only limited by the stride.
    assert!(stdout(&output).contains("mIoU="));
}

#[test]
fn missing_input_exits_2() {
    let output = tapv()
        .args(["run", "--input", "/nonexistent.tapv", "--backend", "const"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn corrupt_stream_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("bad.tapv"), "JUNKJUNKJUNK");
    let output = tapv()
        .current_dir(dir.path())
        .args(["run", "--input", "bad.tapv", "--backend", "const"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("magic"));
}

#[test]
fn invalid_module_combination_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let output = tapv()
        .current_dir(dir.path())
        .args(["run", "--input", "clip.tapv", "--rgc"])
        .args(["--backend", "oracle", "--labels-dir", "gt"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn failing_external_backend_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let output = tapv()
        .current_dir(dir.path())
        .args(["run", "--input", "clip.tapv", "--ffw"])
        .args([
            "--backend",
            "external",
            "--command",
            "/bin/false",
            "--classes",
            "3",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("backend failure"));
}

#[test]
fn bench_reports_both_measured_and_predicted_times() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let output = tapv()
        .current_dir(dir.path())
        .args([
            "bench",
            "--input",
            "clip.tapv",
            "--ti-ms",
            "5",
            "--csv",
            "t.csv",
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = stdout(&output);
    assert!(text.contains("measured:"));
    assert!(text.contains("predicted:"));
    assert!(text.contains("decode:"));
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(csv.starts_with("modules,gop,t_i_ms"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn calibrate_reports_the_quantile_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let scores: String = (1..=100).map(|v| format!("{v}\n")).collect();
    write(&dir.path().join("scores.txt"), &scores);
    let output = tapv()
        .current_dir(dir.path())
        .args(["calibrate", "--scores", "scores.txt", "--target", "0.10"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("threshold = 90"), "{text}");
    assert!(text.contains("selects 10 of 100"), "{text}");
}

#[test]
fn sweep_alpha_requires_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let output = tapv()
        .current_dir(dir.path())
        .args(["sweep-alpha", "--input", "clip.tapv"])
        .args(["--backend", "oracle", "--labels-dir", "gt"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn run_regroups_the_stream_when_gop_differs() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let output = tapv()
        .current_dir(dir.path())
        .args(["run", "--input", "clip.tapv", "--ffw", "--gop", "2"])
        .args(["--backend", "oracle", "--labels-dir", "gt"])
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(stdout(&output).contains("g=2"));
}
