//! The `meme` binary run stage by stage on generated datasets.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn meme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meme"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = meme(args);
    assert!(out.status.success(), "meme {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn stderr_of_failure(args: &[&str]) -> String {
    let out = meme(args);
    assert!(!out.status.success(), "meme {args:?} unexpectedly succeeded");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn arg(key: &str, p: &Path) -> String {
    format!("{key}={}", p.display())
}

/// Renders a short dataset into `dir` with optional extra scene keys.
fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth".to_string(), arg("output_dir", dir), "synth.n_frames=24".into()];
    args.extend(extra.iter().map(|s| s.to_string()));
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
}

fn inputs(data: &Path) -> [String; 2] {
    [arg("sequence_dir", &data.join("frames")), arg("annotation", &data.join("annotation.txt"))]
}

fn run(stage: &str, data: &Path, out: &Path, extra: &[String]) -> Output {
    let [seq, ann] = inputs(data);
    let mut args = vec![stage.to_string(), seq, ann, arg("output_dir", out)];
    args.extend(extra.iter().cloned());
    meme(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn synth_then_all_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, out) = (tmp.path().join("data"), tmp.path().join("out"));
    synth(&data, &[]);
    let o = run("all", &data, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    assert_eq!(files(&out.join("masks")).len(), 24);
    for f in ["model.txt", "skeleton.csv", "curvature.csv", "trajectory.csv", "summary.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("frequency_hz,wave_speed_bl_per_s,wavelength_bl,direction\n"));
}

#[test]
fn stages_run_separately_match_all() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, whole, staged) = (tmp.path().join("data"), tmp.path().join("whole"), tmp.path().join("staged"));
    synth(&data, &["synth.preset=gradient"]);
    assert!(run("all", &data, &whole, &[]).status.success());
    for stage in ["learn", "segment", "skeleton", "motility"] {
        let o = run(stage, &data, &staged, &[]);
        assert!(o.status.success(), "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (files(&whole), files(&staged));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        if x.is_file() {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
        }
    }
}

#[test]
fn eval_writes_both_methods() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, out) = (tmp.path().join("data"), tmp.path().join("out"));
    synth(&data, &[]);
    assert!(run("learn", &data, &out, &[]).status.success());
    let o = run("eval", &data, &out, &[arg("truth_dir", &data.join("truth"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sequence,frame,method,surface_error,nematode_yield");
    assert_eq!(lines.len(), 1 + 2 * 24 + 2);
    assert!(lines[lines.len() - 2].starts_with("frames,mean,meme,"));
}

#[test]
fn learn_without_a_mask_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &[]);
    fs::write(data.join("annotation.txt"), "frame=frames/frame_0000.png\nwidth_px=12\n").unwrap();
    let err = stderr_of_failure(&[
        "learn",
        &arg("annotation", &data.join("annotation.txt")),
        &arg("output_dir", &tmp.path().join("out")),
    ]);
    assert!(err.contains("`mask`"), "{err}");

    let err = stderr_of_failure(&["learn", &arg("output_dir", &tmp.path().join("out"))]);
    assert!(err.contains("`annotation`"), "{err}");
}

#[test]
fn model_and_sequence_dimensions_must_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let (big, small, out) = (tmp.path().join("big"), tmp.path().join("small"), tmp.path().join("out"));
    synth(&big, &[]);
    synth(
        &small,
        &[
            "synth.width=320",
            "synth.height=240",
            "synth.worm_length=150",
            "synth.amplitude=10",
            "synth.wavelength=120",
            "synth.speed=5",
        ],
    );
    assert!(run("learn", &big, &out, &[]).status.success());
    let o = run("segment", &small, &out, &[]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("dimension mismatch") && err.contains("640x480") && err.contains("320x240"), "{err}");
}

#[test]
fn malformed_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("bad.conf");
    fs::write(&conf, "k=2\nthis line has no equals sign\n").unwrap();
    let err = stderr_of_failure(&["all", "--config", conf.to_str().unwrap()]);
    assert!(err.contains("line 2"), "{err}");
    let err = stderr_of_failure(&["synth", "no_such_key=1"]);
    assert!(err.contains("no_such_key"), "{err}");
    stderr_of_failure(&["segment", "k=abc"]);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &["synth.preset=pillars"]);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run("all", &data, &a, &["--seed".into(), "3".into()]).status.success());
    assert!(run("all", &data, &b, &["--seed".into(), "3".into()]).status.success());
    for (x, y) in files(&a).iter().zip(files(&b)) {
        if x.is_file() {
            assert_eq!(fs::read(x).unwrap(), fs::read(&y).unwrap(), "{}", x.display());
        }
    }
    for (x, y) in files(&a.join("masks")).iter().zip(files(&b.join("masks"))) {
        assert_eq!(fs::read(x).unwrap(), fs::read(&y).unwrap());
    }
}
