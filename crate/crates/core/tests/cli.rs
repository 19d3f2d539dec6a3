mod common;

use std::path::Path;
use std::process::{Command, Output};

use sbca::imagecore::{load_png, save_png, Image};

fn sbca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbca")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_identical_images() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.png");
    save_png(&common::synthetic_disc(), &x).unwrap();
    let out = sbca(&["eval", "--a", path(&x), "--b", path(&x)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PSNR=inf"), "{text}");
    assert!(text.contains("SSIM=1.000000"), "{text}");
}

#[test]
fn usage_errors_exit_1() {
    let out = sbca(&["upscale", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(sbca(&[]).status.code(), Some(1));
    assert_eq!(sbca(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.png");
    save_png(&Image::black(8, 8), &x).unwrap();
    let o = dir.path().join("o.png");
    let bad_plan = sbca(&["upscale", "--in", path(&x), "--out", path(&o), "--scale", "18", "--factors", "4,3,1.4"]);
    assert_eq!(bad_plan.status.code(), Some(1));
    let no_model = sbca(&["upscale", "--in", path(&x), "--out", path(&o), "--scale", "2", "--renderer", "implicit"]);
    assert_eq!(no_model.status.code(), Some(1));
}

#[test]
fn io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.png");
    let out = sbca(&["eval", "--a", path(&missing), "--b", path(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"not a png").unwrap();
    let o = dir.path().join("o.png");
    let out = sbca(&["upscale", "--in", path(&junk), "--out", path(&o), "--scale", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn remote_failures_exit_3_unless_fallback() {
    let base = common::spawn_completion_server();
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.png");
    save_png(&Image::filled(8, 8, [0.4, 0.5, 0.6]), &x).unwrap();
    let o = dir.path().join("o.png");
    let endpoint = format!("{base}/status");
    let args = ["upscale", "--in", path(&x), "--out", path(&o), "--scale", "2", "--completer", "remote", "--endpoint", &endpoint];
    assert_eq!(sbca(&args).status.code(), Some(3));
    let mut lenient = args.to_vec();
    lenient.push("--completer-fallback");
    assert_eq!(sbca(&lenient).status.code(), Some(0));
    assert_eq!(load_png(&o).unwrap().dims(), (16, 16));
}

#[test]
fn upscale_writes_exact_dims_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.png");
    let img = Image::from_fn(17, 17, |i, j| [(i as f64) / 16.0, (j as f64) / 16.0, 0.5]);
    save_png(&img, &x).unwrap();
    let o = dir.path().join("o.png");
    let r = dir.path().join("r.json");
    let out = sbca(&[
        "upscale", "--in", path(&x), "--out", path(&o), "--scale", "4.7", "--strokes-per-patch", "3", "--report", path(&r),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(load_png(&o).unwrap().dims(), (80, 80));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&r).unwrap()).unwrap();
    assert_eq!(report["scale"], 4.7);
    let cycles = report["cycles"].as_array().unwrap();
    assert_eq!(cycles.len(), report["factors"].as_array().unwrap().len());
    assert_eq!(cycles.last().unwrap()["out"], serde_json::json!([80, 80]));
}

#[test]
fn render_stroke_writes_png() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("s.png");
    let out = sbca(&[
        "render-stroke", "--params", "0.1,0.5,0.5,0.1,0.9,0.5,0.05,0.1,1,0,0", "--height", "24", "--width", "40", "--out", path(&o),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let img = load_png(&o).unwrap();
    assert_eq!(img.dims(), (24, 40));
    assert!(img.as_raw().iter().any(|&v| v > 0.9));
    let short = sbca(&["render-stroke", "--params", "0.1,0.5", "--height", "4", "--width", "4", "--out", path(&o)]);
    assert_eq!(short.status.code(), Some(1));
}
