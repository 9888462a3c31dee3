use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use jdq_core::io::{write_ply, PlyEncoding};
use jdq_core::{BinaryMask, ColoredVertex, RasterImage, Rgb, TriFace, TriMesh};

fn jdq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jdq"))
        .args(args)
        .output()
        .expect("spawn jdq")
}

fn ok(args: &[&str]) -> Output {
    let out = jdq(args);
    assert!(
        out.status.success(),
        "jdq {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes a synth spec and runs `jdq synth`, returning the output directory.
fn synth(dir: &TempDir, name: &str, spec: &str) -> PathBuf {
    let spec_path = dir.path().join(format!("{name}.json"));
    fs::write(&spec_path, spec).unwrap();
    let out = dir.path().join(name);
    ok(&["synth", p(&spec_path), "--out-dir", p(&out)]);
    out
}

const BAND: &str = r#"{"kind":"mesh","grid_nx":20,"grid_ny":3,"cell_size":25.0,
    "patches":[{"x0":0,"y0":0,"x1":20,"y1":3,"red":255}]}"#;

const GRADIENT: &str = r#"{"kind":"mesh","grid_nx":40,"grid_ny":2,"cell_size":12.5,
    "background_red":0,"gradient":{"axis":"x","start":180,"end":255},
    "patches":[{"x0":20,"y0":0,"x1":40,"y1":2,"red":250}]}"#;

#[test]
fn synth_then_quantify_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let scene = synth(&dir, "band", BAND);
    let expected = json(&scene.join("expected.json"));
    assert_eq!(expected["schema"], 1);
    assert_eq!(expected["exact_patch_area"], 37_500.0);

    let report = dir.path().join("report.json");
    ok(&["quantify", p(&scene.join("mesh.ply")), "--out", p(&report)]);
    let report = json(&report);
    assert_eq!(report["schema"], 1);
    assert!((report["damage_area"].as_f64().unwrap() - 37_500.0).abs() < 1e-9 * 37_500.0);
    assert!((report["jdi"].as_f64().unwrap() - 100.0).abs() < 1e-9 * 100.0);
    assert_eq!(report["damaged_face_count"], expected["gt_face_count"]);

    // Scale and denominator flags feed straight into the ratio.
    let scaled = dir.path().join("scaled.json");
    ok(&[
        "quantify",
        p(&scene.join("mesh.ply")),
        "--scale",
        "0.5",
        "--sawcut-length-mm",
        "250",
        "--out",
        p(&scaled),
    ]);
    let scaled = json(&scaled);
    assert_eq!(scaled["damage_area"], 37_500.0 / 4.0);
    assert_eq!(scaled["jdi"], 50.0);
}

#[test]
fn threshold_255_finds_nothing() {
    let dir = TempDir::new().unwrap();
    let scene = synth(&dir, "band", BAND);
    let out = ok(&["quantify", p(&scene.join("mesh.ply")), "--threshold", "255"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["jdi"], 0.0);
    assert_eq!(report["damaged_face_count"], 0);
}

#[test]
fn recolored_output_marks_damage_green() {
    let dir = TempDir::new().unwrap();
    let scene = synth(&dir, "grad", GRADIENT);
    let recolored = dir.path().join("green.ply");
    let faces = dir.path().join("faces.txt");
    ok(&[
        "quantify",
        p(&scene.join("mesh.ply")),
        "--recolored",
        p(&recolored),
        "--faces-out",
        p(&faces),
    ]);
    let mesh = jdq_core::parse_ply(&fs::read(&recolored).unwrap()).unwrap();
    let ids: Vec<usize> = fs::read_to_string(&faces)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.trim().parse().unwrap())
        .collect();
    assert!(!ids.is_empty());
    for (i, c) in mesh.face_colors().unwrap().iter().enumerate() {
        assert_eq!(*c == Rgb::GREEN, ids.contains(&i), "face {i}");
    }
}

#[test]
fn colorless_mesh_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("plain.ply");
    fs::write(
        &path,
        "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n\
         element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n",
    )
    .unwrap();
    let timing = dir.path().join("timing.json");
    let out = jdq(&["--timing-json", p(&timing), "quantify", p(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let err: Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(err["status"], "error");
    assert_eq!(err["kind"], "colorless_mesh");

    let timing = json(&timing);
    assert_eq!(timing["failed_stage"], "load");
    assert_eq!(timing["stages"][0]["ok"], false);
    assert!(timing["stages"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["seconds"].as_f64().unwrap() >= 0.0));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let out = jdq(&["quantify", p(&dir.path().join("nope.ply"))]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains(r#""kind":"io""#), "{stderr}");
}

#[test]
fn default_sweep_has_four_monotone_rows() {
    let dir = TempDir::new().unwrap();
    let scene = synth(&dir, "grad", GRADIENT);
    let csv = dir.path().join("sweep.csv");
    ok(&[
        "sweep",
        p(&scene.join("mesh.ply")),
        "--gt-faces",
        p(&scene.join("gt_faces.txt")),
        "--out",
        p(&csv),
    ]);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("threshold,recall,error,jdi_percent"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        [190.0, 210.0, 230.0, 250.0]
    );
    for w in rows.windows(2) {
        for (col, (next, prev)) in w[1].iter().zip(&w[0]).enumerate().skip(1) {
            assert!(next <= prev, "column {col} rises: {text}");
        }
        assert!(w[1][3] < w[0][3]);
    }
}

#[test]
fn single_threshold_sweep_agrees_with_quantify_and_eval3d() {
    let dir = TempDir::new().unwrap();
    let scene = synth(&dir, "grad", GRADIENT);
    let mesh = scene.join("mesh.ply");
    let gt = scene.join("gt_faces.txt");

    let sweep = ok(&["sweep", p(&mesh), "--gt-faces", p(&gt), "--thresholds", "230"]);
    let text = String::from_utf8(sweep.stdout).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(text.lines().count(), 2);

    let q: Value = serde_json::from_slice(&ok(&["quantify", p(&mesh), "--threshold", "230"]).stdout).unwrap();
    let m: Value =
        serde_json::from_slice(&ok(&["eval3d", p(&mesh), "--gt-faces", p(&gt), "--threshold", "230"]).stdout).unwrap();
    assert_eq!(row[1], m["recall"].as_f64().unwrap());
    assert_eq!(row[2], m["error"].as_f64().unwrap());
    assert_eq!(row[3], q["jdi"].as_f64().unwrap());
}

#[test]
fn eval3d_with_color_key_and_face_lists() {
    let dir = TempDir::new().unwrap();
    let yellow = Rgb::YELLOW;
    let grey = Rgb::new(90, 90, 90);
    let vertices = [
        ([0.0, 0.0, 0.0], yellow),
        ([2.0, 0.0, 0.0], yellow),
        ([2.0, 2.0, 0.0], yellow),
        ([0.0, 2.0, 0.0], grey),
    ]
    .map(|(p, c)| ColoredVertex::new(p, c))
    .to_vec();
    let mesh = TriMesh::new(vertices, vec![TriFace::new(0, 1, 2), TriFace::new(0, 2, 3)]).unwrap();
    let path = dir.path().join("labeled.ply");
    fs::write(&path, write_ply(&mesh, None, PlyEncoding::Ascii).unwrap()).unwrap();
    let pred = dir.path().join("pred.txt");
    fs::write(&pred, "# predicted\n0\n1\n").unwrap();

    let out = ok(&["eval3d", p(&path), "--pred-faces", p(&pred), "--gt-color", "255,255,0"]);
    let m: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(m["tp"], 2.0);
    assert_eq!(m["fp"], 2.0);
    assert_eq!(m["recall"], 1.0);
    assert_eq!(m["error"], 1.0);

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "7\n").unwrap();
    let out = jdq(&["eval3d", p(&path), "--pred-faces", p(&bad), "--gt-color", "255,255,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval2d_and_mask() {
    let dir = TempDir::new().unwrap();
    let masks = synth(
        &dir,
        "masks",
        r#"{"kind":"masks","width":32,"height":16,"gt":{"x":4,"y":4,"w":10,"h":8},"pred":{"x":8,"y":4,"w":10,"h":8}}"#,
    );
    let same: Value =
        serde_json::from_slice(&ok(&["eval2d", p(&masks.join("gt.png")), p(&masks.join("gt.png"))]).stdout).unwrap();
    assert_eq!(
        (same["recall"].as_f64(), same["error"].as_f64()),
        (Some(1.0), Some(0.0))
    );

    let shifted: Value =
        serde_json::from_slice(&ok(&["eval2d", p(&masks.join("pred.png")), p(&masks.join("gt.png"))]).stdout).unwrap();
    // 6×8 overlap out of an 80-pixel ground truth, 4×8 spill.
    assert_eq!(shifted["tp"], 48.0);
    assert_eq!(shifted["fp"], 32.0);
    assert_eq!(shifted["recall"], 0.6);
    assert_eq!(shifted["error"], 0.4);

    let image = dir.path().join("photo.png");
    RasterImage::filled(32, 16, Rgb::new(10, 20, 30))
        .unwrap()
        .save_png(&image)
        .unwrap();
    let painted = dir.path().join("painted.png");
    ok(&["mask", p(&image), p(&masks.join("gt.png")), "--out", p(&painted)]);
    let painted = RasterImage::load_png(&painted).unwrap();
    let gt = BinaryMask::load_png(&masks.join("gt.png")).unwrap();
    for y in 0..16 {
        for x in 0..32 {
            let want = if gt.get(x, y) { [255, 0, 0] } else { [10, 20, 30] };
            assert_eq!(painted.get(x, y), want);
        }
    }

    let small = dir.path().join("small.png");
    BinaryMask::new(2, 2, vec![true; 4]).unwrap().save_png(&small).unwrap();
    let out = jdq(&["eval2d", p(&small), p(&masks.join("gt.png"))]);
    assert_eq!(out.status.code(), Some(2));
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn augment_263_to_1578_deterministically() {
    let dir = TempDir::new().unwrap();
    let inputs = dir.path().join("frames");
    fs::create_dir(&inputs).unwrap();
    for i in 0..263u32 {
        let img = RasterImage::from_fn(12, 9, |x, y| [(x * 20 + i) as u8, (y * 25) as u8, (i * 7) as u8]).unwrap();
        img.save_png(&inputs.join(format!("frame_{i:03}.png"))).unwrap();
    }
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    for out in [&first, &second] {
        ok(&[
            "augment",
            p(&inputs),
            "--out",
            p(out),
            "--seed",
            "7",
            "--ops-per-image",
            "5",
        ]);
    }
    let a = listing(&first);
    assert_eq!(a.len(), 1578);
    assert_eq!(a, listing(&second));
    assert!(a.iter().any(|(n, _)| n == "frame_000_00_orig.png"));

    // Rerunning into the same directory overwrites without adding files.
    ok(&[
        "augment",
        p(&inputs),
        "--out",
        p(&first),
        "--seed",
        "7",
        "--ops-per-image",
        "5",
    ]);
    assert_eq!(listing(&first), a);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let scene = synth(&dir, "grad", GRADIENT);
    let again = synth(&dir, "grad_again", GRADIENT);
    assert_eq!(listing(&scene), listing(&again));

    let run = |tag: &str| {
        let report = dir.path().join(format!("{tag}.json"));
        let ply = dir.path().join(format!("{tag}.ply"));
        let csv = dir.path().join(format!("{tag}.csv"));
        ok(&[
            "quantify",
            p(&scene.join("mesh.ply")),
            "--out",
            p(&report),
            "--recolored",
            p(&ply),
        ]);
        ok(&[
            "sweep",
            p(&scene.join("mesh.ply")),
            "--gt-faces",
            p(&scene.join("gt_faces.txt")),
            "--out",
            p(&csv),
        ]);
        [report, ply, csv].map(|f| fs::read(f).unwrap())
    };
    assert_eq!(run("one"), run("two"));
}

#[test]
fn timing_report_on_success() {
    let dir = TempDir::new().unwrap();
    let scene = synth(&dir, "band", BAND);
    let timing = dir.path().join("timing.json");
    ok(&["--timing-json", p(&timing), "quantify", p(&scene.join("mesh.ply"))]);
    let timing = json(&timing);
    assert_eq!(timing["command"], "quantify");
    assert!(timing["failed_stage"].is_null());
    let names: Vec<&str> = timing["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["load", "detect", "quantify", "write"]);
}
