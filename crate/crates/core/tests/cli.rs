use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use symdetect::geometry::{orientation, Segment};
use symdetect::interchange::{
    read_axes_file, read_rotations_file, write_axes_file, AxisSource, SymmetryAxis,
};
use symdetect::synthgen::{generate, PatternKind, PatternSpec};

fn symdetect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symdetect"))
        .args(args)
        .env_remove("SYMDETECT_CONFIG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = symdetect(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn axis(x1: f64, y1: f64, x2: f64, y2: f64, score: f64) -> SymmetryAxis {
    SymmetryAxis::new(
        Segment::from_coords(x1, y1, x2, y2).unwrap(),
        score,
        0,
        AxisSource::External,
    )
    .unwrap()
}

struct Shared {
    _dir: tempfile::TempDir,
    model: PathBuf,
}

fn shared() -> &'static Shared {
    static CELL: OnceLock<Shared> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let model = dir.path().join("model.json");
        ok(&[
            "train",
            "--patterns",
            "8",
            "--n-trees",
            "20",
            "--seed",
            "3",
            "--out",
            s(&model),
        ]);
        Shared { _dir: dir, model }
    })
}

#[test]
fn detect_finds_dihedral_axes() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    ok(&[
        "generate",
        "--kind",
        "dihedral-4",
        "--seed",
        "11",
        "-o",
        s(&gen),
    ]);
    let out = dir.path().join("out");
    ok(&["detect", s(&gen), "-o", s(&out)]);
    let axes = read_axes_file(&out.join("dihedral-4_11.axes.csv"), None).unwrap();
    let (_, gt) = generate(&PatternSpec::new(PatternKind::Dihedral(4), 256, 11, 0.0)).unwrap();
    let diag = 256f64 * 2f64.sqrt();
    let near = gt
        .axes
        .iter()
        .filter(|g| {
            axes.iter().any(|a| {
                symdetect::geometry::angular_difference(orientation(&a.segment), orientation(g))
                    < 10f64.to_radians()
                    && a.segment.midpoint().distance(g.midpoint()) < 0.1 * diag
            })
        })
        .count();
    assert!(axes.len() >= 4, "{} axes", axes.len());
    assert_eq!(near, 4);
    assert!(out.join("dihedral-4_11.overlay.png").exists());
}

#[test]
fn constant_image_gives_no_axes_and_plain_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("flat.png");
    image::GrayImage::from_pixel(96, 96, image::Luma([128]))
        .save(&png)
        .unwrap();
    let out = dir.path().join("out");
    ok(&["detect", s(&png), "-o", s(&out)]);
    assert_eq!(
        fs::read_to_string(out.join("flat.axes.csv"))
            .unwrap()
            .trim(),
        ""
    );
    let overlay = image::open(out.join("flat.overlay.png")).unwrap().to_rgb8();
    assert!(overlay.pixels().all(|p| p.0 == [128, 128, 128]));
}

#[test]
fn axis_file_skips_detector() {
    let dir = tempfile::tempdir().unwrap();
    let axes = dir.path().join("ext.csv");
    write_axes_file(
        &axes,
        &[
            axis(50.0, 0.0, 50.0, 100.0, 0.9),
            axis(0.0, 50.0, 100.0, 50.0, 0.85),
        ],
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&[
        "detect",
        "--axes",
        s(&axes),
        "--width",
        "100",
        "--height",
        "100",
        "-o",
        s(&out),
    ]);
    let doc = symdetect::interchange::read_document(&out.join("ext.json")).unwrap();
    assert_eq!(doc.axes.len(), 2);
    assert!(doc.axes.iter().all(|a| a.source == AxisSource::External));
}

#[test]
fn rule_rotation_from_perpendicular_cross() {
    let dir = tempfile::tempdir().unwrap();
    let axes = dir.path().join("cross.csv");
    write_axes_file(
        &axes,
        &[
            axis(50.0, 10.0, 50.0, 90.0, 0.9),
            axis(10.0, 50.0, 90.0, 50.0, 0.9),
        ],
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&[
        "rotations",
        "--rule",
        "--axes",
        s(&axes),
        "--width",
        "100",
        "--height",
        "100",
        "-o",
        s(&out),
    ]);
    let rot = read_rotations_file(&out.join("cross.rotations.csv")).unwrap();
    assert_eq!(rot.len(), 1);
    assert!((rot[0].center.x - 50.0).abs() < 1e-9 && (rot[0].center.y - 50.0).abs() < 1e-9);
    let overlay = image::open(out.join("cross.overlay.png"))
        .unwrap()
        .to_rgb8();
    assert!(overlay
        .pixels()
        .any(|p| p.0 == symdetect::overlay::CIRCLE_COLOR));
}

#[test]
fn parallel_axes_give_no_rotation() {
    let dir = tempfile::tempdir().unwrap();
    let axes = dir.path().join("par.csv");
    write_axes_file(
        &axes,
        &[
            axis(30.0, 10.0, 30.0, 90.0, 0.9),
            axis(70.0, 10.0, 70.0, 90.0, 0.9),
        ],
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&[
        "rotations",
        "--rule",
        "--axes",
        s(&axes),
        "--width",
        "100",
        "--height",
        "100",
        "-o",
        s(&out),
    ]);
    assert!(read_rotations_file(&out.join("par.rotations.csv"))
        .unwrap()
        .is_empty());
}

#[test]
fn model_rotation_on_ground_truth_axes() {
    let dir = tempfile::tempdir().unwrap();
    let (_, gt) = generate(&PatternSpec::new(PatternKind::Dihedral(4), 256, 77, 0.0)).unwrap();
    let axes: Vec<SymmetryAxis> = gt
        .axes
        .iter()
        .map(|g| SymmetryAxis::new(*g, 1.0, 0, AxisSource::External).unwrap())
        .collect();
    let file = dir.path().join("gt_axes.csv");
    write_axes_file(&file, &axes).unwrap();
    let out = dir.path().join("out");
    let model = &shared().model;
    ok(&[
        "rotations",
        "--model",
        s(model),
        "--axes",
        s(&file),
        "--width",
        "256",
        "--height",
        "256",
        "-o",
        s(&out),
    ]);
    let rot = read_rotations_file(&out.join("gt_axes.rotations.csv")).unwrap();
    assert_eq!(rot.len(), 1);
    assert!(rot[0].center.distance(gt.rotations[0].center) < 0.05 * 256.0 * 2f64.sqrt());
}

#[test]
fn train_reports_metrics_and_records_config() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let report = dir.path().join("r.json");
    ok(&[
        "train",
        "--patterns",
        "4",
        "--n-trees",
        "5",
        "--max-depth",
        "10",
        "--criterion",
        "entropy",
        "--size",
        "128",
        "--out",
        s(&model),
        "--report",
        s(&report),
    ]);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r["accuracy"].as_f64().unwrap() > 0.5);
    assert!(r["auc"].as_f64().unwrap() > 0.5);
    assert_eq!(r["split"], "pattern");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(m["config"]["max_depth"], 10);
    assert_eq!(m["config"]["criterion"], "entropy");
}

#[test]
fn train_rejects_single_class_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pos.txt");
    let row = (0..12)
        .map(|i| format!("{}", i as f64 * 0.1))
        .collect::<Vec<_>>()
        .join(",");
    fs::write(&data, format!("{row},1\n").repeat(10)).unwrap();
    let out = symdetect(&[
        "train",
        "--dataset",
        s(&data),
        "--out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

fn eval_dirs(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let (d, g, o) = (dir.join("det"), dir.join("gt"), dir.join("out"));
    fs::create_dir_all(&d).unwrap();
    fs::create_dir_all(&g).unwrap();
    (d, g, o)
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn eval_perfect_and_empty_detections() {
    let dir = tempfile::tempdir().unwrap();
    let (det, gt, out) = eval_dirs(dir.path());
    ok(&[
        "generate",
        "--kind",
        "dihedral-3",
        "--seed",
        "2",
        "--count",
        "2",
        "-o",
        s(&gt),
    ]);
    fs::remove_file(gt.join("dihedral-3_2.png")).unwrap();
    fs::remove_file(gt.join("dihedral-3_3.png")).unwrap();
    ok(&[
        "eval",
        "--detections",
        s(&det),
        "--ground-truth",
        s(&gt),
        "-o",
        s(&out),
    ]);
    assert_eq!(summary(&out)["recall"], 0.0);

    for seed in [2, 3] {
        let (_, g) = generate(&PatternSpec::new(PatternKind::Dihedral(3), 256, seed, 0.0)).unwrap();
        let axes: Vec<_> = g
            .axes
            .iter()
            .map(|s| SymmetryAxis::new(*s, 0.9, 0, AxisSource::External).unwrap())
            .collect();
        write_axes_file(&det.join(format!("dihedral-3_{seed}.axes.csv")), &axes).unwrap();
    }
    fs::write(det.join("stray.axes.csv"), "").unwrap();
    let out2 = dir.path().join("out2");
    let o = symdetect(&[
        "eval",
        "--detections",
        s(&det),
        "--ground-truth",
        s(&gt),
        "-o",
        s(&out2),
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no ground truth for stray"));
    let r = summary(&out2);
    assert_eq!(r["max_f1"], 1.0);
    assert!(out2.join("dihedral-3_2.eval.txt").exists());
    assert!(out2.join("pr_curve.tsv").exists());
    assert!(out2.join("aggregate.txt").exists());
}

#[test]
fn eval_toy_instance_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let (det, gt, out) = eval_dirs(dir.path());
    fs::write(
        gt.join("toy.gt.csv"),
        "S,100,100\n50,10,50,90\n10,50,90,50\n",
    )
    .unwrap();
    let c = 50.0f64;
    let tilt = |deg: f64| {
        let (sn, cs) = deg.to_radians().sin_cos();
        let r = |x: f64, y: f64| {
            (
                c + (x - c) * cs - (y - c) * sn,
                c + (x - c) * sn + (y - c) * cs,
            )
        };
        let (a, b) = (r(50.0, 10.0), r(50.0, 90.0));
        axis(a.0, a.1, b.0, b.1, 1.0)
    };
    let dets = [
        tilt(6.0),
        tilt(-6.0),
        axis(5.0, 5.0, 30.0, 30.0, 1.0),
        axis(12.0, 50.5, 88.0, 50.5, 1.0),
        axis(95.0, 70.0, 70.0, 95.0, 1.0),
        axis(94.0, 71.0, 71.0, 94.0, 1.0),
    ];
    write_axes_file(&det.join("toy.axes.csv"), &dets).unwrap();
    let stdout = ok(&[
        "eval",
        "--detections",
        s(&det),
        "--ground-truth",
        s(&gt),
        "-o",
        s(&out),
    ]);
    let r = summary(&out);
    assert_eq!(r["precision"], 0.6);
    assert_eq!(r["recall"], 1.0);
    assert_eq!(r["max_f1"], 0.75);
    assert!(stdout.contains("precision 0.6\n"));
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        symdetect(&["detect", "--no-such-flag"]).status.code(),
        Some(2)
    );
    assert_eq!(symdetect(&["rotations", "x.png"]).status.code(), Some(2));
    let missing = dir.path().join("missing.png");
    assert_eq!(
        symdetect(&["detect", s(&missing), "-o", s(dir.path())])
            .status
            .code(),
        Some(4)
    );
    let model = dir.path().join("none.json");
    let axes = dir.path().join("a.csv");
    write_axes_file(&axes, &[axis(1.0, 1.0, 9.0, 9.0, 0.5)]).unwrap();
    let args = [
        "rotations",
        "--model",
        s(&model),
        "--axes",
        s(&axes),
        "--width",
        "10",
        "--height",
        "10",
    ];
    assert_eq!(symdetect(&args).status.code(), Some(4));
    let bad = [
        "detect",
        "--axes",
        s(&axes),
        "--width",
        "10",
        "--height",
        "10",
        "--sym-threshold",
        "1.5",
    ];
    assert_eq!(symdetect(&bad).status.code(), Some(3));
    fs::write(&model, "{not json").unwrap();
    assert_eq!(symdetect(&args).status.code(), Some(3));
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "[pipeline]\nnorm_threshold = 0.95\n").unwrap();
    let axes = dir.path().join("two.csv");
    write_axes_file(
        &axes,
        &[
            axis(50.0, 0.0, 50.0, 100.0, 0.9),
            axis(0.0, 50.0, 100.0, 50.0, 0.8),
        ],
    )
    .unwrap();
    let run = |extra: &[&str], out: &str| {
        let out = dir.path().join(out);
        let mut args = vec![
            "detect",
            "--axes",
            s(&axes),
            "--width",
            "100",
            "--height",
            "100",
            "-o",
            s(&out),
        ];
        args.extend_from_slice(extra);
        let o = Command::new(env!("CARGO_BIN_EXE_symdetect"))
            .args(&args)
            .env("SYMDETECT_CONFIG", &cfg)
            .output()
            .unwrap();
        assert!(o.status.success());
        read_axes_file(&out.join("two.axes.csv"), None)
            .unwrap()
            .len()
    };
    assert_eq!(run(&[], "a"), 1);
    assert_eq!(run(&["--norm-threshold", "0.7"], "b"), 2);
    fs::write(&cfg, "[pipeline]\nunknown = 1\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_symdetect"))
        .args(["detect", "x.png"])
        .env("SYMDETECT_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}
