use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pixel-rcnn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const SMALL_RUN: &str = r#"{"train": {"epochs": 4, "batch": 16},
    "data": {"synth": {"counts": [20, 20, 20], "class_names": ["a", "b", "c"], "noise": 0.05, "seed": 1}}}"#;

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.json");
    std::fs::write(&p, SMALL_RUN).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["synth", "--classes", "15", "--per-class", "200", "--seed", "42"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(dir.path().join("dataset.pxrc")).unwrap();
    // header + class names + 3000·9·5 f32 values + 3000 u16 labels
    assert!(first.len() > 3000 * 45 * 4 + 3000 * 2);
    assert!(stdout(&o).contains("3000 samples, 9 × 5"));

    let o = run(&["synth", "--classes", "15", "--per-class", "200", "--seed", "42", "--name", "again.pxrc"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(first, std::fs::read(dir.path().join("again.pxrc")).unwrap());

    let o = run(&["synth", "--seed", "43", "--name", "other.pxrc"], dir.path());
    assert_eq!(code(&o), 0);
    assert_ne!(first, std::fs::read(dir.path().join("other.pxrc")).unwrap());
}

#[test]
fn synth_reference_proportions() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["synth", "--proportions", "reference", "--total", "1000"], dir.path());
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("1000 samples"));
    assert!(text.contains("Water"));
    let o = run(&["synth", "--proportions", "uniform"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn train_eval_predict_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = run(&["train", "--config", &cfg, "--seed", "3"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("report.csv"));
    assert_eq!(rows.len(), 4);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[0], (k + 1).to_string());
        assert!(r[2].parse::<f64>().unwrap().is_finite());
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["epochs"].as_array().unwrap().len(), 4);

    let ckpt = dir.path().join("model.ckpt");
    let test = dir.path().join("test.pxrc");
    let train = dir.path().join("train.pxrc");
    let (ckpt, test, train) = (ckpt.to_str().unwrap(), test.to_str().unwrap(), train.to_str().unwrap());

    let o = run(&["eval", "--checkpoint", ckpt, "--data", test, "--baseline", "--train", train], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("logistic baseline"));
    let confusion = std::fs::read_to_string(dir.path().join("confusion.csv")).unwrap();
    assert!(confusion.starts_with("truth,a,b,c,total"));

    // 24 test samples laid out as 4 rows of 6
    let o = run(&["predict", "--checkpoint", ckpt, "--data", test, "--width", "6"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let pgm = std::fs::read_to_string(dir.path().join("classmap.pgm")).unwrap();
    let mut lines = pgm.lines();
    assert_eq!(lines.next(), Some("P2"));
    assert_eq!(lines.next(), Some("6 4"));
    assert_eq!(lines.next(), Some("2"));
    assert_eq!(lines.count(), 4);
    let cells = csv_rows(&dir.path().join("classmap.csv"));
    assert_eq!(cells.len(), 24);
    assert!(cells.iter().all(|c| c[2].parse::<usize>().unwrap() < 3));
    let o = run(&["predict", "--checkpoint", ckpt, "--data", test, "--width", "5"], dir.path());
    assert_eq!(code(&o), 2);

    let o = run(&["inspect", "--checkpoint", ckpt, "--data", test, "--samples", "0,1"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let map = std::fs::read_to_string(dir.path().join("inspect_0.csv")).unwrap();
    assert_eq!(map.lines().count(), 9);
    assert!(map.lines().all(|l| l.split(',').count() == 9));
    assert!(stdout(&o).contains("correlation sample 0 vs 1"));
    let o = run(&["inspect", "--checkpoint", ckpt, "--data", test, "--samples", "999"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["eval", "--checkpoint", "nope.ckpt", "--data", "nope.pxrc"], dir.path());
    assert_eq!(code(&o), 2);
    let o = run(&["train", "--data", "missing.pxrc"], dir.path());
    assert_eq!(code(&o), 2);
    let o = run(&["eval"], dir.path());
    assert_eq!(code(&o), 2);
    let o = run(&["frobnicate"], dir.path());
    assert_eq!(code(&o), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"train": {"learning_rate": 1}}"#).unwrap();
    let o = run(&["train", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn divergence_exits_3_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("diverge.json");
    std::fs::write(
        &cfg,
        r#"{"train": {"epochs": 3, "batch": 16, "schedule": {"eta_max": 1e30, "eta_min": 1e29, "period": 10, "cyclic": true}},
            "data": {"synth": {"counts": [20, 20], "class_names": ["a", "b"], "seed": 1}}}"#,
    )
    .unwrap();
    let o = run(&["train", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(json.contains("aborted"));
    assert!(!dir.path().join("model.ckpt").exists());
}

#[test]
fn eval_fixture_reports_reference_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/reference_confusion.csv");
    let o = run(&["eval", "--fixture", fixture.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("OA = 0.966455 (97%)  kappa = 0.961297"));
    assert!(text.contains("Water  PA 1.0000  UA 0.9902"));
    assert!(text.contains("total        1165  3856"));
}

#[test]
fn lr_find_writes_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = run(&["lr-find", "--config", &cfg, "--iters", "30"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("lr_find.csv"));
    if !stdout(&o).contains("diverged") {
        assert_eq!(rows.len(), 30);
    }
    let lrs: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(lrs.windows(2).all(|w| w[1] > w[0]));
    assert!((lrs[0] - 1e-5).abs() < 1e-15);

    let o = run(&["lr-find", "--config", &cfg, "--lo", "0"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn pca_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = run(&["pca", "--config", &cfg, "--components", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let points = csv_rows(&dir.path().join("pca.csv"));
    assert_eq!(points.len(), 60);
    assert!(points.iter().all(|r| r.len() == 3));
    let ratios = csv_rows(&dir.path().join("pca_ratios.csv"));
    let cumulative: Vec<f64> = ratios.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(cumulative.windows(2).all(|w| w[1] >= w[0]));
    assert!(*cumulative.last().unwrap() <= 1.0 + 1e-9);

    let o = run(&["pca", "--config", &cfg, "--components", "46"], dir.path());
    assert_eq!(code(&o), 2);
}
