use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use unproject::densemaps::read_ppm_header;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_unproject"));
    c.env("UNPROJECT_THREADS", "1");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small labeled blobs dataset and a quickly trained model on its PCA.
struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    data: PathBuf,
    model: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let data = root.join("blobs.csv");
        let model = root.join("model.json");
        ok(&[
            "generate", "--kind", "blobs", "--n", "300", "--d", "4", "--k", "3", "--seed", "7",
            "--out", s(&data),
        ]);
        ok(&[
            "train", "--data", s(&data), "--neurons", "240", "--max-epochs", "15", "--seed", "1",
            "--out", s(&model),
        ]);
        Self {
            _dir: dir,
            root,
            data,
            model,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

#[test]
fn help_for_every_verb_exits_zero() {
    for verb in [
        "generate", "project", "train", "eval", "gridsearch", "map", "interpolate", "serve",
    ] {
        let out = run(&[verb, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{verb}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"), "{verb}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn usage_and_input_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["generate", "--kind", "cube", "--out", "x"]).status.code(), Some(1));
    let missing = run(&["eval", "--model", "/nonexistent/m.json", "--data", "/nonexistent/d.csv"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"magic\": \"NOPE\"}").unwrap();
    let data = dir.path().join("d.csv");
    std::fs::write(&data, "a,b\n1,2\n").unwrap();
    assert_eq!(run(&["eval", "--model", s(&bad), "--data", s(&data)]).status.code(), Some(1));

    let bad_threads = bin()
        .env("UNPROJECT_THREADS", "many")
        .args(["generate", "--kind", "sphere", "--n", "5", "--out", s(&dir.path().join("s.csv"))])
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(1));
}

#[test]
fn generate_is_reproducible_and_writes_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        ok(&["generate", "--kind", "blobs", "--n", "50", "--d", "3", "--seed", "9", "--out", s(p)]);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let header = text.lines().next().unwrap();
    assert!(header.ends_with("label"), "{header}");
    assert_eq!(text.lines().count(), 51);

    let roll = dir.path().join("roll.csv");
    ok(&["generate", "--kind", "swissroll", "--n", "40", "--out", s(&roll)]);
    assert_eq!(std::fs::read_to_string(&roll).unwrap().lines().count(), 41);
}

#[test]
fn config_is_echoed_as_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&[
        "generate", "--kind", "sphere", "--n", "10", "--out", s(&dir.path().join("s.csv")),
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().find_map(|l| l.strip_prefix("config: ")).unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["verb"], "generate");
    assert_eq!(v["kind"], "sphere");
    assert_eq!(v["n"], 10);
}

#[test]
fn trained_model_supports_every_verb() {
    let f = Fixture::new();
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&f.model).unwrap()).unwrap();
    assert_eq!(model["magic"], "NNINV1");

    // eval on the stored held-out split: 25% of 300 rows
    let report = f.path("report.json");
    let timing = f.path("timing.csv");
    ok(&[
        "eval", "--model", s(&f.model), "--data", s(&f.data), "--timing", "1,10",
        "--timing-csv", s(&timing), "--out", s(&report),
    ]);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["n_test"], 75);
    assert!(r["mse"].as_f64().unwrap() < r["mae"].as_f64().unwrap());
    assert_eq!(r["per_point_rmse"].as_array().unwrap().len(), 75);
    let t = std::fs::read_to_string(&timing).unwrap();
    assert_eq!(t.lines().next(), Some("batch_size,seconds"));
    assert_eq!(t.lines().count(), 3);

    let all = ok(&["eval", "--model", s(&f.model), "--data", s(&f.data), "--all"]);
    let r: serde_json::Value = serde_json::from_slice(&all.stdout).unwrap();
    assert_eq!(r["n_test"], 300);

    for kind in ["gradient", "agreement", "roundtrip", "validation"] {
        let out = f.path(&format!("{kind}.ppm"));
        ok(&[
            "map", "--type", kind, "--model", s(&f.model), "--data", s(&f.data), "--resolution",
            "24", "--legend", "--out", s(&out),
        ]);
        let bytes = std::fs::read(&out).unwrap();
        let h = read_ppm_header(&bytes).unwrap();
        assert_eq!((h.width, h.height, h.maxval), (24, 24, 255), "{kind}");
        assert_eq!(bytes.len(), h.data_offset + 24 * 24 * 3, "{kind}");
    }
    let legend = std::fs::read_to_string(f.path("gradient.ppm.txt")).unwrap();
    assert!(legend.starts_with("min ") && legend.contains("\nmax "));

    let csv_out = f.path("validation.csv");
    ok(&[
        "map", "--type", "validation", "--model", s(&f.model), "--data", s(&f.data), "--out",
        s(&csv_out),
    ]);
    let v = std::fs::read_to_string(&csv_out).unwrap();
    assert_eq!(v.lines().next(), Some("x,y,rmse,normalized"));
    assert_eq!(v.lines().count(), 76);

    let interp = ok(&[
        "interpolate", "--model", s(&f.model), "--from", "-1,-1", "--to", "1,1", "--steps", "4",
    ]);
    let text = String::from_utf8(interp.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("f0,f1,f2,f3"));
    assert_eq!(text.lines().count(), 5);
    for line in text.lines().skip(1) {
        for v in line.split(',') {
            let v: f64 = v.parse().unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn map_errors_are_user_errors() {
    let f = Fixture::new();
    // agreement without data
    let out = run(&["map", "--type", "agreement", "--model", s(&f.model), "--out", s(&f.path("a.ppm"))]);
    assert_eq!(out.status.code(), Some(1));
    // resolution below 2
    let out = run(&[
        "map", "--type", "gradient", "--model", s(&f.model), "--resolution", "1", "--out",
        s(&f.path("g.ppm")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!f.path("g.ppm").exists());
}

#[test]
fn roundtrip_requires_a_parametric_projection() {
    let f = Fixture::new();
    let emb = f.path("emb.csv");
    ok(&["project", "--data", s(&f.data), "--out", s(&emb)]);
    let ext = f.path("external.json");
    ok(&[
        "train", "--data", s(&f.data), "--embedding", s(&emb), "--neurons", "240", "--max-epochs",
        "3", "--out", s(&ext),
    ]);
    let out = run(&["map", "--type", "roundtrip", "--model", s(&ext), "--out", s(&f.path("r.ppm"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parametric"));
    // eval without the PCA needs the embedding
    assert_eq!(
        run(&["eval", "--model", s(&ext), "--data", s(&f.data)]).status.code(),
        Some(1)
    );
    ok(&["eval", "--model", s(&ext), "--data", s(&f.data), "--embedding", s(&emb)]);
}

#[test]
fn training_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    ok(&["generate", "--kind", "sphere", "--n", "120", "--seed", "3", "--out", s(&data)]);
    let train = |out: &Path| {
        ok(&[
            "train", "--data", s(&data), "--neurons", "240", "--max-epochs", "5", "--seed", "11",
            "--out", s(out),
        ])
    };
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    train(&a);
    train(&b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn gridsearch_ranks_configurations() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let out = dir.path().join("grid.json");
    ok(&["generate", "--kind", "blobs", "--n", "120", "--d", "3", "--seed", "2", "--out", s(&data)]);
    ok(&[
        "gridsearch", "--data", s(&data), "--shapes", "straight,fanout", "--neurons", "240",
        "--dropouts", "0.25", "--runs", "2", "--max-epochs", "3", "--out", s(&out),
    ]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let maes: Vec<f64> = rows.iter().map(|r| r["mean_mae"].as_f64().unwrap()).collect();
    assert!(maes[0] <= maes[1]);
    assert_eq!(rows[0]["run_maes"].as_array().unwrap().len(), 2);
}
