use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dirlap(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirlap"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("DIRLAP_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

fn assert_valid(file: &Path, schema: &str) -> Value {
    let instance: Value = serde_json::from_str(&fs::read_to_string(file).unwrap()).unwrap();
    let schema: Value =
        serde_json::from_str(&fs::read_to_string(schema_dir().join(format!("{schema}.schema.json"))).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{} against {schema}: {errors:?}", file.display());
    instance
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn repro_z_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirlap(&["repro-z", "--radius", "64", "--n-max", "8"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("lambda1(n=8) >= 1.0"));
    assert!(text.trim_end().ends_with("summary: PASS"));
    assert_valid(&dir.path().join("validation.json"), "validation");
    assert_valid(&dir.path().join("sector.json"), "sector");
    assert_valid(&dir.path().join("h_tilde.json"), "trend");
    let csv = fs::read_to_string(dir.path().join("lambda1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn validate_reports_unbalanced_file_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("unbalanced.graph");
    fs::write(&input, "graph v2\nv 0 1\nv 1 1\nv 2 1\ne 0 1 1\ne 1 2 1\ne 2 0 2\n").unwrap();
    let o = dirlap(&["validate", "--input", input.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let report = assert_valid(&dir.path().join("validation.json"), "validation");
    assert!(report["beta_max_deviation"].as_f64().unwrap() > 0.0);
    assert_eq!(report["beta_holds"], Value::Bool(false));
}

#[test]
fn range_on_three_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirlap(&["range", "--gen", "directed-cycle", "--size", "3", "--angles", "720"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("range.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("theta,re,im"));
    let points: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[1], f[2])
        })
        .collect();
    assert_eq!(points.len(), 720);
    // The range is the triangle on the eigenvalues; each vertex is a sampled boundary point.
    let s = 3f64.sqrt() / 2.0;
    for (re, im) in [(0.0, 0.0), (1.5, s), (1.5, -s)] {
        let d = points.iter().map(|p| ((p.0 - re).powi(2) + (p.1 - im).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-9, "eigenvalue ({re}, {im}) missing, distance {d}");
    }
    let sector = assert_valid(&dir.path().join("sector.json"), "sector");
    assert!((sector["im_bound"].as_f64().unwrap() - s).abs() < 1e-12);
}

#[test]
fn spectra_and_cheeger_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirlap(&["spectra", "--gen", "directed-cycle", "--size", "3", "--subset", "0,1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = assert_valid(&dir.path().join("spectra.json"), "spectra");
    assert!((s["nu"].as_f64().unwrap() - 0.5).abs() < 1e-14);
    let csv = fs::read_to_string(dir.path().join("eigenvalues.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("0,1.0000000000000000e0,0.0000000000000000e0"));

    let o = dirlap(&["cheeger", "--gen", "directed-cycle", "--size", "3", "--subset", "0,1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let c = assert_valid(&dir.path().join("cheeger.json"), "cheeger");
    assert_eq!(c["h_value"].as_f64(), Some(1.0));
    assert_eq!(c["witness_h"], serde_json::json!([0, 1]));
}

#[test]
fn cheeger_trend_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirlap(&["cheeger", "--gen", "z-line", "--radius", "40", "--n-max", "4"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("cheeger.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,h,h_tilde,M,c_n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn essgap_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirlap(&["essgap", "--gen", "z-line", "--radius", "64", "--n-max", "8", "--k-schedule", "4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let est = assert_valid(&dir.path().join("ess.json"), "ess");
    assert_eq!(est["verdict"], "diverges");
    let csv = fs::read_to_string(dir.path().join("ess.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,k,lambda1"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn artifacts_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["range", "--gen", "circulation-random", "--size", "10", "--seed", "5", "--angles", "90"];
    dirlap(&args, a.path());
    dirlap(&args, b.path());
    for f in ["range.csv", "sector.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
    let g = ["gen", "--gen", "circulation-random", "--size", "10", "--seed", "5"];
    dirlap(&g, a.path());
    dirlap(&g, b.path());
    assert_eq!(fs::read(a.path().join("graph.txt")).unwrap(), fs::read(b.path().join("graph.txt")).unwrap());
}

#[test]
fn gen_output_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirlap(&["gen", "--gen", "z-line", "--radius", "4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("graph.txt");
    let o = dirlap(&["validate", "--input", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = assert_valid(&dir.path().join("validation.json"), "validation");
    assert_eq!(r["gamma_constant_exact"], "1");
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dirlap(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(dirlap(&["validate"], dir.path()).status.code(), Some(1));
    let missing = dir.path().join("nope.graph");
    assert_eq!(dirlap(&["validate", "--input", missing.to_str().unwrap()], dir.path()).status.code(), Some(1));
    assert_eq!(dirlap(&["range", "--gen", "z-line", "--angles", "3"], dir.path()).status.code(), Some(1));
    assert_eq!(
        dirlap(&["essgap", "--gen", "z-line", "--radius", "8", "--n-max", "8"], dir.path()).status.code(),
        Some(1)
    );
}

#[test]
fn unbalanced_range_is_a_failed_check() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("unbalanced.graph");
    fs::write(&input, "graph v2\nv 0 1\nv 1 1\nv 2 1\ne 0 1 1\ne 1 2 1\ne 2 0 2\n").unwrap();
    let o = dirlap(&["range", "--input", input.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let sector = assert_valid(&dir.path().join("sector.json"), "sector");
    assert!(sector["nu"].as_f64().unwrap() < 0.0);
    assert_eq!(sector["sectorial"], Value::Bool(false));
    assert!(sector["diagnostic"].as_str().unwrap().contains("balance"));
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("loop.graph");
    fs::write(&input, "graph v2\nv 1 1\ne 1 1 0.5\n").unwrap();
    let o = dirlap(&["validate", "--input", input.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("self-loop"), "{err}");
}
