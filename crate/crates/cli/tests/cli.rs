use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stokeslab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let head: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = head.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn profile_header_and_determinism() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["profile", "stokes@0,0", "--box", "-1,1,-1,1", "--h", "1/256", "-o", "a.fbf"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = std::fs::read_to_string(d.path().join("a.fbf")).unwrap();
    assert_eq!(a.lines().next().unwrap(), "FBF1 -1 1 -1 1 0.00390625");
    assert!(d.path().join("a.fbf.meta").is_file());
    run(d.path(), &["profile", "stokes@0,0", "--h", "1/256", "-o", "b.fbf"]);
    let b = std::fs::read_to_string(d.path().join("b.fbf")).unwrap();
    assert_eq!(a, b);
    let f = stokeslab::io::read_fbf(d.path().join("a.fbf")).unwrap();
    assert_eq!(stokeslab::io::to_fbf_string(&f), a);
}

#[test]
fn profile_usage_errors() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(d.path(), &["profile", "sine:N=1@0,0", "--h", "1/16"])), 2);
    assert_eq!(code(&run(d.path(), &["profile", "wave@0,0"])), 2);
    assert_eq!(code(&run(d.path(), &["profile", "stokes@0,0", "--h", "0"])), 2);
    let o = run(d.path(), &["profile", "sine:N=2@0,0", "--h", "1/16"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("FBF1 -1 1 -1 1 0.0625\n"));
}

#[test]
fn solve_zero_and_capped() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["solve", "--data", "zero", "--h", "1/32", "-o", "z.fbf"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("z.fbf.energy.csv")).unwrap();
    assert_eq!(csv_column(&csv, "J").last().copied(), Some(0.0));

    let o = run(d.path(), &["solve", "--data", "stokes@0,0", "--h", "1/32", "--max-outer", "0", "-o", "c.fbf"]);
    assert_eq!(code(&o), 3);
    assert!(d.path().join("c.fbf").is_file());
    let s = std::fs::read_to_string(d.path().join("c.fbf.summary.json")).unwrap();
    assert!(s.contains("\"converged\": false"));
    assert_eq!(code(&run(d.path(), &["solve", "--data", "zero", "--h", "1/32"])), 2);
}

#[test]
fn solve_stokes_trace() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["solve", "--data", "stokes@0,0", "--h", "1/64", "-o", "s.fbf"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("s.fbf.summary.json")).unwrap()).unwrap();
    assert_eq!(v["converged"], true);
    assert!(v["fb_residual"]["max"].as_f64().unwrap() < 0.05);
}

#[test]
fn scan_columns() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["scan", "--field", "stokes@0,0", "--h", "1/256", "--count", "6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let phi = csv_column(&stdout(&o), "phi");
    assert_eq!(phi.len(), 6);
    assert!(phi.iter().all(|p| (p - 3f64.sqrt() / 3.0).abs() < 5e-3), "{phi:?}");

    let o = run(d.path(), &["scan", "--field", "sine:N=2@0,0", "--h", "1/256", "--count", "6", "--rmin", "0.1"]);
    let f = csv_column(&stdout(&o), "F");
    assert!(f.iter().all(|v| (v - 2.0).abs() < 5e-3), "{f:?}");

    let o = run(d.path(), &["scan", "--field", "stokes@0,0", "--h", "1/64", "--center", "0,0.5", "--case", "boundary"]);
    assert_eq!(code(&o), 2);
    let o = run(d.path(), &["scan", "--field", "stokes@0,0", "--h", "1/64", "--rmax", "0.9"]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&run(d.path(), &["scan", "--field", "missing.fbf"])), 4);
}

#[test]
fn classify_reports() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["classify", "--field", "stokes@0,0", "--h", "1/256"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0]["class"], "Stokes");
    assert!((pts[0]["metrics"]["angle"].as_f64().unwrap() - 120.0).abs() < 2.0);

    let o = run(d.path(), &["classify", "--field", "sine:N=3@0,0", "--h", "1/256"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["points"][0]["class"]["Degenerate"], 3);

    let o = run(d.path(), &["classify", "--field", "zero", "--h", "1/64"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["points"].as_array().unwrap().is_empty());

    assert_eq!(code(&run(d.path(), &["classify", "--field", "zero", "--scales", "0.4,0.2"])), 2);
}

#[test]
fn blowup_and_report() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["blowup", "--field", "stokes@0,0", "--h", "1/128", "--scale", "0.4", "--target", "stokes@0,0", "-o", "f.fbf"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("f.fbf.summary.json")).unwrap()).unwrap();
    assert!(v["w12"].as_f64().unwrap() < 1e-2);
    assert!(std::fs::read_to_string(d.path().join("f.fbf")).unwrap().starts_with("FBF1 -1 1 -1 1 0.0078125"));

    let o = run(d.path(), &["report", "--field", "stokes@0,0", "--h", "1/256", "--count", "8"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c = v["perimeter_constant"].as_f64().unwrap();
    assert!((c - 2.0 * 2f64.sqrt() / 3.0).abs() < 2e-2, "{c}");
    assert!(v["scans"][0]["phi_violations"].as_array().unwrap().is_empty());
    let semi = v["scans"][0]["semicontinuity"].as_array().unwrap();
    assert_eq!(semi.len(), 2);
    assert!(semi.iter().all(|s| s["holds"] == true), "{semi:?}");
}

#[test]
fn config_file_and_overrides() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("run.cfg"), "# coarse\nh = 1/16\nbox = -1,1,-1,1\ncount = 5\n").unwrap();
    let o = run(d.path(), &["profile", "stokes@0,0", "--config", "run.cfg"]);
    assert!(stdout(&o).starts_with("FBF1 -1 1 -1 1 0.0625\n"));
    let o = run(d.path(), &["profile", "stokes@0,0", "--config", "run.cfg", "--h", "1/8"]);
    assert!(stdout(&o).starts_with("FBF1 -1 1 -1 1 0.125\n"));
    std::fs::write(d.path().join("bad.cfg"), "colour = red\n").unwrap();
    assert_eq!(code(&run(d.path(), &["profile", "stokes@0,0", "--config", "bad.cfg"])), 2);
}
