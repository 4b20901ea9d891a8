use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiferro"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const BIP_B4: &str = r#"{"model": {"nu": 2, "alpha": [0.5, 0.5], "h": [0.0, 0.0], "beta": 4.0,
  "families": [{"kind": "rademacher"}, {"kind": "rademacher"}]}}"#;

#[test]
fn beta_c_bipartite() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["beta-c", "--nu", "2", "--alpha", "0.5,0.5"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), "2.0\n");
    let o = run(&["beta-c", "--alpha", "0.3,0.7"], dir.path());
    let b: f64 = stdout(&o).trim().parse().unwrap();
    assert!((b - 1.0 / 0.21f64.sqrt()).abs() < 1e-10);
}

#[test]
fn tripartite_surface() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["beta-c", "--alpha", "0.2,0.3,0.5", "--surface", "3"], dir.path());
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("beta_c_surface.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config-sha256: "));
    assert_eq!(lines[1], "alpha1,alpha2,alpha3,beta_c");
    // (1/3, 1/3, 1/3) is the only interior point
    let v: Vec<f64> = lines[2].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert!((v[3] - 1.5).abs() < 1e-12);
}

#[test]
fn pressure_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bip_b4.json");
    std::fs::write(&cfg, BIP_B4).unwrap();
    let o = run(&["pressure", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let a = v["pressure"].as_f64().unwrap();
    assert!((a - 0.32648).abs() < 1e-4);
    let file: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("pressure.json")).unwrap()).unwrap();
    assert_eq!(v, file);
}

#[test]
fn subcritical_lines_meet_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["phase-diagram", "--beta", "1", "--h2-points", "41"], dir.path());
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("intersections.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0][0].hypot(rows[0][1]) < 1e-6);
}

#[test]
fn csv_files_carry_hash_and_header() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["solve", "--beta", "4"],
        vec!["phase-diagram", "--beta", "4", "--h2-points", "21"],
        vec!["landscape", "--beta", "4", "--h2", "0.2,-0.4", "--points", "11"],
        vec!["fluctuations", "--sizes", "40,80"],
    ] {
        let o = run(&args, dir.path());
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let mut seen = 0;
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let text = std::fs::read_to_string(&path).unwrap();
            let mut lines = text.lines();
            let first = lines.next().unwrap();
            assert!(first.starts_with("# config-sha256: ") && first.len() == 17 + 64, "{path:?}");
            let header = lines.next().unwrap();
            assert!(header.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ','), "{path:?}");
            seen += 1;
        }
    }
    assert_eq!(seen, 7);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"model": null, "grid_size": 3}"#).unwrap();
    assert_eq!(run(&["solve", "--config", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["solve", "--alpha", "0.5,0.6"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["solve", "--config", "/nonexistent.json"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["landscape", "--alpha", "0.2,0.3,0.5"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"], dir.path()).status.code(), Some(2));
    // the sqrt(N) growth sub-check of criterion 6 fails
    assert_eq!(run(&["verify", "--only", "6"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["verify", "--only", "1,2"], dir.path()).status.code(), Some(0));
}

#[test]
fn outputs_identical_across_thread_counts() {
    let mut outputs = Vec::new();
    for threads in ["1", "4", "8"] {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&["verify", "--threads", threads], dir.path());
        let verify = std::fs::read(dir.path().join("verify.txt")).unwrap();
        let o2 = run(&["phase-diagram", "--beta", "4", "--h2-points", "61", "--threads", threads], dir.path());
        assert!(o2.status.success());
        let regimes = std::fs::read(dir.path().join("regimes.csv")).unwrap();
        outputs.push((o.stdout, o.status.code(), verify, regimes));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}
