use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn body(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../bodies")
        .join(format!("{name}.json"))
}

fn lpbm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpbm"))
        .env_remove("LPBMK_OUT")
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn run_body(out: &Path, name: &str, args: &[&str]) -> Output {
    let b = body(name);
    let mut all = vec!["--body", b.to_str().unwrap()];
    all.extend_from_slice(args);
    lpbm(out, &all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn volume_of_ball() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_body(dir.path(), "ball", &["op", "volume"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "4.188790205");
}

#[test]
fn polar_volume_of_cube() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_body(dir.path(), "cube", &["op", "polar"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    // cube [-1,1]^3 at p = 2: Π_2 is a ball of radius sqrt(6/π)
    let exact = 4.0 / 3.0 * std::f64::consts::PI * (std::f64::consts::PI / 6.0).powf(1.5);
    assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
}

#[test]
fn steiner_writes_a_spec_and_keeps_volume() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_body(dir.path(), "tet", &["--u", "0,0,1", "op", "steiner"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let spec = dir.path().join("steiner.json");
    assert!(spec.exists());
    let line = stdout(&o).lines().find(|l| l.starts_with("volume")).unwrap().to_owned();
    let v: Vec<f64> = line.split_whitespace().filter_map(|w| w.parse().ok()).collect();
    assert!((v[0] - v[1]).abs() <= 1e-9 * v[0], "{line}");

    let again = lpbm(dir.path(), &["--body", spec.to_str().unwrap(), "op", "volume"]);
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
    let w: f64 = stdout(&again).trim().parse().unwrap();
    assert!((w - v[0]).abs() <= 1e-9 * v[0]);
}

#[test]
fn steiner_requires_a_direction() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_body(dir.path(), "tet", &["op", "steiner"]).status.code(), Some(2));
}

#[test]
fn passing_suites_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for (name, suite) in [("ball", "rolodex"), ("skew", "monotone"), ("ell", "covariance")] {
        let o = run_body(dir.path(), name, &["--u", "1,2,3", "verify", suite]);
        assert_eq!(o.status.code(), Some(0), "{suite}: {}{}", stdout(&o), stderr(&o));
        let report = json(&dir.path().join(format!("{suite}.json")));
        assert_eq!(report["experiment"], suite);
        assert!(report["records"].as_array().unwrap().iter().all(|r| r["pass"] == true));
    }
}

#[test]
fn failed_check_exits_one() {
    // the tetrahedron's radial function is kinked, so coarse Γ quadrature misses the tolerance
    let dir = tempfile::tempdir().unwrap();
    let o = run_body(dir.path(), "tet", &["--level", "2", "verify", "covariance"]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
    assert!(dir.path().join("covariance.json").exists());
}

#[test]
fn unsupported_pair_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_body(dir.path(), "cube", &["verify", "admissible"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("smooth"));
}

#[test]
fn rigidity_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_body(dir.path(), "ell", &["rigidity"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("verdict: fixed-point AND ellipsoid"),
        "{}",
        stdout(&o)
    );

    let o = run_body(dir.path(), "l4", &["rigidity"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict: neither"), "{}", stdout(&o));
    assert!(dir.path().join("rigidity.json").exists());
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = run_body(&blocker.join("sub"), "ell", &["verify", "coplanar"]);
    assert_eq!(o.status.code(), Some(2));
}

fn trajectory(dir: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(dir.join("iterate_trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,c_star,fixed_residual,ellipsoid_residual"));
    lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn iterating_ball_stays_put() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_body(dir.path(), "ball", &["iterate", "--steps", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = trajectory(dir.path());
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r[2] <= 1e-3 && r[3] <= 1e-3, "{r:?}");
    }
}

#[test]
fn iterating_cube_rounds_it() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_body(dir.path(), "cube", &["iterate", "--steps", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = trajectory(dir.path());
    assert_eq!(rows.len(), 2);
    assert!(rows[0][3] > 1e-2);
    assert!(rows[1][3] <= 1e-2, "{rows:?}");
}

#[test]
fn zero_steps_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_body(dir.path(), "ball", &["iterate", "--steps", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(trajectory(dir.path()).is_empty());
}

#[test]
fn bad_spec_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    std::fs::write(&spec, r#"{"kind":"ellipsoid","matrx":[[1,0,0],[0,1,0],[0,0,1]]}"#).unwrap();
    let o = lpbm(dir.path(), &["--body", spec.to_str().unwrap(), "op", "volume"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("matrx"), "{}", stderr(&o));
}

#[test]
fn missing_body_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpbm(dir.path(), &["--body", "/nonexistent.json", "op", "volume"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let b = body("ell");
    let o = Command::new(env!("CARGO_BIN_EXE_lpbm"))
        .env("LPBMK_OUT", dir.path())
        .args(["--body", b.to_str().unwrap(), "verify", "coplanar"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("coplanar.json").exists());
}

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run_body(d.path(), "skew", &["--seed", "7", "--u", "1,2,3", "verify", "harmonic"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("harmonic.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn closed_pipe_is_not_an_error() {
    use std::io::{BufRead, BufReader};
    let b = body("cube");
    let mut child = Command::new(env!("CARGO_BIN_EXE_lpbm"))
        .args(["--level", "5", "--body", b.to_str().unwrap(), "op", "support"])
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut first = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut first)
        .unwrap();
    assert_eq!(first.trim(), "v1,v2,v3,h");
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
