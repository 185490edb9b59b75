//! End-to-end runs of the binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ti2lh")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ti2lh-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const SWAP_THEN_X: &str = "shape 2 1 1\n\
gate 1 1 0,0 1,0 0,0 0,0  0,0 0,0 0,0 1,0  1,0 0,0 0,0 0,0  0,0 0,0 1,0 0,0\n";

#[test]
fn compile_exports_header() {
    let out = scratch("h.txt");
    let o = bin(&["compile", "--n", "2", "--m", "1", "--r", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("dim 729\n"));
    assert!(text.contains("translation 0e0\n"));
    let file = std::fs::read_to_string(&out).unwrap();
    assert!(file.starts_with("% dim 729 nnz "));
    assert!(file.lines().next().unwrap().ends_with(" hermitian"));
}

#[test]
fn malformed_gate_line_is_reported() {
    let path = scratch("bad.circ");
    std::fs::write(&path, "shape 2 1 1\n# comment\ngate 1 1 1,0 0,0\n").unwrap();
    let o = bin(&["compile", "--circuit", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn oracle_reports_output_weight() {
    let o = bin(&["oracle", "--n", "2", "--m", "1", "--r", "1", "--witness", "10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("H_output 0.5"));
    assert!(text.contains("H_comp 0.0"));
    let o = bin(&["oracle", "--n", "2", "--m", "1", "--r", "1", "--witness", "00"]);
    assert!(stdout(&o).contains("H_output 0.0"));
}

#[test]
fn gapscan_approaches_pi_squared() {
    let o = bin(&["gapscan", "--n", "2", "--r-list", "2,4,8"]);
    assert!(o.status.success());
    let scaled: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().nth(2).unwrap().parse().unwrap())
        .collect();
    let pi2 = std::f64::consts::PI.powi(2);
    assert!(scaled.windows(2).all(|w| (w[1] - pi2).abs() < (w[0] - pi2).abs()));
}

#[test]
fn lemma_has_no_violations() {
    let o = bin(&["lemma", "--seed", "1", "--trials", "1000"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("violations 0\n"));
}

#[test]
fn verify_separates_and_is_reproducible() {
    let rej = scratch("reject.circ");
    std::fs::write(&rej, SWAP_THEN_X).unwrap();
    let args = ["verify", "--n", "2", "--m", "1", "--r", "1", "--reject-circuit", rej.to_str().unwrap()];
    let a = bin(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = stdout(&a);
    let line = text.lines().find(|l| l.starts_with("separation literal orbit")).unwrap();
    let margin: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
    assert!(margin > 0.0);
    assert_eq!(bin(&args).stdout, a.stdout);
}

#[test]
fn verify_against_thresholds() {
    let o = bin(&[
        "verify", "--n", "2", "--m", "1", "--r", "1", "--orbit-restrict", "--a", "-39", "--b", "-30",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("verdict Yes lambda0 -40"));
}

#[test]
fn spectrum_orbit_mode() {
    let o = bin(&["spectrum", "--n", "2", "--m", "1", "--r", "2", "--orbit-restrict", "--k", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("restricted true"));
    assert_eq!(text.lines().filter(|l| l.starts_with("eig ")).count(), 4);
}
