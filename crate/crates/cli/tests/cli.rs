use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use crn_detopt::engine::Certificate;
use crn_detopt::numfmt::sig17;
use crn_detopt::seqnet::{locate_root, rates_n3, Which};
use tempfile::TempDir;

const K23: &str = "# K(2,3)\nX1 + X2 -> 0\nX2 + X3 -> 0\nX1 -> 2 X3\n@fully_open\n";

fn detopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn kmn_certificate_matches_closed_form_rates() {
    let dir = TempDir::new().unwrap();
    let cert_path = dir.path().join("k23.json");
    let out = detopt(&[
        "construct",
        "kmn",
        "--m",
        "2",
        "--n",
        "3",
        "--out",
        path_str(&cert_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let cert = Certificate::from_json(&fs::read_to_string(&cert_path).unwrap()).unwrap();
    let expected = rates_n3(2).unwrap();
    for (a, b) in cert.rates.iter().zip(expected.iter()) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn kmn_without_out_prints_json() {
    let out = detopt(&["construct", "kmn", "--m", "3", "--n", "5"]);
    assert_eq!(code(&out), 0);
    let cert = Certificate::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cert.rates.len(), 15);
}

#[test]
fn condition_ii_failure_is_inconclusive() {
    let dir = TempDir::new().unwrap();
    let net = dir.path().join("k23.crn");
    fs::write(&net, K23).unwrap();
    let out = detopt(&[
        "construct",
        path_str(&net),
        "--witness",
        "1,2,3",
        "--eta-tilde",
        "1,1,1",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("condition II"));
}

#[test]
fn input_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&detopt(&[
            "construct",
            path_str(&dir.path().join("missing.crn"))
        ])),
        1
    );
    let bad = dir.path().join("bad.crn");
    fs::write(&bad, "X1 + -> X2\n").unwrap();
    assert_eq!(code(&detopt(&["construct", path_str(&bad)])), 1);
    assert_eq!(
        code(&detopt(&["construct", "kmn", "--m", "2", "--n", "4"])),
        1
    );
    assert_eq!(code(&detopt(&["construct", "kmn", "--m", "2"])), 1);
    assert_eq!(code(&detopt(&["frobnicate"])), 1);
    assert_eq!(code(&detopt(&["verify", path_str(&bad)])), 1);
    assert_eq!(code(&detopt(&["--help"])), 0);
}

#[test]
fn constructed_certificates_verify_in_a_new_process() {
    let dir = TempDir::new().unwrap();
    let net = dir.path().join("k23.crn");
    fs::write(&net, K23).unwrap();
    for strategy in ["bisect", "free-variable"] {
        let cert = dir.path().join(format!("{strategy}.json"));
        let out = detopt(&[
            "construct",
            path_str(&net),
            "--strategy",
            strategy,
            "--out",
            path_str(&cert),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(code(&detopt(&["verify", path_str(&cert)])), 0);
    }
}

#[test]
fn edited_x_sharp_fails_verification() {
    let dir = TempDir::new().unwrap();
    let cert_path = dir.path().join("c.json");
    assert_eq!(
        code(&detopt(&[
            "construct",
            "kmn",
            "--m",
            "2",
            "--n",
            "3",
            "--out",
            path_str(&cert_path)
        ])),
        0
    );
    let mut cert = Certificate::from_json(&fs::read_to_string(&cert_path).unwrap()).unwrap();
    let mut x = cert.x_sharp.to_vec();
    x[1] *= 1.01;
    cert.x_sharp = crn_detopt::ConcentrationVector::new(x).unwrap();
    fs::write(&cert_path, cert.to_json()).unwrap();
    let out = detopt(&["verify", path_str(&cert_path)]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.lines()
            .any(|l| l.starts_with("residual x#") && l.ends_with("FAIL")),
        "{err}"
    );
}

#[test]
fn degenerate_eps_keeps_residuals_but_loses_nondegeneracy() {
    let b = locate_root(2, 3, 1.0, Which::Star, 0.12, 0.125, 0.0).unwrap();
    let eps = if b.det_lo.abs() < b.det_hi.abs() {
        b.lo
    } else {
        b.hi
    };
    let dir = TempDir::new().unwrap();
    let cert_path = dir.path().join("c.json");
    let out = detopt(&[
        "construct",
        "kmn",
        "--m",
        "2",
        "--n",
        "3",
        "--eps",
        &sig17(eps),
        "--out",
        path_str(&cert_path),
    ]);
    assert_eq!(code(&out), 3);
    let out = detopt(&["verify", path_str(&cert_path)]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    let line = |prefix: &str| {
        err.lines()
            .find(|l| l.starts_with(prefix))
            .unwrap()
            .to_string()
    };
    assert!(line("residual x*").ends_with("ok"));
    assert!(line("residual x#").ends_with("ok"));
    assert!(line("det J(x*)").ends_with("FAIL"), "{err}");
}

#[test]
fn table1_and_scan_pass() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("t1.csv");
    assert_eq!(code(&detopt(&["table1", "--out", path_str(&csv)])), 0);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 22);

    let out_dir = dir.path().join("scan");
    let out = detopt(&[
        "scan",
        "--m",
        "2..5",
        "--n",
        "5,7,9,11",
        "--out",
        path_str(&out_dir),
    ]);
    assert_eq!(code(&out), 0);
    let mut rows = 0;
    for n in [5, 7, 9, 11] {
        let text = fs::read_to_string(out_dir.join(format!("scan_n{n}.csv"))).unwrap();
        assert_eq!(text.lines().next(), Some("m,detStar,detSharp"));
        rows += text.lines().count() - 1;
    }
    assert_eq!(rows, 16);
    assert!(String::from_utf8_lossy(&out.stdout).contains("16 of 16"));
}

#[test]
fn scan_reports_invalid_cells() {
    assert_eq!(code(&detopt(&["scan", "--m", "2", "--n", "4"])), 3);
    assert_eq!(code(&detopt(&["scan", "--m", "x"])), 1);
}

#[test]
fn sweep_writes_csv_and_reports_intervals() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = detopt(&[
        "sweep",
        "--m",
        "2",
        "--n",
        "3",
        "--eps",
        "0.05..1.3",
        "--out",
        path_str(&csv),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("PASS  det J(x*) root in (0.12, 0.125)"),
        "{stdout}"
    );
    // the x# root sits near 0.2642, outside both published x# intervals
    assert_eq!(code(&out), 3);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("eps,detStar,detSharp"));
    assert!(text.lines().count() > 100);

    let out = detopt(&[
        "sweep",
        "--m",
        "3",
        "--n",
        "5",
        "--eps",
        "0.0001..0.01",
        "--steps",
        "20",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&detopt(&["sweep", "--eps", "0.5"])), 1);
}
