use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirac-qes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn oscillator_spectrum_rows() {
    let o = run(&["spectrum", "oscillator", "--M", "1", "--mu-n", "1", "--kappa", "1", "--n-max", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let eps: Vec<f64> = column(&text, "eps_plus").iter().map(|s| s.parse().unwrap()).collect();
    for e in [1.0, 5f64.sqrt(), 3.0, 13f64.sqrt()] {
        assert!(eps.iter().any(|x| (x - e).abs() < 1e-12), "missing {e}");
    }
    for d in column(&text, "abs_delta") {
        assert!(d.parse::<f64>().unwrap() < 1e-6);
    }
}

#[test]
fn coulomb_spectrum_first_level() {
    let o = run(&["spectrum", "coulomb", "--M", "1", "--kappa", "-1", "--alpha", "0.5", "--beta", "0", "--n-max", "2"]);
    assert!(o.status.success());
    let eps: f64 = column(&stdout(&o), "epsilon")[0].parse().unwrap();
    assert!((eps - 0.9659258).abs() < 1e-7);
}

#[test]
fn extended_spectrum_json() {
    let o = run(&[
        "spectrum", "extended-oscillator", "--M", "1", "--kappa", "1", "--gamma1", "3", "--beta1", "4", "--n-max", "1",
        "--json",
    ]);
    assert!(o.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert!(rows.iter().all(|r| r["abs_delta"].as_f64().unwrap() < 1e-6));
    let n1 = rows.iter().find(|r| r["n"] == 1).unwrap();
    // the oracle places this level at E^2 = 25/9 + 20
    assert!((n1["eps_plus"].as_f64().unwrap().powi(2) - (25.0 / 9.0 + 20.0)).abs() < 1e-9);
}

#[test]
fn planar_scan_has_four_branches() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("planar.csv");
    let o = run(&[
        "qes-scan", "planar", "--n", "1", "--kappa", "0.5", "--sweep", "M:0:1:21", "--out", path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("sweep_value,branch_id,fixed_coupling,epsilon,sigma_min\n"));
    let mut ids = column(&text, "branch_id");
    assert_eq!(ids.len(), 84);
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 4);
    let mut eps: Vec<String> = column(&text, "epsilon")
        .iter()
        .take(4)
        .map(|e| format!("{:.8}", e.parse::<f64>().unwrap()))
        .collect();
    eps.sort();
    eps.dedup();
    assert_eq!(eps.len(), 2);
}

#[test]
fn scan_output_is_bit_stable() {
    let args = ["qes-scan", "planar", "--n", "1", "--kappa", "0.5", "--sweep", "M:0:1:2"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 1 + 2 * 4);
}

#[test]
fn extended_scan_window() {
    let o = run(&[
        "qes-scan", "extended-qes", "--n", "1", "--kappa", "1", "--gamma1", "3", "--beta1", "4", "--M", "1", "--sweep",
        "alpha:0.05:0.95:10", "--json",
    ]);
    assert!(o.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let alphas: Vec<f64> = rows.as_array().unwrap().iter().map(|r| r["sweep_value"].as_f64().unwrap()).collect();
    assert!(!alphas.is_empty());
    assert!(alphas.iter().all(|&a| a > 0.09 && a < 0.93));
}

#[test]
fn verify_passes_and_fails() {
    let ok = run(&["verify", "oscillator", "--M", "1", "--mu-n", "1", "--kappa", "1", "--from-algebra"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).lines().skip(1).all(|l| l.ends_with("PASS")));

    let bad = run(&["verify", "oscillator", "--M", "1", "--mu-n", "1", "--kappa", "1", "--epsilon", "2.2370679774997897"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout(&bad).contains("FAIL"));
}

#[test]
fn verify_planar_ground_state() {
    let o = run(&["verify", "planar", "--kappa", "-0.5", "--M", "0", "--btilde", "1", "--n", "0", "--from-algebra"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(column(&stdout(&o), "nodes").iter().all(|n| n == "0"));
}

#[test]
fn verify_from_instance_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coulomb.json");
    let dump = run(&[
        "preset-dump", "coulomb", "--M", "1", "--kappa", "-1", "--alpha", "0.5", "--beta", "0", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(dump.status.success());
    let n = 1.0 + 0.75f64.sqrt();
    let e = n / (n * n + 0.25f64).sqrt();
    let o = run(&["verify", "--instance", path.to_str().unwrap(), "--epsilon", &e.to_string()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["spectrum", "oscillator", "--M", "1"]).status.code(), Some(1));
    assert_eq!(run(&["spectrum", "planar", "--M", "1"]).status.code(), Some(1));
    assert_eq!(run(&["qes-scan", "planar", "--kappa", "0.5", "--sweep", "M:1:0:5"]).status.code(), Some(1));
    assert_eq!(run(&["spectrum", "nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_three() {
    let o = run(&["spectrum", "coulomb", "--M", "1", "--kappa", "-1", "--alpha", "0", "--beta", "1", "--n-max", "1"]);
    assert_eq!(o.status.code(), Some(3));
}
