use std::path::Path;
use std::process::{Command, Output};

fn wavekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavekit")).args(args).env_remove("WAVEKIT_THREADS").output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column<'a>(header: &[String], rows: &'a [Vec<String>], name: &str) -> Vec<&'a str> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].as_str()).collect()
}

#[test]
fn table1_matches_reference_orders_of_magnitude() {
    let (header, rows) = csv_rows(&stdout(&wavekit(&["table1"])));
    assert_eq!(header, ["mass_eV", "gamma", "model", "tau_L_s", "tau_T_s", "tau_p_s"]);
    assert_eq!(rows.len(), 10);
    let masses: Vec<f64> = column(&header, &rows, "mass_eV").iter().map(|m| m.parse().unwrap()).collect();
    assert_eq!(&masses[..8], &[0.5e6, 0.5e6, 0.5e6, 0.5e6, 0.1, 0.1, 0.1, 0.1]);
    let gammas: Vec<f64> = column(&header, &rows, "gamma").iter().map(|m| m.parse().unwrap()).collect();
    assert_eq!(gammas[2], 2000.0);
    assert_eq!(gammas[6], 1e10);
    let reference = [5e-8, 4e2, 1e-14, 1e16, 3e11 * 365.25 * 86400.0];
    for (i, want) in reference.into_iter().enumerate() {
        let got: f64 = column(&header, &rows, "tau_L_s")[2 * i].parse().unwrap();
        let f = got / want;
        assert!((0.2..=5.0).contains(&f), "row {i}: {got:e} vs {want:e}");
    }
}

#[test]
fn moments_json_has_fixed_top_level_keys() {
    let text = stdout(&wavekit(&["moments", "--model", "gaussian-noncov", "--mass", "1", "--sigma-p", "0.01"]));
    let keys: Vec<usize> = ["\"config\"", "\"results\"", "\"errors\""].iter().map(|k| text.find(k).unwrap()).collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["results"]["moments"]["norm_residual"].as_f64().unwrap().abs() <= 1e-8);
    assert_eq!(v["errors"], serde_json::json!([]));
    assert_eq!(v["config"]["model"], "gaussian-noncov");
}

#[test]
fn flux_asymptote_is_one_at_ten_widths() {
    let out = wavekit(&["flux-asymptote", "--radii", "500,1000,2000", "--model", "gaussian-noncov", "--mass", "1", "--sigma-p", "0.01"]);
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header, ["r", "flux_norm", "prob_norm", "method", "err"]);
    assert_eq!(column(&header, &rows, "r"), ["500.0", "1000.0", "2000.0"]);
    for v in column(&header, &rows, "flux_norm") {
        assert!((v.parse::<f64>().unwrap() - 1.0).abs() <= 0.02, "{v}");
    }
    assert!(column(&header, &rows, "prob_norm").iter().all(|v| v.is_empty()));
}

#[test]
fn prob_asymptote_both_methods() {
    let out = wavekit(&["prob-asymptote", "--radii", "500", "--method", "both"]);
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(column(&header, &rows, "method"), ["time-domain", "spectral"]);
    for v in column(&header, &rows, "prob_norm") {
        assert!((v.parse::<f64>().unwrap() - 1.0).abs() <= 0.05, "{v}");
    }
}

#[test]
fn dispersion_with_measurement() {
    let out = wavekit(&["dispersion", "--times", "0,5000", "--measure", "--grid", "41"]);
    let (header, rows) = csv_rows(&stdout(&out));
    let analytic = column(&header, &rows, "analytic");
    let measured = column(&header, &rows, "measured");
    for (a, m) in analytic.iter().zip(measured) {
        let (a, m): (f64, f64) = (a.parse().unwrap(), m.parse().unwrap());
        assert!((m / a - 1.0).abs() < 0.01, "{m} vs {a}");
    }
}

#[test]
fn evolve_dumps_every_grid_point() {
    let out = wavekit(&["evolve", "--t", "0:200:3", "--grid", "4", "--field-method", "closed-form"]);
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header, ["t", "x", "y", "z", "rho", "jx", "jy", "jz", "re_psi", "im_psi"]);
    assert_eq!(rows.len(), 3 * 5 * 5 * 5);
    assert_eq!(column(&header, &rows, "t")[rows.len() - 1], "200.0");
}

#[test]
fn continuity_statistics() {
    let text = stdout(&wavekit(&["continuity", "--samples", "4", "--seed", "3"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["results"]["samples"], 4);
    assert!(v["results"]["quadrature"]["max"].as_f64().unwrap() <= 1e-6);
    assert!(v["results"]["closed_form"]["max"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = wavekit(&[
            "flux-asymptote",
            "--radii",
            "500,700,900",
            "--threads",
            threads,
            "--format",
            "csv",
            "-o",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "3"));
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    write(&conf, "# test run\nmodel = gaussian-cov-exact\nmass = 2\nsigma-p = 0.02\ntimes = 0, 100\n");
    let from_file = stdout(&wavekit(&["dispersion", "--config", conf.to_str().unwrap()]));
    let from_flags = stdout(&wavekit(&["dispersion", "--model", "gaussian-cov-exact", "--mass", "2", "--sigma-p", "0.02", "--times", "0,100"]));
    assert_eq!(from_file, from_flags);
    let overridden = stdout(&wavekit(&["dispersion", "--config", conf.to_str().unwrap(), "--mass", "1"]));
    assert_ne!(overridden, from_file);
    let v: serde_json::Value = serde_json::from_str(&stdout(&wavekit(&[
        "moments",
        "--config",
        conf.to_str().unwrap(),
        "--mass",
        "1",
    ])))
    .unwrap();
    assert_eq!(v["config"]["mass"], 1.0);
    assert_eq!(v["config"]["sigma_p"], 0.02);
}

#[test]
fn tabulated_envelope_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("env.csv");
    let mut text = String::from("k_eV,phi\n");
    for i in 0..=40 {
        let k = 0.0025 * i as f64;
        text.push_str(&format!("{k},{}\n", (-k * k / (4.0 * 0.01 * 0.01)).exp()));
    }
    write(&table, &text);
    let out = wavekit(&["moments", "--model", "tabulated-isotropic", "--table", table.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["results"]["moments"]["norm_residual"].as_f64().unwrap().abs() <= 1e-8);
}

#[test]
fn validation_errors_exit_one_with_code_prefix() {
    for args in [
        &["moments", "--mass", "-1"][..],
        &["moments", "--momentum", "1,2"],
        &["flux-asymptote", "--momentum", "0,0,0.1"],
        &["dispersion"],
        &["moments", "--format", "csv"],
        &["no-such-command"],
    ] {
        let out = wavekit(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        let code = err.split(':').next().unwrap();
        assert!(!code.is_empty() && code.chars().all(|c| c.is_ascii_alphanumeric()), "{err}");
    }
    let out = wavekit(&["moments", "--mass", "-1"]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("NonPositiveMass:"));
}

#[test]
fn bad_config_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    write(&conf, "colour = blue\n");
    let out = wavekit(&["table1", "--config", conf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("InvalidInput:"));
}

#[test]
fn convergence_failure_exits_two_and_reports_json() {
    let out = wavekit(&["dispersion", "--times", "0,5000", "--measure", "--grid", "5", "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("GridTooCoarse:"));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"], serde_json::Value::Null);
    assert_eq!(v["errors"][0]["code"], "GridTooCoarse");
}

#[test]
fn help_exits_zero() {
    let out = wavekit(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("flux-asymptote"));
}
