use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pnss_cli::output::read_csv;

const COARSE: &str = "[grid]\npoints = 12001\n";

fn pnss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(sub: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = write_config(dir, config);
    let out = dir.join("out");
    let mut args = vec![sub, "--config", &cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    pnss(&args)
}

fn column(dir: &Path, file: &str, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(dir.join("out").join(file)).unwrap();
    let (_, header, rows) = read_csv(&text).expect("well-formed csv");
    let j = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no {name}"));
    rows.iter().map(|r| r[j]).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn send_reference_scenario() {
    let d = tempfile::tempdir().unwrap();
    let o = run("send", "", d.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sigma_p1 = column(d.path(), "sender.csv", "sigma_p1");
    assert!(*sigma_p1.last().unwrap() >= 0.98);
    let text = fs::read_to_string(d.path().join("out/photonics.csv")).unwrap();
    let hash = pnss_cli::config::sha256_hex(b"");
    assert!(text.starts_with(&format!("# config_sha256={hash}\nkt,P0,P1,P2,flux_total,flux_I,flux_II,n_out,g2\n")));
    assert!(!d.path().join("out/receiver.csv").exists());
}

#[test]
fn single_photon_input_has_no_second_photon() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{COARSE}[initial_state]\nc_m1 = [0.0, 0.0]\nc_0 = [1.0, 0.0]\n");
    let o = run("send", &cfg, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(column(d.path(), "photonics.csv", "flux_II").iter().all(|v| *v == 0.0));
    assert!(column(d.path(), "photonics.csv", "g2").iter().all(|v| *v == 0.0));
}

#[test]
fn halved_grid_keeps_invariants_at_looser_tolerance() {
    let d = tempfile::tempdir().unwrap();
    let o = run("transfer", "[grid]\npoints = 24001\n", d.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/report.json")).unwrap()).unwrap();
    let f = |path: &str| report.pointer(path).and_then(|v| v.as_f64()).unwrap();
    assert!(f("/sender/conservation_error") <= 4e-10);
    assert!(f("/sender/ode_conservation_error") <= 4e-6);
    assert!(f("/sender/ode_max_deviation") <= 4e-6);
    assert!(f("/receiver/ode_max_deviation") <= 4e-6);
    assert!(f("/solve/residual_eta").abs() <= 4e-6);
    assert!(f("/solve/residual_zeta").abs() <= 4e-6);
    assert!(f("/transfer/fidelity") >= 0.999);
    let p1 = column(d.path(), "photonics.csv", "P1");
    let p2 = column(d.path(), "photonics.csv", "P2");
    let n = column(d.path(), "photonics.csv", "n_out");
    assert!(n.iter().zip(p1.iter().zip(&p2)).all(|(n, (a, b))| (n - a - 2.0 * b).abs() <= 4e-8));
}

#[test]
fn transfer_report_fields() {
    let d = tempfile::tempdir().unwrap();
    let o = run("transfer", COARSE, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["solve"]["used_fallback"], true);
    assert_eq!(report["solve"]["used"], "width_and_amplitude");
    let t2 = report["solve"]["T2_us"].as_f64().unwrap();
    assert!((0.70..0.75).contains(&t2), "{t2}");
    let w = report["transfer"]["link"]["weighted_success"].as_f64().unwrap();
    assert!((w - 0.954).abs() < 1e-3);
    let r_sn = report["transfer"]["diagnostics"]["r_sn"].as_f64().unwrap();
    assert!((r_sn - 32.7).abs() < 0.1);
    assert!(report["transfer"]["diagnostics"]["mode_overlap"].as_f64().unwrap() > 0.8);
    for name in ["sender.csv", "photonics.csv", "receiver.csv", "summary.csv"] {
        let text = fs::read_to_string(d.path().join("out").join(name)).unwrap();
        let (_, header, _) = read_csv(&text).unwrap();
        assert!(name == "summary.csv" || header.iter().any(|h| h == "kt"), "{name}");
    }
}

#[test]
fn qutrit_transfer() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{COARSE}[initial_state]\nc_m1 = [0.7071067811865476, 0.0]\nc_0 = [0.5477225575051661, 0.0]\nc_p1 = [0.4472135954999579, 0.0]\n"
    );
    let o = run("transfer", &cfg, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fid = column(d.path(), "summary.csv", "fidelity")[0];
    assert!(fid >= 0.999, "{fid}");
}

#[test]
fn unknown_field_is_config_error_with_location() {
    let d = tempfile::tempdir().unwrap();
    let o = run("send", "[channel]\nL0_km = 1.0\nlenght = 2.0\n", d.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("lenght") && e.contains("line 3"), "{e}");
}

#[test]
fn initial_state_normalization_policy() {
    let d = tempfile::tempdir().unwrap();
    let near = "[initial_state]\nc_m1 = [0.8366603, 0.0]\nc_0 = [0.5477226, 0.0]\n[grid]\npoints = 2001\n";
    let o = run("send", near, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("renormalized"));
    let far = "[initial_state]\nc_m1 = [0.9, 0.0]\nc_0 = [0.5, 0.0]\n";
    assert_eq!(run("send", far, d.path(), &[]).status.code(), Some(1));
}

#[test]
fn strict_mode_rejects_reference_regime() {
    let d = tempfile::tempdir().unwrap();
    let o = run("send", COARSE, d.path(), &["--strict"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("k_over_g1"));
    let relaxed = format!("{COARSE}[regime]\nmin_ratio = 2.0\n");
    assert_eq!(run("send", &relaxed, d.path(), &["--strict"]).status.code(), Some(0));
}

#[test]
fn non_convergence_exits_2_and_keeps_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{COARSE}[pulse2]\nfallback = false\n");
    let o = run("transfer", &cfg, d.path(), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["solve"]["converged"], false);
    assert!(report["solve"]["residual_eta"].as_f64().unwrap() < 0.0);
    assert!(report["transfer"].is_null());
}

#[test]
fn tol_flag_reaches_solver() {
    let d = tempfile::tempdir().unwrap();
    let o = run("receive", COARSE, d.path(), &["--tol=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("pulse2.tol"), "{}", stderr(&o));
    let o = run("receive", COARSE, d.path(), &["--tol", "x"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run("receive", COARSE, d.path(), &["--tol", "1e-9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let eta = column(d.path(), "receiver.csv", "eta");
    assert!((eta.last().unwrap() - std::f64::consts::PI).abs() <= 1e-9);
}

#[test]
fn explicit_pulse_and_general_phase() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{COARSE}[params]\nomega2_mhz = 11.2541201507651\nphi2 = 0.3\n[pulse2]\nmode = \"explicit\"\nT2_us = 0.741326725213028\ncenter_us = 0.0\n"
    );
    let o = run("receive", &cfg, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let eta = column(d.path(), "receiver.csv", "eta");
    assert!((eta.last().unwrap() - std::f64::consts::PI).abs() < 1e-3);
    let rho: f64 = ["rho_m1", "rho_0", "rho_p1"]
        .iter()
        .map(|c| *column(d.path(), "receiver.csv", c).last().unwrap())
        .sum();
    assert!((rho - 1.0).abs() < 1e-9);
}

#[test]
fn tabulated_sending_pulse() {
    let d = tempfile::tempdir().unwrap();
    let samples: Vec<String> = (0..=240)
        .map(|i| {
            let t = -1.8 + 0.015 * i as f64;
            format!("{:.15}", (-(t / 0.3) * (t / 0.3)).exp())
        })
        .collect();
    let cfg = format!(
        "{COARSE}[pulse1]\nshape = \"tabulated\"\nT1_us = 0.3\nt_start_us = -1.8\nt_end_us = 1.8\nsamples = [{}]\n",
        samples.join(", ")
    );
    let o = run("send", &cfg, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let theta = column(d.path(), "sender.csv", "theta");
    assert!((theta.last().unwrap() - 6.4147).abs() < 0.01);
}

#[test]
fn distance_sweep_is_monotone() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        "sweep",
        COARSE,
        d.path(),
        &["--axis", "channel.L0_km", "--from", "0", "--to", "5", "--points", "51"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let w = column(d.path(), "sweep.csv", "weighted_success");
    assert_eq!(w.len(), 51);
    assert!(w.windows(2).all(|p| p[1] < p[0]));
    assert_eq!(column(d.path(), "sweep.csv", "channel.L0_km")[50], 5.0);
}

#[test]
fn single_point_sweep_matches_transfer_row() {
    let d = tempfile::tempdir().unwrap();
    let o = run("transfer", COARSE, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let summary = fs::read_to_string(d.path().join("out/summary.csv")).unwrap();
    let o = run(
        "sweep",
        COARSE,
        d.path(),
        &["--axis", "channel.L0_km", "--from", "0.06", "--to", "0.06", "--points", "1"],
    );
    assert_eq!(o.status.code(), Some(0));
    let sweep = fs::read_to_string(d.path().join("out/sweep.csv")).unwrap();
    let row = |text: &str| text.lines().nth(2).unwrap().to_string();
    let swept = row(&sweep);
    let (_, rest) = swept.split_once(',').unwrap();
    assert_eq!(rest, row(&summary));
}

#[test]
fn population_sweep_tracks_mean_photon_number() {
    let d = tempfile::tempdir().unwrap();
    let sweep = format!("{COARSE}[sweep]\naxis = \"initial_state.pop_m1\"\nfrom = 0.0\nto = 1.0\npoints = 5\n");
    let o = run("sweep", &sweep, d.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = column(d.path(), "sweep.csv", "initial_state.pop_m1");
    let n = column(d.path(), "sweep.csv", "n_out_final");
    assert!(n.windows(2).all(|p| p[1] > p[0]));
    let th = 6.414_713_852;
    for (a, n) in a.iter().zip(&n) {
        let want = (1.0 + a) * (1.0 - (-th as f64).exp()) - a * th * (-th as f64).exp();
        assert!((n - want).abs() < 1e-6, "{a}: {n} vs {want}");
    }
    assert!(column(d.path(), "sweep.csv", "fidelity").iter().all(|f| *f >= 0.999));
}

#[test]
fn non_scalar_axis_rejected() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        "sweep",
        COARSE,
        d.path(),
        &["--axis", "initial_state.c_m1", "--from", "0", "--to", "1", "--points", "3"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("scalar"));
}
