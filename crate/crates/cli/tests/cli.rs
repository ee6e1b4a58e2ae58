use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn higs(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_higs"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = higs(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn col(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn df_table_has_expected_columns_and_rows() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["df", "--alpha", "1", "--wh", "1", "--kh", "1", "--wmin", "0.01", "--wmax", "100", "--points", "200"]);
    let (header, rows) = read_csv(&dir.path().join("df.csv"));
    assert_eq!(header, ["alpha", "omega_rad_s", "mag_db", "phase_deg", "gamma_rad", "source"]);
    assert_eq!(rows.len(), 200);
    let omega = col(&rows, 1);
    assert_eq!(omega[0], 0.01);
    assert_eq!(omega[199], 100.0);
    let phase = col(&rows, 3);
    assert!(phase[199] > -38.6 && phase[199] < -37.7);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("df_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "df");
    assert_eq!(manifest["outputs"][0], "df.csv");
    assert_eq!(manifest["config"]["points"], 200);
}

#[test]
fn df_at_alpha_zero_is_flat_gain() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["df", "--alpha", "0", "--kh", "1", "--wh", "1", "--points", "20"]);
    let (_, rows) = read_csv(&dir.path().join("df.csv"));
    for r in &rows {
        let (mag, phase): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!(mag.abs() < 1e-12 && phase.abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn df_sources_agree() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["df", "--alpha", "0.5", "--source", "both", "--points", "6", "--wmin", "0.1", "--wmax", "10"]);
    let (_, rows) = read_csv(&dir.path().join("df.csv"));
    let (closed, sim): (Vec<_>, Vec<_>) = rows.iter().partition(|r| r[5] == "closed_form");
    assert_eq!(closed.len(), 6);
    assert_eq!(sim.len(), 6);
    for (c, e) in closed.iter().zip(&sim) {
        assert_eq!(c[1], e[1]);
        let mag_c = 10f64.powf(c[2].parse::<f64>().unwrap() / 20.0);
        let mag_e = 10f64.powf(e[2].parse::<f64>().unwrap() / 20.0);
        assert!((mag_e / mag_c - 1.0).abs() < 0.02);
        assert!((c[3].parse::<f64>().unwrap() - e[3].parse::<f64>().unwrap()).abs() < 1.0);
        assert!(e[4].is_empty());
    }
}

#[test]
fn simulate_writes_modes_and_stays_in_sector() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["simulate", "--input", "multisine", "--alpha", "1,0.5", "--periods", "2", "--spp", "500"]);
    for tag in ["1", "0.5"] {
        let (header, rows) = read_csv(&dir.path().join(format!("simulate_alpha_{tag}.csv")));
        assert_eq!(header, ["t", "e", "u", "mode"]);
        assert_eq!(rows.len(), 1000);
        assert!(rows.iter().any(|r| r[3] == "integrator"));
        assert!(rows.iter().any(|r| r[3] == "gain"));
        let (header, rows) = read_csv(&dir.path().join(format!("eu_alpha_{tag}.csv")));
        assert_eq!(header, ["e", "u", "sector_edge"]);
        for r in &rows {
            let (e, u): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
            assert!(u * e >= -1e-2 && u.abs() <= e.abs() + 1e-2);
        }
    }
}

#[test]
fn harmonics_compare_architectures() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["harmonics", "--alpha", "0.68", "--beta", "0.5", "--sweep-points", "6"]);
    let (_, rows) = read_csv(&dir.path().join("harmonics.csv"));
    let a = col(&rows, 1);
    let b = col(&rows, 2);
    for n in [3, 5, 7] {
        assert!(a[n - 1] < b[n - 1]);
    }
    assert!(a[2] > a[4] && a[4] > a[6]);
    let (header, rows) = read_csv(&dir.path().join("third_vs_phase.csv"));
    assert_eq!(header, ["arch", "parameter", "phase_deg", "third_relative"]);
    assert_eq!(rows.len(), 12);
}

#[test]
fn linear_configurations_have_no_harmonics() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["harmonics", "--alpha", "0", "--beta", "0", "--sweep-points", "2"]);
    let (_, rows) = read_csv(&dir.path().join("harmonics.csv"));
    for r in rows.iter().skip(1) {
        assert!(r[1].parse::<f64>().unwrap() < 1e-12 && r[2].parse::<f64>().unwrap() < 1e-12, "{r:?}");
    }
}

#[test]
fn step_reports_metrics_and_oracle() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["--duration", "0.1", "step", "--alpha", "0,1", "--oracle"]);
    let (header, rows) = read_csv(&dir.path().join("step_response.csv"));
    assert_eq!(header, ["t", "y_alpha_0", "y_alpha_1"]);
    assert_eq!(rows.len(), 10_000);
    let (header, rows) = read_csv(&dir.path().join("step_metrics.csv"));
    assert_eq!(header[..4], ["alpha", "overshoot_pct", "settling_time_s", "rise_time_s"]);
    assert_eq!(rows.len(), 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("step_manifest.json")).unwrap()).unwrap();
    assert!(manifest["checks"]["oracle_relative_rms"].as_f64().unwrap() < 0.01);
}

#[test]
fn heavier_plant_is_slower() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["--duration", "0.05", "step", "--alpha", "0", "--mass", "1"]);
    let (_, light) = read_csv(&dir.path().join("step_response.csv"));
    ok(dir.path(), &["--duration", "0.05", "step", "--alpha", "0", "--mass", "2"]);
    let (_, heavy) = read_csv(&dir.path().join("step_response.csv"));
    // same input force, half the acceleration over the first samples
    let (l, h) = (col(&light, 1), col(&heavy, 1));
    assert!((h[10] / l[10] - 0.5).abs() < 1e-3, "{} {}", h[10], l[10]);
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["--parallel", "2", "df", "--alpha", "0.3,0.9", "--source", "both", "--points", "4"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    assert_eq!(fs::read(a.path().join("df.csv")).unwrap(), fs::read(b.path().join("df.csv")).unwrap());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[df]\nalpha = [0.5]\npoints = 7\nwmin = 1.0\nwmax = 10.0\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    ok(dir.path(), &["--config", cfg, "df", "--points", "3"]);
    let (_, rows) = read_csv(&dir.path().join("df.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[0] == "0.5"));
    assert_eq!(rows[0][1], "1.0");
}

#[test]
fn bad_configuration_exits_with_2() {
    let dir = TempDir::new().unwrap();
    let o = higs(dir.path(), &["step", "--mass", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mass"));
    let o = higs(dir.path(), &["df", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[df]\nunknown_key = 1\n").unwrap();
    let o = higs(dir.path(), &["--config", cfg.to_str().unwrap(), "df"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let o = higs(dir.path(), &["--dt", "5e-3", "--duration", "1", "step", "--alpha", "0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged"));
}
