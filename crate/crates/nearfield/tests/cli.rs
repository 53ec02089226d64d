use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "schema_version = 1
seed = 3
[array]
n_elements = 33
[ofdm]
n_subcarriers = 4
n_symbols = 30
[experiment]
n_trials = 3
snr_db = [0.0]
[sampler]
range_m = [1.5, 5.0]
[grid]
range_m = { start = 1.0, stop = 5.5, step = 0.1 }
angle_deg = { start = 30.0, stop = 150.0, step = 1.0 }
[fresnel]
n_windows = 12
[scene]
targets = [{ range_m = 2.0, angle_deg = 70.0 }, { range_m = 3.5, angle_deg = 110.0 }]
";

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn nearfield(cfg: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nearfield"))
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn manifest(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("n_symbols = 30", "n_symbols = 30\nn_snapshotz = 4"));
    let out = nearfield(&cfg, &dir.path().join("out"), &["simulate"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("n_snapshotz"), "{stderr}");
}

#[test]
fn seeded_single_trial_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = nearfield(&cfg, &out_dir, &["--trials", "1", "--seed", "7", "sweep", "snr"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("sweep_snr.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn nested_output_directory_is_created() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("x/y/z");
    let out = nearfield(&cfg, &out_dir, &["simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("received.csv").is_file());
    assert!(out_dir.join("manifest_simulate.json").is_file());
}

#[test]
fn manifest_echoes_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[array]\nn_elements = 9\n[ofdm]\nn_subcarriers = 2\nn_symbols = 4\n\
         [scene]\ntargets = [{ range_m = 0.2, angle_deg = 80.0 }]\n",
    );
    let out_dir = dir.path().join("out");
    let out = nearfield(&cfg, &out_dir, &["simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir.join("manifest_simulate.json"));
    let c = &m["config"];
    assert_eq!(c["schema_version"], 1);
    assert_eq!(c["array"]["n_elements"], 9);
    assert_eq!(c["array"]["carrier_freq_hz"], 28e9);
    assert_eq!(c["ofdm"]["spacing_hz"], 480e3);
    assert_eq!(c["experiment"]["n_trials"], 200);
    assert_eq!(c["experiment"]["estimator"], "both");
    assert_eq!(c["fresnel"]["n_windows"], 50);
    assert_eq!(m["details"]["n_elements"], 9);
}

#[test]
fn spectrum_argmax_matches_estimate_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = nearfield(&cfg, &out_dir, &["spectrum"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut rdr = csv::Reader::from_path(out_dir.join("spectrum_sf.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["r_m", "theta_rad", "J"]);
    let (mut best, mut cell) = (f64::NEG_INFINITY, (0.0, 0.0));
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let v: Vec<f64> = rec.iter().map(|s| s.parse().unwrap()).collect();
        if v[2] > best {
            best = v[2];
            cell = (v[0], v[1].to_degrees());
        }
    }
    let m = manifest(&out_dir.join("manifest_spectrum.json"));
    let sf = &m["details"]["sf"];
    let arg = &sf["grid_argmax"];
    assert!((arg["range_m"].as_f64().unwrap() - cell.0).abs() < 1e-9);
    assert!((arg["angle_deg"].as_f64().unwrap() - cell.1).abs() < 1e-6);
    let near = sf["estimates"].as_array().unwrap().iter().any(|e| {
        (e["range_m"].as_f64().unwrap() - cell.0).abs() <= 0.1 + 1e-9
            && (e["angle_deg"].as_f64().unwrap() - cell.1).abs() <= 1.0 + 1e-6
    });
    assert!(near, "argmax {cell:?} not next to any estimate in {sf}");
    assert!(out_dir.join("spectrum_fresnel_angle.csv").is_file());
}

#[test]
fn sweep_with_mostly_failed_detections_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace(
            "range_m = { start = 1.0, stop = 5.5, step = 0.1 }\nangle_deg = { start = 30.0, stop = 150.0, step = 1.0 }",
            "range_m = { start = 1.0, stop = 1.1, step = 0.1 }\nangle_deg = { start = 30.0, stop = 31.0, step = 1.0 }",
        )
        .replace("n_windows = 12", "n_windows = 3");
    let cfg = write_config(dir.path(), &text);
    let out_dir = dir.path().join("out");
    let out = nearfield(&cfg, &out_dir, &["--estimator", "sf", "sweep", "snr"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("detection failures"), "{stderr}");
    let m = manifest(&out_dir.join("manifest_sweep_snr.json"));
    assert!(m["details"]["max_failure_rate"].as_f64().unwrap() > 0.5);
}
