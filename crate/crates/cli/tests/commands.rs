use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use oobmm::config::DEFAULT_CONFIG;
use oobmm::textio::MatrixFile;
use sha2::{Digest, Sha256};

fn oobmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oobmm")).args(args).arg("--quiet").output().expect("binary runs")
}

fn run_with(config: &str, cmd: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = out.with_extension("toml");
    fs::write(&cfg, config).unwrap();
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    oobmm(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Replaces one top-level section of the shipped config.
fn with_section(name: &str, body: &str) -> String {
    let mut out = String::new();
    let mut skipping = false;
    for line in DEFAULT_CONFIG.lines() {
        if line.starts_with('[') {
            skipping = line.trim_matches(['[', ']']) == name || line.starts_with(&format!("[{name}."));
            if line.trim_matches(['[', ']']) == name {
                out.push_str(&format!("[{name}]\n{body}\n"));
            }
        }
        if !skipping {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn gen_channels_writes_standard_shapes_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let config = DEFAULT_CONFIG.replace("realizations = 10", "realizations = 2");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = run_with(&config, "gen-channels", dir, &["--seed", "7"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let sub6 = MatrixFile::from_text(&fs::read_to_string(a.join("channels/r0000_sub6.txt")).unwrap()).unwrap();
    assert_eq!(sub6.blocks.len(), 1);
    assert_eq!(sub6.blocks[0].shape(), (4, 4));
    let mm = MatrixFile::from_text(&fs::read_to_string(a.join("channels/r0001_mmwave_taps.txt")).unwrap()).unwrap();
    assert_eq!(mm.blocks.len(), 63);
    assert!(mm.blocks.iter().all(|t| t.shape() == (32, 32)));
    for f in ["channels/r0000_sub6.txt", "channels/r0001_mmwave_taps.txt", "paths.csv", "config.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let c = tmp.path().join("c");
    assert!(run_with(&config, "gen-channels", &c, &["--seed", "8"]).status.success());
    assert_ne!(fs::read(a.join("paths.csv")).unwrap(), fs::read(c.join("paths.csv")).unwrap());
}

#[test]
fn manifest_hash_matches_stored_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let config = DEFAULT_CONFIG.replace("realizations = 10", "realizations = 1");
    assert!(run_with(&config, "gen-channels", &out, &["--seed", "99"]).status.success());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let stored = fs::read(out.join("config.toml")).unwrap();
    assert_eq!(manifest["config_hash"], format!("{:x}", Sha256::digest(&stored)));
    assert_eq!(manifest["seed"], 99);
    assert!(String::from_utf8(stored).unwrap().contains("seed = 99"));
    for f in manifest["outputs"].as_array().unwrap() {
        let bytes = fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"], format!("{:x}", Sha256::digest(&bytes)));
    }
    assert!(!out.join(".oobmm.lock").exists());
}

#[test]
fn missing_field_is_a_config_error_naming_it() {
    let tmp = tempfile::tempdir().unwrap();
    let config = DEFAULT_CONFIG.replacen("carrier_hz = 28e9\n", "", 1);
    let o = run_with(&config, "gen-channels", &tmp.path().join("x"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("carrier_hz"), "{}", stderr(&o));
    // nothing written before validation
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn inconsistent_physics_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = DEFAULT_CONFIG.replacen("bandwidth_hz = 320e6", "bandwidth_hz = -1.0", 1);
    let o = run_with(&config, "gen-channels", &tmp.path().join("x"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let config = DEFAULT_CONFIG.replacen("spacing = 0.5", "spacing = 0.0", 1);
    assert_eq!(run_with(&config, "gen-channels", &tmp.path().join("y"), &[]).status.code(), Some(2));
}

#[test]
fn locked_output_dir_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("busy");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join(".oobmm.lock"), "").unwrap();
    let config = DEFAULT_CONFIG.replace("realizations = 10", "realizations = 1");
    let o = run_with(&config, "gen-channels", &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("locked"));
}

#[test]
fn beamsearch_three_methods_one_distance() {
    let tmp = tempfile::tempdir().unwrap();
    let config = DEFAULT_CONFIG
        .replace("distances_m = [30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0]", "distances_m = [40.0]")
        .replace("trials = 500", "trials = 3");
    let out = tmp.path().join("bs");
    let o = run_with(&config, "beamsearch", &out, &["--records", "--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&out.join("summary.csv"));
    assert_eq!(rows.len(), 3);
    let methods: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(methods, ["bpdn", "w-bpdn", "sw-bpdn"]);
    assert_eq!(csv_rows(&out.join("records.csv")).len(), 9);
}

#[test]
fn beamsearch_unknown_method_lists_valid_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let config = DEFAULT_CONFIG.replace(r#"methods = ["bpdn", "w-bpdn", "sw-bpdn"]"#, r#"methods = ["bpdn", "omp"]"#);
    let o = run_with(&config, "beamsearch", &tmp.path().join("x"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    for m in ["bpdn", "w-bpdn", "sw-bpdn", "11ad"] {
        assert!(msg.contains(m), "{msg}");
    }
}

#[test]
fn covtranslate_gaussian_ensemble_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ct");
    let o = run_with(DEFAULT_CONFIG, "covtranslate", &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&out.join("nmse.csv"));
    assert_eq!(rows.len(), 200);
    assert_eq!(rows.iter().filter(|r| r[5] == "parametric").count(), 100);
}

#[test]
fn covtranslate_single_path_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let config = with_section(
        "covtranslate",
        "family = \"single-path\"\ncases = 20\nmean_range_deg = 60.0\nspread_range_deg = [2.0, 8.0]\nlow_antennas = 4\nhigh_antennas = 32",
    );
    let out = tmp.path().join("sp");
    let o = run_with(&config, "covtranslate", &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&out.join("nmse.csv"));
    let parametric: Vec<f64> = rows.iter().filter(|r| r[5] == "parametric").map(|r| r[6].parse().unwrap()).collect();
    assert_eq!(parametric.len(), 20);
    assert!(parametric.iter().all(|&e| e <= 1e-8), "{parametric:?}");
}

#[test]
fn covtranslate_unknown_family_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = DEFAULT_CONFIG.replace(r#"family = "gaussian""#, r#"family = "rayleigh""#);
    let o = run_with(&config, "covtranslate", &tmp.path().join("x"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rayleigh") || stderr(&o).contains("family"), "{}", stderr(&o));
}

const SMALL_FINGERPRINT: &str = "sides = [4, 8]
symbols_per_beam = 10
snr_db = -16.88
accumulation_db = 10.0
sigma_p = 0.5
target_probability = 0.99
loss_threshold_db = 3.0
trials = 1000
snapshots = 8
depth = 64
survey_sigma = 0.5

[fingerprint.scene]
transmitter = [0.0, 0.0, 6.0]
receiver_height = 1.5
region = { x_min = -2.0, x_max = 2.0, y_min = 8.0, y_max = 10.0, size = 1.0 }
blockage_probability = 0.2
min_reflectors = 1
max_reflectors = 3
reflection = [0.3, 0.7]
wall_offset = [3.0, 20.0]";

#[test]
fn fingerprint_rows_and_database_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let config = with_section("fingerprint", SMALL_FINGERPRINT);
    let built = tmp.path().join("built");
    let o = run_with(&config, "fingerprint", &built, &["--save-db"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&built.join("fingerprint.csv"));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let side: f64 = r[0].parse().unwrap();
        let symbols: f64 = r[3].parse().unwrap();
        let baseline: f64 = r[4].parse().unwrap();
        assert_eq!(baseline, (side.powi(4) / 32.0 + 64.0) * 10.0);
        assert_eq!(symbols % 10.0, 0.0);
        assert_eq!(r[5].parse::<f64>().unwrap(), symbols / baseline);
    }
    assert!(built.join("databases/db_8x8.txt").exists());

    let loaded = tmp.path().join("loaded");
    let o = run_with(&config, "fingerprint", &loaded, &["--load-db", built.join("databases").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(built.join("fingerprint.csv")).unwrap(), fs::read(loaded.join("fingerprint.csv")).unwrap());

    let missing = tmp.path().join("missing");
    let o = run_with(&config, "fingerprint", &missing, &["--load-db", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_default_runs_without_a_config_file() {
    let o = Command::new(env!("CARGO_BIN_EXE_oobmm")).arg("default-config").output().unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), DEFAULT_CONFIG);
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d");
    let o = oobmm(&["covtranslate", "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
}
