use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wptlab::harvester::{write_model, LogPolyFitModel};

fn wptlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wptlab"))
        .args(args)
        .env_remove("WPTLAB_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn records(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].clone()).collect()
}

fn floats(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    column(header, rows, name).iter().map(|v| v.parse().unwrap()).collect()
}

fn model_file(dir: &Path, name: &str, a: f64, b: f64, c: f64) -> PathBuf {
    let path = dir.join(name);
    let m = LogPolyFitModel::new(a, b, c, (1e-7, 3.2e-4)).unwrap();
    write_model(&m, fs::File::create(&path).unwrap()).unwrap();
    path
}

#[test]
fn gains_examples() {
    for (args, expect) in [
        (vec!["gains", "--scheme", "td-cw", "--m", "2"], 1.5),
        (vec!["gains", "--scheme", "td-wf", "--m", "2", "--n", "8"], 8.0625),
        (vec!["gains", "--scheme", "td-mod", "--m", "4", "--dist", "real-gaussian"], 5.25),
        (vec!["gains", "--scheme", "cw"], 1.0),
    ] {
        let out = wptlab(&args);
        assert!(out.status.success(), "{args:?}");
        let (h, rows) = records(&stdout(&out));
        assert_eq!(floats(&h, &rows, "factor"), vec![expect], "{args:?}");
    }
}

#[test]
fn gains_sweep_over_antennas() {
    let out = wptlab(&["gains", "--scheme", "td-cw", "--sweep-m", "1..64"]);
    let (h, rows) = records(&stdout(&out));
    let g = floats(&h, &rows, "g_td");
    assert_eq!(g.len(), 64);
    assert!(g.windows(2).all(|w| w[1] > w[0]) && g[63] < 2.0);
}

#[test]
fn identity_model_has_unit_gain() {
    let dir = tempfile::tempdir().unwrap();
    let model = model_file(dir.path(), "linear.json", 0.0, 1.0, -2.0);
    for mode in ["fading", "td2"] {
        let out = wptlab(&["gain-sweep", "--model", model.to_str().unwrap(), "--mode", mode, "--prf-dbm", "-40:-5:5"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let (h, rows) = records(&stdout(&out));
        for g in floats(&h, &rows, "gain") {
            assert!((g - 1.0).abs() < 1e-9, "{mode}: {g}");
        }
    }
}

#[test]
fn published_cw_fit_benefits_from_diversity() {
    let dir = tempfile::tempdir().unwrap();
    let model = model_file(dir.path(), "cw.json", -0.0669, -0.1317, -6.3801);
    let out = wptlab(&["gain-sweep", "--model", model.to_str().unwrap(), "--mode", "td2"]);
    assert!(out.status.success());
    let (h, rows) = records(&stdout(&out));
    assert_eq!(rows.len(), 36);
    let gains = floats(&h, &rows, "gain");
    assert!(gains.iter().filter(|&&g| g > 1.0).count() * 2 > rows.len());
    assert!(gains.windows(2).all(|w| w[1] < w[0]), "gain falls towards high power");
    let flags = column(&h, &rows, "extrapolated_flag");
    assert!(flags.iter().all(|f| f == "false"), "grid lies inside the fitted range");
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let dir = tempfile::tempdir().unwrap();
    let model = model_file(dir.path(), "cw.json", -0.0669, -0.1317, -6.3801);
    for target in ["fading", "td"] {
        let out = wptlab(&[
            "mc", "--target", target, "--model", model.to_str().unwrap(), "--prf-dbm", "-20", "--trials", "200000",
            "--seed", "5",
        ]);
        assert!(out.status.success());
        let (h, rows) = records(&stdout(&out));
        let est = floats(&h, &rows, "estimate")[0];
        let se = floats(&h, &rows, "std_error")[0];
        let reference = floats(&h, &rows, "reference")[0];
        assert!((est - reference).abs() <= 3.0 * se, "{target}: {est} ± {se} vs {reference}");
    }
    let out = wptlab(&["mc", "--target", "channel", "--m", "4", "--trials", "200000", "--seed", "1"]);
    let (h, rows) = records(&stdout(&out));
    let (est, se) = (floats(&h, &rows, "estimate")[0], floats(&h, &rows, "std_error")[0]);
    assert!((est - 1.75).abs() <= 3.0 * se);
}

#[test]
fn divergent_rows_fail_without_aborting() {
    let dir = tempfile::tempdir().unwrap();
    let model = model_file(dir.path(), "convex.json", 0.05, 1.0, -2.0);
    let out = wptlab(&["gain-sweep", "--model", model.to_str().unwrap(), "--mode", "td2", "--prf-dbm", "-30:-10:10"]);
    assert_eq!(out.status.code(), Some(1));
    let (h, rows) = records(&stdout(&out));
    assert_eq!(rows.len(), 3);
    assert!(column(&h, &rows, "error").iter().all(|e| e.contains("divergent")));
}

#[test]
fn fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("curve.csv");
    let mut csv = String::from("prf_w,pdc_w\n");
    for k in 0..12 {
        let p: f64 = 1e-7 * 2f64.powi(k);
        let l = p.ln();
        csv += &format!("{p:e},{:e}\n", (-0.0669 * l * l - 0.1317 * l - 6.3801).exp());
    }
    fs::write(&data, csv).unwrap();
    let model = dir.path().join("fit.json");
    let out = wptlab(&["fit", "--input", data.to_str().unwrap(), "--out", model.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = records(&stdout(&out));
    assert!((floats(&h, &rows, "a")[0] + 0.0669).abs() < 1e-9);
    assert!((floats(&h, &rows, "c")[0] + 6.3801).abs() < 1e-9);
    assert!(model.exists());
    assert!(dir.path().join("fit.json.manifest.json").exists());
}

#[test]
fn outputs_and_manifest_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out_path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_wptlab"))
            .args(["mc", "--target", "channel", "--m", "3", "--trials", "50000", "--seed", "42", "--out"])
            .arg(&out_path)
            .env("RAYON_NUM_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        out_path
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "4");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "mc");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["args"].as_array().unwrap().iter().any(|v| v == "--trials"));
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_wptlab"));
        cmd.args(["mc", "--target", "channel", "--trials", "10000"]).env_remove("WPTLAB_SEED");
        if let Some(s) = seed {
            cmd.env("WPTLAB_SEED", s);
        }
        stdout(&cmd.output().unwrap())
    };
    let with_env = run(Some("9"));
    assert_eq!(with_env, stdout(&wptlab(&["mc", "--target", "channel", "--trials", "10000", "--seed", "9"])));
    assert_ne!(with_env, run(None));
}

#[test]
fn json_output() {
    let out = wptlab(&["--format", "json", "gains", "--scheme", "td-wf", "--m", "2", "--n", "8"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["factor"], 8.0625);
    assert_eq!(v[0]["scheme"], "td-wf");
}

#[test]
fn synthesized_signal_feeds_the_moment_engine() {
    let dir = tempfile::tempdir().unwrap();
    for (ext, waveform, expect) in [("bin", "multisine:4", 2.75), ("csv", "cw", 1.0)] {
        let sig = dir.path().join(format!("sig.{ext}"));
        let out = wptlab(&[
            "synth", "--waveform", waveform, "--power-dbm", "0", "--carrier-hz", "20e6", "--delta-f", "1e6",
            "--duration", "4e-6", "--out", sig.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let out = wptlab(&["moments", "--input", sig.to_str().unwrap()]);
        let (h, rows) = records(&stdout(&out));
        let g = floats(&h, &rows, "waveform_gain")[0];
        assert!((g - expect).abs() < 5e-3 * expect, "{waveform}: {g}");
    }
}

#[test]
fn small_circuit_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path, trace: &Path| {
        vec![
            "circuit".to_string(),
            "--scheme".into(),
            "cw,td-cw:2".into(),
            "--prf-dbm".into(),
            "-20:-10:10".into(),
            "--realizations".into(),
            "2".into(),
            "--seed".into(),
            "3".into(),
            "--trace".into(),
            trace.display().to_string(),
            "--trace-us".into(),
            "0.5".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let trace = dir.path().join("trace.csv");
    for out in [&a, &b] {
        let o = Command::new(env!("CARGO_BIN_EXE_wptlab")).args(args(out, &trace)).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let (h, rows) = records(&text);
    assert_eq!(rows.len(), 4);
    for e in floats(&h, &rows, "efficiency") {
        assert!((0.0..=1.0).contains(&e));
    }
    assert!(fs::read_to_string(&trace).unwrap().starts_with("t_s,v_in,v_out,i_d"));
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(wptlab(&["gains", "--scheme", "td-cw", "--m", "0"]).status.code(), Some(2));
    assert_eq!(wptlab(&["circuit", "--scheme", "bogus"]).status.code(), Some(2));
    assert_eq!(wptlab(&["fit", "--input", "/nonexistent.csv"]).status.code(), Some(2));
    assert_eq!(wptlab(&["frobnicate"]).status.code(), Some(2));
}
