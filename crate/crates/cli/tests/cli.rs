use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eitmem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eitmem"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let k = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[k].parse().unwrap()).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"))
}

#[test]
fn preset_catalog_lists_every_figure() {
    let dir = tempfile::tempdir().unwrap();
    let out = eitmem(dir.path(), &["list-presets", "--json"]);
    assert!(out.status.success());
    let list: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(list.len() >= 14);
    for p in &list {
        assert!(p["figure"].as_str().unwrap().starts_with("Fig."));
    }
}

#[test]
fn d1_storage_preset_peaks_near_ninety_one_percent() {
    let dir = tempfile::tempdir().unwrap();
    let out = eitmem(dir.path(), &["preset", "fig4d-d1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let se = column(&dir.path().join("fig4d-d1.csv"), "se");
    let peak = se.iter().cloned().fold(f64::MIN, f64::max);
    assert!((0.90..=0.93).contains(&peak), "peak {peak}");
    let summary = json(&dir.path().join("fig4d-d1.json"));
    assert_eq!(summary["files"][0], "fig4d-d1.csv");
    assert_eq!(summary["results"]["seed"], 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert!(eitmem(dir.path(), &["preset", "fig5c"]).status.success());
    }
    for f in ["fig5c.csv", "fig5c.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn empty_sweep_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = eitmem(dir.path(), &["preset", "fig4d-d1", "--sweep", "10:1000:0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "validation");
    assert_eq!(err["error"]["exit_code"], 2);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn empty_sweep_in_scenario_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let dump = eitmem(dir.path(), &["preset", "fig4a", "--dump"]);
    assert!(dump.status.success());
    let text = String::from_utf8(dump.stdout).unwrap();
    let mut doc: toml::Table = text.parse().unwrap();
    doc["sweep"].as_table_mut().unwrap().insert("points".into(), toml::Value::Integer(0));
    let path = dir.path().join("empty.toml");
    std::fs::write(&path, toml::to_string(&doc).unwrap()).unwrap();
    let out = eitmem(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["error"]["message"].as_str().unwrap().contains("empty"));
}

#[test]
fn dumped_scenario_reproduces_the_preset() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let dump = eitmem(a.path(), &["preset", "fig2b", "--dump"]);
    let path = b.path().join("custom.toml");
    std::fs::write(&path, dump.stdout).unwrap();
    assert!(eitmem(a.path(), &["preset", "fig2b"]).status.success());
    assert!(eitmem(b.path(), &["run", path.to_str().unwrap()]).status.success());
    for f in ["fig2b.csv", "fig2b.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn fwm_preset_states_its_sign_translation() {
    let dir = tempfile::tempdir().unwrap();
    assert!(eitmem(dir.path(), &["preset", "fig5b"]).status.success());
    let summary = json(&dir.path().join("fig5b.json"));
    assert_eq!(summary["scenario"]["metadata"]["delta_p_sign_translation"], "identity");
    let gain = summary["results"]["max_fwm_gain"].as_f64().unwrap();
    assert!((gain - 0.0156).abs() < 0.0005, "gain {gain}");
}

#[test]
fn unknown_preset_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = eitmem(dir.path(), &["preset", "fig9z"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["error"]["message"].as_str().unwrap().contains("fig9z"));
}

#[test]
fn invalid_parameters_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    let dump = eitmem(dir.path(), &["preset", "fig3a", "--dump"]);
    let doc: toml::Table = String::from_utf8(dump.stdout).unwrap().parse().unwrap();
    let mut params = doc["params"].as_table().unwrap().clone();
    params["medium"]
        .as_table_mut()
        .unwrap()
        .insert("optical_depth".into(), toml::Value::Float(-5.0));
    std::fs::write(&cfg, toml::to_string(&params).unwrap()).unwrap();
    let out = eitmem(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "validation");
}

#[test]
fn unwritable_output_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let out = eitmem(&blocker, &["preset", "figS1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["kind"], "output-io");
}

#[test]
fn simulated_data_fits_back() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(eitmem(d, &["spectrum", "--grid", "-4:4:401"]).status.success());
    assert!(eitmem(d, &["slowlight"]).status.success());
    let spectrum = d.join("spectrum.csv");
    let trace = d.join("slowlight_trace.csv");
    let out = eitmem(
        d,
        &["fit", "--spectrum", spectrum.to_str().unwrap(), "--trace", trace.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit = &json(&d.join("fit.json"))["result"];
    // Reference parameter set: D = 822, Ω_c = 7.41, γ31 = 1.07, δc = −0.012.
    for (key, truth) in [("optical_depth", 822.0), ("omega_c", 7.41), ("gamma31", 1.07), ("delta_c", -0.012)] {
        let v = fit[key]["value"].as_f64().unwrap();
        let w = fit[key]["interval"].as_f64().unwrap();
        assert!((v - truth).abs() <= w, "{key}: {v} ± {w}");
    }
    assert!((fit["omega_c"]["value"].as_f64().unwrap() - 7.41).abs() < 0.05);
}

#[test]
fn spectrum_fit_with_fixed_decoherence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(eitmem(d, &["spectrum", "--grid", "-4:4:401"]).status.success());
    let spectrum = d.join("spectrum.csv");
    let out = eitmem(d, &["fit", "--spectrum", spectrum.to_str().unwrap(), "--fix", "gamma31=1.07"]);
    assert!(out.status.success());
    let fit = &json(&d.join("fit.json"))["result"];
    assert!((fit["omega_c"]["value"].as_f64().unwrap() - 7.41).abs() < 1e-6);
    assert!((fit["d_gamma31"]["value"].as_f64().unwrap() - 822.0 * 1.07).abs() < 1e-3);

    let bad = eitmem(d, &["fit", "--spectrum", spectrum.to_str().unwrap(), "--fix", "omega_c=3"]);
    assert_eq!(bad.status.code(), Some(2));
}
