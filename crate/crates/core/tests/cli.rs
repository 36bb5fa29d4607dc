use std::fs;
use std::process::{Command, Output};

fn phasecomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasecomp"))
        .args(args)
        .env_remove("PHASECOMP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn verify_passes_and_strict_flags_tabulation_drift() {
    let out = phasecomp(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["catalog"]["rows"].as_array().unwrap().len(), 16);
    assert_eq!(phasecomp(&["verify", "--strict"]).status.code(), Some(1));
}

#[test]
fn solve_three_pulses() {
    let out = phasecomp(&["solve", "--n", "3", "--targets", "1,0", "--seeds", "10", "--rng", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["rng_seed"], 5);
    let phase = v["solutions"][0]["phases_pi"][1].as_f64().unwrap();
    assert!((phase - 2.0 / 3.0).abs() < 1e-10, "{phase}");
}

#[test]
fn seed_file_drives_the_search() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.json");
    fs::write(&seeds, r#"{"seeds": [[0.74, 0.40]]}"#).unwrap();
    let out = phasecomp(&[
        "solve",
        "--n",
        "5",
        "--targets",
        "1,0;1,1",
        "--seed-file",
        seeds.to_str().unwrap(),
        "--no-broadness",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["seed_count"], 1);
    let p = &v["solutions"][0]["phases_pi"];
    assert!((p[1].as_f64().unwrap() - 0.7433).abs() < 1e-4);
    assert!((p[2].as_f64().unwrap() - 0.3951).abs() < 1e-4);
}

#[test]
fn outputs_land_in_the_configured_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_phasecomp"))
        .args(["profile", "--seq", "Phi5", "--points", "11", "--rng", "3", "--out", "grid.csv"])
        .env("PHASECOMP_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# sequence=Phi5") && header.ends_with("rng_seed=3"), "{header}");
    assert_eq!(lines.next(), Some("x,y,p"));
    assert_eq!(lines.count(), 121);
}

#[test]
fn triple_profiles_favour_the_tailored_sequence_at_large_phase_error() {
    let fraction = |name: &str| {
        let out = phasecomp(&["profile", "--seq", name, "--model", "triple", "--eps", "0.10", "--metrics"]);
        assert_eq!(out.status.code(), Some(0));
        let v = json(&out);
        let levels = v["levels"].as_array().unwrap();
        levels.iter().find(|l| l["m"] == 4).unwrap()["cell_fraction"].as_f64().unwrap()
    };
    assert!(fraction("T9") > fraction("U9"));
}

#[test]
fn coefficients_and_transforms() {
    let out = phasecomp(&["coeffs", "--seq", "Phi7", "--caps", "5,2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["caps"], serde_json::json!([5, 2]));
    assert_eq!(v["entries"].as_array().unwrap().len(), 18);

    let out = phasecomp(&["transform", "--seq", "B5a", "--op", "add2pi:2:+1", "--op", "signflip"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["phases_pi"][1].as_f64().unwrap() + 2.8).abs() < 1e-12);
    assert_eq!(v["history"], serde_json::json!(["add2pi:2:+1", "signflip"]));
}

#[test]
fn catalog_listing() {
    let out = phasecomp(&["catalog", "--list"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 16);
    let v = json(&phasecomp(&["catalog", "--show", "Φ5"]));
    assert_eq!(v["name"], "Phi5");
}

#[test]
fn exit_codes_distinguish_failures() {
    assert_eq!(phasecomp(&["profile", "--seq", "nope"]).status.code(), Some(3));
    assert_eq!(phasecomp(&["solve", "--n", "5", "--targets", "1,"]).status.code(), Some(2));
    assert_eq!(phasecomp(&["solve", "--n", "5"]).status.code(), Some(2));
    assert_eq!(phasecomp(&["--bogus"]).status.code(), Some(2));
    assert_eq!(
        phasecomp(&["catalog", "--list", "--out", "/nonexistent/dir/list.txt"]).status.code(),
        Some(4)
    );
    assert_eq!(phasecomp(&["profile", "--seq", "/nonexistent/seq.json"]).status.code(), Some(4));
}
