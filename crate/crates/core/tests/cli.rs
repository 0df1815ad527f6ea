use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_line-actions")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["check"] == name).unwrap_or_else(|| panic!("no {name}"))
}

#[test]
fn verify_bs12_affine_passes_with_phi() {
    let out = run(&["verify", data("bs12.json").to_str().unwrap(), "--suite", "affine"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["verdict"], "pass");
    let phi = &check(&r, "affine.phi")["details"];
    assert_eq!(phi["a"]["a"], "1");
    assert_eq!(phi["a"]["b"], "1");
    assert_eq!(phi["b"]["a"], "2");
    assert_eq!(phi["b"]["b"], "0");
    assert_eq!(r["config"]["words_max_len"], 6);
    assert_eq!(r["spec_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn two_fixed_points_exit_one_with_short_witness() {
    let out = run(&["verify", data("twofixed.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r = json_of(&out);
    let w = &check(&r, "holder.hypothesis")["witnesses"][0];
    assert_eq!(w["word_len"], 1);
    assert_eq!(w["word"], "f");
}

#[test]
fn malformed_spec_exits_two_with_position() {
    let out = run(&["verify", data("malformed.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("column"), "{err}");
}

#[test]
fn bad_flags_exit_two() {
    assert_eq!(run(&["verify", data("bs12.json").to_str().unwrap(), "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["verify", data("bs12.json").to_str().unwrap(), "--grid", "0"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "/no/such/file.json"]).status.code(), Some(2));
}

#[test]
fn blowup_c2_suite_inventories_wandering_gaps() {
    let out = run(&["verify", data("blowup.json").to_str().unwrap(), "--suite", "c2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json_of(&out);
    assert!(r["labels"].as_array().unwrap().iter().any(|l| l.as_str().unwrap().contains("blow-up")));
    let gaps = check(&r, "c2.wandering")["details"]["gaps"].as_array().unwrap();
    assert!(!gaps.is_empty());
    assert!(gaps.iter().all(|g| g["certificate"]["verdict"] == "wandering"));
    assert_eq!(check(&r, "c2.contrast")["verdict"], "pass");
}

fn strip_timing(out: &Output) -> Value {
    let mut v = json_of(out);
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let path = data("bs12.json");
    let args = ["verify", path.to_str().unwrap(), "--suite", "affine", "--seed", "7"];
    let a = run(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_line-actions"))
        .args(args)
        .env("LINE_ACTIONS_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(strip_timing(&a), strip_timing(&b));
}

#[test]
fn witnesses_replay() {
    let r = json_of(&run(&["verify", data("twofixed.json").to_str().unwrap(), "--suite", "holder"]));
    let w = &check(&r, "holder.hypothesis")["witnesses"][0];
    let spec = line_actions::ActionSpec::from_json(&std::fs::read_to_string(data("twofixed.json")).unwrap()).unwrap();
    let action = line_actions::Action::from_spec(&spec).unwrap();
    let i = action.names.iter().position(|n| *n == w["word"]).unwrap();
    let (pts, _) = action.generators[i].as_pl().unwrap().fixed_points();
    let shown: Vec<String> = pts.iter().map(line_actions::rational::format_q).collect();
    assert_eq!(serde_json::to_value(shown).unwrap(), w["fixed_points"]);
}

#[test]
fn analyze_single_translation() {
    let r = json_of(&run(&["analyze", data("translation.json").to_str().unwrap()]));
    let inf = &check(&r, "analyze.infinitesimals")["details"];
    assert_eq!(inf["members"].as_array().unwrap().len(), inf["elements_considered"].as_u64().unwrap() as usize);
    assert_eq!(check(&r, "analyze.generators")["details"]["generators"]["t"]["tau"], "3/2");
    assert_eq!(check(&r, "analyze.order")["verdict"], "pass");
}

#[test]
fn analyze_blowup_theta_csv_has_plateaus() {
    let dir = tempfile::tempdir().unwrap();
    let theta = dir.path().join("theta.csv");
    let out = run(&[
        "analyze",
        data("blowup.json").to_str().unwrap(),
        "--theta",
        theta.to_str().unwrap(),
        "--words-max-len",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(theta).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# line-actions theta v1"));
    assert_eq!(lines.next(), Some("x,theta"));
    let ys: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(ys.windows(2).all(|w| w[1] >= w[0]));
    assert!(ys.windows(2).any(|w| w[1] == w[0]), "no plateau");
}

#[test]
fn rotation_of_one_third_is_exact() {
    let r = json_of(&run(&["rotation", "--alpha", "1/3", "--N", "100"]));
    assert_eq!(r["rotation"]["exact"], "1/3");
    let out = run(&["rotation", "--alpha", "golden", "--denjoy", "4", "--N", "20", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# line-actions orbit v1\nk,x_mod_1\n"));
    assert_eq!(text.lines().count(), 22);
}

#[test]
fn distortion_margins_nonnegative() {
    let out = run(&["distortion", "--c", "0.3", "--eps", "0.1", "--j-lo", "0", "--j-hi", "1/10", "--n-max", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert!(r["reports"].as_array().unwrap().iter().all(|x| x["margin"].as_f64().unwrap() >= 0.0));
}

#[test]
fn blowup_writes_spec_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("b.json");
    let out = run(&["blowup", "--x", "1/23", "--depth", "3", "--out", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("b.provenance.json").exists());
    let again = run(&["verify", spec.to_str().unwrap(), "--suite", "c2", "--grid", "512"]);
    assert_eq!(again.status.code(), Some(0), "{}", String::from_utf8_lossy(&again.stdout));
}

#[test]
fn blowup_at_point_with_stabilizer_is_refused() {
    let out = run(&["blowup", "--base", "bs12", "--x", "1/3", "--beta", "1/2", "--l0", "1/10", "--depth", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("a^-1 b^2"));
}

#[test]
fn csv_reports_carry_versioned_header() {
    let out = run(&["verify", data("bs12.json").to_str().unwrap(), "--suite", "affine", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# line-actions checks v1\ncheck,verdict,witnesses\n"));
}
