use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn memsched(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memsched")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn sweep_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

const TWO_SYM: &str = "[[channels]]\np01 = 0.2\np10 = 0.2\n[[channels]]\np01 = 0.2\np10 = 0.2\n";

#[test]
fn simulate_writes_summary_close_to_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = memsched(&["--horizon", "400000", "--out", "run", "simulate", "--trace"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&fs::read(dir.path().join("run/summary.json")).unwrap()).unwrap();
    for th in summary["mean_throughput"].as_array().unwrap() {
        assert!((th.as_f64().unwrap() - 0.307_692).abs() < 0.008);
    }
    let trace = fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    assert!(trace.starts_with("# memsched-csv v1\nslot,served,kind,feedback,delivered,state_1,state_2,omega_1,omega_2"));
    assert_eq!(trace.lines().count(), 400_002);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "q.toml",
        &format!(
            "mode = \"queued\"\nhorizon = 100000\nreplications = 3\nworkers = 3\n{TWO_SYM}[policy]\nkind = \"qrr\"\nlambda = [0.25, 0.25]\n[arrivals]\nlambda = [0.25, 0.25]\n"
        ),
    );
    for out_dir in ["a", "b"] {
        let out = memsched(&["--config", &cfg, "--out", out_dir, "simulate"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["summary.json", "series.csv"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn invalid_channel_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[[channels]]\np01 = 0.6\np10 = 0.5\n[policy]\nkind = \"rr\"\nactive = \"1\"\n");
    let out = memsched(&["--config", &cfg, "simulate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p01 + p10 must be < 1"));
}

#[test]
fn belief_below_floor_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "floor.toml",
        &format!("horizon = 1000\nburn_in = 10\n[initial_belief]\nkind = \"prior\"\nomega = [0.2, 0.2]\n{TWO_SYM}"),
    );
    let out = memsched(&["--config", &cfg, "simulate"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("belief floor"));
}

#[test]
fn region_sweep_matches_hand_checked_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = memsched(&["--out", "r", "region"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("23.08%"));
    let rows = sweep_rows(&dir.path().join("r/sweep.csv"));
    assert_eq!(rows.len(), 360);
    // dir_1, dir_2, inner_1, inner_2, outer_1, outer_2, gap, blind_1, blind_2
    assert!((rows[0][2] - 0.5).abs() < 1e-8 && rows[0][3] == 0.0 && (rows[0][4] - 0.5).abs() < 1e-12);
    assert!((rows[359][3] - 0.5).abs() < 1e-8);

    let dirs = write(dir.path(), "dirs.txt", "# diagonal\n1, 1\n");
    let out = memsched(&["--out", "d", "region", "--directions", &dirs], dir.path());
    assert!(out.status.success());
    let rows = sweep_rows(&dir.path().join("d/sweep.csv"));
    assert!((rows[0][2] - 0.307_692).abs() < 1e-6 && (rows[0][3] - 0.307_692).abs() < 1e-6);
    assert!((rows[0][4] - 0.357_143).abs() < 1e-6);
    assert!((rows[0][7] - 0.25).abs() < 1e-12);
}

#[test]
fn region_edge_configs() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.toml", "[[channels]]\np01 = 0.2\np10 = 0.2\n[policy]\nkind = \"rr\"\nactive = \"1\"\n");
    assert!(memsched(&["--config", &one, "--out", "one", "region"], dir.path()).status.success());
    let rows = sweep_rows(&dir.path().join("one/sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert!((rows[0][1] - 0.5).abs() < 1e-8 && (rows[0][2] - 0.5).abs() < 1e-12);

    let asym = write(dir.path(), "asym.toml", "[[channels]]\np01 = 0.1\np10 = 0.3\n[[channels]]\np01 = 0.3\np10 = 0.1\n");
    let out = memsched(&["--config", &asym, "--out", "asym", "region"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let csv = fs::read_to_string(dir.path().join("asym/sweep.csv")).unwrap();
    assert!(!csv.contains("blind"));
}

#[test]
fn convert_weights_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "beta.json", r#"{"kind": "time-fraction", "weights": {"10": 0.5, "11": 0.5}}"#);
    let out = memsched(&["--out", "c1", "convert-weights", &input], dir.path());
    assert!(out.status.success());
    let alpha: Value = serde_json::from_slice(&fs::read(dir.path().join("c1/converted.json")).unwrap()).unwrap();
    assert_eq!(alpha["kind"], "per-round-selection");
    assert!((alpha["weights"]["10"].as_f64().unwrap() - 0.722_222).abs() < 1e-6);

    let alpha_path = dir.path().join("c1/converted.json").to_string_lossy().into_owned();
    assert!(memsched(&["--out", "c2", "convert-weights", &alpha_path], dir.path()).status.success());
    let beta: Value = serde_json::from_slice(&fs::read(dir.path().join("c2/converted.json")).unwrap()).unwrap();
    for k in ["10", "11"] {
        assert!((beta["weights"][k].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }

    let bad = write(dir.path(), "bad.json", r#"{"kind": "time-fraction", "weights": {"10": 0.5, "11": 0.2}}"#);
    assert_eq!(memsched(&["convert-weights", &bad], dir.path()).status.code(), Some(2));
}

#[test]
fn verify_quick_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = memsched(&["--out", "v", "verify", "--quick"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let verdicts: Value = serde_json::from_slice(&fs::read(dir.path().join("v/verdicts.json")).unwrap()).unwrap();
    assert!(verdicts.as_array().unwrap().iter().all(|v| v["pass"] == true));
}

#[test]
fn show_defaults_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = memsched(&["config", "show-defaults"], dir.path());
    assert!(out.status.success());
    let path = write(dir.path(), "defaults.toml", &String::from_utf8(out.stdout).unwrap());
    let out = memsched(&["--config", &path, "config", "check"], dir.path());
    assert!(out.status.success());
}
