use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tmsolve"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(cmd: &mut Command, dir: &Path) -> Output {
    cmd.current_dir(dir).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn without_timings(mut v: serde_json::Value) -> serde_json::Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

#[test]
fn sample_configs_are_certified() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["mountain_pass", "sign_changing", "linking"] {
        let out_dir = dir.path().join(name);
        let out = run(
            bin().args(["run", "--config"]).arg(config(&format!("{name}.json"))).arg("--out").arg(&out_dir),
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let report = json(&out);
        assert_eq!(report["outcome"], "certified");
        assert!(report["solution"]["level"].as_f64().unwrap() > 0.0);
        for file in ["report.json", "eigenvalues.csv", "ridge.csv", "solution.txt"] {
            assert!(out_dir.join(file).is_file(), "{name}: {file}");
        }
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let go = |threads: &str| {
        let out = run(
            bin().env("TMSOLVE_THREADS", threads).args(["run", "--level", "0", "--config"]).arg(config("mountain_pass.json")),
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0));
        without_timings(json(&out))
    };
    assert_eq!(go("1"), go("3"));
}

#[test]
fn mesh_from_flags_round_trips_through_eigs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().args(["mesh", "--shape", "disk", "--radius", "1", "--h", "0.25", "--out", "m.txt"]), dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["inradius"], 1.0);
    let out = run(
        bin().args(["eigs", "--mesh", "m.txt", "--gamma", "0.5", "--count", "2", "--levels", "3", "--out", "eigs.json"]),
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("eigs.json")).unwrap()).unwrap();
    assert_eq!(report["levels"].as_array().unwrap().len(), 3);
    let rate = report["rates"][0].as_f64().unwrap();
    assert!((rate - 2.0).abs() < 0.3, "{rate}");
}

#[test]
fn check_from_flags_reports_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["check", "--theorem", "1.1", "--family", "rational", "--alpha", "12.566370614359172", "--sigma1", "4"];
    let out = run(bin().args(base).args(["--beta0", "1"]), dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "satisfied");
    let out = run(bin().args(base).args(["--beta0", "0.05"]), dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = run(bin().args(["check", "--theorem", "1.3", "--family", "rational", "--beta0", "1", "--alpha", "12.566370614359172"]), dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn moser_prints_closed_forms_and_probe() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().args(["moser", "--j", "4", "--gamma", "0.5", "--d", "1", "--probe", "2:64"]), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# integral_first ") && text.contains("# integral_second "));
    assert!(text.contains("# radial_grad_norm 1e0"));
    assert!(text.contains("# critical true"));
    let csv: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(csv[0], "j,inner,annulus,s");
    assert_eq!(csv.len(), 1 + 6);
}

#[test]
fn solve_then_energy_of_the_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("mountain_pass.json");
    let out = run(bin().args(["solve-mp", "--level", "0", "--out", "mp", "--config"]).arg(&cfg), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let level = json(&out)["result"]["level"].as_f64().unwrap();
    let out = run(bin().args(["energy", "--level", "0", "--field", "mp/solution.txt", "--config"]).arg(&cfg), dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["total"].as_f64().unwrap() - level).abs() < 1e-12);
}

#[test]
fn ridge_and_table_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("mountain_pass.json");
    let out = run(bin().args(["ridge", "--j", "2:8", "--out", "ridge", "--config"]).arg(&cfg), dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["j0"], 2);
    assert!(dir.path().join("ridge/ridge_j8.csv").is_file());
    let out = run(bin().args(["table", "--levels", "2", "--no-solve", "--out", "table.csv", "--config"]).arg(&cfg), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn invalid_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("mountain_pass.json")).unwrap().replace("\"gamma\": 0.0", "\"gamma\": 2.0");
    assert!(text.contains("\"gamma\": 2.0"));
    std::fs::write(dir.path().join("bad.json"), text).unwrap();
    let out = run(bin().args(["run", "--config", "bad.json"]), dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}
