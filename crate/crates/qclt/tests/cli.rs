use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qclt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qclt"))
        .args(args)
        .env_remove("QCLT_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let at = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[at].to_string()).collect()
}

#[test]
fn count_prints_binomial() {
    let o = qclt(&["count", "--M", "3", "--N", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "3\n");
    let o = qclt(&["count", "--M", "30", "--N", "30"]);
    assert_eq!(stdout(&o), "30067266499541040\n");
}

#[test]
fn lscan_exponent() {
    let o = qclt(&["lscan", "--ensemble", "all", "--xi", "1", "--grid", "64,128,256,512"]);
    assert_eq!(o.status.code(), Some(0));
    let lambda: f64 = column(&stdout(&o), "lambda_hat")[0].parse().unwrap();
    assert!((0.20..=0.30).contains(&lambda), "{lambda}");
}

#[test]
fn oracle_reports_agreement() {
    let o = qclt(&["oracle", "--M", "2", "--N", "2", "--check", "inclusion"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("enumeration == DP"));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("oracle.csv");
    let o = qclt(&["oracle", "--N", "5", "--ensemble", "hole", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("enumeration == DP"));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(column(&text, "pass"), ["true", "true", "true"]);
}

#[test]
fn exit_codes() {
    assert_eq!(qclt(&["count", "--N", "3", "--bogus"]).status.code(), Some(2));
    assert_eq!(qclt(&["count", "--N", "4", "--ensemble", "hole", "--beta", "1.5"]).status.code(), Some(2));
    assert_eq!(qclt(&["count", "--N", "4", "--ensemble", "forbidden", "--forbidden", "1:2,2:1"]).status.code(), Some(3));
    assert_eq!(qclt(&["oracle", "--M", "10", "--N", "10", "--cap", "5"]).status.code(), Some(4));
    assert_eq!(qclt(&["lpp", "--weights", "geometric", "--q", "1.5", "--N", "5"]).status.code(), Some(2));
    assert_eq!(qclt(&["lscan", "--grid", "8,16"]).status.code(), Some(2));
    assert_eq!(qclt(&["--threads", "0", "count", "--N", "3"]).status.code(), Some(2));
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn config_files_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "# counting\ncommand = count\nM = 3\nN = 2\n");
    assert_eq!(stdout(&qclt(&["--config", &cfg])), "3\n");
    assert_eq!(stdout(&qclt(&["count", "--config", &cfg, "--N", "3"])), "6\n");
    let bad = write(dir.path(), "bad.cfg", "command = count\nN = 3\nwobble = 1\n");
    let o = qclt(&["--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wobble"));
    let clt = write(
        dir.path(),
        "clt.cfg",
        "command = clt\ngrid = 8,16\nn_paths = 500\ncommon_seed = true\nformat = json\n",
    );
    let o = qclt(&["--config", &clt, "--n-paths", "300"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows[0]["n_paths"], 300);
    assert_eq!(rows[0]["common_seed"], true);
    assert_eq!(rows[1]["N"], 16);
    let mismatch = write(dir.path(), "m.cfg", "command = clt\n");
    assert_eq!(qclt(&["count", "--config", &mismatch]).status.code(), Some(2));
}

#[test]
fn replay_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = qclt(&[
            "clt", "--ensemble", "waypoints", "--dist", "exponential", "--grid", "16,32", "--n-paths", "20000",
            "--threads", threads, "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out).unwrap()
    };
    let a = run("1", "a.csv");
    assert_eq!(a, run("1", "b.csv"));
    assert_eq!(a, run("4", "c.csv"));
    let text = String::from_utf8(a).unwrap();
    for col in ["dist", "ensemble", "N", "env_seed", "path_seed", "n_paths"] {
        assert_eq!(column(&text, col).len(), 2, "{col}");
    }

    let env_threads = Command::new(env!("CARGO_BIN_EXE_qclt"))
        .args(["lpp", "--N", "30", "--n-env", "4"])
        .env("QCLT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(env_threads.stdout, qclt(&["lpp", "--N", "30", "--n-env", "4", "--threads", "3"]).stdout);
}

#[test]
fn environments_and_paths_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["env.csv", "env.bin"] {
        let env = dir.path().join(name);
        let paths = dir.path().join("paths.txt");
        let a = qclt(&[
            "sample", "--M", "5", "--N", "4", "--dist", "normal", "--env-seed", "9", "--n-paths", "6",
            "--save-env", env.to_str().unwrap(), "--save-paths", paths.to_str().unwrap(),
        ]);
        assert_eq!(a.status.code(), Some(0));
        let b = qclt(&["sample", "--M", "5", "--N", "4", "--env-file", env.to_str().unwrap(), "--n-paths", "6"]);
        assert_eq!(stdout(&a), stdout(&b));
        let steps = column(&stdout(&a), "steps");
        let saved: Vec<String> = fs::read_to_string(&paths).unwrap().lines().map(String::from).collect();
        assert_eq!(steps, saved);
    }
    let o = qclt(&["sample", "--M", "4", "--N", "4", "--env-file", dir.path().join("env.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ensemble_files_and_include() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ens.json", r#"{"M":4,"N":3,"kind":"waypoints","waypoints":[[2,2]]}"#);
    let o = qclt(&["include", "--ensemble-file", &f, "--cell", "2:2,3:1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(column(&stdout(&o), "p"), ["1", "0"]);
    let o = qclt(&["include", "--M", "3", "--N", "2", "--format", "json"]);
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 6);
    assert_eq!(rows[1]["p_exact"], "1/3");
}

#[test]
fn bound_unit_parameters() {
    let o = qclt(&[
        "bound", "--n", "1", "--m", "1", "--L", "1", "--K", "1", "--p", "3", "--R", "1", "--s", "1", "--t", "1",
        "--eta", "2", "--lambda", "0.25",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(column(&text, "epsilon"), ["4"]);
    assert_eq!(column(&text, "constants"), ["illustrative"]);
    assert_eq!(column(&text, "p_threshold"), ["12"]);
    assert_eq!(qclt(&["bound", "--n", "1", "--m", "1", "--L", "1", "--K", "1", "--p", "2", "--R", "1", "--s", "1", "--t", "1"]).status.code(), Some(2));
}
