use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn accelctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_accelctl")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

/// Data rows of a CSV artifact, without header and metadata trailer.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn aux_cost_example() {
    let out = accelctl(&["aux-cost", "--x", "-1", "--v", "1", "--w", "0", "--q", "2", "--theta", "1,2.5,4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("theta,w,region,I\n"));
    let r = rows(&text);
    let i: Vec<f64> = r.iter().map(|row| row[3].parse().unwrap()).collect();
    assert!((i[0] - 0.5).abs() < 1e-12);
    assert!((i[1] - 0.224).abs() < 1e-12);
    assert!((i[2] - 2.0 / 9.0).abs() < 1e-12);
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("# ") && last.len() > 64);
}

#[test]
fn aux_cost_saturated_boundary() {
    let out = accelctl(&["aux-cost", "--x", "-1", "--v", "1", "--w", "0", "--q", "2", "--theta", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&stdout(&out));
    assert_eq!(r[0][2], "saturated");
    assert!((r[0][3].parse::<f64>().unwrap() - 2.0 / 9.0).abs() < 1e-12);
}

#[test]
fn aux_cost_rejects_w_equal_v() {
    let out = accelctl(&["aux-cost", "--x", "-1", "--v", "1", "--w", "1.0", "--q", "2", "--theta", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(accelctl(&["aux-cost", "--x", "-1"]).status.code(), Some(2));
    assert_eq!(accelctl(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(accelctl(&["value-phi", "--x", "0.5", "--v", "1", "--q", "2", "--horizon", "1"]).status.code(), Some(2));
}

#[test]
fn value_points() {
    let out = accelctl(&["value-tilde-phi", "--x", "0", "--v", "4", "--q", "2", "--horizon", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&stdout(&out));
    assert!((r[0][3].parse::<f64>().unwrap() - 128.0 / 9.0).abs() < 1e-10);
    let out = accelctl(&["value-tilde-phi", "--x", "1", "--v", "0.5", "--q", "2", "--horizon", "1"]);
    assert_eq!(rows(&stdout(&out))[0][3], "inf");
    let out = accelctl(&["value-phi", "--x", "-2", "--v", "1", "--q", "2", "--horizon", "1"]);
    assert_eq!(rows(&stdout(&out))[0][3], "0.0");
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"q":2,"v":1,"w":0,"base":4,"i_max":8,"extra":1}"#);
    let out = accelctl(&["--config", &cfg, "asymptotics"]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = write_config(dir.path(), "broken.json", "{");
    assert_eq!(accelctl(&["--config", &cfg, "asymptotics"]).status.code(), Some(2));
}

#[test]
fn asymptotic_ratios_approach_one() {
    let out = accelctl(&["asymptotics"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("i,x,v,quantity,leading,ratio\n"));
    let ratios: Vec<f64> = rows(&text).iter().map(|r| r[5].parse().unwrap()).collect();
    assert_eq!(ratios.len(), 8);
    for w in ratios[3..].windows(2) {
        assert!((w[1] - 1.0).abs() <= (w[0] - 1.0).abs() + 1e-12, "{ratios:?}");
    }
    assert!((ratios[5] - 1.0).abs() <= 0.05);
}

#[test]
fn value_grid_tags_follow_partition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid.json",
        r#"{"q":2,"T":1,"t":0,"x":{"min":-1,"max":1,"n":21},"v":{"min":-3,"max":3,"n":13}}"#,
    );
    let out = accelctl(&["--config", &cfg, "value-grid"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (cx, cv, cb, cval) = (col("x"), col("v"), col("branch"), col("value"));
    let r = rows(&text);
    assert_eq!(r.len(), 21 * 13);
    for row in &r {
        let x: f64 = row[cx].parse().unwrap();
        let v: f64 = row[cv].parse().unwrap();
        if (x == 1.0 && v > 0.0) || (x == -1.0 && v < 0.0) {
            assert_eq!(row[cval], "inf");
        } else if v == 0.0 {
            assert_eq!(row[cb], "zero");
        }
    }
    // Tags are symmetric under (x, v) -> (-x, -v) up to the pos/neg prefix.
    let tag = |x: f64, v: f64| {
        r.iter()
            .find(|row| row[cx].parse::<f64>().unwrap() == x && row[cv].parse::<f64>().unwrap() == v)
            .map(|row| row[cb].trim_start_matches("pos_").trim_start_matches("neg_").to_string())
            .unwrap()
    };
    assert_eq!(tag(0.5, 2.0), tag(-0.5, -2.0));
}

#[test]
fn oracle_compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "oracle.json",
        r#"{"cases":[{"kind":"aux","q":2,"x":-1,"v":1,"w":0,"theta":4},{"kind":"tilde","q":2,"x":0,"v":0.1,"tau":1}],"N":1000}"#,
    );
    let ok = accelctl(&["--config", &cfg, "oracle-compare", "--threshold", "1e-3"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let text = stdout(&ok);
    assert!(text.starts_with("case,closed_form,oracle,rel_err,N\n"));
    let r = rows(&text);
    assert!(r[1][3].parse::<f64>().unwrap() <= 1e-8, "{:?}", r[1]);
    let strict = accelctl(&["--config", &cfg, "oracle-compare", "--threshold", "1e-9"]);
    assert_eq!(strict.status.code(), Some(3));
    // The report is still written before the breach is signalled.
    assert_eq!(rows(&stdout(&strict)).len(), 2);
}

#[test]
fn trajectory_with_study() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "traj.json",
        r#"{"domain":{"type":"half_line"},"q":2,"T":4,"x0":[-1],"v0":[1],"N":500,"study":[250,500]}"#,
    );
    let out_dir = dir.path().join("out");
    let out = accelctl(&["--config", &cfg, "--out", out_dir.to_str().unwrap(), "trajectory"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("k,t,x,v,a\n"));
    assert_eq!(rows(&traj).len(), 501);
    let study = fs::read_to_string(out_dir.join("study.csv")).unwrap();
    assert!(study.starts_with("N,cost,violation,grad_norm\n"));
    let r = rows(&study);
    assert_eq!(r.iter().map(|x| x[0].as_str()).collect::<Vec<_>>(), ["250", "500"]);
}

#[test]
fn json_format() {
    let out = accelctl(&["--format", "json", "aux-cost", "--x", "-1", "--v", "1", "--w", "0", "--q", "2", "--theta", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rows"][0]["region"], "saturated");
    assert!(doc["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn mfg_decoupled_run_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mfg.json",
        r#"{"domain":{"type":"interval"},"q":2,"T":1,"N":100,
            "particles":[[-0.5,0.5,0.25],[0.0,1.0,0.25],[0.3,-0.5,0.25],[0.8,0.0,0.25]],
            "fp_iters":3,"target_exploitability":1e-6}"#,
    );
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = accelctl(&["--config", &cfg, "--out", out_dir.to_str().unwrap(), "mfg-run"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let a = run("a");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    assert!(summary["exploitability"].as_f64().unwrap() <= 1e-6);
    assert_eq!(summary["mass_exact"], true);
    let b = run("b");
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 3);
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
    let snap = fs::read_to_string(a.join("flow_000.csv")).unwrap();
    assert!(snap.starts_with("t,x,v,weight\n"));
    assert!(snap.lines().last().unwrap().starts_with("# "));
}

#[test]
fn mfg_run_requires_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mfg.json",
        r#"{"domain":{"type":"interval"},"q":2,"T":1,"N":50,"particles":[[0,0,1]],"fp_iters":1,"target_exploitability":0}"#,
    );
    assert_eq!(accelctl(&["--config", &cfg, "mfg-run"]).status.code(), Some(2));
}
