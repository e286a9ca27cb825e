use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const Z2: &str = "[map]\nnumerator = [0, 0, 1]\n\n[run]\nalpha = 0.5\nn_max = 8\n\n[sample]\ncount = 2000\nseed = 7\n\n[separated]\nepsilon_schedule = [0.05]\n";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_julia-pressure"))
        .args(args)
        .env_remove("JULIA_PRESSURE_CACHE_DIR")
        .output()
        .unwrap()
}

fn setup(config: &str) -> (tempfile::TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    (dir, cfg, out)
}

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bin(&args)
}

fn read(out: &Path, name: &str) -> String {
    fs::read_to_string(out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn every_subcommand_succeeds() {
    let (_dir, cfg, out) = setup(Z2);
    for cmd in ["periodic-points", "pressure-pp", "pressure-sep", "bowen", "compare"] {
        let o = run(cmd, &cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(read(&out, "diagnostics.json").contains(&format!("\"command\": \"{cmd}\"")));
    }
    let pp = read(&out, "pressure_pp.csv");
    assert_eq!(pp.lines().next().unwrap(), "n,count_filtered,count_total,log_qp,value_n,fallback_used");
    let last: Vec<&str> = pp.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "8");
    assert_eq!(last[1], "255");
    let v: f64 = last[4].parse().unwrap();
    assert!((v - 255f64.ln() / 8.0).abs() < 1e-12);
    let points = read(&out, "periodic_points.csv");
    // header plus 2 + 4 + ... + 256 points
    assert_eq!(points.lines().count(), 1 + 510);
    let bowen: serde_json::Value = serde_json::from_str(&read(&out, "bowen.json")).unwrap();
    assert!((bowen["t_star"].as_f64().unwrap() - 1.0).abs() < 0.02);
    assert!(read(&out, "compare.csv").lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn reruns_are_identical_and_use_the_cache() {
    let (_dir, cfg, out) = setup(Z2);
    assert!(run("periodic-points", &cfg, &out, &[]).status.success());
    let first = read(&out, "periodic_points.csv");
    let cache = out.join("cache");
    let mut files: Vec<PathBuf> = fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 8);

    let o = run("periodic-points", &cfg, &out, &[]);
    assert!(o.status.success());
    assert!(o.stderr.is_empty(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&out, "periodic_points.csv"), first);

    // a truncated record is detected, recomputed and rewritten
    let text = fs::read_to_string(&files[7]).unwrap();
    fs::write(&files[7], &text[..text.len() / 2]).unwrap();
    let o = run("periodic-points", &cfg, &out, &[]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("recomputing"));
    assert_eq!(read(&out, "periodic_points.csv"), first);
    assert_eq!(fs::read_to_string(&files[7]).unwrap(), text);
}

#[test]
fn format_selection() {
    let (_dir, cfg, out) = setup(Z2);
    assert!(run("pressure-pp", &cfg, &out, &["--format", "json"]).status.success());
    assert!(out.join("pressure_pp.json").exists());
    assert!(!out.join("pressure_pp.csv").exists());
    assert!(out.join("diagnostics.json").exists());
}

#[test]
fn configuration_errors_exit_2() {
    let (_dir, cfg, out) = setup("[map]\nnumerator = [1 2]\n");
    let o = run("pressure-pp", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2"), "{err}");

    let (_dir, cfg, out) = setup(Z2);
    let o = run("pressure-pp", &cfg, &out, &["--alpha=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha must be positive"));
    let o = run("pressure-pp", &cfg, &out, &["--c-schedule", "0.5,1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("c_schedule must be descending"));
    assert_eq!(bin(&["pressure-pp"]).status.code(), Some(2));
    assert_eq!(bin(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_1_with_diagnostics() {
    let config = format!("{Z2}\n[bowen]\nbracket = [1.5, 2.0]\n");
    let (_dir, cfg, out) = setup(&config);
    let o = run("bowen", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let diag: serde_json::Value = serde_json::from_str(&read(&out, "diagnostics.json")).unwrap();
    assert_eq!(diag["status"], "failed");
    assert!(diag["failures"][0].as_str().unwrap().contains("same sign"));
}

#[test]
fn empty_filter_uses_fallback_with_warning() {
    let (_dir, cfg, out) = setup(Z2);
    let o = run("pressure-pp", &cfg, &out, &["--alpha", "0.8"]);
    assert_eq!(o.status.code(), Some(0));
    let diag = read(&out, "diagnostics.json");
    assert!(diag.contains("empty"), "{diag}");
    assert!(read(&out, "pressure_pp.csv").lines().skip(1).all(|l| l.ends_with(",true")));
}
