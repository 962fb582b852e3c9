use std::path::Path;
use std::process::{Command, Output};

fn swarmctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarmctl")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = swarmctl(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn quick_config(dir: &Path) -> String {
    let path = dir.join("quick.toml");
    std::fs::write(&path, "[train]\nepochs = 2\n\n[curriculum]\nduration = 4.0\n\n[harness]\nrepetitions = 1\nswaps = 1\n").unwrap();
    path.display().to_string()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn help_lists_every_subcommand() {
    let text = ok(&["--help"]);
    for sub in ["collect", "train", "fly", "table", "heatmap", "trace"] {
        assert!(text.contains(sub), "{sub}");
    }
}

#[test]
fn collect_train_and_use_a_model() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    let data = tmp.path().join("data");
    let model_dir = tmp.path().join("model");
    ok(&["collect", "--config", &cfg, "--seed", "3", "--stage", "2", "--out", data.to_str().unwrap()]);
    assert!(read(&data, "dataset.csv").starts_with("scenario,vehicle,t,"));
    assert!(read(&data, "manifest.txt").contains("seed"));
    let dataset = data.join("dataset.csv");
    ok(&["train", "--config", &cfg, "--seed", "3", "--data", dataset.to_str().unwrap(), "--out", model_dir.to_str().unwrap()]);
    assert_eq!(read(&model_dir, "loss.csv").lines().count(), 3);
    let model = model_dir.join("model.txt");
    let model = model.to_str().unwrap();

    let heat = tmp.path().join("heat");
    ok(&["heatmap", "--model", model, "--scene", "moving", "--out", heat.to_str().unwrap()]);
    assert!(read(&heat, "heatmap.csv").starts_with("y,z,model,oracle,difference\n"));

    let trace = tmp.path().join("trace");
    let text = ok(&["trace", "--config", &cfg, "--model", model, "--vehicles", "2", "--out", trace.to_str().unwrap()]);
    assert!(text.contains("rmse"));
    assert_eq!(read(&trace, "trace_stats.csv").lines().count(), 3);

    let table = tmp.path().join("table");
    let (m2, m3, m4) = (format!("2={model}"), format!("3={model}"), format!("4={model}"));
    ok(&["table", "--config", &cfg, "--model", &m2, "--model", &m3, "--model", &m4, "--out", table.to_str().unwrap()]);
    let csv = read(&table, "table.csv");
    assert_eq!(csv.lines().next(), Some("controller,swap_2,swap_3,swap_4,swap_5"));
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.contains("N.A."));

    let next = tmp.path().join("stage3");
    ok(&["collect", "--config", &cfg, "--stage", "3", "--model", model, "--out", next.to_str().unwrap()]);
}

#[test]
fn later_stages_need_a_model() {
    let tmp = tempfile::tempdir().unwrap();
    let out = swarmctl(&["collect", "--stage", "3", "--out", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn repeated_flights_write_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&["fly", "--seed", "5", "--vehicles", "3", "--duration", "5", "--out", dir.to_str().unwrap()]);
    }
    for name in ["trajectory.csv", "summary.csv", "error_ball.csv"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
    assert_eq!(read(&a, "summary.csv").lines().count(), 4);
}

#[test]
fn oracle_feedforward_and_random_walk_flights() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("walk");
    ok(&["fly", "--kind", "random-walk", "--vehicles", "2", "--duration", "3", "--oracle", "--out", out.to_str().unwrap()]);
    let conflict = swarmctl(&["fly", "--oracle", "--model", "m.txt", "--out", out.to_str().unwrap()]);
    assert!(!conflict.status.success());
}

#[test]
fn divergence_gives_a_distinct_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("wild.toml");
    std::fs::write(&cfg, "[sim]\nprocess_noise = 1000.0\n").unwrap();
    let out = swarmctl(&[
        "fly",
        "--config",
        cfg.to_str().unwrap(),
        "--duration",
        "2",
        "--out",
        tmp.path().join("f").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_inputs_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().to_str().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[sim]\ndt = -1.0\n").unwrap();
    let out = swarmctl(&["fly", "--config", cfg.to_str().unwrap(), "--out", out_dir]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sim.dt"));
    assert!(!swarmctl(&["table", "--model", "5=x.txt", "--out", out_dir]).status.success());
    assert!(!swarmctl(&["table", "--model", "2=x.txt", "--out", out_dir]).status.success());
    assert!(!swarmctl(&["heatmap", "--model", "missing.txt", "--out", out_dir]).status.success());
}
