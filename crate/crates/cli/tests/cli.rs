use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const CONFIG: &str = r#"
seed = 5
stocks = [
  { ticker = "AAA", group = "small" },
  { ticker = "BBB", group = "small" },
  { ticker = "CCC", group = "medium" },
  { ticker = "DDD", group = "medium" },
]

[synth]
train_days = 5
test_days = 5
events_per_day = 1200
"#;

fn lobflow(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lobflow"));
    cmd.args(args).env("RUST_LOG", "warn");
    for key in ["LOBFLOW_CONFIG", "LOBFLOW_STAGE", "LOBFLOW_WORKERS", "LOBFLOW_SEED", "LOBFLOW_OUT", "LOBFLOW_DATA"] {
        cmd.env_remove(key);
    }
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_then_all_produces_every_artifact() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("lobflow.toml");
    fs::write(&config, CONFIG).unwrap();
    let (data, out) = (dir.path().join("data"), dir.path().join("out"));
    let common = ["--config", path(&config), "--data", path(&data), "--out", path(&out)];

    let synth = lobflow(&[&common[..], &["--stage", "synth"]].concat(), &[]);
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    assert!(data.join("manifest.json").exists());

    let all = lobflow(&[&common[..], &["--workers", "2"]].concat(), &[]);
    assert!(all.status.success(), "{}", String::from_utf8_lossy(&all.stderr));
    for file in ["models/reference.json", "signals/signals.csv", "signals/returns.csv", "roles.json", "backtest/report.json", "backtest/training_sharpe.csv"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    assert!(out.join("features/AAA").is_dir());
    assert!(!out.join("INCOMPLETE").exists());

    let roles: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("roles.json")).unwrap()).unwrap();
    let groups = roles["groups"].as_object().unwrap();
    assert!(groups.contains_key("small") && groups.contains_key("medium"));
}

#[test]
fn a_bad_config_fails_with_a_report() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "seed = 1\nwindow = 0\n").unwrap();
    let out = dir.path().join("out");
    let result = lobflow(&["--config", path(&config), "--out", path(&out)], &[]);
    assert!(!result.status.success());
    assert!(out.join("INCOMPLETE").exists());
    let report = fs::read_to_string(out.join("error.json")).unwrap();
    assert!(report.contains("window"), "{report}");

    fs::write(&config, "no_such_key = 3\n").unwrap();
    assert!(!lobflow(&["--config", path(&config), "--out", path(&out)], &[]).status.success());
}

#[test]
fn a_failed_stage_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("lobflow.toml");
    fs::write(&config, CONFIG).unwrap();
    let out = dir.path().join("out");
    let result = lobflow(
        &["--config", path(&config), "--data", path(&dir.path().join("empty")), "--out", path(&out), "--stage", "roles"],
        &[],
    );
    assert!(!result.status.success());
    assert!(out.join("INCOMPLETE").exists());
    assert!(fs::read_to_string(out.join("error.json")).unwrap().contains("roles"));
}

#[test]
fn environment_variables_stand_in_for_flags() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("lobflow.toml");
    fs::write(&config, CONFIG).unwrap();
    let data = dir.path().join("data");
    let result = lobflow(
        &[],
        &[
            ("LOBFLOW_CONFIG", &config),
            ("LOBFLOW_DATA", &data),
            ("LOBFLOW_OUT", &dir.path().join("out")),
            ("LOBFLOW_STAGE", Path::new("synth")),
            ("LOBFLOW_SEED", Path::new("9")),
        ],
    );
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let manifest = fs::read_to_string(data.join("manifest.json")).unwrap();
    assert!(manifest.contains("9000"), "seed override not applied");
}

#[test]
fn help_lists_the_stages() {
    let result = lobflow(&["--help"], &[]);
    assert!(result.status.success());
    let text = String::from_utf8_lossy(&result.stdout);
    for stage in ["synth", "features", "cluster", "signals", "roles", "backtest"] {
        assert!(text.contains(stage));
    }
}
