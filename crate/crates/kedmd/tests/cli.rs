//! End-to-end checks of the command-line surface: subcommands, flags, output
//! files, determinism across reruns, and the failure record.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kedmd"))
}

#[test]
fn counterexample_runs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "semigroup-counterexample",
                "--seed",
                "9",
                "--out",
                out.to_str().unwrap(),
                "--format",
                "csv",
                "--threads",
                "1",
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read_to_string(out_a.join("semigroup_counterexample.csv")).unwrap();
    let b = std::fs::read_to_string(out_b.join("semigroup_counterexample.csv")).unwrap();
    assert_eq!(a, b);
    assert!(a.contains("# seed = 9"));
    assert!(a.contains("t,norm,growth_vs_t0"));
}

#[test]
fn config_file_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(
        &config_path,
        "[run]\nseed = 5\n\n[counterexample]\nt_max = 1.0\nt_step = 0.5\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args([
            "semigroup-counterexample",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--format",
            "json",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("semigroup_counterexample.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["provenance"]["seed"], 5);
    assert_eq!(parsed["rows"].as_array().unwrap().len(), 3);
    // The config diff records the overridden keys.
    let diff = parsed["provenance"]["config_diff"].as_array().unwrap();
    assert!(diff.iter().any(|d| d.as_str().unwrap().contains("t_max")));
}

#[test]
fn failure_emits_machine_readable_record() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.toml");
    std::fs::write(&config_path, "[counterexample]\nt_max = -3.0\nt_step = -1.0\n").unwrap();
    let output = bin()
        .args([
            "semigroup-counterexample",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    // Unknown-key and invalid-value paths both exit nonzero with a JSON error
    // record on stderr.
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().last().unwrap();
    let record: serde_json::Value = serde_json::from_str(line).unwrap();
    assert!(record["error"].is_string());
    assert_eq!(record["experiment"], "semigroup-counterexample");
}

#[test]
fn all_subcommands_are_exposed() {
    let output = bin().arg("--help").output().unwrap();
    let help = String::from_utf8_lossy(&output.stdout);
    for name in [
        "ou-bound",
        "ou-analytic",
        "duffing-train",
        "duffing-validate",
        "duffing-longhorizon",
        "semigroup-counterexample",
    ] {
        assert!(help.contains(name), "missing subcommand {name}");
    }
}
