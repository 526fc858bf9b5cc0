use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn gapstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapstab"))
        .args(args)
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gapstab-bin-{name}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exit_codes_follow_outcome() {
    assert_eq!(gapstab(&["--help"]).status.code(), Some(0));
    assert_eq!(gapstab(&["verify", "no-such-suite"]).status.code(), Some(3));
    assert_eq!(gapstab(&["code", "/no/such/file"]).status.code(), Some(3));
    let o = gapstab(&["kappa", "--group", "cyclic:4", "--weights", "1,0,0,0"]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let record: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(record["exit_code"], 3);
    let o = gapstab(&["verify", "commutation", "--trials", "5", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("[PASS]"));
}

#[test]
fn code_game_strategy_files_flow_through_commands() {
    let dir = scratch("flow");
    let code = dir.join("rep.code");
    fs::write(&code, "2 3 1\n1 1 1\n").unwrap();
    let o = gapstab(&["code", code.to_str().unwrap()]);
    assert!(stdout(&o).contains("kappa = 1/2"), "{}", stdout(&o));

    let game = dir.join("game.json");
    let strat = dir.join("honest.json");
    let run = |args: &[&str]| {
        let o = gapstab(args);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        stdout(&o)
    };
    let (g, s) = (game.to_str().unwrap(), strat.to_str().unwrap());
    run(&["build-game", "--code", code.to_str().unwrap(), "--out", g]);
    run(&["honest", g, "--out", s]);
    assert!(run(&["eval", g, s]).starts_with("value 1.000000000"));
    assert!(run(&["rigidity", g, s]).contains("[PASS]"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn manifest_runs_write_identical_csv() {
    let dir = scratch("manifest");
    let manifest = dir.join("m.json");
    fs::write(
        &manifest,
        r#"{"seed": 5, "operation": "verify", "params": {"suite": "gh", "trials": 8}, "outputs": {"csv": "gh.csv"}}"#,
    )
    .unwrap();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = gapstab(&["run", manifest.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        runs.push(fs::read_to_string(dir.join("gh.csv")).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].lines().count() > 1);
    fs::remove_dir_all(&dir).ok();
}
