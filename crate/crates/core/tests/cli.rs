use std::process::{Command, Output};

fn ismpbt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ismpbt"))
        .args(args)
        .env_remove("ISMPBT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(
        ismpbt(&[
            "run",
            "--suite",
            "atm-buggy",
            "--prop",
            "eventually-ready",
            "--seed",
            "1"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        ismpbt(&["run", "--suite", "atm-fixed", "--prop", "ready-insert"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        ismpbt(&["run", "--suite", "arq", "--tests", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ismpbt(&["run", "--suite", "atm-fixed", "--prop", "send-three-ok"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(ismpbt(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn default_seed_and_env_override() {
    let default = ismpbt(&["run", "--suite", "arq"]);
    assert!(stdout(&default).contains("(seed 20240527, bound 20)"));
    let env = Command::new(env!("CARGO_BIN_EXE_ismpbt"))
        .args(["run", "--suite", "arq"])
        .env("ISMPBT_SEED", "99")
        .output()
        .unwrap();
    assert!(stdout(&env).contains("(seed 99, bound 20)"));
    let flag = Command::new(env!("CARGO_BIN_EXE_ismpbt"))
        .args(["run", "--suite", "arq", "--seed", "98"])
        .env("ISMPBT_SEED", "99")
        .output()
        .unwrap();
    assert!(stdout(&flag).contains("(seed 98, bound 20)"));
}

#[test]
fn depth_overrides_the_bound() {
    let o = ismpbt(&["run", "--suite", "arq", "--depth", "8"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("(seed 20240527, bound 8)"));
    assert!(stdout(&o).contains("Falsifiable, after 1 tests:"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    for seed in ["3", "4", "5"] {
        let a = ismpbt(&["run", "--suite", "atm-buggy", "--seed", seed]);
        let b = ismpbt(&["run", "--suite", "atm-buggy", "--seed", seed]);
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn json_lines() {
    let o = ismpbt(&["run", "--suite", "atm-fixed", "--json"]);
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["property"], "ready-insert");
    assert_eq!(lines[0]["verdict"], "passed");
    assert_eq!(lines[0]["tests"], 100);
    assert!(lines[0].get("counterexample").is_none());
    assert!(lines[1]["elapsed_ms"].is_u64());
}

#[test]
fn oracle_output() {
    let o = ismpbt(&[
        "oracle",
        "--suite",
        "atm-fixed",
        "--prop",
        "eventually-ready",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("atm-fixed eventually-ready depth 10\n"));
    assert!(
        text.contains("counterexample 37/13824 (0.002677)"),
        "{text}"
    );
    assert_eq!(
        ismpbt(&["oracle", "--suite", "arq", "--prop", "ready-insert"])
            .status
            .code(),
        Some(2)
    );
}
