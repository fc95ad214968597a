use std::process::{Command, Output};

use serde_json::Value;

fn ramify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramify"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (Value, i32) {
    let mut all = args.to_vec();
    all.push("--json");
    let out = ramify(&all);
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    (v, out.status.code().unwrap())
}

fn s(v: &Value, key: &str) -> String {
    v[key]
        .as_str()
        .unwrap_or_else(|| panic!("{key} is not a string in {v}"))
        .to_string()
}

#[test]
fn invariants_examples() {
    let (v, code) = json(&["invariants", "--p", "2", "--poly", "u^2-2"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], Value::from(1));
    assert_eq!(s(&v, "tau"), "inf");
    assert_eq!(v["iota"], Value::Null);

    let (v, _) = json(&["invariants", "--p", "2", "--poly", "u^2+2u+2"]);
    assert_eq!(
        (s(&v, "tau"), s(&v, "iota"), s(&v, "t_pi")),
        ("1".into(), "1".into(), "3".into())
    );
    assert_eq!((s(&v, "e0"), s(&v, "e1")), ("u^2+2".into(), "2*u".into()));

    let (v, _) = json(&["invariants", "--p", "5", "--poly", "u^3+5"]);
    assert_eq!(
        (s(&v, "m"), s(&v, "tau"), s(&v, "iota")),
        ("0".into(), "1".into(), "0".into())
    );
}

#[test]
fn bound_examples() {
    let (v, code) = json(&["bound", "--p", "5", "--e", "3", "--tau", "1", "--iota", "0"]);
    assert_eq!((code, s(&v, "s")), (0, "0".into()));

    let (v, code) = json(&["bound", "--p", "2", "--poly", "u^2-2", "--search-prec", "2"]);
    assert_eq!(code, 0);
    assert_eq!(
        (s(&v, "tau"), s(&v, "iota"), s(&v, "s")),
        ("2".into(), "1".into(), "5".into())
    );
    assert_eq!(v["search"]["ceiling"], Value::from("2"));

    let (v, _) = json(&[
        "bound",
        "--p",
        "3",
        "--e",
        "4",
        "--tau",
        "1",
        "--iota",
        "0",
        "--variant",
        "modified",
    ]);
    assert_eq!(s(&v, "s"), "1");
    assert_eq!(v["tame_closed_form"]["matches"], Value::Bool(true));
}

#[test]
fn bound_without_search_on_infinite_tau_is_a_usage_error() {
    let out = ramify(&["bound", "--p", "2", "--poly", "u^2-2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--search-prec"));
}

#[test]
fn verify_examples() {
    let (v, code) = json(&["verify", "--suite", "example3", "--p", "2", "--n", "5"]);
    assert_eq!(code, 0);
    assert_eq!(v["passed"], Value::Bool(true));

    let (v, code) = json(&[
        "verify", "--suite", "prop2", "--p", "2", "--poly", "u^2-2", "--n", "2",
    ]);
    assert_eq!((code, s(&v, "t_star")), (0, "4".into()));
    assert_eq!(v["witnesses"][0]["c"], Value::from("u+2"));

    let (v, code) = json(&[
        "verify", "--suite", "lemma1", "--p", "2", "--n", "2", "--seeds", "200",
    ]);
    assert_eq!(
        (code, s(&v, "modules"), s(&v, "violations")),
        (0, "200".into(), "0".into())
    );
}

#[test]
fn every_suite_runs() {
    for suite in ["prop2", "lemma4", "cor5", "lemma2", "heights"] {
        let (v, code) = json(&[
            "verify", "--suite", suite, "--p", "2", "--e", "4", "--n", "2", "--seeds", "10",
        ]);
        assert_eq!(code, 0, "{suite}: {v}");
        assert_eq!(s(&v, "suite"), suite);
    }
}

#[test]
fn budget_exceeded_exits_3() {
    let (v, code) = json(&[
        "verify", "--suite", "prop2", "--p", "3", "--e", "9", "--n", "3", "--budget", "1000",
    ]);
    assert_eq!(code, 3);
    assert!(s(&v, "error").contains("budget"));
}

#[test]
fn parse_errors_exit_2_with_column() {
    let out = ramify(&["invariants", "--p", "2", "--poly", "u^2+x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("column 5"));
    let out = ramify(&["invariants", "--p", "2", "--poly", "u^2+3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ramify(&["nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn heights_examples() {
    let (v, _) = json(&["heights", "--s", "0", "--r", "4"]);
    assert_eq!(
        (s(&v, "h3_bound"), s(&v, "height_bound")),
        ("4".into(), "8".into())
    );
    let (v, _) = json(&["heights", "--s", "5", "--r", "2"]);
    assert_eq!(
        (s(&v, "h3_bound"), s(&v, "height_bound")),
        ("22".into(), "44".into())
    );
}

#[test]
fn module_files_round_trip_through_heights() {
    let dir = std::env::temp_dir().join(format!("ramify-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for (n, d, h, h4) in [(1, 2, 2, Some(0)), (1, 1, 3, Some(2)), (2, 1, 2, None)] {
        let out = ramify(&[
            "module",
            "--p",
            "2",
            "--poly",
            "u^2+2",
            "--n",
            &n.to_string(),
            "--d",
            &d.to_string(),
            "--h",
            &h.to_string(),
            "--seed",
            "5",
        ]);
        assert!(out.status.success());
        let path = dir.join(format!("m{n}{d}{h}.json"));
        std::fs::write(&path, &out.stdout).unwrap();
        let (v, code) = json(&["heights", "--module-file", path.to_str().unwrap()]);
        match h4 {
            Some(h4) => {
                assert_eq!(code, 0);
                assert_eq!(v["module"]["h4"], Value::from(h4.to_string()));
            }
            None => assert_eq!(code, 2),
        }
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn text_output_is_plain() {
    let out = ramify(&["bound", "--p", "3", "--e", "4", "--tau", "1", "--iota", "0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "s: 1"));
    assert!(!text.contains('{'));
}
