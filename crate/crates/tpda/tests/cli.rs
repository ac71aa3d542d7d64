use std::process::{Command, Output};

use tpda::report::VerdictKind;
use tpda::Report;

fn model(name: &str) -> String {
    format!("{}/../../models/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn tpda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpda"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn prose_pda_reaches_s4() {
    let o = tpda(&["check", &model("prose_pda.pda"), "--target", "s4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("s4: reachable"));
    let o = tpda(&["check", &model("prose_pda.pda"), "--target", "s6", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r = Report::from_json(&stdout(&o)).unwrap();
    assert_eq!(r.verdict, Some(VerdictKind::Unreachable));
}

#[test]
fn blocked_model_is_unreachable() {
    let o = tpda(&["check", &model("blocked.tpda"), "--target", "s4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("s4: unreachable"), "{}", stdout(&o));
}

#[test]
fn literal_blocked_model_is_reachable() {
    let o = tpda(&[
        "check",
        &model("blocked_literal.tpda"),
        "--target",
        "s4",
        "--witness",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("s4: reachable"));
    assert!(out.contains("witness ("));
}

#[test]
fn simulate_json_lists_states() {
    let o = tpda(&[
        "simulate",
        &model("blocked.tpda"),
        "--max-steps",
        "6",
        "--denominator",
        "2",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = Report::from_json(&stdout(&o)).unwrap();
    let states = r.oracle.unwrap().states;
    assert!(states.contains(&"s3".to_string()));
    assert!(!states.contains(&"s4".to_string()));
    assert!(r.verdict.is_none());
}

#[test]
fn json_and_text_verdicts_agree() {
    for (file, target) in [
        ("one_push.tpda", "s3"),
        ("blocked.tpda", "s3"),
        ("blocked.tpda", "s4"),
    ] {
        let text = stdout(&tpda(&["check", &model(file), "--target", target]));
        let json = Report::from_json(&stdout(&tpda(&[
            "check",
            &model(file),
            "--target",
            target,
            "--json",
        ])))
        .unwrap();
        let v = json.verdict.unwrap().to_string();
        assert!(text.starts_with(&format!("{target}: {v}")), "{file} {target}");
    }
}

#[test]
fn translate_stats_counts() {
    let o = tpda(&[
        "translate-stats",
        &model("one_push.tpda"),
        "--target",
        "s3",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = Report::from_json(&stdout(&o)).unwrap();
    assert!(r.stats.regions > 0);
    assert!(r.stats.mid_states.is_some_and(|n| n > 0));
}

#[test]
fn regions_trace() {
    let o = tpda(&[
        "regions",
        "--items",
        "{} < {x6:3, x7:0}",
        "--rotate",
        "1",
        "--cmax",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0: {} < {x6:3, x7:0}\n1: {x6:4, x7:1}\n");
    let o = tpda(&[
        "regions",
        "--items",
        "{R:0, x:2}",
        "--rotate",
        "2",
        "--pin-ref",
        "--cmax",
        "7",
    ]);
    assert_eq!(stdout(&o), "0: {R:0, x:2}\n1: {R:0} < {x:2}\n2: {R:0, x:3}\n");
}

#[test]
fn bad_input_exits_with_2() {
    let dir = std::env::temp_dir().join(format!("tpda-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.tpda");
    std::fs::write(&bad, "tpda\nstates s1;\ninit s9;\n").unwrap();
    let o = tpda(&["check", bad.to_str().unwrap(), "--target", "s1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3, column 6"), "{err}");
    assert_eq!(
        tpda(&["check", &model("blocked.tpda"), "--target", "nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        tpda(&["check", "/no/such/file", "--target", "s1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        tpda(&["check", &model("blocked.tpda"), "--frobnicate"])
            .status
            .code(),
        Some(2)
    );
    std::fs::remove_dir_all(&dir).unwrap();
}
