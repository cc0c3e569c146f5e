//! End-to-end checks of the binary: exit codes and output determinism.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_barnatan"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn s_invariant_of_the_trefoil() {
    let out = run(&["s", "--pd", "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]", "--coeffs", "q"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim(), "s[Q] = 2");
}

#[test]
fn empty_code_homology() {
    let out = run(&["homology", "--pd", ""]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim(), "0: Z^1");
}

#[test]
fn exit_codes() {
    // domain error: s of a link
    let out = run(&["s", "--knot", "hopf_positive"]);
    assert_eq!(out.status.code(), Some(1));
    // usage error: unknown bundled name
    let out = run(&["s", "--knot", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    // usage error: no input
    let out = run(&["homology"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    for args in [
        ["homology", "--knot", "trefoil_right", "--coeffs", "z"],
        ["export", "--knot", "hopf_positive", "--what", "complex"],
        ["canonical", "--knot", "hopf_positive", "--out", "/dev/stdout"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn verify_suite_reports() {
    let out = run(&["verify", "--suite", "frame-assignments", "--n", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS"));
    assert!(text.contains("faces"));
    let out = run(&["verify", "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diagram_move_script() {
    let dir = std::env::temp_dir().join("barnatan-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let script = dir.join("moves.txt");
    std::fs::write(&script, "r1+ e1\nr1rev c3\n").unwrap();
    let out = run(&[
        "moves",
        "--knot",
        "trefoil_right",
        "--script",
        script.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("chain map verified: true"));
}
