//! Exit-code and output smoke tests for the individual subcommands.

use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_modmethod"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("no signal"),
        String::from_utf8(out.stdout).expect("utf-8 stdout"),
        String::from_utf8(out.stderr).expect("utf-8 stderr"),
    )
}

#[test]
fn prove_writes_the_certificate_to_stdout_without_out() {
    let (code, stdout, _) = run(&["prove", "--theorem", "1"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("modmethod-certificate schema 1"));
    assert!(stdout.contains("level 45"));
}

#[test]
fn prove_reports_open_classes_on_stderr() {
    let (code, _, stderr) = run(&["prove", "--theorem", "3", "--mordell-bound", "500"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("open: class 338.3 at n = 11"), "{stderr}");
    assert!(stderr.contains("open: class 338.5 at n = 11"), "{stderr}");
}

#[test]
fn prove_rejects_unknown_theorems_and_bad_beta() {
    let (code, _, stderr) = run(&["prove", "--theorem", "9"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("no theorem numbered 9"), "{stderr}");

    let (code, _, stderr) = run(&["prove", "--theorem", "2", "--c-power", "3"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("cubefree"), "{stderr}");
}

#[test]
fn verify_flags_tampering_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.cert");
    let file = path.to_string_lossy().into_owned();
    let (code, _, _) = run(&["prove", "--theorem", "2", "--out", &file]);
    assert_eq!(code, 0);

    let text = std::fs::read_to_string(&path).unwrap();
    let forged = text.replacen("point -3 36", "point -3 35", 1);
    assert_ne!(text, forged, "the tamper target must exist");
    std::fs::write(&path, forged).unwrap();

    let (code, stdout, _) = run(&["verify", "--cert", &file]);
    assert_eq!(code, 1);
    assert!(stdout.starts_with("invalid:"), "{stdout}");
    assert!(stdout.contains("point -3 35"), "{stdout}");
}

#[test]
fn eliminate_distinguishes_closed_and_open_levels() {
    let (code, stdout, _) = run(&[
        "eliminate",
        "--level",
        "98",
        "--witnesses",
        "3",
        "--signature",
        "ppp3",
        "--n-floor",
        "11",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("all 2 classes eliminated"), "{stdout}");

    // Witness 7 alone leaves the survivor at 11 on two classes.
    let (code, stdout, _) = run(&[
        "eliminate",
        "--level",
        "338",
        "--witnesses",
        "7",
        "--signature",
        "ppp3",
        "--n-floor",
        "11",
        "--exclude",
        "13",
        "--convention",
        "never",
    ]);
    assert_eq!(code, 1, "witness 7 is unconstraining for 338.1: {stdout}");

    let (code, stdout, _) = run(&[
        "eliminate",
        "--level",
        "338",
        "--witnesses",
        "3,7",
        "--signature",
        "ppp3",
        "--n-floor",
        "11",
        "--exclude",
        "13",
    ]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("all 8 classes eliminated"), "{stdout}");
}

#[test]
fn mordell_lists_points_with_both_signs_implied() {
    let (code, stdout, _) = run(&["mordell", "--k", "-10584", "--bound", "1000"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("6 solutions"), "{stdout}");
    assert!(stdout.contains("(394, ±7820)"), "{stdout}");
}

#[test]
fn conic_point_prints_a_zero_residue() {
    let (code, stdout, _) = run(&[
        "conic", "--p", "5", "--family", "1", "--s", "2", "--t", "1",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("− z² = 0"), "{stdout}");

    let (code, _, stderr) = run(&[
        "conic", "--p", "4", "--family", "1", "--s", "2", "--t", "1",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("odd prime"), "{stderr}");
}

#[test]
fn conic_cover_is_clean_for_the_catalogue_primes() {
    for p in ["3", "-3", "5"] {
        let (code, stdout, _) = run(&["conic-cover", "--p", p, "--bound", "60"]);
        assert_eq!(code, 0, "p = {p}: {stdout}");
        assert!(stdout.contains("exactly one family"), "{stdout}");
    }
}

#[test]
fn ap_counts_points_on_the_bundled_curve() {
    let (code, stdout, _) = run(&["ap", "--curve", "1,-1,0,0,-5", "--p", "7"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), "a_7 = 0");

    let (code, _, stderr) = run(&["ap", "--curve", "1,-1,0,0", "--p", "7"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("five comma-separated"), "{stderr}");
}

#[test]
fn newforms_lists_bundled_levels() {
    let (code, stdout, _) = run(&["newforms", "--level", "338"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 8, "{stdout}");
    assert!(stdout.contains("338.1: degree 1"), "{stdout}");

    let (code, _, stderr) = run(&["newforms", "--level", "40"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("no newform data"), "{stderr}");
}
