mod common;

use common::{differing, run_in, run_pipeline, snapshot};

#[test]
fn every_subcommand_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_pipeline(a.path()), Vec::<String>::new());
    assert_eq!(run_pipeline(b.path()), Vec::<String>::new());
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert!(sa.len() >= 15, "expected outputs, got {:?}", sa.keys().collect::<Vec<_>>());
    assert_eq!(differing(&sa, &sb), Vec::<std::path::PathBuf>::new());
}

#[test]
fn usage_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["no-such-command"][..],
        &["stream", "--no-such-flag"],
        &["delay-report", "--set", "no_such_key=1"],
        &["delay-report", "--set", "missing-equals"],
        &["delay-report", "--set", "encoder_lookahead=many"],
        &["train", "--set", "vocab_size=3"],
    ] {
        assert_eq!(run_in(d.path(), args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(run_in(d.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("delay.cfg"), "encoder_lookahead = 1\nlookahead = 2\nout = from_file.txt\n").unwrap();
    let out = run_in(d.path(), &["delay-report", "--config", "delay.cfg", "--lookahead", "0"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(d.path().join("from_file.txt")).unwrap();
    assert!(text.contains("encoder_tokens=3"), "{text}");
    assert!(text.contains("pnp_lookahead_words=0"), "{text}");
}

#[test]
fn defaults_report_six_tokens_and_two_frames() {
    let d = tempfile::tempdir().unwrap();
    let out = run_in(d.path(), &["delay-report"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("6 PnP tokens plus 2 frames"));
}

#[test]
fn equivalence_exit_status_follows_the_check() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_in(d.path(), &["check-equivalence", "--sentences", "4"]).status.code(), Some(0));
    // Gating on L = 0 while the mask sees everything must be caught.
    let bad = run_in(d.path(), &["check-equivalence", "--sentences", "4", "--lookahead", "inf", "--gate", "0"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn missing_inputs_are_runtime_failures() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_in(d.path(), &["train", "--data", "absent"]).status.code(), Some(1));
}
