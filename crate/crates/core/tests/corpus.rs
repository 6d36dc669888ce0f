mod common;

use ariel_core::harness::{cmd_check, cmd_run, RunOptions};
use ariel_core::trace::render;

#[test]
fn corpus_assertions_hold() {
    let dir = tempfile::tempdir().unwrap();
    let scenarios = common::corpus_scenarios();
    assert!(scenarios.len() >= 7);
    for (scn, checks) in scenarios {
        let trace = dir
            .path()
            .join(scn.file_name().unwrap())
            .with_extension("trace");
        let opts = RunOptions {
            trace: Some(trace.clone()),
            ..Default::default()
        };
        let out = cmd_run(&scn, &opts).unwrap();
        assert!(out.fault.is_none(), "{}", scn.display());
        let report = cmd_check(&trace, &checks).unwrap();
        assert!(report.passed(), "{}:\n{report}", scn.display());
    }
}

#[test]
fn other_seeds_still_satisfy_assertions() {
    let dir = tempfile::tempdir().unwrap();
    for (scn, checks) in common::corpus_scenarios() {
        for seed in [1, 7, 42] {
            let trace = dir.path().join("t.trace");
            let opts = RunOptions {
                seed,
                trace: Some(trace.clone()),
                ..Default::default()
            };
            cmd_run(&scn, &opts).unwrap();
            let report = cmd_check(&trace, &checks).unwrap();
            assert!(report.passed(), "{} seed {seed}:\n{report}", scn.display());
        }
    }
}

#[test]
fn same_seed_same_trace() {
    for (scn, _) in common::corpus_scenarios() {
        let opts = RunOptions {
            seed: 3,
            ..Default::default()
        };
        let a = render(&cmd_run(&scn, &opts).unwrap().trace);
        let b = render(&cmd_run(&scn, &opts).unwrap().trace);
        assert_eq!(a, b, "{}", scn.display());
    }
}

#[test]
fn seed_changes_timing() {
    let scn = common::corpus_dir().join("task10/task10.scn");
    let run = |seed| {
        let opts = RunOptions {
            seed,
            ..Default::default()
        };
        render(&cmd_run(&scn, &opts).unwrap().trace)
    };
    assert_ne!(run(1), run(2));
}
