mod common;

use common::reduced;
use nes_core::{run_experiment, ExperimentKind};

#[test]
fn every_experiment_reruns_bitwise() {
    for kind in ExperimentKind::ALL {
        let cfg = reduced(kind, 11);
        let a = run_experiment(&cfg, None).unwrap();
        let b = run_experiment(&cfg, None).unwrap();
        assert_eq!(a.results_json(), b.results_json(), "{}", kind.name());
        assert_eq!(a.table, b.table, "{}", kind.name());
        assert_eq!(a.plot, b.plot, "{}", kind.name());
    }
}

#[test]
fn written_reports_are_identical_apart_from_timing() {
    let cfg = reduced(ExperimentKind::Heat, 3);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run_experiment(&cfg, Some(d.path())).unwrap();
    }
    for file in ["results.json", "errors.csv", "plot.csv"] {
        let a = std::fs::read(dirs[0].path().join(file)).unwrap();
        let b = std::fs::read(dirs[1].path().join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    assert!(dirs[0].path().join("timing.json").exists());
}

#[test]
fn seeds_change_stochastic_results() {
    let a = run_experiment(&reduced(ExperimentKind::Heat, 1), None).unwrap();
    let b = run_experiment(&reduced(ExperimentKind::Heat, 2), None).unwrap();
    assert_ne!(a.metrics, b.metrics);
}
