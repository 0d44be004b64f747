use std::fs;
use std::path::Path;

use kzlab::matrix::fmt_f64;
use kzlab::metrics::{Aggregation, IterationTrace};
use kzlab::par::Execution;
use kzlab::runner::{
    emit_artifacts, run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport, SeriesData,
    CLUSTER_VARIANTS,
};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(kind);
    cfg.trials = 3;
    match kind {
        ExperimentKind::Coreset | ExperimentKind::ClusterVariants => {
            cfg.m = 200;
            cfg.n = 8;
        }
        _ => {
            cfg.m = 60;
            cfg.n = 6;
        }
    }
    cfg.solver.max_iterations = 300;
    cfg.solver.trace_stride = 50;
    cfg
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn pairwise_defaults_cover_three_schemes_and_three_metrics() {
    let cfg = ExperimentConfig::defaults(ExperimentKind::Pairwise);
    assert_eq!((cfg.m, cfg.n, cfg.trials), (240, 12, 100));
    let mut cfg = cfg;
    cfg.trials = 2;
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.series.len(), 3);
    for s in &report.series {
        let SeriesData::Trace(t) = &s.data else { panic!("trace series expected") };
        assert!(t.approximation_error.is_some() && t.chebyshev_error.is_some() && t.accuracy.is_some());
    }
    let dir = tempfile::tempdir().unwrap();
    emit_artifacts(&report, dir.path(), false).unwrap();
    let files = files_in(dir.path());
    for expected in [
        "trace_scheme-base.csv",
        "trace_scheme-combined.csv",
        "trace_scheme-pairs.csv",
        "plot_approx_error.svg",
        "plot_cheb_error.svg",
        "plot_accuracy.svg",
        "summary.csv",
        "config_echo.json",
    ] {
        assert!(files.contains(&expected.to_string()), "missing {expected} in {files:?}");
    }
    let header = fs::read_to_string(dir.path().join("trace_scheme-base.csv")).unwrap();
    assert!(header.starts_with("iteration,approx_error,cheb_error,accuracy\n"));
}

#[test]
fn single_iteration_gives_single_step_trace() {
    let mut cfg = small(ExperimentKind::Pairwise);
    cfg.trials = 1;
    cfg.solver.max_iterations = 1;
    let report = run_experiment(&cfg).unwrap();
    for name in ["scheme-base", "scheme-combined", "scheme-pairs"] {
        assert_eq!(report.trace(name).unwrap().iterations, vec![0, 1]);
    }
}

#[test]
fn chebyshev_error_starts_equal_across_schemes() {
    let report = run_experiment(&small(ExperimentKind::Pairwise)).unwrap();
    let first: Vec<f64> = ["scheme-base", "scheme-combined", "scheme-pairs"]
        .iter()
        .map(|n| report.trace(n).unwrap().chebyshev_error.as_ref().unwrap()[0])
        .collect();
    assert!(first.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn coreset_sweep_has_fifteen_points_per_trial() {
    let mut cfg = small(ExperimentKind::Coreset);
    cfg.trials = 2;
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.summary.rows.len(), 15);
    assert_eq!(report.table("coreset_trials").unwrap().rows.len(), 30);
    assert!(cfg.kappas.contains(&1e7));
}

#[test]
fn coreset_covering_every_row_matches_full_solve() {
    let mut cfg = small(ExperimentKind::Coreset);
    cfg.m = 40;
    cfg.n = 4;
    cfg.c_values = vec![10.0, 20.0];
    let report = run_experiment(&cfg).unwrap();
    for row in &report.summary.rows {
        let c = row.values[1].unwrap();
        if c * 4.0 >= 40.0 {
            assert_eq!(row.values[2], Some(0.0), "{}", row.variant);
        }
    }
}

#[test]
fn cluster_variants_report_four_rows_and_curves() {
    let cfg = ExperimentConfig::defaults(ExperimentKind::ClusterVariants);
    assert_eq!(cfg.solver.max_iterations, 2000);
    let mut cfg = small(ExperimentKind::ClusterVariants);
    cfg.trials = 1;
    let report = run_experiment(&cfg).unwrap();
    let rows: Vec<&str> = report.summary.rows.iter().map(|r| r.variant.as_str()).collect();
    assert_eq!(rows, CLUSTER_VARIANTS);
    for v in CLUSTER_VARIANTS {
        assert_eq!(report.trace(v).unwrap().len(), 7);
    }
}

#[test]
fn spectral_convergence_has_one_curve_per_direction() {
    let mut cfg = small(ExperimentKind::SpectralConvergence);
    cfg.n = 12;
    cfg.m = 100;
    let report = run_experiment(&cfg).unwrap();
    let trace = report.trace("uniform").unwrap();
    assert_eq!(trace.singular_width(), 12);
    assert_eq!(report.plots[0].lines.len(), 12);
    assert_eq!(report.summary.rows.len(), 13);
}

#[test]
fn initial_singular_errors_are_components_of_the_solution() {
    let mut cfg = small(ExperimentKind::SpectralConvergence);
    cfg.trials = 1;
    let report = run_experiment(&cfg).unwrap();
    let trace = &report.trial_traces[0].1[0];
    let first = &trace.singular_errors.as_ref().unwrap()[0];
    // x* = eₙ and x₀ = 0, so the errors are |Vₙⱼ| and square-sum to one
    let total: f64 = first.iter().map(|v| v * v).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!((trace.approximation_error.as_ref().unwrap()[0] - 1.0).abs() < 1e-15);
}

#[test]
fn weighted_vs_uniform_reports_paired_ratios() {
    let defaults = ExperimentConfig::defaults(ExperimentKind::WeightedVsUniform);
    assert_eq!(defaults.trials, 50);
    let mut cfg = small(ExperimentKind::WeightedVsUniform);
    cfg.threshold = 1e-2;
    cfg.solver.max_iterations = 3000;
    let report = run_experiment(&cfg).unwrap();
    let table = report.table("crossings").unwrap();
    assert_eq!(table.rows.len(), 3);
    let ratio_col = table.columns.iter().position(|c| c == "ratio").unwrap();
    let mut ratios = 0.0;
    for row in &table.rows {
        assert_eq!(row[ratio_col], row[4] / row[1]);
        ratios += row[ratio_col];
    }
    let reported = report
        .summary
        .value("spectral-over-uniform", "mean_trial_ratio")
        .unwrap();
    assert!((reported - ratios / 3.0).abs() < 1e-15);
    // both strategies start from the same point of the same system
    let u = &report.trace("uniform").unwrap().approximation_error.as_ref().unwrap()[0];
    let s = &report.trace("spectral").unwrap().approximation_error.as_ref().unwrap()[0];
    assert_eq!(u, s);
}

#[test]
fn mean_traces_are_rederivable_from_trial_traces() {
    let report = run_experiment(&small(ExperimentKind::Pairwise)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_artifacts(&report, dir.path(), true).unwrap();
    for (name, trials) in &report.trial_traces {
        assert_eq!(trials.len(), 3);
        let mean = IterationTrace::aggregate(trials, Aggregation::Mean).unwrap();
        assert_eq!(Some(&mean), report.trace(name));
        for t in 0..3 {
            let path = dir.path().join("trials").join(format!("trace_{name}_{t:04}.csv"));
            let text = fs::read_to_string(path).unwrap();
            let last = text.lines().last().unwrap();
            let expected = fmt_f64(*trials[t].approximation_error.as_ref().unwrap().last().unwrap());
            assert_eq!(last.split(',').nth(1).unwrap(), expected);
        }
    }
}

fn artifact_bytes(report: &ExperimentReport) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().unwrap();
    emit_artifacts(report, dir.path(), false).unwrap();
    files_in(dir.path())
        .into_iter()
        .map(|f| {
            let bytes = fs::read(dir.path().join(&f)).unwrap();
            (f, bytes)
        })
        .collect()
}

#[test]
fn reruns_are_byte_identical_including_plots() {
    for kind in ExperimentKind::ALL {
        let cfg = small(kind);
        let a = artifact_bytes(&run_experiment(&cfg).unwrap());
        let b = artifact_bytes(&run_experiment(&cfg).unwrap());
        assert_eq!(a, b, "{kind}");
        assert!(a.iter().any(|(f, _)| f.ends_with(".svg")));
    }
}

#[test]
fn execution_mode_does_not_change_results() {
    for kind in ExperimentKind::ALL {
        let mut cfg = small(kind);
        cfg.execution = Execution::Sequential;
        let seq = artifact_bytes(&run_experiment(&cfg).unwrap());
        cfg.execution = Execution::Parallel;
        let par = artifact_bytes(&run_experiment(&cfg).unwrap());
        // config_echo records the execution mode itself
        let strip = |v: Vec<(String, Vec<u8>)>| -> Vec<(String, Vec<u8>)> {
            v.into_iter().filter(|(f, _)| f != "config_echo.json").collect()
        };
        assert_eq!(strip(seq), strip(par), "{kind}");
    }
}

#[test]
fn seeds_change_results() {
    let mut cfg = small(ExperimentKind::SpectralConvergence);
    let a = run_experiment(&cfg).unwrap();
    cfg.seed += 1;
    let b = run_experiment(&cfg).unwrap();
    assert_ne!(a.trace("uniform"), b.trace("uniform"));
}

#[test]
fn invalid_configs_are_config_errors() {
    let mut cfg = small(ExperimentKind::Coreset);
    cfg.trials = 0;
    assert!(run_experiment(&cfg).unwrap_err().is_config());
    let cfg = small(ExperimentKind::Pairwise);
    assert!(kzlab::runner::run_coreset(&cfg).unwrap_err().is_config());
}

#[test]
fn config_echo_holds_version_seed_and_config() {
    let cfg = small(ExperimentKind::Coreset);
    let report = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_artifacts(&report, dir.path(), false).unwrap();
    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("config_echo.json")).unwrap()).unwrap();
    assert_eq!(echo["seed"], 42);
    assert!(echo["version"].as_str().unwrap().starts_with("kzlab "));
    assert_eq!(echo["config"]["experiment"], "coreset");
    let back = ExperimentConfig::from_json(&echo["config"].to_string()).unwrap();
    assert_eq!(back, cfg);
}
