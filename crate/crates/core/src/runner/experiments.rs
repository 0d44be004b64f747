use crate::clustering::{
    build_schedule, epsilon_cover, extract_coreset, select_epsilon, ClusterSampler, OnlineReductionSampler,
};
use crate::error::{Error, Result};
use crate::feasibility::{binarize_rhs, hadamard_transform};
use crate::matgen::{draw_initial, draw_solution, generate_ill_conditioned, make_system, GeneratedSystem, SpectrumSpec};
use crate::matrix::{distance, max_abs, norm, DenseMatrix};
use crate::metrics::{chebyshev_center, Aggregation, IterationTrace, TraceRecorder};
use crate::par::map_trials;
use crate::qr::{least_squares, smallest_right_singular_vector, InverseIterationOptions};
use crate::rng::{stream, trial_rng, trial_seed};
use crate::sampling::{build_distribution, SamplingStrategy, StrategyKind};
use crate::solvers::{RowSampler, Solver, SolverConfig};
use crate::system::{LinearSystem, Relation};

use super::config::{ChebyshevRegion, ExperimentConfig, ExperimentKind};
use super::report::{trace_plot, ExperimentReport, Series, SeriesData, Summary, Table};

/// Problem data shared by every variant of one trial.
struct TrialData {
    generated: GeneratedSystem,
    x_star: Vec<f64>,
    x0: Vec<f64>,
}

fn trial_data(cfg: &ExperimentConfig, trial: usize, spectrum: &SpectrumSpec) -> Result<TrialData> {
    let mut rng = trial_rng(cfg.seed, trial, stream::SYSTEM);
    let generated = generate_ill_conditioned(cfg.m, cfg.n, spectrum, &mut rng)?;
    let x_star = draw_solution(cfg.n, cfg.solution, &mut trial_rng(cfg.seed, trial, stream::SOLUTION));
    let x0 = draw_initial(cfg.n, cfg.initial, &mut trial_rng(cfg.seed, trial, stream::INITIAL));
    Ok(TrialData {
        generated,
        x_star,
        x0,
    })
}

/// Solver settings for variant `variant` of trial `trial`; every variant
/// draws from its own stream.
fn solver_config(cfg: &ExperimentConfig, trial: usize, variant: usize, x0: &[f64]) -> SolverConfig {
    SolverConfig {
        beta: cfg.solver.beta,
        lambda: cfg.solver.lambda,
        max_iterations: cfg.solver.max_iterations,
        seed: trial_seed(cfg.seed, trial),
        stream: stream::SOLVER_BASE + variant as u64,
        stop_tolerance: None,
        halt_on_tolerance: false,
        halt_when_feasible: false,
        trace_stride: cfg.solver.trace_stride,
        x0: Some(x0.to_vec()),
    }
}

fn static_strategy(kind: StrategyKind) -> Result<SamplingStrategy> {
    Ok(match kind {
        StrategyKind::Uniform => SamplingStrategy::Uniform,
        StrategyKind::SquaredNorm => SamplingStrategy::SquaredNorm,
        StrategyKind::SchemeBaseOnly => SamplingStrategy::SchemeBaseOnly,
        StrategyKind::SchemeCombinedUniform => SamplingStrategy::SchemeCombinedUniform,
        StrategyKind::SchemePairsOnly => SamplingStrategy::SchemePairsOnly,
        StrategyKind::Spectral | StrategyKind::ClusterGuided => {
            return Err(Error::Config(format!("strategy `{kind}` needs run-time data")))
        }
    })
}

/// Runs `f` over all trials and transposes the per-trial variant traces
/// into per-variant trial lists.
fn collect<T, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_trials(cfg.trials, cfg.execution, f).into_iter().collect()
}

fn transpose(per_trial: Vec<Vec<IterationTrace>>, variants: usize) -> Vec<Vec<IterationTrace>> {
    let mut out: Vec<Vec<IterationTrace>> = (0..variants).map(|_| Vec::with_capacity(per_trial.len())).collect();
    for traces in per_trial {
        for (v, t) in traces.into_iter().enumerate() {
            out[v].push(t);
        }
    }
    out
}

fn aggregate_variants(
    report: &mut ExperimentReport,
    names: &[String],
    per_variant: Vec<Vec<IterationTrace>>,
    how: Aggregation,
) -> Result<Vec<IterationTrace>> {
    let mut means = Vec::with_capacity(names.len());
    for (name, traces) in names.iter().zip(per_variant) {
        let mean = IterationTrace::aggregate(&traces, how)?;
        report.series.push(Series {
            name: name.clone(),
            data: SeriesData::Trace(mean.clone()),
        });
        report.trial_traces.push((name.clone(), traces));
        means.push(mean);
    }
    Ok(means)
}

pub fn run_pairwise(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::Pairwise)?;
    let strategies: Vec<SamplingStrategy> = cfg.schemes.iter().map(|k| static_strategy(*k)).collect::<Result<_>>()?;
    let per_trial = collect(cfg, |t| {
        let d = trial_data(cfg, t, &cfg.spectrum)?;
        let a = d.generated.matrix();
        let labels = binarize_rhs(a, &d.x_star)?;
        let feas = hadamard_transform(a, &labels)?
            .with_pairs()?
            .with_ground_truth(d.x_star.clone())?;
        let bound = cfg.box_bound.unwrap_or_else(|| {
            let r = 2.0 * max_abs(&d.x_star);
            if r > 0.0 {
                r
            } else {
                1.0
            }
        });
        let cheb = match cfg.chebyshev_region {
            ChebyshevRegion::Base => chebyshev_center(feas.base().matrix(), feas.base().rhs(), bound)?,
            ChebyshevRegion::Combined => {
                let c = feas.combined();
                let rows: Vec<usize> = (0..c.rows()).filter(|&i| c.is_sampleable(i)).collect();
                let sub = c.subsystem(&rows)?;
                chebyshev_center(sub.matrix(), sub.rhs(), bound)?
            }
        };
        strategies
            .iter()
            .enumerate()
            .map(|(s, strategy)| {
                let mut dist = build_distribution(strategy, &feas)?;
                let sc = solver_config(cfg, t, s, &d.x0);
                let recorder = TraceRecorder::new()
                    .approximation(Some(&d.x_star))
                    .chebyshev(&cheb.center)
                    .accuracy(a, &labels);
                Ok(Solver::new(feas.combined(), &sc).recorder(recorder).run(&mut dist)?.trace)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let names: Vec<String> = cfg.schemes.iter().map(|k| k.name().to_string()).collect();
    let mut report = ExperimentReport::new(cfg.clone());
    let means = aggregate_variants(&mut report, &names, transpose(per_trial, names.len()), cfg.aggregation)?;
    let mut summary = Summary::new(&["final_accuracy_percent", "final_approx_error", "final_cheb_error"]);
    for (name, m) in names.iter().zip(&means) {
        summary.push(
            name.clone(),
            vec![
                m.final_accuracy().map(|a| 100.0 * a),
                m.final_approximation_error(),
                m.chebyshev_error.as_ref().and_then(|s| s.last().copied()),
            ],
        );
    }
    report.summary = summary;
    let labelled: Vec<(&str, &IterationTrace)> = names.iter().map(String::as_str).zip(&means).collect();
    report.plots = vec![
        trace_plot("approx_error", "mean approximation error", true, &labelled, |t| {
            t.approximation_error.as_ref()
        }),
        trace_plot("cheb_error", "mean Chebyshev error", true, &labelled, |t| t.chebyshev_error.as_ref()),
        trace_plot("accuracy", "mean accuracy", false, &labelled, |t| t.accuracy.as_ref()),
    ];
    Ok(report)
}

fn kappa_label(kappa: f64) -> String {
    format!("{kappa:e}")
}

pub fn run_coreset(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::Coreset)?;
    // per trial: for each (kappa, c) the triple (relative error, full residual, coreset residual)
    let per_trial: Vec<Vec<[f64; 3]>> = collect(cfg, |t| {
        let mut rng = trial_rng(cfg.seed, t, stream::SYSTEM);
        let mut sol_rng = trial_rng(cfg.seed, t, stream::SOLUTION);
        let mut out = Vec::with_capacity(cfg.kappas.len() * cfg.c_values.len());
        for &kappa in &cfg.kappas {
            let gen = generate_ill_conditioned(cfg.m, cfg.n, &SpectrumSpec::ExplicitRatio { kappa }, &mut rng)?;
            let x_star = draw_solution(cfg.n, cfg.solution, &mut sol_rng);
            let sys = make_system(&gen, &x_star, Relation::Equality)?;
            let x_a = least_squares(sys.matrix(), sys.rhs())?;
            let scale = norm(&x_a);
            for &c in &cfg.c_values {
                let core = extract_coreset(&sys, c, &x_star)?;
                let x_b = least_squares(core.system.matrix(), core.system.rhs())?;
                out.push([
                    distance(&x_b, &x_a) / scale,
                    distance(&sys.matrix().matvec(&x_b)?, sys.rhs()),
                    distance(&core.system.matrix().matvec(&x_b)?, core.system.rhs()),
                ]);
            }
        }
        Ok(out)
    })?;

    let mut report = ExperimentReport::new(cfg.clone());
    let mut summary = Summary::new(&["kappa", "c", "rel_error", "residual_full", "residual_coreset"]);
    let mut trials = Table::new(&["trial", "kappa", "c", "rel_error", "residual_full", "residual_coreset"]);
    for (t, rows) in per_trial.iter().enumerate() {
        let mut idx = 0;
        for &kappa in &cfg.kappas {
            for &c in &cfg.c_values {
                let v = rows[idx];
                trials.rows.push(vec![t as f64, kappa, c, v[0], v[1], v[2]]);
                idx += 1;
            }
        }
    }
    let mut rel_lines = Vec::new();
    let mut res_lines = Vec::new();
    let mut idx = 0;
    for &kappa in &cfg.kappas {
        let mut table = Table::new(&["c", "rel_error", "residual_full", "residual_coreset"]);
        for &c in &cfg.c_values {
            let mut stats = [0.0; 3];
            for (q, s) in stats.iter_mut().enumerate() {
                let mut column: Vec<f64> = per_trial.iter().map(|r| r[idx][q]).collect();
                *s = cfg.aggregation.combine(&mut column);
            }
            table.rows.push(vec![c, stats[0], stats[1], stats[2]]);
            summary.push(
                format!("kappa-{}_c-{c}", kappa_label(kappa)),
                vec![Some(kappa), Some(c), Some(stats[0]), Some(stats[1]), Some(stats[2])],
            );
            idx += 1;
        }
        let label = format!("kappa {}", kappa_label(kappa));
        rel_lines.push(super::report::Line {
            label: label.clone(),
            points: table.rows.iter().map(|r| (r[0], r[1])).collect(),
        });
        res_lines.push(super::report::Line {
            label: format!("{label} full"),
            points: table.rows.iter().map(|r| (r[0], r[2])).collect(),
        });
        res_lines.push(super::report::Line {
            label: format!("{label} coreset"),
            points: table.rows.iter().map(|r| (r[0], r[3])).collect(),
        });
        report.series.push(Series {
            name: format!("kappa-{}", kappa_label(kappa)),
            data: SeriesData::Table(table),
        });
    }
    report.summary = summary;
    report.tables.push(("coreset_trials".into(), trials));
    report.plots = vec![
        super::report::Plot {
            metric: "rel_error".into(),
            x_label: "coreset factor c".into(),
            y_label: "relative error to full solve".into(),
            log_y: true,
            lines: rel_lines,
        },
        super::report::Plot {
            metric: "residual".into(),
            x_label: "coreset factor c".into(),
            y_label: "residual norm".into(),
            log_y: true,
            lines: res_lines,
        },
    ];
    Ok(report)
}

/// Variant names of the cluster experiment, in run order.
pub const CLUSTER_VARIANTS: [&str; 4] = ["hadamard-skm", "reduced-matrix", "epsilon-cover", "online-reduction"];

pub fn run_cluster_variants(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::ClusterVariants)?;
    let per_trial = collect(cfg, |t| {
        let d = trial_data(cfg, t, &cfg.spectrum)?;
        let a = d.generated.matrix();
        let labels = binarize_rhs(a, &d.x_star)?;
        let feas = hadamard_transform(a, &labels)?.with_ground_truth(d.x_star.clone())?;
        let base = feas.base();
        let recorder = || TraceRecorder::new().approximation(Some(&d.x_star)).accuracy(a, &labels);
        let run = |system: &LinearSystem, variant: usize, sampler: &mut dyn RowSampler| -> Result<IterationTrace> {
            let sc = solver_config(cfg, t, variant, &d.x0);
            Ok(Solver::new(system, &sc).recorder(recorder()).run(sampler)?.trace)
        };

        let mut traces = Vec::with_capacity(4);
        let mut uniform = build_distribution(&SamplingStrategy::Uniform, base)?;
        traces.push(run(base, 0, &mut uniform)?);

        let core = extract_coreset(base, cfg.cluster.coreset_factor, &d.x_star)?;
        let mut core_dist = build_distribution(&SamplingStrategy::Uniform, &core.system)?;
        traces.push(run(&core.system, 1, &mut core_dist)?);

        let partition = match cfg.cluster.epsilon {
            Some(e) => epsilon_cover(base.matrix(), e, cfg.cluster.criterion)?,
            None => select_epsilon(base.matrix(), cfg.cluster.criterion, cfg.n, 4 * cfg.n)?,
        };
        let stats = [t as f64, partition.epsilon, partition.len() as f64, core.indices.len() as f64];
        let mut clusters = ClusterSampler::new(base.matrix(), partition, cfg.cluster.mode)?
            .reassign_every(cfg.cluster.reassign_every);
        traces.push(run(base, 2, &mut clusters)?);

        let mut online = OnlineReductionSampler::new(base, build_schedule(cfg.m, cfg.n), cfg.cluster.best_rows)?;
        traces.push(run(base, 3, &mut online)?);
        Ok((traces, stats))
    })?;

    let mut cluster_stats = Table::new(&["trial", "epsilon", "clusters", "coreset_rows"]);
    let mut trace_sets = Vec::with_capacity(per_trial.len());
    for (traces, stats) in per_trial {
        cluster_stats.rows.push(stats.to_vec());
        trace_sets.push(traces);
    }
    let names: Vec<String> = CLUSTER_VARIANTS.iter().map(|s| s.to_string()).collect();
    let mut report = ExperimentReport::new(cfg.clone());
    let means = aggregate_variants(&mut report, &names, transpose(trace_sets, names.len()), cfg.aggregation)?;
    let mut summary = Summary::new(&["final_accuracy_percent", "final_approx_error"]);
    for (name, m) in names.iter().zip(&means) {
        summary.push(
            name.clone(),
            vec![m.final_accuracy().map(|a| 100.0 * a), m.final_approximation_error()],
        );
    }
    report.summary = summary;
    report.tables.push(("cluster_trials".into(), cluster_stats));
    let labelled: Vec<(&str, &IterationTrace)> = names.iter().map(String::as_str).zip(&means).collect();
    report.plots = vec![
        trace_plot("approx_error", "mean approximation error", true, &labelled, |t| {
            t.approximation_error.as_ref()
        }),
        trace_plot("accuracy", "mean accuracy", false, &labelled, |t| t.accuracy.as_ref()),
    ];
    Ok(report)
}

fn singular_plot(trace: &IterationTrace, metric: &str) -> super::report::Plot {
    let width = trace.singular_width();
    let rows = trace.singular_errors.as_deref().unwrap_or(&[]);
    let lines = (0..width)
        .map(|j| super::report::Line {
            label: format!("direction {}", j + 1),
            points: trace
                .iterations
                .iter()
                .zip(rows)
                .map(|(k, r)| (*k as f64, r[j]))
                .collect(),
        })
        .collect();
    super::report::Plot {
        metric: metric.into(),
        x_label: "iteration".into(),
        y_label: "mean singular error".into(),
        log_y: true,
        lines,
    }
}

pub fn run_spectral_convergence(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::SpectralConvergence)?;
    let per_trial = collect(cfg, |t| {
        let d = trial_data(cfg, t, &cfg.spectrum)?;
        let sys = make_system(&d.generated, &d.x_star, Relation::Equality)?;
        let mut dist = build_distribution(&SamplingStrategy::Uniform, &sys)?;
        let sc = solver_config(cfg, t, 0, &d.x0);
        let recorder = TraceRecorder::new()
            .approximation(Some(&d.x_star))
            .singular(&d.x_star, &d.generated.v_factor);
        Ok(vec![Solver::new(&sys, &sc).recorder(recorder).run(&mut dist)?.trace])
    })?;
    let names = vec!["uniform".to_string()];
    let mut report = ExperimentReport::new(cfg.clone());
    let means = aggregate_variants(&mut report, &names, transpose(per_trial, 1), cfg.aggregation)?;
    let mean = &means[0];
    let mut summary = Summary::new(&["final_singular_error", "final_approx_error"]);
    if let Some(last) = mean.singular_errors.as_ref().and_then(|s| s.last()) {
        for (j, e) in last.iter().enumerate() {
            summary.push(format!("direction-{}", j + 1), vec![Some(*e), None]);
        }
    }
    summary.push("uniform", vec![None, mean.final_approximation_error()]);
    report.summary = summary;
    report.plots = vec![
        singular_plot(mean, "singular_errors"),
        trace_plot("approx_error", "mean approximation error", true, &[("uniform", mean)], |t| {
            t.approximation_error.as_ref()
        }),
    ];
    Ok(report)
}

/// Iterations for `E‖x_k − x*‖²` to fall from `e0_sq` to `tau²` at the
/// asymptotic rate `1 − λ_min(E[Pᵢ])` of a row distribution `p`.
fn predicted_iterations(a: &DenseMatrix, p: &[f64], e0_sq: f64, tau: f64) -> Option<f64> {
    let rows: Vec<usize> = (0..a.rows()).filter(|&i| p[i] > 0.0).collect();
    let (_, n) = a.shape();
    if rows.len() < n {
        return None;
    }
    let scaled = DenseMatrix::from_fn(rows.len(), n, |r, j| {
        let i = rows[r];
        let row = a.row(i);
        p[i].sqrt() * row[j] / norm(row)
    });
    let pair = smallest_right_singular_vector(&scaled, InverseIterationOptions::default()).ok()?;
    let lambda_min = pair.sigma * pair.sigma;
    if !(lambda_min > 0.0 && lambda_min < 1.0) {
        return None;
    }
    Some(((tau * tau) / e0_sq).ln() / (1.0 - lambda_min).ln())
}

pub const WEIGHTED_VARIANTS: [&str; 2] = ["uniform", "spectral"];

pub fn run_weighted_vs_uniform(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::WeightedVsUniform)?;
    let per_trial = collect(cfg, |t| {
        let d = trial_data(cfg, t, &cfg.spectrum)?;
        let sys = make_system(&d.generated, &d.x_star, Relation::Equality)?;
        let v_n = d.generated.v_factor.column(cfg.n - 1);
        let strategies = [SamplingStrategy::Uniform, SamplingStrategy::spectral(v_n)?];
        let e0_sq = distance(&d.x0, &d.x_star).powi(2);
        let mut traces = Vec::with_capacity(2);
        let mut row = vec![t as f64];
        for (s, strategy) in strategies.iter().enumerate() {
            let mut dist = build_distribution(strategy, &sys)?;
            let mut p = vec![0.0; sys.rows()];
            for (&i, &w) in dist.support().iter().zip(dist.weights()) {
                p[i] = w;
            }
            let mut sc = solver_config(cfg, t, s, &d.x0);
            sc.stop_tolerance = Some(cfg.threshold);
            let recorder = TraceRecorder::new()
                .approximation(Some(&d.x_star))
                .singular(&d.x_star, &d.generated.v_factor);
            let res = Solver::new(&sys, &sc).recorder(recorder).run(&mut dist)?;
            let crossed = res.first_within_tolerance;
            row.push(crossed.unwrap_or(res.iterations) as f64);
            row.push(if crossed.is_some() { 1.0 } else { 0.0 });
            row.push(predicted_iterations(sys.matrix(), &p, e0_sq, cfg.threshold).unwrap_or(f64::NAN));
            traces.push(res.trace);
        }
        row.push(row[4] / row[1]);
        Ok((traces, row))
    })?;

    let mut crossings = Table::new(&[
        "trial",
        "uniform_iterations",
        "uniform_crossed",
        "uniform_predicted",
        "spectral_iterations",
        "spectral_crossed",
        "spectral_predicted",
        "ratio",
    ]);
    let mut trace_sets = Vec::with_capacity(per_trial.len());
    for (traces, row) in per_trial {
        crossings.rows.push(row);
        trace_sets.push(traces);
    }
    let names: Vec<String> = WEIGHTED_VARIANTS.iter().map(|s| s.to_string()).collect();
    let mut report = ExperimentReport::new(cfg.clone());
    let means = aggregate_variants(&mut report, &names, transpose(trace_sets, 2), cfg.aggregation)?;

    let col = |c: usize| -> Vec<f64> { crossings.rows.iter().map(|r| r[c]).collect() };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let finite_mean = |v: &[f64]| {
        let f: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
        (!f.is_empty()).then(|| mean(&f))
    };
    let mut summary = Summary::new(&[
        "final_approx_error",
        "final_last_singular_error",
        "mean_iterations_to_threshold",
        "crossed_trials",
        "predicted_iterations",
        "mean_trial_ratio",
    ]);
    let n = cfg.n;
    for (v, (name, m)) in names.iter().zip(&means).enumerate() {
        let base = 1 + 3 * v;
        summary.push(
            name.clone(),
            vec![
                m.final_approximation_error(),
                m.singular_errors.as_ref().and_then(|s| s.last()).map(|r| r[n - 1]),
                Some(mean(&col(base))),
                Some(col(base + 1).iter().sum()),
                finite_mean(&col(base + 2)),
                None,
            ],
        );
    }
    let predicted = match (finite_mean(&col(6)), finite_mean(&col(3))) {
        (Some(s), Some(u)) => Some(s / u),
        _ => None,
    };
    summary.push(
        "spectral-over-uniform",
        vec![
            None,
            None,
            Some(mean(&col(4)) / mean(&col(1))),
            None,
            predicted,
            Some(mean(&col(7))),
        ],
    );
    report.summary = summary;
    report.tables.push(("crossings".into(), crossings));
    let labelled: Vec<(&str, &IterationTrace)> = names.iter().map(String::as_str).zip(&means).collect();
    report.plots = vec![
        trace_plot("approx_error", "mean approximation error", true, &labelled, |t| {
            t.approximation_error.as_ref()
        }),
        last_singular_plot(&labelled, n),
    ];
    Ok(report)
}

fn last_singular_plot(traces: &[(&str, &IterationTrace)], n: usize) -> super::report::Plot {
    let lines = traces
        .iter()
        .map(|(label, t)| super::report::Line {
            label: label.to_string(),
            points: t
                .iterations
                .iter()
                .zip(t.singular_errors.as_deref().unwrap_or(&[]))
                .map(|(k, r)| (*k as f64, r[n - 1]))
                .collect(),
        })
        .collect();
    super::report::Plot {
        metric: "last_singular_error".into(),
        x_label: "iteration".into(),
        y_label: "mean error along the last singular direction".into(),
        log_y: true,
        lines,
    }
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "configuration is for `{}`, not `{kind}`",
            cfg.experiment
        )));
    }
    cfg.validate()
}
