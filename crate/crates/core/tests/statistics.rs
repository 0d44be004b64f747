//! Sampling frequencies, long-run convergence and the RK rate bound.

use kzlab::clustering::{epsilon_cover, ClusterCriterion, ClusterMode, ClusterSampler, OnlineReductionSampler};
use kzlab::clustering::{build_schedule, BestRowCriterion};
use kzlab::matgen::{gaussian, generate_ill_conditioned, make_system, SpectrumSpec};
use kzlab::matrix::distance;
use kzlab::rng::seeded;
use kzlab::sampling::{build_distribution, sample_rows, RowDistribution, SamplingStrategy};
use kzlab::solvers::{rk_bound, run_solver, RowSampler, Solver, SolverConfig};
use kzlab::{DenseMatrix, LinearSystem, Relation};
use rand::Rng;
use rand_distr::StandardNormal;

/// Asserts every count lies within 3σ of its binomial expectation.
fn within_three_sigma(counts: &[u64], probs: &[f64], draws: u64) {
    for (c, p) in counts.iter().zip(probs) {
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (*c as f64 - mean).abs() <= 3.0 * sd.max(1e-9),
            "count {c} vs expected {mean:.1} (sd {sd:.1})"
        );
    }
}

#[test]
fn frequencies_over_a_million_draws_match_weights() {
    let weights = [0.05, 0.1, 0.15, 0.2, 0.5];
    let d = RowDistribution::new((0..5).collect(), weights.to_vec()).unwrap();
    let mut rng = seeded(11, 0);
    let mut out = Vec::new();
    let mut counts = [0u64; 5];
    let draws = 1_000_000;
    for _ in 0..draws {
        sample_rows(&d, 1, &mut rng, &mut out).unwrap();
        counts[out[0]] += 1;
    }
    within_three_sigma(&counts, &weights, draws);
}

#[test]
fn single_weight_row_is_always_drawn() {
    let d = RowDistribution::new(vec![0, 1], vec![0.0, 1.0]).unwrap();
    let mut rng = seeded(12, 0);
    let mut out = Vec::new();
    for _ in 0..1000 {
        sample_rows(&d, 1, &mut rng, &mut out).unwrap();
        assert_eq!(out, [1]);
    }
}

#[test]
fn cluster_members_are_drawn_uniformly() {
    // three near-parallel rows form one cluster, orthogonal to the iterate
    let a = DenseMatrix::from_rows(&[
        [1.0, 0.0, 0.0],
        [1.0, 0.01, 0.0],
        [1.0, 0.0, 0.01],
        [0.0, 1.0, 0.0],
    ])
    .unwrap();
    let partition = epsilon_cover(&a, 0.1, ClusterCriterion::NormalizedDistance).unwrap();
    assert_eq!(partition.clusters, vec![vec![0, 1, 2], vec![3]]);
    let mut sampler = ClusterSampler::new(&a, partition, ClusterMode::BestCluster).unwrap();
    let x = [0.0, 1.0, 0.0];
    let mut rng = seeded(13, 0);
    let mut out = Vec::new();
    let mut counts = [0u64; 3];
    let draws = 100_000;
    for k in 0..draws {
        sampler.draw(k as usize, &x, 1, &mut rng, &mut out).unwrap();
        counts[out[0]] += 1;
    }
    within_three_sigma(&counts, &[1.0 / 3.0; 3], draws);
}

#[test]
fn uniform_rk_converges_on_a_consistent_system() {
    let (m, n) = (100, 10);
    let mut rng = seeded(14, 0);
    let a = gaussian(m, n, &mut rng);
    let x_star: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let sys = LinearSystem::new(a.clone(), a.matvec(&x_star).unwrap(), Relation::Equality)
        .unwrap()
        .with_ground_truth(x_star.clone())
        .unwrap();
    let mut dist = build_distribution(&SamplingStrategy::Uniform, &sys).unwrap();
    let cfg = SolverConfig {
        max_iterations: 20_000,
        seed: 14,
        trace_stride: 1000,
        ..SolverConfig::default()
    };
    let res = run_solver(&sys, &cfg, &mut dist).unwrap();
    assert!(distance(&res.x, &x_star) <= 1e-10);
    let again = run_solver(&sys, &cfg, &mut dist).unwrap();
    assert_eq!(res.trace, again.trace);
}

#[test]
fn rk_bound_matches_stored_spectrum() {
    let mut rng = seeded(15, 0);
    let g = generate_ill_conditioned(100, 10, &SpectrumSpec::ExplicitRatio { kappa: 1e3 }, &mut rng).unwrap();
    let x_star = vec![1.0; 10];
    let sys = make_system(&g, &x_star, Relation::Equality).unwrap();
    let fro_sq: f64 = g.singular_values.iter().map(|s| s * s).sum();
    let smin = *g.singular_values.last().unwrap();
    let expected = (1.0 - smin * smin / fro_sq).powi(100) * 10.0;
    let got = rk_bound(&sys, 100, 10.0).unwrap();
    assert!((got - expected).abs() <= 1e-12 * expected);
}

#[test]
fn online_reduction_projects_only_working_rows() {
    let (m, n) = (400, 5);
    let mut rng = seeded(16, 0);
    let a = gaussian(m, n, &mut rng);
    let x_star: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let sys = LinearSystem::new(a.clone(), a.matvec(&x_star).unwrap(), Relation::Equality)
        .unwrap()
        .with_ground_truth(x_star)
        .unwrap();
    let schedule = build_schedule(m, n);
    let mut sampler = OnlineReductionSampler::new(&sys, schedule.clone(), BestRowCriterion::Absolute).unwrap();

    /// Records each draw and checks it against the working set.
    struct Checked<'a, 'b>(&'a mut OnlineReductionSampler<'b>, usize);
    impl RowSampler for Checked<'_, '_> {
        fn draw(
            &mut self,
            k: usize,
            x: &[f64],
            beta: usize,
            rng: &mut dyn rand::RngCore,
            out: &mut Vec<usize>,
        ) -> kzlab::Result<()> {
            self.0.draw(k, x, beta, rng, out)?;
            assert!(out.iter().all(|r| self.0.working().contains(r)));
            assert!(self.0.working().iter().all(|r| self.0.active().contains(r)));
            self.1 += 1;
            Ok(())
        }
    }

    let cfg = SolverConfig {
        max_iterations: 2000,
        seed: 16,
        trace_stride: 100,
        ..SolverConfig::default()
    };
    let mut checked = Checked(&mut sampler, 0);
    Solver::new(&sys, &cfg).run(&mut checked).unwrap();
    assert_eq!(checked.1, 2000);
    assert_eq!(sampler.active().len(), schedule.floor);
    assert_eq!(sampler.discarded().len(), schedule.events.len());
}
