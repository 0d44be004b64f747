use kzlab::clustering::{build_schedule, epsilon_cover, extract_coreset, score_rows, ClusterCriterion};
use kzlab::feasibility::{binarize_rhs, hadamard_transform, pairwise_differences};
use kzlab::matgen::{gaussian, generate_ill_conditioned, generate_orthogonal, SpectrumSpec};
use kzlab::matrix::{distance, dot, norm};
use kzlab::metrics::{approximation_error, classification_accuracy, singular_errors};
use kzlab::qr::least_squares;
use kzlab::rng::seeded;
use kzlab::sampling::{build_distribution, sample_rows, spectral_weights, SamplingStrategy};
use kzlab::solvers::rk_step;
use kzlab::{DenseMatrix, LinearSystem, Relation};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn normal_vec(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_zeroes_residual_and_obeys_pythagoras(seed in any::<u64>(), m in 1usize..20, n in 1usize..8) {
        let mut rng = seeded(seed, 0);
        let a = gaussian(m, n, &mut rng);
        let x_star = normal_vec(n, &mut rng);
        let sys = LinearSystem::new(a.clone(), a.matvec(&x_star).unwrap(), Relation::Equality).unwrap();
        let mut x = normal_vec(n, &mut rng);
        let before = x.clone();
        let row = rng.random_range(0..m);
        let r0 = sys.residual(row, &before);
        rk_step(&sys, &mut x, row, 1.0).unwrap();
        let scale = sys.rhs()[row].abs() + norm(sys.row(row)) * norm(&x);
        prop_assert!(sys.residual(row, &x).abs() <= 1e-12 * scale);
        let lhs = distance(&x, &x_star).powi(2);
        let rhs = distance(&before, &x_star).powi(2) - r0 * r0 / sys.row_norm_sq(row);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * distance(&before, &x_star).powi(2).max(1e-300));
    }

    #[test]
    fn inequality_step_never_increases_violation(seed in any::<u64>(), lambda in 0.01f64..1.99) {
        let mut rng = seeded(seed, 0);
        let (m, n) = (6, 4);
        let a = gaussian(m, n, &mut rng);
        let b = normal_vec(m, &mut rng);
        let sys = LinearSystem::new(a, b, Relation::LessEqual).unwrap();
        let mut x = normal_vec(n, &mut rng);
        let row = rng.random_range(0..m);
        let before = sys.residual(row, &x).max(0.0);
        rk_step(&sys, &mut x, row, lambda).unwrap();
        prop_assert!(sys.residual(row, &x).max(0.0) <= before + 1e-12 * (1.0 + before));
        prop_assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn parseval_over_orthogonal_bases(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = seeded(seed, 0);
        let v = generate_orthogonal(n, &mut rng);
        let x = normal_vec(n, &mut rng);
        let x_star = normal_vec(n, &mut rng);
        let e = singular_errors(&x, &x_star, &v).unwrap();
        let total: f64 = e.iter().map(|v| v * v).sum();
        let direct = approximation_error(&x, &x_star).powi(2);
        prop_assert!((total - direct).abs() <= 1e-10 * direct.max(1.0));
    }

    #[test]
    fn generated_factors_are_orthogonal_and_reconstruct(seed in any::<u64>(), n in 1usize..8, extra in 0usize..20) {
        let m = n + extra;
        let mut rng = seeded(seed, 0);
        let g = generate_ill_conditioned(m, n, &SpectrumSpec::ExplicitRatio { kappa: 1e6 }, &mut rng).unwrap();
        for q in [&g.u_factor, &g.v_factor] {
            let gram = q.transpose().matmul(q).unwrap();
            let dev = gram.sub(&DenseMatrix::identity(q.cols())).unwrap().max_abs();
            prop_assert!(dev <= 1e-10);
        }
        let u = g.u_factor.leading_columns(n);
        let us = DenseMatrix::from_fn(m, n, |i, j| u.get(i, j) * g.singular_values[j]);
        let rebuilt = us.matmul(&g.v_factor.transpose()).unwrap();
        let a = g.matrix();
        prop_assert!(rebuilt.sub(a).unwrap().frobenius_norm() <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn least_squares_residual_is_orthogonal(seed in any::<u64>(), n in 1usize..6, extra in 0usize..15) {
        let m = n + extra;
        let mut rng = seeded(seed, 0);
        let a = gaussian(m, n, &mut rng);
        let b = normal_vec(m, &mut rng);
        let x = least_squares(&a, &b).unwrap();
        let ax = a.matvec(&x).unwrap();
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, v)| b - v).collect();
        let atr = a.tr_matvec(&r).unwrap();
        let scale = a.frobenius_norm() * norm(&b);
        prop_assert!(atr.iter().all(|v| v.abs() <= 1e-8 * scale.max(1e-300)));
    }

    #[test]
    fn spectral_weights_ignore_direction_sign(seed in any::<u64>(), m in 1usize..30, n in 1usize..6) {
        let mut rng = seeded(seed, 0);
        let a = gaussian(m, n, &mut rng);
        let v = unit(normal_vec(n, &mut rng));
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        prop_assert_eq!(spectral_weights(&a, &v).unwrap(), spectral_weights(&a, &neg).unwrap());
    }

    #[test]
    fn distributions_sum_to_one_and_skip_zero_rows(seed in any::<u64>(), m in 2usize..30, n in 1usize..6) {
        let mut rng = seeded(seed, 0);
        let mut a = gaussian(m, n, &mut rng);
        let zero = rng.random_range(0..m);
        a.row_mut(zero).iter_mut().for_each(|v| *v = 0.0);
        let sys = LinearSystem::new(a, vec![0.0; m], Relation::Equality).unwrap();
        let v = unit(normal_vec(n, &mut rng));
        for strategy in [
            SamplingStrategy::Uniform,
            SamplingStrategy::SquaredNorm,
            SamplingStrategy::spectral(v).unwrap(),
        ] {
            let d = build_distribution(&strategy, &sys).unwrap();
            let total: f64 = d.weights().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(!d.support().contains(&zero));
            prop_assert_eq!(d.probability(zero), 0.0);
        }
    }

    #[test]
    fn combined_scheme_restricted_to_base_is_base_scheme(seed in any::<u64>(), m in 2usize..12, n in 1usize..5) {
        let mut rng = seeded(seed, 0);
        let a = gaussian(m, n, &mut rng);
        let x_star = normal_vec(n, &mut rng);
        let labels = binarize_rhs(&a, &x_star).unwrap();
        let feas = hadamard_transform(&a, &labels).unwrap().with_pairs().unwrap();
        let combined = build_distribution(&SamplingStrategy::SchemeCombinedUniform, &feas).unwrap();
        let base = build_distribution(&SamplingStrategy::SchemeBaseOnly, &feas).unwrap();
        let mass: f64 = base.support().iter().map(|&i| combined.probability(i)).sum();
        for &i in base.support() {
            prop_assert!((combined.probability(i) / mass - base.probability(i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible(seed in any::<u64>(), beta in 1usize..5) {
        let support: Vec<usize> = (0..10).collect();
        let weights: Vec<f64> = (1..=10).map(f64::from).collect();
        let d = kzlab::sampling::RowDistribution::new(support, weights).unwrap();
        let draw = |s| {
            let mut rng = seeded(s, 7);
            let mut out = Vec::new();
            (0..20)
                .map(|_| {
                    sample_rows(&d, beta, &mut rng, &mut out).unwrap();
                    out.clone()
                })
                .collect::<Vec<_>>()
        };
        prop_assert_eq!(draw(seed), draw(seed));
    }

    #[test]
    fn planted_solution_is_strictly_feasible(seed in any::<u64>(), m in 1usize..30, n in 1usize..6) {
        let mut rng = seeded(seed, 0);
        let a = gaussian(m, n, &mut rng);
        let x_star = normal_vec(n, &mut rng);
        let labels = binarize_rhs(&a, &x_star).unwrap();
        let feas = hadamard_transform(&a, &labels).unwrap();
        let ax = a.matvec(&x_star).unwrap();
        let fx = feas.base().matrix().matvec(&x_star).unwrap();
        for i in 0..m {
            if ax[i] != 0.0 {
                prop_assert!(fx[i] < 0.0);
            }
        }
        // sign agreement and feasibility coincide for any x off the hyperplanes
        let x = normal_vec(n, &mut rng);
        let ax = a.matvec(&x).unwrap();
        let fx = feas.base().matrix().matvec(&x).unwrap();
        for i in 0..m {
            let agrees = if ax[i] >= 0.0 { 1.0 } else { -1.0 } == labels[i];
            prop_assert_eq!(agrees, fx[i] < 0.0);
        }
    }

    #[test]
    fn pairwise_differences_are_linear(seed in any::<u64>(), m in 2usize..10, n in 1usize..5, c in -3.0f64..3.0) {
        let mut rng = seeded(seed, 0);
        let a = gaussian(m, n, &mut rng);
        let (p, _) = pairwise_differences(&a).unwrap();
        let (pc, _) = pairwise_differences(&a.scaled(c)).unwrap();
        let diff = pc.sub(&p.scaled(c)).unwrap().max_abs();
        prop_assert!(diff <= 1e-12 * (1.0 + p.max_abs() * c.abs()));
    }

    #[test]
    fn combined_row_views_match_materialized_rows(seed in any::<u64>(), m in 2usize..10, n in 1usize..5) {
        let mut rng = seeded(seed, 0);
        let a = gaussian(m, n, &mut rng);
        let labels: Vec<f64> = (0..m).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let feas = hadamard_transform(&a, &labels).unwrap().with_pairs().unwrap();
        for h in 0..feas.total_rows() {
            prop_assert_eq!(feas.combined_row(h).unwrap(), feas.combined().row(h));
        }
    }

    #[test]
    fn accuracy_ignores_positive_scaling(seed in any::<u64>(), m in 1usize..30, n in 1usize..6, s in 1e-3f64..1e3) {
        let mut rng = seeded(seed, 0);
        let a = gaussian(m, n, &mut rng);
        let labels: Vec<f64> = (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let x = normal_vec(n, &mut rng);
        let sx: Vec<f64> = x.iter().map(|v| v * s).collect();
        prop_assert_eq!(
            classification_accuracy(&a, &labels, &x).unwrap(),
            classification_accuracy(&a, &labels, &sx).unwrap()
        );
    }

    #[test]
    fn cover_partitions_nonzero_rows(seed in any::<u64>(), m in 1usize..40, n in 1usize..5, eps in 0.05f64..2.5) {
        let mut rng = seeded(seed, 0);
        let a = gaussian(m, n, &mut rng);
        for criterion in [ClusterCriterion::NormalizedDistance, ClusterCriterion::InnerProduct] {
            let p = epsilon_cover(&a, eps, criterion).unwrap();
            let mut seen: Vec<usize> = p.clusters.concat();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..m).collect::<Vec<_>>());
            for (members, centroid) in p.clusters.iter().zip(&p.centroids) {
                prop_assert!(!members.is_empty());
                for j in 0..n {
                    let mean = members.iter().map(|&i| a.get(i, j)).sum::<f64>() / members.len() as f64;
                    prop_assert!((mean - centroid[j]).abs() <= 1e-12 * (1.0 + mean.abs()));
                }
            }
        }
    }

    #[test]
    fn coreset_keeps_smallest_score_prefix(seed in any::<u64>(), m in 1usize..40, n in 1usize..5, c in 0.2f64..8.0) {
        let mut rng = seeded(seed, 0);
        let a = gaussian(m, n, &mut rng);
        let sys = LinearSystem::new(a.clone(), vec![0.0; m], Relation::Equality).unwrap();
        let x_ref = normal_vec(n, &mut rng);
        let core = extract_coreset(&sys, c, &x_ref).unwrap();
        let k = ((c * n as f64).round() as usize).clamp(1, m);
        prop_assert_eq!(core.indices.len(), k);
        prop_assert!(core.indices.windows(2).all(|w| w[0] < w[1]));
        let scores = score_rows(&a, &x_ref).unwrap();
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let mut kept: Vec<f64> = core.indices.iter().map(|&i| scores[i]).collect();
        kept.sort_by(f64::total_cmp);
        prop_assert_eq!(kept, sorted[..k].to_vec());
    }

    #[test]
    fn schedules_halve_down_to_the_floor(m in 1usize..100_000, n in 1usize..200) {
        let s = build_schedule(m, n);
        prop_assert_eq!(s.floor, 4 * n);
        prop_assert_eq!(s.working_size, 2 * n);
        for (k, &(at, size)) in s.events.iter().enumerate() {
            prop_assert_eq!(at, 100usize << k);
            prop_assert!(size >= 4 * n);
        }
        prop_assert!(s.events.windows(2).all(|w| w[1].1 <= w[0].1));
        if m > 4 * n {
            prop_assert_eq!(s.events.last().unwrap().1, 4 * n);
        } else {
            prop_assert!(s.events.is_empty());
        }
    }
}

#[test]
fn identical_seeds_give_identical_systems() {
    let spec = SpectrumSpec::ExponentialDecay;
    let a = generate_ill_conditioned(50, 6, &spec, &mut seeded(3, 0)).unwrap();
    let b = generate_ill_conditioned(50, 6, &spec, &mut seeded(3, 0)).unwrap();
    assert_eq!(a.matrix().as_slice(), b.matrix().as_slice());
    assert_eq!(dot(a.matrix().row(0), a.matrix().row(1)), dot(b.matrix().row(0), b.matrix().row(1)));
}
