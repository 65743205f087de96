mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use pfstab::exact::*;
use pfstab::hmm::{DiscreteHmm, LinearGaussianModel};
use pfstab::verify::{lgss_block_log_likelihood, lgss_structure, numerical_rank, observability_matrix};
use proptest::prelude::*;

fn small_discrete() -> impl Strategy<Value = (DiscreteHmm<f64>, Vec<usize>)> {
    (any::<u64>(), 1usize..=3, 1usize..=3, 0usize..=6).prop_map(|(seed, m, k, n)| {
        let mut r = rng(seed);
        let model = random_discrete(&mut r, m, k);
        let y = random_symbols(&mut r, k, n);
        (model, y)
    })
}

fn small_lgss() -> impl Strategy<Value = (LinearGaussianModel<f64>, u64)> {
    (any::<u64>(), 1usize..=2, 1usize..=2).prop_map(|(seed, dx, dy)| (random_lgss(&mut rng(seed), dx, dy), seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_filter_matches_path_enumeration((model, y) in small_discrete()) {
        let trace = forward_filter_discrete(&model, &y).unwrap();
        let oracle = enumerate_paths(&model, &y);
        for (p, q) in trace.predictors.iter().zip(&oracle.predictors) {
            for (a, b) in p.iter().zip(q) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
        for (p, q) in trace.filters.iter().zip(&oracle.filters) {
            for (a, b) in p.iter().zip(q) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
        prop_assert!((trace.log_likelihood.exp() - oracle.likelihood).abs() < 1e-10);
    }

    #[test]
    fn likelihoods_of_all_records_sum_to_one(seed in any::<u64>(), m in 1usize..=3, k in 1usize..=3, n in 1usize..=4) {
        let model = random_discrete(&mut rng(seed), m, k);
        let mut total = 0.0;
        for code in 0..k.pow(n as u32) {
            let y: Vec<usize> = (0..n).map(|j| code / k.pow(j as u32) % k).collect();
            total += forward_filter_discrete(&model, &y).unwrap().log_likelihood.exp();
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predictor_variance_matches_definition((model, y) in small_discrete(), hs in proptest::collection::vec(-1.0f64..1.0, 3)) {
        let h = &hs[..model.states()];
        let got = exact_asymptotic_variance_discrete(&model, &y, &DVector::from_column_slice(h)).unwrap();
        let want = sigma2_oracle(&model, &y, h);
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1e-3), "{got} vs {want}");
    }

    #[test]
    fn filter_variance_matches_definition((model, y) in small_discrete(), hs in proptest::collection::vec(-1.0f64..1.0, 3)) {
        prop_assume!(!y.is_empty());
        let h = &hs[..model.states()];
        let n = y.len() - 1;
        let got = exact_filter_variance_discrete(&model, &y, &DVector::from_column_slice(h)).unwrap();
        let exact = enumerate_paths(&model, &y);
        let phi_h: f64 = exact.filters[n].iter().zip(h).map(|(p, v)| p * v).sum();
        let g_n: Vec<f64> = (0..model.states()).map(|x| model.emission()[(x, y[n])]).collect();
        let l_n: f64 = exact.predictors[n].iter().zip(&g_n).map(|(p, g)| p * g).sum();
        let shifted: Vec<f64> = h.iter().zip(&g_n).map(|(v, g)| g * (v - phi_h)).collect();
        let want = sigma2_oracle(&model, &y[..n], &shifted) / (l_n * l_n);
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1e-3), "{got} vs {want}");
    }

    #[test]
    fn variance_ignores_likelihood_column_scaling((model, y) in small_discrete(), c in 0.01f64..100.0) {
        prop_assume!(!y.is_empty());
        let mut g = model.emission().clone();
        g.column_mut(y[0]).scale_mut(c);
        let scaled = DiscreteHmm::new(model.transition().clone(), g, model.initial().clone()).unwrap();
        let h = DVector::from_fn(model.states(), |i, _| i as f64);
        let a = exact_asymptotic_variance_discrete(&model, &y, &h).unwrap();
        let b = exact_asymptotic_variance_discrete(&scaled, &y, &h).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-6));
    }

    #[test]
    fn kernels_compose((model, y) in small_discrete(), split in 0usize..=6) {
        let split = split.min(y.len());
        let h = DVector::from_fn(model.states(), |i, _| 1.0 + i as f64);
        let whole = unnormalized_kernel_apply_discrete(&model, &y, &h).unwrap();
        let inner = unnormalized_kernel_apply_discrete(&model, &y[split..], &h).unwrap();
        let outer = unnormalized_kernel_apply_discrete(&model, &y[..split], &inner).unwrap();
        for (a, b) in whole.iter().zip(outer.iter()) {
            prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kalman_matches_brute_force_conditioning((model, seed) in small_lgss(), n in 1usize..=8) {
        let y = simulate_lgss_obs(&model, n, seed);
        let trace = kalman_filter(&model, &y).unwrap();
        for k in 0..=n {
            let (m, c) = gaussian_brute_force_posterior(&model, &y[..k], k).unwrap();
            prop_assert!((&m - &trace.pred_means[k]).amax() < 1e-8);
            prop_assert!((&c - &trace.pred_covs[k]).amax() < 1e-8);
            if k < n {
                let (m, c) = gaussian_brute_force_posterior(&model, &y[..=k], k).unwrap();
                prop_assert!((&m - &trace.filt_means[k]).amax() < 1e-8);
                prop_assert!((&c - &trace.filt_covs[k]).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn filtering_never_increases_covariance((model, seed) in small_lgss(), n in 1usize..=10) {
        let y = simulate_lgss_obs(&model, n, seed);
        let trace = kalman_filter(&model, &y).unwrap();
        for k in 0..n {
            let gap = &trace.pred_covs[k] - &trace.filt_covs[k];
            let min_eig = gap.symmetric_eigenvalues().min();
            prop_assert!(min_eig > -1e-10, "k = {k}: {min_eig}");
        }
    }

    #[test]
    fn block_likelihood_is_kalman_product_from_point_mass((model, seed) in small_lgss(), n in 1usize..=6) {
        let y = simulate_lgss_obs(&model, n, seed);
        let x0 = DVector::from_fn(model.state_dim(), |i, _| 0.3 - 0.5 * i as f64);
        let dx = model.state_dim();
        let from_x0 = model.with_initial(x0.clone(), DMatrix::zeros(dx, dx)).unwrap();
        let kalman = kalman_filter(&from_x0, &y).unwrap().log_likelihood();
        let block = lgss_block_log_likelihood(&model, &x0, &y).unwrap();
        // relative 1e-8 on the density is 1e-8 absolute on its logarithm
        prop_assert!((kalman - block).abs() < 1e-8, "{kalman} vs {block}");
    }

    #[test]
    fn ranks_ignore_positive_row_scaling_of_b((model, _seed) in small_lgss(), scales in proptest::collection::vec(0.01f64..100.0, 2)) {
        let dy = model.obs_dim();
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&scales[..dy]));
        let scaled = LinearGaussianModel::new(
            model.a().clone(), model.r().clone(), &d * model.b(), model.s().clone(),
            model.init_mean().clone(), model.init_cov().clone(),
        ).unwrap();
        let a = lgss_structure(&model, 4).unwrap();
        let b = lgss_structure(&scaled, 4).unwrap();
        prop_assert_eq!(a.r_star, b.r_star);
        prop_assert_eq!(a.obs_ranks, b.obs_ranks);
    }

    #[test]
    fn numerical_rank_agrees_with_row_reduction((model, _seed) in small_lgss(), n in 1usize..=4) {
        let o = observability_matrix(&model, n);
        prop_assert_eq!(numerical_rank(&o), rref_rank(&o, 1e-9));
    }
}
