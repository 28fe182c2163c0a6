//! Randomized invariant checks for the numerical building blocks.

use proptest::prelude::*;

use firecast::priors::transform::{internal_from_rho, rho_from_internal};
use firecast::scoring::{weighted_rps, ScoreConfig};
use firecast::sparse::SparseMatrix;
use firecast::wildfire::{hurdle_ba_cdf, hurdle_cnt_cdf};

proptest! {
    #[test]
    fn ar1_transform_round_trips(t in -20.0f64..20.0) {
        let rho = rho_from_internal(t);
        prop_assert!(rho > -1.0 && rho < 1.0);
        let back = internal_from_rho(rho);
        prop_assert!((back - t).abs() <= 1e-8 * (1.0 + t.abs()));
    }

    #[test]
    fn hurdle_cdfs_are_valid_distributions(
        p in 0.0f64..=1.0,
        lambda in 1e-6f64..50.0,
        mu in -5.0f64..5.0,
        sigma in 0.05f64..5.0,
    ) {
        let thresholds = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 1e4];
        let mut prev_cnt = -1.0;
        let mut prev_ba = -1.0;
        for &u in &thresholds {
            let fc = hurdle_cnt_cdf(p, lambda, u);
            let fb = hurdle_ba_cdf(p, mu, sigma, u);
            prop_assert!((0.0..=1.0).contains(&fc), "CNT CDF {fc} at {u}");
            prop_assert!((0.0..=1.0).contains(&fb), "BA CDF {fb} at {u}");
            prop_assert!(fc >= prev_cnt - 1e-12, "CNT CDF not monotone at {u}");
            prop_assert!(fb >= prev_ba - 1e-12, "BA CDF not monotone at {u}");
            prev_cnt = fc;
            prev_ba = fb;
        }
        // the two parts put identical mass on {0}
        let zc = hurdle_cnt_cdf(p, lambda, 0.0);
        let zb = hurdle_ba_cdf(p, mu, sigma, 0.0);
        prop_assert!((zc - zb).abs() < 1e-14);
        prop_assert!((zc - (1.0 - p)).abs() < 1e-14);
    }

    #[test]
    fn perfect_forecasts_score_zero_and_scores_stay_nonnegative(
        observed_idx in 0usize..6,
        raw in proptest::collection::vec(0.0f64..1.0, 6),
    ) {
        let thresholds: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let config = ScoreConfig::with_default_weights(thresholds.clone());
        let observed = observed_idx as f64;
        // a step CDF that jumps from 0 to 1 exactly at the observation
        let perfect: Vec<f64> = thresholds
            .iter()
            .map(|&u| if observed <= u { 1.0 } else { 0.0 })
            .collect();
        let score = weighted_rps(&perfect, observed, &config).unwrap();
        prop_assert!(score.abs() < 1e-15);

        // any monotone CDF gets a finite nonnegative score
        let mut cdf = raw.clone();
        cdf.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let score = weighted_rps(&cdf, observed, &config).unwrap();
        prop_assert!(score.is_finite() && score >= 0.0);
    }

    #[test]
    fn sparse_matvec_matches_dense_with_duplicates_summed(
        triplets in proptest::collection::vec((0usize..6, 0usize..6, -3.0f64..3.0), 0..40),
        x in proptest::collection::vec(-2.0f64..2.0, 6),
    ) {
        let m = SparseMatrix::from_triplets(6, 6, &triplets);
        let mut dense = [[0.0f64; 6]; 6];
        for &(i, j, v) in &triplets {
            dense[i][j] += v;
        }
        let y = m.mul_vec(&x);
        for i in 0..6 {
            let want: f64 = (0..6).map(|j| dense[i][j] * x[j]).sum();
            prop_assert!((y[i] - want).abs() < 1e-10, "row {i}: {} vs {want}", y[i]);
        }
    }
}
