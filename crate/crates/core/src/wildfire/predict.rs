//! Hurdle predictive distributions: Monte Carlo over posterior latent
//! draws, composed into CNT and BA threshold-CDF tables.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, DiscreteCDF, Normal, Poisson};

use crate::error::{Error, Result};
use crate::geometry::projector;
use crate::lgm::likelihood::sigmoid;
use crate::spacetime::SpaceTimeIndex;
use crate::sparse::SparseMatrix;

use super::data::{WildfireDataset, MONTH_MIN, N_PERIODS};
use super::model::{rows_of, TwoPartFit, ALPHA_INDEX, NOISE_INDEX};

/// Number of severity thresholds per variable in the default grids.
pub const N_SEVERITY: usize = 28;

/// Default CNT severity thresholds (28 values).
pub fn default_thresholds_cnt() -> Vec<f64> {
    let mut t: Vec<f64> = (0..=20).map(|k| k as f64).collect();
    t.extend([25.0, 30.0, 40.0, 50.0, 75.0, 100.0, 150.0]);
    t
}

/// Default BA severity thresholds (28 values).
pub fn default_thresholds_ba() -> Vec<f64> {
    vec![
        0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0, 750.0, 1000.0,
        1500.0, 2000.0, 3000.0, 4000.0, 5000.0, 7500.0, 10000.0, 15000.0, 20000.0, 30000.0,
        40000.0, 50000.0, 75000.0, 100000.0,
    ]
}

/// Thresholds must be nonnegative and strictly ascending.
pub fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::UnorderedThresholds("empty threshold list".into()));
    }
    if thresholds[0] < 0.0 {
        return Err(Error::UnorderedThresholds(format!(
            "first threshold {} is negative",
            thresholds[0]
        )));
    }
    for w in thresholds.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::UnorderedThresholds(format!(
                "thresholds {} and {} are not strictly ascending",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Poisson CDF `P(X ≤ k)` with guarded tails: extreme rates short-cut
/// to 0 or 1 instead of round-tripping through the incomplete gamma.
pub fn poisson_cdf(k: i64, lambda: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    if lambda <= 0.0 {
        return 1.0;
    }
    if !lambda.is_finite() {
        return 0.0; // all mass escapes past any finite threshold
    }
    // far outside ±60 standard deviations the result is 0 or 1 to
    // double precision; skip the incomplete-gamma evaluation, which is
    // not reliable for extreme inputs
    let kf = k as f64;
    let sd = lambda.sqrt().max(1.0);
    if kf < lambda - 60.0 * sd {
        return 0.0;
    }
    if kf > lambda + 60.0 * sd {
        return 1.0;
    }
    Poisson::new(lambda).map(|d| d.cdf(k as u64)).unwrap_or(0.0)
}

/// Hurdle count CDF at threshold `u ≥ 0`:
/// `P(CNT ≤ u) = (1 − p) + p · F_Pois(⌊u⌋ − 1; Λ)`.
pub fn hurdle_cnt_cdf(p: f64, lambda: f64, u: f64) -> f64 {
    if u < 0.0 {
        return 0.0;
    }
    (1.0 - p) + p * poisson_cdf(u.floor() as i64 - 1, lambda)
}

/// Hurdle burnt-area CDF: `1 − p` at `u = 0`, then
/// `(1 − p) + p · Φ((log u − μ)/σ)` for `u > 0`.
pub fn hurdle_ba_cdf(p: f64, mu: f64, sigma: f64, u: f64) -> f64 {
    if u < 0.0 {
        return 0.0;
    }
    if u == 0.0 {
        return 1.0 - p;
    }
    let z = (u.ln() - mu) / sigma;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (1.0 - p) + p * normal.cdf(z)
}

/// Per-target CDF tables over the severity thresholds.
#[derive(Debug, Clone)]
pub struct PredictiveDistribution {
    pub target_ids: Vec<String>,
    pub thresholds_cnt: Vec<f64>,
    pub thresholds_ba: Vec<f64>,
    /// `[target][threshold]`
    pub cdf_cnt: Vec<Vec<f64>>,
    pub cdf_ba: Vec<Vec<f64>>,
}

impl PredictiveDistribution {
    pub fn n_targets(&self) -> usize {
        self.target_ids.len()
    }

    /// One CSV row per (target, variable) with the CDF values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("target_id,variable");
        for k in 1..=self.thresholds_cnt.len().max(self.thresholds_ba.len()) {
            out.push_str(&format!(",v{k}"));
        }
        out.push('\n');
        for (t, id) in self.target_ids.iter().enumerate() {
            for (variable, row) in [("CNT", &self.cdf_cnt[t]), ("BA", &self.cdf_ba[t])] {
                out.push_str(&format!("{id},{variable}"));
                for v in row.iter() {
                    out.push_str(&format!(",{v:.12e}"));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    /// Parse a prediction CSV written by [`Self::to_csv`]. The
    /// thresholds are not stored in the file, so the caller supplies
    /// the grids the file was written against.
    pub fn read_csv(
        text: &str,
        thresholds_cnt: &[f64],
        thresholds_ba: &[f64],
    ) -> Result<PredictiveDistribution> {
        check_thresholds(thresholds_cnt)?;
        check_thresholds(thresholds_ba)?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.starts_with("target_id,variable") => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected a prediction CSV header".into(),
                })
            }
        }
        let mut target_ids = Vec::new();
        let mut cdf_cnt = Vec::new();
        let mut cdf_ba = Vec::new();
        let mut pending: Option<(String, Vec<f64>)> = None;
        for (idx, raw) in lines {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let mut fields = raw.split(',');
            let id = fields.next().unwrap_or("").to_string();
            let variable = fields.next().unwrap_or("");
            let values: Vec<f64> = fields
                .map(|tok| {
                    tok.trim().parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("bad CDF value `{tok}`"),
                    })
                })
                .collect::<Result<_>>()?;
            let expect = |want: usize| -> Result<()> {
                if values.len() != want {
                    return Err(Error::Parse {
                        line,
                        message: format!("{} CDF values, thresholds have {want}", values.len()),
                    });
                }
                Ok(())
            };
            match (variable, &mut pending) {
                ("CNT", p @ None) => {
                    expect(thresholds_cnt.len())?;
                    *p = Some((id, values));
                }
                ("BA", Some((cnt_id, _))) if *cnt_id == id => {
                    expect(thresholds_ba.len())?;
                    let (cnt_id, cnt_values) = pending.take().expect("pending row");
                    target_ids.push(cnt_id);
                    cdf_cnt.push(cnt_values);
                    cdf_ba.push(values);
                }
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("expected alternating CNT/BA rows, got `{variable}`"),
                    })
                }
            }
        }
        if pending.is_some() {
            return Err(Error::Parse {
                line: 0,
                message: "file ends with an unpaired CNT row".into(),
            });
        }
        Ok(PredictiveDistribution {
            target_ids,
            thresholds_cnt: thresholds_cnt.to_vec(),
            thresholds_ba: thresholds_ba.to_vec(),
            cdf_cnt,
            cdf_ba,
        })
    }
}

/// Latent-to-predictor maps for a set of targets against one fitted part.
struct TargetMaps {
    occ: SparseMatrix,
    cnt: SparseMatrix,
    ba: SparseMatrix,
}

fn target_maps(
    fit: &TwoPartFit,
    dataset: &WildfireDataset,
    targets: &[usize],
) -> Result<TargetMaps> {
    let pts: Vec<crate::geometry::Point> = targets
        .iter()
        .map(|&r| dataset.cells[dataset.cell_of[r]])
        .collect();
    let fine_rows = rows_of(projector(&fit.frame.mesh_fine, &pts)?.matrix());
    let coarse_rows = rows_of(projector(&fit.frame.mesh_coarse, &pts)?.matrix());
    let st = SpaceTimeIndex {
        n_space: fit.frame.mesh_coarse.n_vertices(),
        n_periods: N_PERIODS,
        n_replicates: fit.n_years,
    };
    let p = fit.n_extended + 1;
    let alpha = fit.joint.theta[ALPHA_INDEX].exp();

    // per-target standardized covariates and time indices
    let mut ext_rows = Vec::with_capacity(targets.len());
    let mut months = Vec::with_capacity(targets.len());
    let mut years = Vec::with_capacity(targets.len());
    for (row, &r) in targets.iter().enumerate() {
        let rec = &dataset.records[r];
        let ext = fit.standardization.apply(&dataset.extended_row(r));
        if ext.len() + 1 != p {
            return Err(Error::DimensionMismatch {
                expected: p - 1,
                got: ext.len(),
                context: format!("covariates of target {row}"),
            });
        }
        if ext.iter().any(|v| !v.is_finite()) {
            return Err(Error::TargetMismatch(format!(
                "target {row} (record {r}) has missing covariates"
            )));
        }
        let year = rec.year - fit.min_year;
        if year < 0 || year as usize >= fit.n_years {
            return Err(Error::TargetMismatch(format!(
                "target {row} year {} outside the fitted span {}..{}",
                rec.year,
                fit.min_year,
                fit.min_year + fit.n_years as i32 - 1
            )));
        }
        ext_rows.push(ext);
        months.push((rec.month - MONTH_MIN) as usize);
        years.push(year as usize);
    }

    // compose one sparse map per predictor over the full latent vector
    let build = |blocks: &[(&str, BlockRole)], fitted: &crate::lgm::FitResult, dim: usize| {
        let mut triplets = Vec::new();
        for &(name, role) in blocks {
            let (offset, _) = fitted
                .block_slice(name)
                .ok_or_else(|| Error::Inconsistency(format!("missing latent block {name}")))?;
            for row in 0..targets.len() {
                match role {
                    BlockRole::Fixed => {
                        triplets.push((row, offset, 1.0));
                        for (j, &v) in ext_rows[row].iter().enumerate() {
                            triplets.push((row, offset + 1 + j, v));
                        }
                    }
                    BlockRole::Fine => {
                        for &(v, w) in &fine_rows[row] {
                            triplets.push((row, offset + v, w));
                        }
                    }
                    BlockRole::Coarse(scale) => {
                        for &(v, w) in &coarse_rows[row] {
                            triplets.push((
                                row,
                                offset + st.flat(v, months[row], years[row]),
                                scale * w,
                            ));
                        }
                    }
                }
            }
        }
        Ok::<SparseMatrix, Error>(SparseMatrix::from_triplets(targets.len(), dim, &triplets))
    };

    #[derive(Clone, Copy)]
    enum BlockRole {
        Fixed,
        Fine,
        Coarse(f64),
    }

    let occ_dim: usize = fit.occurrence.mode.len();
    let joint_dim: usize = fit.joint.mode.len();
    let occ = build(
        &[
            ("fixed_z", BlockRole::Fixed),
            ("w1_z", BlockRole::Fine),
            ("w2_z", BlockRole::Coarse(1.0)),
        ],
        &fit.occurrence,
        occ_dim,
    )?;
    let cnt = build(
        &[
            ("fixed_cnt", BlockRole::Fixed),
            ("w1_cnt", BlockRole::Fine),
            ("w2_cnt", BlockRole::Coarse(1.0)),
            ("w2_ba", BlockRole::Coarse(alpha)),
        ],
        &fit.joint,
        joint_dim,
    )?;
    let ba = build(
        &[
            ("fixed_ba", BlockRole::Fixed),
            ("w1_ba", BlockRole::Fine),
            ("w2_ba", BlockRole::Coarse(1.0)),
        ],
        &fit.joint,
        joint_dim,
    )?;
    Ok(TargetMaps { occ, cnt, ba })
}

/// Monte Carlo hurdle predictions for target records of `dataset`
/// (typically the dataset the model was fitted on, including masked
/// rows). Deterministic given the seed.
pub fn predictive_distribution(
    fit: &TwoPartFit,
    dataset: &WildfireDataset,
    targets: &[usize],
    thresholds_cnt: &[f64],
    thresholds_ba: &[f64],
    seed: u64,
    n_samples: usize,
) -> Result<PredictiveDistribution> {
    check_thresholds(thresholds_cnt)?;
    check_thresholds(thresholds_ba)?;
    if targets.is_empty() || n_samples == 0 {
        return Err(Error::TargetMismatch(format!(
            "{} targets, {n_samples} samples",
            targets.len()
        )));
    }
    let maps = target_maps(fit, dataset, targets)?;
    let sigma_tot = (-0.5 * fit.joint.theta[NOISE_INDEX]).exp();

    // all draws up front: per-draw predictor vectors for each target
    let occ_draws = fit.occurrence.sample_latent(seed, n_samples);
    let joint_draws = fit.joint.sample_latent(seed ^ 0x9e3779b97f4a7c15, n_samples);
    let mut p_draw = Vec::with_capacity(n_samples);
    let mut lambda_draw = Vec::with_capacity(n_samples);
    let mut mu_draw = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        let eta_z = maps.occ.mul_vec(&occ_draws[s]);
        p_draw.push(eta_z.into_iter().map(sigmoid).collect::<Vec<f64>>());
        let eta_c = maps.cnt.mul_vec(&joint_draws[s]);
        lambda_draw.push(
            eta_c
                .into_iter()
                .map(|e| e.clamp(-700.0, 700.0).exp())
                .collect::<Vec<f64>>(),
        );
        mu_draw.push(maps.ba.mul_vec(&joint_draws[s]));
    }

    // average the hurdle CDFs over draws, one target at a time
    let per_target: Vec<(Vec<f64>, Vec<f64>)> = (0..targets.len())
        .into_par_iter()
        .map(|t| {
            let mut cnt = vec![0.0; thresholds_cnt.len()];
            let mut ba = vec![0.0; thresholds_ba.len()];
            for s in 0..n_samples {
                let (p, lambda, mu) = (p_draw[s][t], lambda_draw[s][t], mu_draw[s][t]);
                for (k, &u) in thresholds_cnt.iter().enumerate() {
                    cnt[k] += hurdle_cnt_cdf(p, lambda, u);
                }
                for (k, &u) in thresholds_ba.iter().enumerate() {
                    ba[k] += hurdle_ba_cdf(p, mu, sigma_tot, u);
                }
            }
            let inv = 1.0 / n_samples as f64;
            for v in cnt.iter_mut().chain(ba.iter_mut()) {
                *v *= inv;
            }
            (cnt, ba)
        })
        .collect();

    let target_ids = targets
        .iter()
        .map(|&r| {
            let rec = &dataset.records[r];
            format!("c{}_y{}_m{}", dataset.cell_of[r], rec.year, rec.month)
        })
        .collect();
    let (cdf_cnt, cdf_ba) = per_target.into_iter().unzip();
    Ok(PredictiveDistribution {
        target_ids,
        thresholds_cnt: thresholds_cnt.to_vec(),
        thresholds_ba: thresholds_ba.to_vec(),
        cdf_cnt,
        cdf_ba,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hurdle_count_arithmetic() {
        // single draw with p = 0.4, Λ = 2
        assert!((hurdle_cnt_cdf(0.4, 2.0, 0.0) - 0.6).abs() < 1e-15);
        let expect = 0.6 + 0.4 * (-2.0f64).exp();
        assert!((hurdle_cnt_cdf(0.4, 2.0, 1.0) - expect).abs() < 1e-12);
        assert!((expect - 0.6541).abs() < 1e-4);
        // non-integer thresholds floor to the count below
        assert_eq!(
            hurdle_cnt_cdf(0.4, 2.0, 1.7),
            hurdle_cnt_cdf(0.4, 2.0, 1.0)
        );
        assert_eq!(hurdle_cnt_cdf(0.4, 2.0, -1.0), 0.0);
    }

    #[test]
    fn hurdle_degenerate_p_zero() {
        for &u in &[0.0, 1.0, 10.0] {
            assert_eq!(hurdle_cnt_cdf(0.0, 5.0, u), 1.0);
            assert_eq!(hurdle_ba_cdf(0.0, 3.0, 1.0, u), 1.0);
        }
    }

    #[test]
    fn hurdle_ba_zero_threshold_and_monotonicity() {
        let (p, mu, sigma) = (0.35, 2.0, 0.8);
        assert!((hurdle_ba_cdf(p, mu, sigma, 0.0) - 0.65).abs() < 1e-15);
        let ts = default_thresholds_ba();
        let vals: Vec<f64> = ts.iter().map(|&u| hurdle_ba_cdf(p, mu, sigma, u)).collect();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0], "CDF must be nondecreasing");
        }
        assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
        // count hurdle shares the zero mass exactly
        assert_eq!(hurdle_cnt_cdf(p, 2.0, 0.0), hurdle_ba_cdf(p, mu, sigma, 0.0));
    }

    #[test]
    fn default_threshold_grids() {
        let c = default_thresholds_cnt();
        let b = default_thresholds_ba();
        assert_eq!(c.len(), N_SEVERITY);
        assert_eq!(b.len(), N_SEVERITY);
        check_thresholds(&c).unwrap();
        check_thresholds(&b).unwrap();
        assert_eq!(c[0], 0.0);
        assert_eq!(b[0], 0.0);
    }

    #[test]
    fn threshold_validation_rejects_disorder() {
        assert!(check_thresholds(&[]).is_err());
        assert!(check_thresholds(&[-1.0, 0.0]).is_err());
        assert!(check_thresholds(&[0.0, 1.0, 1.0]).is_err());
        assert!(check_thresholds(&[0.0, 2.0, 1.0]).is_err());
        check_thresholds(&[0.0, 0.5, 2.0]).unwrap();
    }

    #[test]
    fn poisson_cdf_edge_cases() {
        assert_eq!(poisson_cdf(-1, 2.0), 0.0);
        assert_eq!(poisson_cdf(3, 0.0), 1.0);
        // k = 0: P(X = 0) = e^{−λ}
        assert!((poisson_cdf(0, 2.0) - (-2.0f64).exp()).abs() < 1e-12);
        assert_eq!(poisson_cdf(5, f64::INFINITY), 0.0);
        assert_eq!(poisson_cdf(150, 1e9), 0.0);
        assert_eq!(poisson_cdf(2_000_000, 1e6), 1.0);
    }

    #[test]
    fn csv_round_trip_preserves_the_tables() {
        let pred = PredictiveDistribution {
            target_ids: vec!["c3_y1995_m4".into(), "c7_y1996_m8".into()],
            thresholds_cnt: vec![0.0, 1.0, 5.0],
            thresholds_ba: vec![0.0, 10.0],
            cdf_cnt: vec![vec![0.25, 0.5, 0.875], vec![0.1, 0.2, 0.93]],
            cdf_ba: vec![vec![0.25, 0.66], vec![0.1, 0.44]],
        };
        let text = pred.to_csv();
        let back =
            PredictiveDistribution::read_csv(&text, &pred.thresholds_cnt, &pred.thresholds_ba)
                .unwrap();
        assert_eq!(back.target_ids, pred.target_ids);
        for t in 0..2 {
            for (a, b) in back.cdf_cnt[t].iter().zip(&pred.cdf_cnt[t]) {
                assert!((a - b).abs() < 1e-11);
            }
            for (a, b) in back.cdf_ba[t].iter().zip(&pred.cdf_ba[t]) {
                assert!((a - b).abs() < 1e-11);
            }
        }
        // malformed inputs
        assert!(PredictiveDistribution::read_csv("nope\n", &[0.0], &[0.0]).is_err());
        let unpaired = "target_id,variable,v1\nx,CNT,0.5\n";
        assert!(PredictiveDistribution::read_csv(unpaired, &[0.0], &[0.0]).is_err());
        let wrong_len = "target_id,variable,v1\nx,CNT,0.5,0.6\nx,BA,0.5\n";
        assert!(PredictiveDistribution::read_csv(wrong_len, &[0.0], &[0.0]).is_err());
    }
}
