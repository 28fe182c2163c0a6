//! Forecast verification: threshold-weighted ranked probability scores
//! and the fixed-effects GLM benchmark to compare against.

use crate::error::{Error, Result};
use crate::lgm::{
    optimize_hyper, EffectBlock, EffectKind, FitConfig, FitResult, LikelihoodFamily, ModelGraph,
    ObservationGroup, PredictorTerm, TermScale,
};
use crate::priors::{HyperBlock, HyperLayout};
use crate::sparse::SparseMatrix;
use crate::wildfire::{
    check_thresholds, hurdle_ba_cdf, poisson_cdf, PredictiveDistribution, PreparedData,
};

/// Thresholds and per-threshold weights of one score.
#[derive(Debug, Clone)]
pub struct ScoreConfig {
    pub thresholds: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ScoreConfig {
    /// Default weighting `w(u) = 1 − (1 − rank(u)/n)²`, increasing with
    /// the threshold rank so large severities dominate the score.
    pub fn with_default_weights(thresholds: Vec<f64>) -> Self {
        let n = thresholds.len() as f64;
        let weights = (1..=thresholds.len())
            .map(|rank| {
                let t = 1.0 - rank as f64 / n;
                1.0 - t * t
            })
            .collect();
        ScoreConfig {
            thresholds,
            weights,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_thresholds(&self.thresholds)?;
        if self.weights.len() != self.thresholds.len() {
            return Err(Error::DimensionMismatch {
                expected: self.thresholds.len(),
                got: self.weights.len(),
                context: "score weights".into(),
            });
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::ParameterRange(
                "score weights must be nonnegative".into(),
            ));
        }
        if self.weights.iter().all(|w| *w == 0.0) {
            return Err(Error::ParameterRange(
                "score weights must not all be zero".into(),
            ));
        }
        Ok(())
    }
}

/// Threshold-weighted ranked probability score
/// `Σ_u w(u) · (F(u) − 1{y ≤ u})²`. Zero exactly when the CDF is the
/// step function of the observation restricted to the grid.
pub fn weighted_rps(cdf: &[f64], observed: f64, config: &ScoreConfig) -> Result<f64> {
    config.validate()?;
    if cdf.len() != config.thresholds.len() {
        return Err(Error::DimensionMismatch {
            expected: config.thresholds.len(),
            got: cdf.len(),
            context: "CDF values".into(),
        });
    }
    for (k, w) in cdf.windows(2).enumerate() {
        if w[1] < w[0] - 1e-12 {
            return Err(Error::Inconsistency(format!(
                "CDF decreases between thresholds {k} and {}",
                k + 1
            )));
        }
    }
    if cdf.iter().any(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
        return Err(Error::Inconsistency("CDF values outside [0, 1]".into()));
    }
    let mut total = 0.0;
    for ((&f, &u), &w) in cdf.iter().zip(&config.thresholds).zip(&config.weights) {
        let step = if observed <= u { 1.0 } else { 0.0 };
        total += w * (f - step) * (f - step);
    }
    Ok(total)
}

/// Per-target and total scores of one prediction set.
#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub target_ids: Vec<String>,
    pub cnt_scores: Vec<f64>,
    pub ba_scores: Vec<f64>,
    pub total_cnt: f64,
    pub total_ba: f64,
}

impl ScoreReport {
    pub fn total(&self) -> f64 {
        self.total_cnt + self.total_ba
    }

    /// `target_id,variable,score` rows plus a summary footer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("target_id,variable,score\n");
        for (t, id) in self.target_ids.iter().enumerate() {
            out.push_str(&format!("{id},CNT,{:.12e}\n", self.cnt_scores[t]));
            out.push_str(&format!("{id},BA,{:.12e}\n", self.ba_scores[t]));
        }
        out.push_str(&format!("total,CNT,{:.12e}\n", self.total_cnt));
        out.push_str(&format!("total,BA,{:.12e}\n", self.total_ba));
        out.push_str(&format!("total,ALL,{:.12e}\n", self.total()));
        out
    }
}

/// Score a prediction set against held-out truth. Targets are aligned
/// by position; the prediction thresholds must equal the score
/// thresholds exactly.
pub fn evaluate(
    pred: &PredictiveDistribution,
    truth_cnt: &[f64],
    truth_ba: &[f64],
    config_cnt: &ScoreConfig,
    config_ba: &ScoreConfig,
) -> Result<ScoreReport> {
    if truth_cnt.len() != pred.n_targets() || truth_ba.len() != pred.n_targets() {
        return Err(Error::TargetMismatch(format!(
            "{} predictions vs {}/{} truths",
            pred.n_targets(),
            truth_cnt.len(),
            truth_ba.len()
        )));
    }
    if pred.thresholds_cnt != config_cnt.thresholds || pred.thresholds_ba != config_ba.thresholds
    {
        return Err(Error::TargetMismatch(
            "prediction thresholds differ from score thresholds".into(),
        ));
    }
    let mut cnt_scores = Vec::with_capacity(pred.n_targets());
    let mut ba_scores = Vec::with_capacity(pred.n_targets());
    for t in 0..pred.n_targets() {
        cnt_scores.push(weighted_rps(&pred.cdf_cnt[t], truth_cnt[t], config_cnt)?);
        ba_scores.push(weighted_rps(&pred.cdf_ba[t], truth_ba[t], config_ba)?);
    }
    let total_cnt = cnt_scores.iter().sum();
    let total_ba = ba_scores.iter().sum();
    Ok(ScoreReport {
        target_ids: pred.target_ids.clone(),
        cnt_scores,
        ba_scores,
        total_cnt,
        total_ba,
    })
}

/// Two-model comparison: totals side by side and the per-variable
/// winner, one text table.
pub fn comparison_table(name_a: &str, a: &ScoreReport, name_b: &str, b: &ScoreReport) -> String {
    let winner = |x: f64, y: f64| {
        if x < y {
            name_a
        } else if y < x {
            name_b
        } else {
            "tie"
        }
    };
    let mut out = format!("variable {name_a} {name_b} better\n");
    out.push_str(&format!(
        "CNT {:.6} {:.6} {}\n",
        a.total_cnt,
        b.total_cnt,
        winner(a.total_cnt, b.total_cnt)
    ));
    out.push_str(&format!(
        "BA {:.6} {:.6} {}\n",
        a.total_ba,
        b.total_ba,
        winner(a.total_ba, b.total_ba)
    ));
    out.push_str(&format!(
        "total {:.6} {:.6} {}\n",
        a.total(),
        b.total(),
        winner(a.total(), b.total())
    ));
    out
}

/// Fit a single fixed-effects likelihood (a GLM) with the shared
/// engine. `aux` adds a Gaussian noise precision hyperparameter.
pub fn fit_glm(
    y: Vec<f64>,
    design: SparseMatrix,
    family: LikelihoodFamily,
    config: &FitConfig,
) -> Result<FitResult> {
    let p = design.ncols();
    let gaussian = family == LikelihoodFamily::Gaussian;
    let layout = if gaussian {
        HyperLayout {
            blocks: vec![("noise".into(), HyperBlock::Vague { n: 1 })],
        }
    } else {
        HyperLayout::default()
    };
    let graph = ModelGraph {
        blocks: vec![EffectBlock {
            name: "beta".into(),
            kind: EffectKind::Fixed { dim: p },
        }],
        hyper_slices: vec![(0, 0)],
        groups: vec![ObservationGroup {
            name: "glm".into(),
            y,
            family,
            terms: vec![PredictorTerm {
                block: 0,
                design,
                scale: TermScale::Unit,
            }],
            aux_hyper: if gaussian { Some(0) } else { None },
        }],
        layout,
    };
    let start = vec![0.0; graph.layout.dim()];
    optimize_hyper(&graph, &start, config)
}

/// The benchmark model: a Poisson GLM for the counts (all observed
/// records) and a Gaussian GLM for log burnt area (positive records),
/// fixed effects only. Predictive CDFs use the point predictors at the
/// posterior mode: the Poisson CDF directly for CNT, and for BA a
/// mixture of P(CNT = 0) with the lognormal CDF.
pub fn benchmark_glm(
    prepared: &PreparedData,
    targets: &[usize],
    thresholds_cnt: &[f64],
    thresholds_ba: &[f64],
    config: &FitConfig,
) -> Result<PredictiveDistribution> {
    check_thresholds(thresholds_cnt)?;
    check_thresholds(thresholds_ba)?;
    let data = &prepared.dataset;
    let p = data.n_extended() + 1;
    let design_for = |rows: &[usize]| -> SparseMatrix {
        let mut triplets = Vec::with_capacity(rows.len() * p);
        for (row, &r) in rows.iter().enumerate() {
            triplets.push((row, 0, 1.0));
            for (j, &v) in prepared.covs[r].iter().enumerate() {
                triplets.push((row, j + 1, v));
            }
        }
        SparseMatrix::from_triplets(rows.len(), p, &triplets)
    };

    let cnt_rows: Vec<usize> = (0..data.n_records())
        .filter(|&r| prepared.usable[r] && data.records[r].cnt.is_some())
        .collect();
    let ba_rows: Vec<usize> = (0..data.n_records())
        .filter(|&r| prepared.usable[r] && data.records[r].ba.map(|b| b > 0.0).unwrap_or(false))
        .collect();
    if cnt_rows.is_empty() || ba_rows.is_empty() {
        return Err(Error::EmptyLikelihood(format!(
            "{} count rows, {} burnt-area rows",
            cnt_rows.len(),
            ba_rows.len()
        )));
    }
    let y_cnt: Vec<f64> = cnt_rows.iter().map(|&r| data.records[r].cnt.unwrap()).collect();
    let y_ba: Vec<f64> = ba_rows
        .iter()
        .map(|&r| data.records[r].ba.unwrap().ln())
        .collect();
    let fit_cnt = fit_glm(
        y_cnt,
        design_for(&cnt_rows),
        LikelihoodFamily::PoissonLog,
        config,
    )?;
    let fit_ba = fit_glm(
        y_ba,
        design_for(&ba_rows),
        LikelihoodFamily::Gaussian,
        config,
    )?;
    let sigma_ba = (-0.5 * fit_ba.theta[0]).exp();

    // point predictors at the targets
    let target_design = design_for(targets);
    for (row, &r) in targets.iter().enumerate() {
        if prepared.covs[r].iter().any(|v| !v.is_finite()) {
            return Err(Error::TargetMismatch(format!(
                "target {row} (record {r}) has missing covariates"
            )));
        }
    }
    let eta_cnt = target_design.mul_vec(&fit_cnt.mode);
    let eta_ba = target_design.mul_vec(&fit_ba.mode);

    let mut cdf_cnt = Vec::with_capacity(targets.len());
    let mut cdf_ba = Vec::with_capacity(targets.len());
    for t in 0..targets.len() {
        let lambda = eta_cnt[t].clamp(-700.0, 700.0).exp();
        cdf_cnt.push(
            thresholds_cnt
                .iter()
                .map(|&u| poisson_cdf(u.floor() as i64, lambda))
                .collect(),
        );
        // the benchmark has no hurdle: its zero probability is the
        // Poisson mass e^{−λ}, mixed with the lognormal for u > 0
        let p_pos = 1.0 - (-lambda).exp();
        cdf_ba.push(
            thresholds_ba
                .iter()
                .map(|&u| hurdle_ba_cdf(p_pos, eta_ba[t], sigma_ba, u))
                .collect(),
        );
    }
    let target_ids = targets
        .iter()
        .map(|&r| {
            let rec = &data.records[r];
            format!("c{}_y{}_m{}", data.cell_of[r], rec.year, rec.month)
        })
        .collect();
    Ok(PredictiveDistribution {
        target_ids,
        thresholds_cnt: thresholds_cnt.to_vec(),
        thresholds_ba: thresholds_ba.to_vec(),
        cdf_cnt,
        cdf_ba,
    })
}
