//! Model assembly and fitting for the two-part wildfire model: a
//! Bernoulli occurrence part and a joint Poisson/Gaussian severity part
//! with a shared space-time effect.

use crate::error::{Error, Result};
use crate::geometry::{fem_matrices, projector, Mesh};
use crate::lgm::{
    evaluate_at, optimize_hyper, EffectBlock, EffectKind, FitConfig, FitResult, LikelihoodFamily,
    ModelGraph, ObservationGroup, PredictorTerm, TermScale,
};
use crate::priors::{HyperBlock, HyperLayout, PcAr1Prior, PcMaternPrior};
use crate::spacetime::SpaceTimeIndex;
use crate::spde::{baselines_for_mesh, transfer_to_vertices};
use crate::sparse::SparseMatrix;

use super::data::{
    empirical_sigma_hat, SigmaTarget, Standardization, WildfireDataset, N_PERIODS,
};

/// Penalized-complexity prior calibrations shared by all space-time
/// effects: P(range < range0) = alpha_range, P(σ > sigma0) =
/// alpha_sigma, P(ρ < rho_ref) = alpha_rho.
#[derive(Debug, Clone, Copy)]
pub struct PriorSettings {
    pub range0: f64,
    pub alpha_range: f64,
    pub sigma0: f64,
    pub alpha_sigma: f64,
    pub rho_ref: f64,
    pub alpha_rho: f64,
}

impl Default for PriorSettings {
    fn default() -> Self {
        PriorSettings {
            range0: 55.0,
            alpha_range: 0.1,
            sigma0: 0.5,
            alpha_sigma: 0.1,
            rho_ref: 0.0,
            alpha_rho: 0.05,
        }
    }
}

/// Dataset with standardized covariates and derived bookkeeping.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub dataset: WildfireDataset,
    pub standardization: Standardization,
    /// Standardized extended covariate rows (NaN where missing).
    pub covs: Vec<Vec<f64>>,
    /// Records whose covariates are all present.
    pub usable: Vec<bool>,
    pub min_year: i32,
    pub n_years: usize,
}

/// Standardize covariates and precompute per-record usability.
pub fn prepare(dataset: WildfireDataset) -> Result<PreparedData> {
    let rows: Vec<Vec<f64>> = (0..dataset.n_records())
        .map(|r| dataset.extended_row(r))
        .collect();
    let standardization = Standardization::fit(&rows)?;
    let covs: Vec<Vec<f64>> = rows.iter().map(|r| standardization.apply(r)).collect();
    let usable: Vec<bool> = covs
        .iter()
        .map(|r| r.iter().all(|v| v.is_finite()))
        .collect();
    let n_dropped = usable.iter().filter(|u| !**u).count();
    if n_dropped > 0 {
        log::info!("{n_dropped} records dropped from likelihoods (missing covariates)");
    }
    let (min_year, n_years) = dataset.year_span();
    Ok(PreparedData {
        dataset,
        standardization,
        covs,
        usable,
        min_year,
        n_years,
    })
}

/// Meshes, cell-level projectors, and vertex-level σ̂ fields shared by
/// both model parts.
#[derive(Debug, Clone)]
pub struct ModelFrame {
    pub mesh_fine: Mesh,
    pub mesh_coarse: Mesh,
    /// cells × fine vertices
    pub a_fine: SparseMatrix,
    /// cells × coarse vertices
    pub a_coarse: SparseMatrix,
    pub sigma_hat_z: Vec<f64>,
    pub sigma_hat_cnt: Vec<f64>,
    pub sigma_hat_ba: Vec<f64>,
}

pub fn build_frame(
    prepared: &PreparedData,
    mesh_fine: Mesh,
    mesh_coarse: Mesh,
) -> Result<ModelFrame> {
    let cells = &prepared.dataset.cells;
    let a_fine = projector(&mesh_fine, cells)?.matrix().clone();
    let a_coarse = projector(&mesh_coarse, cells)?.matrix().clone();
    let sig = |t| empirical_sigma_hat(&prepared.dataset, t);
    let sigma_hat_z = transfer_to_vertices(cells, &sig(SigmaTarget::Occurrence), &mesh_fine)?;
    let sigma_hat_cnt = transfer_to_vertices(cells, &sig(SigmaTarget::Count), &mesh_fine)?;
    let sigma_hat_ba = transfer_to_vertices(cells, &sig(SigmaTarget::BurntArea), &mesh_fine)?;
    Ok(ModelFrame {
        mesh_fine,
        mesh_coarse,
        a_fine,
        a_coarse,
        sigma_hat_z,
        sigma_hat_cnt,
        sigma_hat_ba,
    })
}

/// Per-row (column, value) lists of a sparse matrix, for stitching
/// projector rows into record-level designs.
pub(crate) fn rows_of(m: &SparseMatrix) -> Vec<Vec<(usize, f64)>> {
    let mut rows = vec![Vec::new(); m.nrows()];
    for (i, j, v) in m.iter() {
        rows[i].push((j, v));
    }
    rows
}

struct RecordDesigns {
    fixed: SparseMatrix,
    w1: SparseMatrix,
    w2: SparseMatrix,
}

/// Builds the three design matrices of one likelihood part over a
/// record subset: intercept + standardized covariates, the fine-mesh
/// spatial projector, and the coarse-mesh space-time projector.
fn record_designs(
    prepared: &PreparedData,
    frame: &ModelFrame,
    records: &[usize],
) -> RecordDesigns {
    let n_ext = prepared.dataset.n_extended();
    let fine_rows = rows_of(&frame.a_fine);
    let coarse_rows = rows_of(&frame.a_coarse);
    let st = SpaceTimeIndex {
        n_space: frame.mesh_coarse.n_vertices(),
        n_periods: N_PERIODS,
        n_replicates: prepared.n_years,
    };

    let mut fixed = Vec::with_capacity(records.len() * (n_ext + 1));
    let mut w1 = Vec::new();
    let mut w2 = Vec::new();
    for (row, &r) in records.iter().enumerate() {
        fixed.push((row, 0, 1.0));
        for (j, &v) in prepared.covs[r].iter().enumerate() {
            fixed.push((row, j + 1, v));
        }
        let cell = prepared.dataset.cell_of[r];
        for &(v, w) in &fine_rows[cell] {
            w1.push((row, v, w));
        }
        let rec = &prepared.dataset.records[r];
        let month = (rec.month - super::data::MONTH_MIN) as usize;
        let year = (rec.year - prepared.min_year) as usize;
        for &(v, w) in &coarse_rows[cell] {
            w2.push((row, st.flat(v, month, year), w));
        }
    }
    let m = records.len();
    RecordDesigns {
        fixed: SparseMatrix::from_triplets(m, n_ext + 1, &fixed),
        w1: SparseMatrix::from_triplets(m, frame.mesh_fine.n_vertices(), &w1),
        w2: SparseMatrix::from_triplets(m, st.len(), &w2),
    }
}

fn spde_block(name: &str, frame: &ModelFrame, sigma_hat: &[f64]) -> EffectBlock {
    let fem = fem_matrices(&frame.mesh_fine);
    let (tau0, kappa0) = baselines_for_mesh(&frame.mesh_fine);
    EffectBlock {
        name: name.into(),
        kind: EffectKind::SpdeNonstationary {
            fem,
            tau0,
            kappa0,
            sigma_hat: sigma_hat.to_vec(),
        },
    }
}

fn spacetime_block(name: &str, frame: &ModelFrame, n_years: usize) -> EffectBlock {
    EffectBlock {
        name: name.into(),
        kind: EffectKind::Spacetime {
            fem: fem_matrices(&frame.mesh_coarse),
            n_periods: N_PERIODS,
            n_replicates: n_years,
        },
    }
}

fn pc_blocks(
    name: &str,
    priors: &PriorSettings,
) -> Result<[(String, HyperBlock); 2]> {
    let matern = PcMaternPrior::new(
        priors.range0,
        priors.alpha_range,
        priors.sigma0,
        priors.alpha_sigma,
    )?;
    let ar1 = PcAr1Prior::new(priors.rho_ref, priors.alpha_rho)?;
    Ok([
        (name.to_string(), HyperBlock::PcMatern(matern)),
        (format!("{name}_rho"), HyperBlock::PcAr1(ar1)),
    ])
}

/// The occurrence model plus the record index of each observation row.
pub struct OccurrenceModel {
    pub graph: ModelGraph,
    pub rows: Vec<usize>,
}

/// Part one: Bernoulli-logit occurrence over all records with an
/// observed count.
pub fn build_occurrence_model(
    prepared: &PreparedData,
    frame: &ModelFrame,
    priors: &PriorSettings,
) -> Result<OccurrenceModel> {
    let rows: Vec<usize> = (0..prepared.dataset.n_records())
        .filter(|&r| prepared.usable[r] && prepared.dataset.records[r].cnt.is_some())
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyLikelihood(
            "no records with observed counts".into(),
        ));
    }
    let y: Vec<f64> = rows
        .iter()
        .map(|&r| {
            if prepared.dataset.records[r].cnt.unwrap() > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let designs = record_designs(prepared, frame, &rows);
    let [m, a] = pc_blocks("w2_z", priors)?;
    let layout = HyperLayout {
        blocks: vec![("w1_z".into(), HyperBlock::Vague { n: 3 }), m, a],
    };
    let graph = ModelGraph {
        blocks: vec![
            EffectBlock {
                name: "fixed_z".into(),
                kind: EffectKind::Fixed {
                    dim: prepared.dataset.n_extended() + 1,
                },
            },
            spde_block("w1_z", frame, &frame.sigma_hat_z),
            spacetime_block("w2_z", frame, prepared.n_years),
        ],
        hyper_slices: vec![(0, 0), (0, 3), (3, 3)],
        groups: vec![ObservationGroup {
            name: "occurrence".into(),
            y,
            family: LikelihoodFamily::BernoulliLogit,
            terms: vec![
                PredictorTerm {
                    block: 0,
                    design: designs.fixed,
                    scale: TermScale::Unit,
                },
                PredictorTerm {
                    block: 1,
                    design: designs.w1,
                    scale: TermScale::Unit,
                },
                PredictorTerm {
                    block: 2,
                    design: designs.w2,
                    scale: TermScale::Unit,
                },
            ],
            aux_hyper: None,
        }],
        layout,
    };
    graph.validate()?;
    Ok(OccurrenceModel { graph, rows })
}

/// θ index of the shared-copy coefficient log α in the joint layout.
pub const ALPHA_INDEX: usize = 12;
/// θ index of the burnt-area noise log precision in the joint layout.
pub const NOISE_INDEX: usize = 13;

/// The joint severity model plus the record indices behind each
/// observation row of its two likelihoods.
pub struct JointModel {
    pub graph: ModelGraph,
    pub cnt_rows: Vec<usize>,
    pub ba_rows: Vec<usize>,
}

/// Part two: Poisson on CNT − 1 over positive counts and Gaussian on
/// log BA over positive burnt areas, with α·W₂^BA shared into the count
/// predictor.
pub fn build_joint_model(
    prepared: &PreparedData,
    frame: &ModelFrame,
    priors: &PriorSettings,
) -> Result<JointModel> {
    let cnt_rows: Vec<usize> = (0..prepared.dataset.n_records())
        .filter(|&r| {
            prepared.usable[r]
                && prepared.dataset.records[r]
                    .cnt
                    .map(|c| c > 0.0)
                    .unwrap_or(false)
        })
        .collect();
    let ba_rows: Vec<usize> = (0..prepared.dataset.n_records())
        .filter(|&r| {
            prepared.usable[r]
                && prepared.dataset.records[r]
                    .ba
                    .map(|b| b > 0.0)
                    .unwrap_or(false)
        })
        .collect();
    if cnt_rows.is_empty() || ba_rows.is_empty() {
        return Err(Error::EmptyLikelihood(format!(
            "{} positive counts, {} positive burnt areas",
            cnt_rows.len(),
            ba_rows.len()
        )));
    }
    let y_cnt: Vec<f64> = cnt_rows
        .iter()
        .map(|&r| prepared.dataset.records[r].cnt.unwrap() - 1.0)
        .collect();
    let y_ba: Vec<f64> = ba_rows
        .iter()
        .map(|&r| prepared.dataset.records[r].ba.unwrap().ln())
        .collect();
    let d_cnt = record_designs(prepared, frame, &cnt_rows);
    let d_ba = record_designs(prepared, frame, &ba_rows);
    // the shared copy needs W₂^BA evaluated at the count rows
    let d_shared = record_designs(prepared, frame, &cnt_rows).w2;

    let [mc, ac] = pc_blocks("w2_cnt", priors)?;
    let [mb, ab] = pc_blocks("w2_ba", priors)?;
    let layout = HyperLayout {
        blocks: vec![
            ("w1_cnt".into(), HyperBlock::Vague { n: 3 }),
            mc,
            ac,
            ("w1_ba".into(), HyperBlock::Vague { n: 3 }),
            mb,
            ab,
            ("log_alpha".into(), HyperBlock::Vague { n: 1 }),
            ("ba_noise".into(), HyperBlock::Vague { n: 1 }),
        ],
    };
    debug_assert_eq!(layout.dim(), 14);

    let p = prepared.dataset.n_extended() + 1;
    let graph = ModelGraph {
        blocks: vec![
            EffectBlock {
                name: "fixed_cnt".into(),
                kind: EffectKind::Fixed { dim: p },
            },
            spde_block("w1_cnt", frame, &frame.sigma_hat_cnt),
            spacetime_block("w2_cnt", frame, prepared.n_years),
            EffectBlock {
                name: "fixed_ba".into(),
                kind: EffectKind::Fixed { dim: p },
            },
            spde_block("w1_ba", frame, &frame.sigma_hat_ba),
            spacetime_block("w2_ba", frame, prepared.n_years),
        ],
        hyper_slices: vec![(0, 0), (0, 3), (3, 3), (0, 0), (6, 3), (9, 3)],
        groups: vec![
            ObservationGroup {
                name: "count".into(),
                y: y_cnt,
                family: LikelihoodFamily::PoissonLog,
                terms: vec![
                    PredictorTerm {
                        block: 0,
                        design: d_cnt.fixed,
                        scale: TermScale::Unit,
                    },
                    PredictorTerm {
                        block: 1,
                        design: d_cnt.w1,
                        scale: TermScale::Unit,
                    },
                    PredictorTerm {
                        block: 2,
                        design: d_cnt.w2,
                        scale: TermScale::Unit,
                    },
                    PredictorTerm {
                        block: 5,
                        design: d_shared,
                        scale: TermScale::ExpHyper(ALPHA_INDEX),
                    },
                ],
                aux_hyper: None,
            },
            ObservationGroup {
                name: "burnt_area".into(),
                y: y_ba,
                family: LikelihoodFamily::Gaussian,
                terms: vec![
                    PredictorTerm {
                        block: 3,
                        design: d_ba.fixed,
                        scale: TermScale::Unit,
                    },
                    PredictorTerm {
                        block: 4,
                        design: d_ba.w1,
                        scale: TermScale::Unit,
                    },
                    PredictorTerm {
                        block: 5,
                        design: d_ba.w2,
                        scale: TermScale::Unit,
                    },
                ],
                aux_hyper: Some(NOISE_INDEX),
            },
        ],
        layout,
    };
    graph.validate()?;
    Ok(JointModel {
        graph,
        cnt_rows,
        ba_rows,
    })
}

/// Everything needed to predict from a fitted two-part model.
pub struct TwoPartFit {
    pub occurrence: FitResult,
    pub joint: FitResult,
    pub frame: ModelFrame,
    pub standardization: Standardization,
    pub min_year: i32,
    pub n_years: usize,
    pub n_extended: usize,
}

/// Default starting point of the occurrence optimization: vague θ at
/// zero, PC-prior scales at their calibration points.
pub fn occurrence_start(priors: &PriorSettings) -> Vec<f64> {
    vec![
        0.0,
        0.0,
        0.0,
        priors.range0.ln(),
        priors.sigma0.ln(),
        0.0,
    ]
}

pub fn joint_start(priors: &PriorSettings) -> Vec<f64> {
    let mut t = Vec::with_capacity(14);
    t.extend(occurrence_start(priors)); // w1_cnt + w2_cnt
    t.extend(occurrence_start(priors)); // w1_ba + w2_ba
    t.push(0.0); // log α
    t.push(0.0); // log noise precision
    t
}

/// Fit both parts sequentially.
pub fn fit_two_part(
    prepared: &PreparedData,
    frame: ModelFrame,
    priors: &PriorSettings,
    config: &FitConfig,
) -> Result<TwoPartFit> {
    let occ = build_occurrence_model(prepared, &frame, priors)?;
    log::info!(
        "fitting occurrence model: {} observations, {} latents",
        occ.graph.groups[0].y.len(),
        occ.graph.latent_dim()
    );
    let occurrence = optimize_hyper(&occ.graph, &occurrence_start(priors), config)?;
    log::info!(
        "occurrence fit done after {} evaluations (log posterior {:.3})",
        occurrence.n_evals,
        occurrence.log_posterior
    );

    let joint_model = build_joint_model(prepared, &frame, priors)?;
    log::info!(
        "fitting joint model: {}+{} observations, {} latents",
        joint_model.graph.groups[0].y.len(),
        joint_model.graph.groups[1].y.len(),
        joint_model.graph.latent_dim()
    );
    let joint = optimize_hyper(&joint_model.graph, &joint_start(priors), config)?;
    log::info!(
        "joint fit done after {} evaluations (log posterior {:.3})",
        joint.n_evals,
        joint.log_posterior
    );

    Ok(TwoPartFit {
        occurrence,
        joint,
        frame,
        standardization: prepared.standardization.clone(),
        min_year: prepared.min_year,
        n_years: prepared.n_years,
        n_extended: prepared.dataset.n_extended(),
    })
}

/// Rebuild the Gaussian approximations at fixed hyperparameters, e.g.
/// when a persisted estimate is reloaded for prediction. Skips the
/// optimizer entirely; hyperparameter covariances are not recomputed.
pub fn fit_two_part_at(
    prepared: &PreparedData,
    frame: ModelFrame,
    priors: &PriorSettings,
    theta_z: &[f64],
    theta_joint: &[f64],
) -> Result<TwoPartFit> {
    let occ = build_occurrence_model(prepared, &frame, priors)?;
    let occurrence = evaluate_at(&occ.graph, theta_z)?;
    let joint_model = build_joint_model(prepared, &frame, priors)?;
    let joint = evaluate_at(&joint_model.graph, theta_joint)?;
    Ok(TwoPartFit {
        occurrence,
        joint,
        frame,
        standardization: prepared.standardization.clone(),
        min_year: prepared.min_year,
        n_years: prepared.n_years,
        n_extended: prepared.dataset.n_extended(),
    })
}
