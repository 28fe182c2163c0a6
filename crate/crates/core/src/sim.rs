//! Forward simulator for the two-part model. Draws the latent fields
//! from their exact GMRFs, composes the predictors, and emits a dataset
//! in the wildfire CSV schema — the oracle behind recovery and
//! benchmark tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson as PoissonDraw, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{build_mesh_with, fem_matrices, projector, Mesh, MeshSettings, Point};
use crate::lgm::likelihood::sigmoid;
use crate::lgm::{EffectBlock, EffectKind};
use crate::sparse::cholesky;
use crate::spacetime::SpaceTimeIndex;
use crate::spde::baselines_for_mesh;
use crate::wildfire::model::rows_of;
use crate::wildfire::{parse_dataset, WildfireDataset, MONTH_MAX, MONTH_MIN, N_PERIODS};

/// Truth configuration of one synthetic dataset. Hyperparameters use
/// the internal scales of the fitted model, so estimates compare
/// directly against these values.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Cells per row of the half-degree grid.
    pub nx: usize,
    /// Cells per column.
    pub ny: usize,
    pub n_years: usize,
    pub start_year: i32,
    /// Independent standard-normal covariates per record; two smooth
    /// spatial covariates are always appended after them.
    pub n_normal_covs: usize,
    /// Occurrence hyperparameters:
    /// `[θ₁, θ₂, θ₃, log range, log σ, θ_ρ]`.
    pub theta_z: Vec<f64>,
    /// Joint-part hyperparameters: the same six for the count part,
    /// then six for the burnt-area part, then `log α` and the
    /// log noise precision.
    pub theta_joint: Vec<f64>,
    /// Fixed effects on the standardized design
    /// `[intercept, covariates.., year, month]`.
    pub beta_z: Vec<f64>,
    pub beta_cnt: Vec<f64>,
    pub beta_ba: Vec<f64>,
    pub seed: u64,
    pub mesh_fine: MeshSettings,
    pub mesh_coarse: MeshSettings,
}

impl SimConfig {
    /// Small configuration that a full simulate → fit cycle completes
    /// on quickly: 12 × 10 cells, 3 years, 7 months (2520 records).
    pub fn desk_scale(seed: u64) -> Self {
        use crate::priors::transform::internal_from_rho;
        SimConfig {
            nx: 12,
            ny: 10,
            n_years: 3,
            start_year: 1994,
            n_normal_covs: 3,
            theta_z: vec![
                0.3,
                -0.2,
                0.0,
                150.0f64.ln(),
                0.9f64.ln(),
                internal_from_rho(0.6),
            ],
            theta_joint: vec![
                0.2,
                0.0,
                0.0,
                140.0f64.ln(),
                0.7f64.ln(),
                internal_from_rho(0.5),
                0.1,
                -0.1,
                0.0,
                160.0f64.ln(),
                0.6f64.ln(),
                internal_from_rho(0.65),
                0.9f64.ln(),
                -2.0 * 0.8f64.ln(),
            ],
            beta_z: vec![0.0, 0.5, -0.3, 0.2, 0.4, -0.25, 0.0, 0.1],
            beta_cnt: vec![-0.4, 0.3, -0.2, 0.1, 0.25, -0.15, 0.0, 0.05],
            beta_ba: vec![2.0, 0.4, -0.3, 0.2, 0.3, -0.2, 0.05, 0.1],
            seed,
            mesh_fine: MeshSettings {
                max_edge_inner: 30.0,
                max_edge_outer: 90.0,
                buffer: 60.0,
                cutoff: 0.0,
            },
            mesh_coarse: MeshSettings {
                max_edge_inner: 60.0,
                max_edge_outer: 150.0,
                buffer: 80.0,
                cutoff: 70.0,
            },
        }
    }

    /// Total covariates per record (normals plus the two smooth fields).
    pub fn n_covs(&self) -> usize {
        self.n_normal_covs + 2
    }

    /// Fixed-effect dimension: intercept + covariates + year + month.
    pub fn n_beta(&self) -> usize {
        1 + self.n_covs() + 2
    }

    pub fn n_records(&self) -> usize {
        self.nx * self.ny * self.n_years * N_PERIODS
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::ParameterRange(format!(
                "grid must be at least 2 × 2 (got {} × {})",
                self.nx, self.ny
            )));
        }
        if self.n_years == 0 {
            return Err(Error::ParameterRange("need at least one year".into()));
        }
        for (name, v, want) in [
            ("theta_z", &self.theta_z, 6),
            ("theta_joint", &self.theta_joint, 14),
            ("beta_z", &self.beta_z, self.n_beta()),
            ("beta_cnt", &self.beta_cnt, self.n_beta()),
            ("beta_ba", &self.beta_ba, self.n_beta()),
        ] {
            if v.len() != want {
                return Err(Error::DimensionMismatch {
                    expected: want,
                    got: v.len(),
                    context: name.into(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::ParameterRange(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }
}

/// One simulated dataset plus everything a verification harness wants
/// back: the raw CSV bytes, the parsed dataset, the analytic zero
/// probability `1 − p(s,t)` of every record, and the meshes the fields
/// were drawn on (reuse them when fitting for an exact-family test).
pub struct SimOutput {
    pub csv: String,
    pub dataset: WildfireDataset,
    pub zero_probs: Vec<f64>,
    pub mesh_fine: Mesh,
    pub mesh_coarse: Mesh,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn substream(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ stream.wrapping_mul(0xD6E8FEB86659FD93))
}

/// Two fixed smooth spatial surfaces: sums of three low-frequency sine
/// waves with seeded amplitudes, frequencies, and phases, normalized to
/// roughly unit spread. Smoothness keeps them distinguishable from the
/// random fields in recovery tests.
fn smooth_surfaces(seed: u64, nx: usize, ny: usize) -> [Vec<f64>; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, 1));
    std::array::from_fn(|_| {
        let comps: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let f1 = rng.gen_range(0.5..2.0);
                let f2 = rng.gen_range(0.5..2.0);
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                (a, f1, f2, phase)
            })
            .collect();
        let norm = comps.iter().map(|c| c.0 * c.0 / 2.0).sum::<f64>().sqrt();
        let mut field = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let u = ix as f64 / (nx - 1).max(1) as f64;
                let v = iy as f64 / (ny - 1).max(1) as f64;
                let val: f64 = comps
                    .iter()
                    .map(|&(a, f1, f2, phase)| {
                        a * (std::f64::consts::TAU * (f1 * u + f2 * v) + phase).sin()
                    })
                    .sum();
                field.push(val / norm);
            }
        }
        field
    })
}

/// Column means and sample standard deviations, matching the
/// standardization applied at fit time; a zero-spread column maps to
/// zero instead of erroring so degenerate truths still simulate.
fn standardize_columns(rows: &mut [Vec<f64>]) {
    let p = rows[0].len();
    let n = rows.len() as f64;
    for j in 0..p {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let ss = rows.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<f64>();
        let sd = (ss / (n - 1.0)).sqrt();
        for r in rows.iter_mut() {
            r[j] = if sd > 0.0 { (r[j] - mean) / sd } else { 0.0 };
        }
    }
}

fn draw_field(block: &EffectBlock, theta: &[f64], seed: u64) -> Result<Vec<f64>> {
    let q = block.precision(theta)?;
    let factor = cholesky(&q)?;
    let zero = vec![0.0; q.nrows()];
    Ok(factor.sample(&zero, seed, 1).pop().expect("one sample"))
}

/// Draw one dataset from the exact generative model: latent fields from
/// their GMRFs, `Z ~ Bernoulli(p)`, then for occurrences
/// `CNT − 1 ~ Poisson(Λ)` and `log BA ~ N(μ, σ)`. Deterministic given
/// the configuration.
pub fn simulate(config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    let (nx, ny) = (config.nx, config.ny);
    let n_cells = nx * ny;

    // cell sites on a half-degree grid, row-major like the CSV order
    let mut lonlat = Vec::with_capacity(n_cells);
    for iy in 0..ny {
        for ix in 0..nx {
            lonlat.push((-100.0 + 0.5 * ix as f64, 38.0 + 0.5 * iy as f64));
        }
    }
    let ref_lat = lonlat.iter().map(|&(_, la)| la).sum::<f64>() / n_cells as f64;
    let cells: Vec<Point> = lonlat
        .iter()
        .map(|&(lo, la)| crate::geometry::project_lonlat(lo, la, ref_lat))
        .collect::<Result<_>>()?;

    let mesh_fine = build_mesh_with(&cells, &config.mesh_fine)?;
    let mesh_coarse = build_mesh_with(&cells, &config.mesh_coarse)?;
    let a_fine = projector(&mesh_fine, &cells)?.matrix().clone();
    let coarse_rows = rows_of(projector(&mesh_coarse, &cells)?.matrix());
    let st = SpaceTimeIndex {
        n_space: mesh_coarse.n_vertices(),
        n_periods: N_PERIODS,
        n_replicates: config.n_years,
    };

    let (tau0, kappa0) = baselines_for_mesh(&mesh_fine);
    let spde = EffectBlock {
        name: "w1".into(),
        kind: EffectKind::SpdeNonstationary {
            fem: fem_matrices(&mesh_fine),
            tau0,
            kappa0,
            // the simulator has no data to take empirical spreads from,
            // so its W₁ fields are the σ̂ ≡ 0 member of the family
            sigma_hat: vec![0.0; mesh_fine.n_vertices()],
        },
    };
    let spacetime = EffectBlock {
        name: "w2".into(),
        kind: EffectKind::Spacetime {
            fem: fem_matrices(&mesh_coarse),
            n_periods: N_PERIODS,
            n_replicates: config.n_years,
        },
    };

    let tz = &config.theta_z;
    let tj = &config.theta_joint;
    let w1_z = a_fine.mul_vec(&draw_field(&spde, &tz[0..3], substream(config.seed, 2))?);
    let w1_c = a_fine.mul_vec(&draw_field(&spde, &tj[0..3], substream(config.seed, 3))?);
    let w1_b = a_fine.mul_vec(&draw_field(&spde, &tj[6..9], substream(config.seed, 4))?);
    let w2_z = draw_field(&spacetime, &tz[3..6], substream(config.seed, 5))?;
    let w2_c = draw_field(&spacetime, &tj[3..6], substream(config.seed, 6))?;
    let w2_b = draw_field(&spacetime, &tj[9..12], substream(config.seed, 7))?;
    let alpha = tj[12].exp();
    let sigma_noise = (-0.5 * tj[13]).exp();

    // raw covariates, then the standardized design the betas refer to
    let mut cov_rng = ChaCha8Rng::seed_from_u64(substream(config.seed, 0));
    let smooth = smooth_surfaces(config.seed, nx, ny);
    let n_records = config.n_records();
    let mut raw = Vec::with_capacity(n_records);
    let mut meta = Vec::with_capacity(n_records);
    for year_idx in 0..config.n_years {
        for month in MONTH_MIN..=MONTH_MAX {
            for cell in 0..n_cells {
                let mut row: Vec<f64> = (0..config.n_normal_covs)
                    .map(|_| StandardNormal.sample(&mut cov_rng))
                    .collect();
                row.push(smooth[0][cell]);
                row.push(smooth[1][cell]);
                row.push((config.start_year + year_idx as i32) as f64);
                row.push(month as f64);
                raw.push(row);
                meta.push((cell, month, year_idx));
            }
        }
    }
    let mut design = raw.clone();
    standardize_columns(&mut design);

    let eta = |beta: &[f64], r: usize| -> f64 {
        beta[0]
            + design[r]
                .iter()
                .zip(&beta[1..])
                .map(|(x, b)| x * b)
                .sum::<f64>()
    };
    let w2_at = |field: &[f64], cell: usize, month: u32, year_idx: usize| -> f64 {
        let m = (month - MONTH_MIN) as usize;
        coarse_rows[cell]
            .iter()
            .map(|&(v, w)| w * field[st.flat(v, m, year_idx)])
            .sum()
    };

    let mut obs_rng = ChaCha8Rng::seed_from_u64(substream(config.seed, 8));
    let mut zero_probs = Vec::with_capacity(n_records);
    let mut csv = String::from("lon,lat,year,month,CNT,BA");
    for j in 1..=config.n_covs() {
        csv.push_str(&format!(",cov_{j}"));
    }
    csv.push('\n');
    for (r, &(cell, month, year_idx)) in meta.iter().enumerate() {
        let eta_z = eta(&config.beta_z, r) + w1_z[cell] + w2_at(&w2_z, cell, month, year_idx);
        let p = sigmoid(eta_z);
        zero_probs.push(1.0 - p);
        let (cnt, ba) = if obs_rng.gen_bool(p) {
            let eta_c = eta(&config.beta_cnt, r)
                + w1_c[cell]
                + w2_at(&w2_c, cell, month, year_idx)
                + alpha * w2_at(&w2_b, cell, month, year_idx);
            let lambda = eta_c.clamp(-30.0, 30.0).exp();
            let extra: f64 = PoissonDraw::new(lambda)
                .map_err(|_| Error::ParameterRange(format!("Poisson rate {lambda}")))?
                .sample(&mut obs_rng);
            let eta_b = eta(&config.beta_ba, r) + w1_b[cell] + w2_at(&w2_b, cell, month, year_idx);
            let noise: f64 = StandardNormal.sample(&mut obs_rng);
            let ba = (eta_b + sigma_noise * noise).clamp(-300.0, 300.0).exp();
            (1 + extra as u64, ba)
        } else {
            (0, 0.0)
        };
        let (lon, lat) = lonlat[cell];
        csv.push_str(&format!(
            "{lon},{lat},{},{month},{cnt},{ba}",
            config.start_year + year_idx as i32
        ));
        for j in 0..config.n_covs() {
            csv.push_str(&format!(",{}", raw[r][j]));
        }
        csv.push('\n');
    }

    let dataset = parse_dataset(csv.as_bytes())?;
    Ok(SimOutput {
        csv,
        dataset,
        zero_probs,
        mesh_fine,
        mesh_coarse,
    })
}
