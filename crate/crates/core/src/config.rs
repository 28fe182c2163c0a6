//! Run configuration: a flat `key = value` text format with `#`
//! comments. Every key has a default; unknown keys are rejected so
//! typos fail loudly instead of silently running with defaults.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::MeshSettings;
use crate::lgm::FitConfig;
use crate::sim::SimConfig;
use crate::wildfire::{check_thresholds, default_thresholds_ba, default_thresholds_cnt, PriorSettings};

/// Everything a pipeline run reads from its configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Wildfire CSV to fit or predict from.
    pub data: Option<String>,
    /// Held-out truth CSV for scoring.
    pub truth: Option<String>,
    pub mesh_fine: MeshSettings,
    pub mesh_coarse: MeshSettings,
    pub priors: PriorSettings,
    pub fit: FitConfig,
    pub thresholds_cnt: Vec<f64>,
    pub thresholds_ba: Vec<f64>,
    pub seed: u64,
    /// Posterior draws behind each predictive CDF.
    pub n_samples: usize,
    /// Simulator grid overrides (truth parameters stay at the desk-scale
    /// defaults; see [`SimConfig::desk_scale`]).
    pub sim_nx: usize,
    pub sim_ny: usize,
    pub sim_years: usize,
    pub sim_start_year: i32,
    pub sim_covs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let desk = SimConfig::desk_scale(0);
        RunConfig {
            data: None,
            truth: None,
            // Calibrated on half-degree cell centers over a continental-US
            // sized domain: roughly 3967 fine and 743 coarse vertices.
            mesh_fine: MeshSettings {
                max_edge_inner: 120.0,
                max_edge_outer: 240.0,
                buffer: 100.0,
                cutoff: 0.0,
            },
            mesh_coarse: MeshSettings {
                max_edge_inner: 250.0,
                max_edge_outer: 300.0,
                buffer: 150.0,
                cutoff: 110.0,
            },
            priors: PriorSettings::default(),
            fit: FitConfig::default(),
            thresholds_cnt: default_thresholds_cnt(),
            thresholds_ba: default_thresholds_ba(),
            seed: 20210510,
            n_samples: 250,
            sim_nx: desk.nx,
            sim_ny: desk.ny,
            sim_years: desk.n_years,
            sim_start_year: desk.start_year,
            sim_covs: desk.n_normal_covs,
        }
    }
}

fn num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!(
        "line {line}: cannot parse `{value}` for key `{key}`"
    )))
}

fn num_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|tok| num(line, key, tok.trim()))
        .collect()
}

impl RunConfig {
    /// Parse a configuration text, starting from the defaults.
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {line}: expected `key = value`, got `{content}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "data" => config.data = Some(value.to_string()),
                "truth" => config.truth = Some(value.to_string()),
                "fine_max_edge_inner" => config.mesh_fine.max_edge_inner = num(line, key, value)?,
                "fine_max_edge_outer" => config.mesh_fine.max_edge_outer = num(line, key, value)?,
                "fine_buffer" => config.mesh_fine.buffer = num(line, key, value)?,
                "fine_cutoff" => config.mesh_fine.cutoff = num(line, key, value)?,
                "coarse_max_edge_inner" => {
                    config.mesh_coarse.max_edge_inner = num(line, key, value)?
                }
                "coarse_max_edge_outer" => {
                    config.mesh_coarse.max_edge_outer = num(line, key, value)?
                }
                "coarse_buffer" => config.mesh_coarse.buffer = num(line, key, value)?,
                "coarse_cutoff" => config.mesh_coarse.cutoff = num(line, key, value)?,
                "prior_range0" => config.priors.range0 = num(line, key, value)?,
                "prior_alpha_range" => config.priors.alpha_range = num(line, key, value)?,
                "prior_sigma0" => config.priors.sigma0 = num(line, key, value)?,
                "prior_alpha_sigma" => config.priors.alpha_sigma = num(line, key, value)?,
                "prior_rho_ref" => config.priors.rho_ref = num(line, key, value)?,
                "prior_alpha_rho" => config.priors.alpha_rho = num(line, key, value)?,
                "max_evals" => config.fit.max_evals = num(line, key, value)?,
                "tol" => config.fit.tol = num(line, key, value)?,
                "init_step" => config.fit.init_step = num(line, key, value)?,
                "thresholds_cnt" => config.thresholds_cnt = num_list(line, key, value)?,
                "thresholds_ba" => config.thresholds_ba = num_list(line, key, value)?,
                "seed" => config.seed = num(line, key, value)?,
                "n_samples" => config.n_samples = num(line, key, value)?,
                "sim_nx" => config.sim_nx = num(line, key, value)?,
                "sim_ny" => config.sim_ny = num(line, key, value)?,
                "sim_years" => config.sim_years = num(line, key, value)?,
                "sim_start_year" => config.sim_start_year = num(line, key, value)?,
                "sim_covs" => config.sim_covs = num(line, key, value)?,
                _ => {
                    return Err(Error::Config(format!("line {line}: unknown key `{key}`")));
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let mut text = String::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(path, e))?;
        RunConfig::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, mesh) in [("fine", &self.mesh_fine), ("coarse", &self.mesh_coarse)] {
            if !(mesh.max_edge_inner > 0.0)
                || !(mesh.max_edge_outer >= mesh.max_edge_inner)
                || !(mesh.buffer >= 0.0)
                || !(mesh.cutoff >= 0.0)
            {
                return Err(Error::Config(format!("invalid {name} mesh settings")));
            }
        }
        for (name, p) in [
            ("prior_alpha_range", self.priors.alpha_range),
            ("prior_alpha_sigma", self.priors.alpha_sigma),
            ("prior_alpha_rho", self.priors.alpha_rho),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {p}")));
            }
        }
        if !(self.priors.range0 > 0.0) || !(self.priors.sigma0 > 0.0) {
            return Err(Error::Config("prior scales must be positive".into()));
        }
        if !(self.priors.rho_ref > -1.0 && self.priors.rho_ref < 1.0) {
            return Err(Error::Config(format!(
                "prior_rho_ref must lie in (-1, 1), got {}",
                self.priors.rho_ref
            )));
        }
        if self.fit.max_evals == 0 || !(self.fit.tol > 0.0) || !(self.fit.init_step > 0.0) {
            return Err(Error::Config("invalid optimizer settings".into()));
        }
        check_thresholds(&self.thresholds_cnt)
            .and(check_thresholds(&self.thresholds_ba))
            .map_err(|e| Error::Config(format!("invalid thresholds: {e}")))?;
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be positive".into()));
        }
        if self.sim_nx < 2 || self.sim_ny < 2 || self.sim_years == 0 {
            return Err(Error::Config("invalid simulator grid".into()));
        }
        Ok(())
    }

    /// Simulator configuration implied by this run configuration.
    pub fn sim_config(&self) -> SimConfig {
        let mut sim = SimConfig::desk_scale(self.seed);
        // the desk-scale betas assume 3 normal covariates; keep them in
        // sync when the count is overridden
        if self.sim_covs != sim.n_normal_covs {
            let resize = |beta: &mut Vec<f64>| {
                let tail: Vec<f64> = beta.split_off(1 + sim.n_normal_covs);
                beta.truncate(1 + self.sim_covs.min(sim.n_normal_covs));
                while beta.len() < 1 + self.sim_covs {
                    beta.push(0.2);
                }
                beta.extend(tail);
            };
            resize(&mut sim.beta_z);
            resize(&mut sim.beta_cnt);
            resize(&mut sim.beta_ba);
            sim.n_normal_covs = self.sim_covs;
        }
        sim.nx = self.sim_nx;
        sim.ny = self.sim_ny;
        sim.n_years = self.sim_years;
        sim.start_year = self.sim_start_year;
        sim.mesh_fine = self.mesh_fine;
        sim.mesh_coarse = self.mesh_coarse;
        sim
    }
}
