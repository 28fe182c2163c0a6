//! Command-line driver for the wildfire modeling engine:
//! `mesh`, `simulate`, `fit`, `predict`, `score`, and `benchmark`
//! subcommands wired through a shared run configuration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use firecast::config::RunConfig;
use firecast::error::{Error, Result};
use firecast::geometry::build_mesh_with;
use firecast::scoring::{benchmark_glm, comparison_table, evaluate, ScoreConfig, ScoreReport};
use firecast::sim::simulate;
use firecast::wildfire::{
    build_frame, fit_two_part, fit_two_part_at, load_dataset, predictive_distribution, prepare,
    PredictiveDistribution, PreparedData, TwoPartFit,
};

#[derive(Parser)]
#[command(
    name = "firecast",
    version,
    about = "Two-part spatio-temporal modeling of wildfire counts and burnt areas"
)]
struct Cli {
    /// Run configuration file (`key = value` lines, `#` comments)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured RNG seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory all outputs are written into
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (falls back to FIRECAST_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the fine and coarse meshes from the data locations and
    /// write them as text
    Mesh,
    /// Draw a synthetic dataset: writes the full truth CSV and a
    /// training copy with a masked hold-out
    Simulate,
    /// Fit the two-part model and persist the estimates
    Fit,
    /// Hurdle predictive CDFs at every masked record of the data
    /// (requires a previous `fit` in the output directory)
    Predict,
    /// Score predictions against the truth file; also scores and
    /// compares the benchmark predictions when present
    Score,
    /// Fit the fixed-effects GLM benchmark and write its predictive CDFs
    Benchmark,
}

/// Fitted hyperparameters persisted between `fit` and `predict`.
#[derive(Serialize, Deserialize)]
struct FitState {
    theta_z: Vec<f64>,
    theta_joint: Vec<f64>,
    theta_sd_z: Vec<f64>,
    theta_sd_joint: Vec<f64>,
    log_posterior_z: f64,
    log_posterior_joint: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_millis()
        .init();
    let threads = cli.threads.or_else(|| {
        std::env::var("FIRECAST_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    match cli.command {
        Command::Mesh => cmd_mesh(&config, &cli.out),
        Command::Simulate => cmd_simulate(&config, &cli.out),
        Command::Fit => cmd_fit(&config, &cli.out),
        Command::Predict => cmd_predict(&config, &cli.out),
        Command::Score => cmd_score(&config, &cli.out),
        Command::Benchmark => cmd_benchmark(&config, &cli.out),
    }
}

fn data_path(config: &RunConfig) -> Result<&str> {
    config
        .data
        .as_deref()
        .ok_or_else(|| Error::Config("set `data = <csv path>` in the configuration".into()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn cmd_mesh(config: &RunConfig, out: &Path) -> Result<()> {
    let dataset = load_dataset(data_path(config)?)?;
    log::info!(
        "{} records over {} cells",
        dataset.n_records(),
        dataset.n_cells()
    );
    for (name, settings) in [
        ("mesh_fine.txt", &config.mesh_fine),
        ("mesh_coarse.txt", &config.mesh_coarse),
    ] {
        let mesh = build_mesh_with(&dataset.cells, settings)?;
        log::info!(
            "{name}: {} vertices, {} triangles",
            mesh.n_vertices(),
            mesh.n_triangles()
        );
        write_text(&out.join(name), &mesh.to_text())?;
    }
    Ok(())
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Mask responses of a deterministic ~20% of records, yielding the
/// training file whose masked rows become prediction targets.
fn mask_csv(csv: &str, seed: u64) -> String {
    let mut out = String::with_capacity(csv.len());
    for (i, line) in csv.lines().enumerate() {
        if i == 0 {
            out.push_str(line);
        } else if (splitmix64(seed ^ i as u64) as f64 / u64::MAX as f64) < 0.2 {
            let fields: Vec<&str> = line.split(',').collect();
            for (j, f) in fields.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(if j == 4 || j == 5 { "NA" } else { f });
            }
        } else {
            out.push_str(line);
        }
        out.push('\n');
    }
    out
}

fn cmd_simulate(config: &RunConfig, out: &Path) -> Result<()> {
    let sim = config.sim_config();
    log::info!(
        "simulating {} × {} cells × {} years (seed {})",
        sim.nx,
        sim.ny,
        sim.n_years,
        sim.seed
    );
    let result = simulate(&sim)?;
    let zeros = result
        .dataset
        .records
        .iter()
        .filter(|r| r.cnt == Some(0.0))
        .count();
    log::info!(
        "{} records, {:.1}% zero counts",
        result.dataset.n_records(),
        100.0 * zeros as f64 / result.dataset.n_records() as f64
    );
    write_text(&out.join("simulated.csv"), &result.csv)?;
    write_text(&out.join("train.csv"), &mask_csv(&result.csv, sim.seed))?;
    Ok(())
}

fn load_prepared(config: &RunConfig) -> Result<PreparedData> {
    let dataset = load_dataset(data_path(config)?)?;
    log::info!(
        "{} records over {} cells",
        dataset.n_records(),
        dataset.n_cells()
    );
    prepare(dataset)
}

fn build_fit_frame(
    config: &RunConfig,
    prepared: &PreparedData,
) -> Result<firecast::wildfire::ModelFrame> {
    let fine = build_mesh_with(&prepared.dataset.cells, &config.mesh_fine)?;
    let coarse = build_mesh_with(&prepared.dataset.cells, &config.mesh_coarse)?;
    log::info!(
        "meshes: fine {} vertices, coarse {} vertices",
        fine.n_vertices(),
        coarse.n_vertices()
    );
    build_frame(prepared, fine, coarse)
}

fn cmd_fit(config: &RunConfig, out: &Path) -> Result<()> {
    let prepared = load_prepared(config)?;
    let frame = build_fit_frame(config, &prepared)?;
    let fit = fit_two_part(&prepared, frame, &config.priors, &config.fit)?;
    let state = FitState {
        theta_z: fit.occurrence.theta.clone(),
        theta_joint: fit.joint.theta.clone(),
        theta_sd_z: fit.occurrence.theta_sd(),
        theta_sd_joint: fit.joint.theta_sd(),
        log_posterior_z: fit.occurrence.log_posterior,
        log_posterior_joint: fit.joint.log_posterior,
    };
    let json = serde_json::to_string_pretty(&state)
        .map_err(|e| Error::Config(format!("cannot serialize fit state: {e}")))?;
    write_text(&out.join("fit.json"), &json)?;
    write_text(
        &out.join("fit_occurrence.txt"),
        &fit.occurrence.summary_table(),
    )?;
    write_text(&out.join("fit_joint.txt"), &fit.joint.summary_table())?;
    Ok(())
}

/// Records with masked responses but complete covariates: the
/// predictable targets.
fn target_records(prepared: &PreparedData) -> Result<Vec<usize>> {
    let dataset = &prepared.dataset;
    let masked = (0..dataset.n_records()).filter(|&r| dataset.records[r].cnt.is_none());
    let (targets, skipped): (Vec<usize>, Vec<usize>) =
        masked.partition(|&r| prepared.covs[r].iter().all(|v| v.is_finite()));
    if !skipped.is_empty() {
        log::warn!(
            "{} masked records skipped for missing covariates",
            skipped.len()
        );
    }
    if targets.is_empty() {
        return Err(Error::TargetMismatch(
            "the data has no masked records to predict".into(),
        ));
    }
    Ok(targets)
}

fn cmd_predict(config: &RunConfig, out: &Path) -> Result<()> {
    let state_path = out.join("fit.json");
    let state: FitState = serde_json::from_str(&read_text(&state_path)?)
        .map_err(|e| Error::Config(format!("cannot parse {}: {e}", state_path.display())))?;
    let prepared = load_prepared(config)?;
    let frame = build_fit_frame(config, &prepared)?;
    log::info!("rebuilding the Gaussian approximation at the stored estimates");
    let fit: TwoPartFit = fit_two_part_at(
        &prepared,
        frame,
        &config.priors,
        &state.theta_z,
        &state.theta_joint,
    )?;
    let targets = target_records(&prepared)?;
    log::info!(
        "predicting {} targets with {} posterior draws",
        targets.len(),
        config.n_samples
    );
    let pred = predictive_distribution(
        &fit,
        &prepared.dataset,
        &targets,
        &config.thresholds_cnt,
        &config.thresholds_ba,
        config.seed,
        config.n_samples,
    )?;
    pred.write_csv(out.join("predictions.csv"))?;
    log::info!("wrote {}", out.join("predictions.csv").display());
    Ok(())
}

fn cmd_benchmark(config: &RunConfig, out: &Path) -> Result<()> {
    let prepared = load_prepared(config)?;
    let targets = target_records(&prepared)?;
    log::info!("fitting the GLM benchmark; predicting {} targets", targets.len());
    let pred = benchmark_glm(
        &prepared,
        &targets,
        &config.thresholds_cnt,
        &config.thresholds_ba,
        &config.fit,
    )?;
    pred.write_csv(out.join("benchmark_predictions.csv"))?;
    log::info!("wrote {}", out.join("benchmark_predictions.csv").display());
    Ok(())
}

fn parse_target_id(id: &str) -> Result<(usize, i32, u32)> {
    let bad = || Error::TargetMismatch(format!("malformed target id `{id}`"));
    let mut parts = id.split('_');
    let cell = parts
        .next()
        .and_then(|p| p.strip_prefix('c'))
        .and_then(|p| p.parse().ok())
        .ok_or_else(bad)?;
    let year = parts
        .next()
        .and_then(|p| p.strip_prefix('y'))
        .and_then(|p| p.parse().ok())
        .ok_or_else(bad)?;
    let month = parts
        .next()
        .and_then(|p| p.strip_prefix('m'))
        .and_then(|p| p.parse().ok())
        .ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((cell, year, month))
}

fn score_against_truth(
    pred: &PredictiveDistribution,
    truth: &firecast::wildfire::WildfireDataset,
    config: &RunConfig,
) -> Result<ScoreReport> {
    use std::collections::HashMap;
    let mut index: HashMap<(usize, i32, u32), usize> = HashMap::new();
    for (r, rec) in truth.records.iter().enumerate() {
        index.insert((truth.cell_of[r], rec.year, rec.month), r);
    }
    let mut truth_cnt = Vec::with_capacity(pred.n_targets());
    let mut truth_ba = Vec::with_capacity(pred.n_targets());
    for id in &pred.target_ids {
        let key = parse_target_id(id)?;
        let r = *index.get(&key).ok_or_else(|| {
            Error::TargetMismatch(format!("target `{id}` not present in the truth data"))
        })?;
        let rec = &truth.records[r];
        match (rec.cnt, rec.ba) {
            (Some(c), Some(b)) => {
                truth_cnt.push(c);
                truth_ba.push(b);
            }
            _ => {
                return Err(Error::TargetMismatch(format!(
                    "target `{id}` is unobserved in the truth data"
                )))
            }
        }
    }
    evaluate(
        pred,
        &truth_cnt,
        &truth_ba,
        &ScoreConfig::with_default_weights(config.thresholds_cnt.clone()),
        &ScoreConfig::with_default_weights(config.thresholds_ba.clone()),
    )
}

fn cmd_score(config: &RunConfig, out: &Path) -> Result<()> {
    let truth_path = config
        .truth
        .as_deref()
        .ok_or_else(|| Error::Config("set `truth = <csv path>` in the configuration".into()))?;
    let truth = load_dataset(truth_path)?;
    let load_pred = |path: &Path| -> Result<PredictiveDistribution> {
        PredictiveDistribution::read_csv(
            &read_text(path)?,
            &config.thresholds_cnt,
            &config.thresholds_ba,
        )
    };
    let pred = load_pred(&out.join("predictions.csv"))?;
    let report = score_against_truth(&pred, &truth, config)?;
    log::info!(
        "two-part scores: CNT {:.4}, BA {:.4}, total {:.4}",
        report.total_cnt,
        report.total_ba,
        report.total()
    );
    write_text(&out.join("scores.csv"), &report.to_csv())?;

    let bench_path = out.join("benchmark_predictions.csv");
    if bench_path.exists() {
        let bench = score_against_truth(&load_pred(&bench_path)?, &truth, config)?;
        write_text(&out.join("benchmark_scores.csv"), &bench.to_csv())?;
        let table = comparison_table("two_part", &report, "benchmark", &bench);
        for line in table.lines() {
            log::info!("{line}");
        }
        write_text(&out.join("comparison.txt"), &table)?;
    }
    Ok(())
}
