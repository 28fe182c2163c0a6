//! Two-part spatio-temporal wildfire model: data handling, occurrence
//! and severity sub-models, fitting, and hurdle predictive distributions.

pub mod data;
pub mod model;
pub mod predict;

pub use data::{
    empirical_sigma_hat, load_dataset, parse_dataset, CrossTab, SigmaTarget, Standardization,
    WildfireDataset, WildfireRecord, MONTH_MAX, MONTH_MIN, N_PERIODS, YEAR_MAX, YEAR_MIN,
};
pub use model::{
    build_frame, build_joint_model, build_occurrence_model, fit_two_part, fit_two_part_at,
    joint_start, occurrence_start, prepare, JointModel, ModelFrame, OccurrenceModel, PreparedData,
    PriorSettings, TwoPartFit, ALPHA_INDEX, NOISE_INDEX,
};
pub use predict::{
    check_thresholds, default_thresholds_ba, default_thresholds_cnt, hurdle_ba_cdf,
    hurdle_cnt_cdf, poisson_cdf, predictive_distribution, PredictiveDistribution, N_SEVERITY,
};
