//! Boosting and forest ensembles for imbalanced data.

mod boost;
mod easy;
mod forest;
mod rus;
mod seeded;

pub use boost::{
    adaboost_fit, rusboost_fit, rusboost_trace, BoostConfig, BoostedModel, InitDistribution,
    RoundTrace, Stage, MIN_PSEUDO_LOSS,
};
pub use easy::{easy_ensemble_fit, easy_subset, EasyConfig, EasyModel};
pub use forest::{brf_fit, forest_sample, random_forest_fit, Bootstrap, ForestConfig, ForestModel};
pub use rus::{rus, RusSample};
pub use seeded::{
    support_weighted_distribution, svc_seeded_rusboost_fit, SeedReport, SeededRusConfig,
};
