//! Class-imbalance learning for adverse-event severity prediction.
//!
//! The crate covers the whole experimental pipeline: record schema and
//! encoding ([`dataset`]), base classifiers ([`learners`]), imbalance-aware
//! ensembles ([`ensembles`]), evaluation ([`metrics`]), hyperparameter search
//! ([`tuning`]), the benchmark and overlap harness ([`analysis`]) and the
//! prediction/record-entry backend ([`service`]).

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod canon;
pub mod dataset;
pub mod ensembles;
pub mod error;
pub mod learners;
pub mod metrics;
pub mod model;
pub mod seed;
pub mod service;
pub mod tuning;

pub use dataset::Dataset;
pub use error::{Error, FieldError, Result};
