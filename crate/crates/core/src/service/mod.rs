//! Model bundles, the record store and the HTTP prediction API.

mod api;
mod bundle;
mod store;

pub use api::{
    build_state, router, serve, ApiError, AppState, PredictionRequest, PredictionResponse,
    RecordRequest, ServeConfig,
};
pub use bundle::{
    deserialize_model, load_bundle, save_bundle, serialize_model, train_bundle, BundleMetadata,
    ModelBundle, TrainOptions, FORMAT_VERSION,
};
pub use store::{now_rfc3339, RecordStore, StoredRecord};
