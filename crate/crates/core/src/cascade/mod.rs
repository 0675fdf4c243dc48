//! Cascade-mixture-of-regressors landmarker: per-landmark gradient
//! histogram features, fuzzy GMM memberships, per-cluster linear
//! regression, iterated over T stages, plus the training procedure and
//! model serialization.

mod gmm;
mod hog;
pub mod io;
mod model;
mod shape;
mod stage;

pub use gmm::{gmm_fit, GaussianMixture, GmmFit};
pub use hog::{augment, extract_features, FeatureConfig};
pub use model::{
    procrustes_mean, run_cascade, run_cascade_with_quality, train_cascade, CascadeModel,
    TrainParams, TrainedCascade, TrainingSample,
};
pub use shape::{BoundingBox, Shape2D, Shape3D};
pub use stage::{predict_update, train_stage, MixtureStage};

#[derive(Debug, thiserror::Error)]
pub enum CascadeError {
    #[error("empty input")]
    EmptyInput,
    #[error("cluster count {c} invalid for {samples} samples")]
    BadClusterCount { c: usize, samples: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("least-squares solve failed for cluster {0}")]
    SolveFailed(usize),
    #[error("initialization box lies outside the image")]
    BoxOutsideImage,
    #[error("bad model file: {0}")]
    BadModelFile(String),
    #[error("bad landmark file: {0}")]
    BadLandmarkFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
