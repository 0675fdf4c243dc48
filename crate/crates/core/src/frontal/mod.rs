//! Face frontalization: fits a generic 3D depth template to a landmarked
//! face image, rotates the resulting surface to frontal pose, re-renders
//! the texture, repairs self-occluded regions by mirroring and normalizes
//! the result onto a canonical mean shape.

mod pipeline;
mod render;
mod template;

pub use pipeline::{
    choose_mirror_side, crop_face, estimate_frontal_transform, fit_depth_model, frontalize,
    frontalize_cloud, map_texture, map_to_mean_shape, mirror_fill, AlignedModel, CroppedFace,
    DensityMask, Diagnostics, FrontalizationOutput, FrontalizeConfig, FrontalizedCloud,
    OutputGrid, Side, SymmetryMode,
};
pub use render::render_at_yaw;
pub use template::{synthetic_template, DepthTemplate, MeanShape};

/// Frontalization failures, tagged by pipeline stage so batch runs can
/// report where each input dropped out.
#[derive(Debug, thiserror::Error)]
pub enum FrontalError {
    #[error("degenerate landmarks: {0}")]
    LandmarkDegenerate(String),
    #[error("depth model fit failed: {0}")]
    FitFailed(String),
    #[error("frontal transform is degenerate: {0}")]
    TransformDegenerate(String),
    #[error("frontalized point cloud is empty")]
    EmptyCloud,
    #[error("bad depth template: {0}")]
    BadTemplate(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl FrontalError {
    /// Short stage label for failure accounting.
    pub fn stage(&self) -> &'static str {
        match self {
            FrontalError::LandmarkDegenerate(_) => "landmarks",
            FrontalError::FitFailed(_) => "fit",
            FrontalError::TransformDegenerate(_) => "transform",
            FrontalError::EmptyCloud => "cloud",
            FrontalError::BadTemplate(_) => "template",
            FrontalError::Io(_) => "io",
        }
    }
}
