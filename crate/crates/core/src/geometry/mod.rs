//! Core numeric geometry shared by the landmarker and the frontalizer:
//! 3D similarity alignment, Delaunay triangulation and piecewise affine
//! image warping.

mod delaunay;
mod image;
mod point;
mod transform;
mod warp;

pub use self::image::GrayImage;
pub use delaunay::{delaunay_triangulate, in_circumcircle};
pub use point::{Point2, Point3};
pub use transform::{apply_transform, horn_align, jacobi_eigen_sym, SimilarityTransform3D};
pub use warp::{piecewise_affine_warp, TriangleMesh};

/// Depth maps share the raster representation of intensity images.
pub type DepthImage = GrayImage;

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("point lists have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("meshes do not share triangle topology")]
    TopologyMismatch,
    #[error("non-finite coordinate encountered")]
    NonFinite,
}

pub(crate) type Result<T> = std::result::Result<T, GeometryError>;
