use super::shape::Shape2D;
use super::CascadeError;
use crate::geometry::GrayImage;
use serde::{Deserialize, Serialize};

/// Gradient-orientation-histogram descriptor parameters. One descriptor
/// block per landmark, concatenated in landmark order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Square patch side length in pixels, centered on the landmark.
    pub patch_size: usize,
    /// The patch is divided into `cells x cells` histogram cells.
    pub cells: usize,
    /// Orientation bins over the unsigned range [0, pi).
    pub bins: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            patch_size: 32,
            cells: 4,
            bins: 9,
        }
    }
}

impl FeatureConfig {
    /// Descriptor length contributed by a single landmark.
    pub fn dims_per_landmark(&self) -> usize {
        self.cells * self.cells * self.bins
    }

    /// Total descriptor length for a shape with `n` landmarks.
    pub fn dims(&self, n_landmarks: usize) -> usize {
        n_landmarks * self.dims_per_landmark()
    }
}

/// Appends the constant-1 bias entry.
pub fn augment(x: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(x.len() + 1);
    v.extend_from_slice(x);
    v.push(1.0);
    v
}

/// Extracts the concatenated per-landmark gradient-orientation histograms.
/// Patches are sampled border-clamped; each landmark block is L2-normalized
/// with a zero guard, so a constant image yields the all-zero descriptor.
pub fn extract_features(
    image: &GrayImage,
    shape: &Shape2D,
    config: &FeatureConfig,
) -> Result<Vec<f64>, CascadeError> {
    if shape.n_landmarks() == 0 {
        return Err(CascadeError::DimensionMismatch(
            "shape has no landmarks".into(),
        ));
    }
    if config.patch_size < config.cells || config.cells == 0 || config.bins == 0 {
        return Err(CascadeError::DimensionMismatch(format!(
            "invalid feature config {config:?}"
        )));
    }
    let mut out = Vec::with_capacity(config.dims(shape.n_landmarks()));
    let half = config.patch_size as i64 / 2;
    let cell_px = config.patch_size as f64 / config.cells as f64;
    for li in 0..shape.n_landmarks() {
        let p = shape.point(li);
        if !p.is_finite() {
            return Err(CascadeError::DimensionMismatch(
                "non-finite landmark coordinate".into(),
            ));
        }
        let cx = p.x.round() as i64;
        let cy = p.y.round() as i64;
        let mut block = vec![0.0_f64; config.dims_per_landmark()];
        for py in 0..config.patch_size as i64 {
            for px in 0..config.patch_size as i64 {
                let ix = cx - half + px;
                let iy = cy - half + py;
                let gx = image.get_clamped(ix + 1, iy) - image.get_clamped(ix - 1, iy);
                let gy = image.get_clamped(ix, iy + 1) - image.get_clamped(ix, iy - 1);
                let mag = gx.hypot(gy);
                if mag == 0.0 {
                    continue;
                }
                // Unsigned orientation in [0, pi).
                let mut ang = gy.atan2(gx);
                if ang < 0.0 {
                    ang += std::f64::consts::PI;
                }
                if ang >= std::f64::consts::PI {
                    ang -= std::f64::consts::PI;
                }
                let cell_x = ((px as f64 / cell_px) as usize).min(config.cells - 1);
                let cell_y = ((py as f64 / cell_px) as usize).min(config.cells - 1);
                // Linear vote split between the two nearest bins.
                let bin_f = ang / std::f64::consts::PI * config.bins as f64;
                let b0 = bin_f.floor() as usize % config.bins;
                let b1 = (b0 + 1) % config.bins;
                let frac = bin_f - bin_f.floor();
                let base = (cell_y * config.cells + cell_x) * config.bins;
                block[base + b0] += mag * (1.0 - frac);
                block[base + b1] += mag * frac;
            }
        }
        let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for v in &mut block {
                *v /= norm;
            }
        } else {
            for v in &mut block {
                *v = 0.0;
            }
        }
        out.extend_from_slice(&block);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> FeatureConfig {
        FeatureConfig {
            patch_size: 8,
            cells: 2,
            bins: 4,
        }
    }

    #[test]
    fn constant_image_gives_zero_descriptor() {
        let img = GrayImage::from_fn(32, 32, |_, _| 42.0);
        let shape = Shape2D::new(vec![16.0, 16.0, 8.0, 8.0]);
        let f = extract_features(&img, &shape, &cfg()).unwrap();
        assert_eq!(f.len(), cfg().dims(2));
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_edge_orientation() {
        // Vertical step edge: gradient is horizontal (gx != 0, gy = 0),
        // i.e., orientation angle 0 -> all mass in bin 0.
        let img = GrayImage::from_fn(32, 32, |x, _| if x < 16 { 0.0 } else { 100.0 });
        let shape = Shape2D::new(vec![16.0, 16.0]);
        let c = cfg();
        let f = extract_features(&img, &shape, &c).unwrap();
        for cell in 0..c.cells * c.cells {
            let base = cell * c.bins;
            for b in 1..c.bins {
                assert_eq!(f[base + b], 0.0, "bin {b} in cell {cell} not empty");
            }
        }
        assert!(f.iter().sum::<f64>() > 0.0);
    }

    #[test]
    fn landmark_order_permutes_blocks() {
        let img = GrayImage::from_fn(40, 40, |x, y| ((x * 13 + y * 31) % 97) as f64);
        let c = cfg();
        let a = Shape2D::new(vec![10.0, 12.0, 25.0, 28.0]);
        let b = Shape2D::new(vec![25.0, 28.0, 10.0, 12.0]);
        let fa = extract_features(&img, &a, &c).unwrap();
        let fb = extract_features(&img, &b, &c).unwrap();
        let d = c.dims_per_landmark();
        assert_eq!(&fa[..d], &fb[d..]);
        assert_eq!(&fa[d..], &fb[..d]);
    }
}
