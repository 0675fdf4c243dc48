use super::FrontalError;
use crate::cascade::{Shape2D, Shape3D};
use crate::geometry::{delaunay_triangulate, DepthImage, Point2, TriangleMesh};
use std::io::{BufRead, Write};
use std::path::Path;

/// Depth stored in 16-bit PNGs as `round(depth * 100) + 1`; the value 0
/// marks invalid pixels.
const DEPTH_QUANT: f64 = 100.0;

/// Generic frontal depth template: a reference depth image, 68 annotated
/// 3D landmarks and the Delaunay mesh of their XY projections.
#[derive(Debug, Clone)]
pub struct DepthTemplate {
    pub depth: DepthImage,
    pub landmarks: Shape3D,
    pub mesh: TriangleMesh,
}

impl DepthTemplate {
    pub fn new(depth: DepthImage, landmarks: Shape3D) -> Result<Self, FrontalError> {
        let xy = landmarks.xy();
        for p in xy.points() {
            if p.x < 0.0
                || p.y < 0.0
                || p.x > (depth.width() - 1) as f64
                || p.y > (depth.height() - 1) as f64
            {
                return Err(FrontalError::BadTemplate(format!(
                    "landmark {p:?} outside the depth image"
                )));
            }
        }
        let mesh = delaunay_triangulate(&xy.points())
            .map_err(|e| FrontalError::BadTemplate(format!("landmark triangulation: {e}")))?;
        Ok(DepthTemplate {
            depth,
            landmarks,
            mesh,
        })
    }

    pub fn landmarks_2d(&self) -> Shape2D {
        self.landmarks.xy()
    }

    /// Midline used for mirror operations: mean x of the nose-bridge
    /// landmarks (indices 27..=30 in the 68-point convention).
    pub fn nose_bridge_x(&self) -> f64 {
        let xy = self.landmarks_2d();
        (27..=30).map(|i| xy.point(i).x).sum::<f64>() / 4.0
    }

    pub fn save(&self, depth_path: &Path, landmark_path: &Path) -> Result<(), FrontalError> {
        let w = self.depth.width() as u32;
        let h = self.depth.height() as u32;
        let mut raw = vec![0u16; (w * h) as usize];
        for y in 0..h as usize {
            for x in 0..w as usize {
                raw[y * w as usize + x] = if self.depth.valid(x, y) {
                    (self.depth.get(x, y) * DEPTH_QUANT).round() as u16 + 1
                } else {
                    0
                };
            }
        }
        let img = image::ImageBuffer::<image::Luma<u16>, _>::from_vec(w, h, raw)
            .expect("buffer size matches dimensions");
        img.save(depth_path)
            .map_err(|e| FrontalError::BadTemplate(format!("writing depth png: {e}")))?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(landmark_path)?);
        for p in self.landmarks.points() {
            writeln!(f, "{} {} {}", p.x, p.y, p.z)?;
        }
        Ok(())
    }

    pub fn load(depth_path: &Path, landmark_path: &Path) -> Result<Self, FrontalError> {
        let img = image::open(depth_path)
            .map_err(|e| FrontalError::BadTemplate(format!("reading depth png: {e}")))?
            .into_luma16();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let mut depth = DepthImage::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let v = img.get_pixel(x as u32, y as u32).0[0];
                if v == 0 {
                    depth.set_valid(x, y, false);
                } else {
                    depth.set(x, y, (v - 1) as f64 / DEPTH_QUANT);
                }
            }
        }
        let f = std::io::BufReader::new(std::fs::File::open(landmark_path)?);
        let mut coords = Vec::new();
        for line in f.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| FrontalError::BadTemplate(format!("bad landmark line: {line:?}")))?;
            if vals.len() != 3 {
                return Err(FrontalError::BadTemplate(format!(
                    "expected 3 coordinates per line, got {}",
                    vals.len()
                )));
            }
            coords.extend_from_slice(&vals);
        }
        if coords.len() != 3 * 68 {
            return Err(FrontalError::BadTemplate(format!(
                "expected 68 landmarks, got {}",
                coords.len() / 3
            )));
        }
        DepthTemplate::new(depth, Shape3D::new(coords))
    }
}

/// Canonical landmark configuration on the output grid, with its mesh.
/// All frontalized faces are warped onto this shape, so eye and mouth
/// anchors coincide across outputs.
#[derive(Debug, Clone)]
pub struct MeanShape {
    pub shape: Shape2D,
    pub mesh: TriangleMesh,
    pub width: usize,
    pub height: usize,
}

impl MeanShape {
    /// Scales `landmarks` uniformly into the central region of a
    /// `size x size` grid, reusing `mesh_like`'s triangle topology.
    pub fn from_landmarks(
        landmarks: &Shape2D,
        mesh_like: &TriangleMesh,
        size: usize,
    ) -> Result<Self, FrontalError> {
        let b = landmarks.bbox();
        let margin = size as f64 * 0.07;
        let avail = size as f64 - 2.0 * margin;
        let s = (avail / b.width).min(avail / b.height);
        let cx = b.x + b.width / 2.0;
        let cy = b.y + b.height / 2.0;
        let half = size as f64 / 2.0;
        let pts: Vec<Point2> = landmarks
            .points()
            .iter()
            .map(|p| Point2::new(half + s * (p.x - cx), half + s * (p.y - cy)))
            .collect();
        let mesh = mesh_like
            .with_vertices(pts.clone())
            .map_err(|e| FrontalError::BadTemplate(format!("mean-shape mesh: {e}")))?;
        Ok(MeanShape {
            shape: Shape2D::from_points(&pts),
            mesh,
            width: size,
            height: size,
        })
    }
}

mod synthetic {
    //! Analytic stand-in for a scanned frontal depth template: a smooth
    //! ellipsoidal face dome with nose and brow ridges, annotated with 68
    //! landmarks in the standard ordering (jaw, brows, nose, eyes, mouth).

    pub const WIDTH: usize = 200;
    pub const HEIGHT: usize = 220;
    /// Depth relief amplitude in pixel units. Together with the nose shape
    /// below it is chosen so the landmark-mesh fold check trips at about 57
    /// degrees of yaw on either side: past-frontal poses up to 40 degrees
    /// frontalize, 60 degrees and beyond reliably fail.
    pub const DEPTH_SCALE: f64 = 42.0;

    /// Face coordinates: x in [-1, 1] left-right, y in [-1, 1] top-bottom,
    /// origin at the nose bridge.
    pub fn to_pixel(fx: f64, fy: f64) -> (f64, f64) {
        (
            WIDTH as f64 / 2.0 + fx * 85.0,
            HEIGHT as f64 / 2.0 + fy * 95.0,
        )
    }

    pub fn depth_at(fx: f64, fy: f64) -> f64 {
        let dome = {
            let r2 = (fx / 1.12).powi(2) + (fy / 1.1).powi(2);
            0.5 * (1.0 - r2).max(0.0)
        };
        let nose = 0.95 * (-(fx / 0.42).powi(2) - ((fy - 0.12) / 0.3).powi(2)).exp();
        let brow = 0.05
            * (-((fy + 0.33) / 0.12).powi(2)).exp()
            * (-(fx / 0.6).powi(2)).exp();
        DEPTH_SCALE * (dome + nose + brow)
    }

    /// Synthetic grayscale appearance aligned with the depth surface:
    /// Lambertian-style shading plus darkened eye, brow and mouth regions
    /// and one small off-center blemish that keeps the face slightly
    /// asymmetric.
    pub fn texture_at(fx: f64, fy: f64) -> f64 {
        let eps = 1e-3;
        let dzdx = (depth_at(fx + eps, fy) - depth_at(fx - eps, fy)) / (2.0 * eps * 85.0);
        let dzdy = (depth_at(fx, fy + eps) - depth_at(fx, fy - eps)) / (2.0 * eps * 95.0);
        let shade = 1.0 / (1.0 + dzdx * dzdx + dzdy * dzdy).sqrt();
        let mut v = 190.0 * shade;
        let dark = |cx: f64, cy: f64, rx: f64, ry: f64, amount: f64| -> f64 {
            amount * (-(((fx - cx) / rx).powi(2) + ((fy - cy) / ry).powi(2))).exp()
        };
        v -= dark(-0.42, -0.33, 0.18, 0.09, 70.0); // left eye
        v -= dark(0.42, -0.33, 0.18, 0.09, 70.0); // right eye
        v -= dark(-0.42, -0.48, 0.22, 0.05, 35.0); // left brow
        v -= dark(0.42, -0.48, 0.22, 0.05, 35.0); // right brow
        v -= dark(0.0, 0.5, 0.3, 0.1, 55.0); // mouth
        v -= dark(-0.62, 0.18, 0.05, 0.05, 12.0); // blemish
        v.clamp(0.0, 255.0)
    }

    pub fn landmark_layout() -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(68);
        // Jaw: 17 points from the left ear line around the chin.
        for i in 0..17 {
            let ang = std::f64::consts::PI * i as f64 / 16.0;
            pts.push((-0.95 * ang.cos(), -0.15 + 1.05 * ang.sin()));
        }
        // Brows: 5 points each.
        for i in 0..5 {
            let t = i as f64 / 4.0;
            let x = -0.62 + 0.42 * t;
            pts.push((x, -0.5 - 0.06 * (std::f64::consts::PI * t).sin()));
        }
        for i in 0..5 {
            let t = i as f64 / 4.0;
            let x = 0.2 + 0.42 * t;
            pts.push((x, -0.5 - 0.06 * (std::f64::consts::PI * (1.0 - t)).sin()));
        }
        // Nose bridge: 4 points, slightly off the exact vertical to keep
        // the triangulation non-degenerate.
        for i in 0..4 {
            pts.push((0.012 * (i as f64 - 1.5), -0.38 + 0.15 * i as f64));
        }
        // Nose base: 5 points.
        for i in 0..5 {
            let t = i as f64 / 4.0 - 0.5;
            pts.push((0.36 * t, 0.18 + 0.05 * (1.0 - (2.0 * t).powi(2))));
        }
        // Eyes: 6 points each on small ellipses.
        for (cx, cy) in [(-0.42, -0.33), (0.42, -0.33)] {
            for i in 0..6 {
                let ang = std::f64::consts::PI * (2.0 * i as f64) / 6.0;
                pts.push((cx + 0.15 * ang.cos(), cy + 0.065 * ang.sin()));
            }
        }
        // Mouth: 12 outer + 8 inner.
        for i in 0..12 {
            let ang = std::f64::consts::PI * (2.0 * i as f64) / 12.0;
            pts.push((0.3 * ang.cos(), 0.5 + 0.12 * ang.sin()));
        }
        for i in 0..8 {
            let ang = std::f64::consts::PI * (2.0 * i as f64) / 8.0;
            pts.push((0.18 * ang.cos(), 0.5 + 0.05 * ang.sin()));
        }
        pts
    }
}

/// Builds the shipped synthetic depth template plus its matching synthetic
/// texture image. Landmarks are placed on integer pixel coordinates so that
/// warp vertex-exactness carries depth values through without interpolation
/// error.
pub fn synthetic_template() -> (DepthTemplate, crate::geometry::GrayImage) {
    use synthetic::*;
    let face_radius2 = |fx: f64, fy: f64| (fx / 1.12).powi(2) + (fy / 1.1).powi(2);
    let from_pixel = |x: f64, y: f64| -> (f64, f64) {
        ((x - WIDTH as f64 / 2.0) / 85.0, (y - HEIGHT as f64 / 2.0) / 95.0)
    };
    let mut depth = DepthImage::new(WIDTH, HEIGHT);
    let mut texture = crate::geometry::GrayImage::new(WIDTH, HEIGHT);
    for y in 0..HEIGHT {
        for x in 0..WIDTH {
            let (fx, fy) = from_pixel(x as f64, y as f64);
            depth.set(x, y, depth_at(fx, fy));
            texture.set(x, y, texture_at(fx, fy));
            if face_radius2(fx, fy) > 1.0 {
                depth.set_valid(x, y, false);
            }
        }
    }
    let mut coords = Vec::with_capacity(68 * 3);
    for (fx, fy) in landmark_layout() {
        let (px, py) = to_pixel(fx, fy);
        let (px, py) = (px.round(), py.round());
        let (fx, fy) = from_pixel(px, py);
        coords.push(px);
        coords.push(py);
        coords.push(depth_at(fx, fy));
    }
    let template = DepthTemplate::new(depth, Shape3D::new(coords))
        .expect("synthetic template is well-formed");
    (template, texture)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_template_is_valid() {
        let (t, texture) = synthetic_template();
        assert_eq!(t.landmarks.n_landmarks(), 68);
        assert_eq!(texture.width(), t.depth.width());
        // Landmark depths match the depth image at their pixels.
        for p in t.landmarks.points() {
            let sampled = t.depth.get(p.x as usize, p.y as usize);
            assert!((sampled - p.z).abs() < 1e-9);
        }
        // No folded triangles in the frontal mesh.
        for i in 0..t.mesh.triangles().len() {
            assert!(t.mesh.triangle_area(i).abs() > 1e-9);
        }
    }

    #[test]
    fn template_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (t, _) = synthetic_template();
        let dp = dir.path().join("template.png");
        let lp = dir.path().join("template.lm3");
        t.save(&dp, &lp).unwrap();
        let back = DepthTemplate::load(&dp, &lp).unwrap();
        assert_eq!(back.depth.width(), t.depth.width());
        assert_eq!(back.landmarks, t.landmarks);
        // Depth quantized to 0.01.
        for y in 0..t.depth.height() {
            for x in 0..t.depth.width() {
                assert_eq!(back.depth.valid(x, y), t.depth.valid(x, y));
                if t.depth.valid(x, y) {
                    assert!((back.depth.get(x, y) - t.depth.get(x, y)).abs() <= 0.005 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn mean_shape_fits_output_grid() {
        let (t, _) = synthetic_template();
        let ms = MeanShape::from_landmarks(&t.landmarks_2d(), &t.mesh, 224).unwrap();
        let b = ms.shape.bbox();
        assert!(b.x >= 0.0 && b.y >= 0.0);
        assert!(b.x + b.width <= 224.0 && b.y + b.height <= 224.0);
        assert_eq!(ms.mesh.triangles(), t.mesh.triangles());
    }
}
