use super::pipeline::idw_fill;
use super::template::DepthTemplate;
use super::FrontalError;
use crate::cascade::Shape2D;
use crate::geometry::{GrayImage, Point2};

/// Orthographically re-renders the textured template surface rotated by
/// `yaw_deg` about the vertical axis through the landmark centroid, and
/// returns the rendered image with the rotated landmark positions. Used to
/// produce synthetic posed inputs with exact landmark ground truth; yaw 0
/// reproduces the texture exactly on the face region.
pub fn render_at_yaw(
    template: &DepthTemplate,
    texture: &GrayImage,
    yaw_deg: f64,
) -> Result<(GrayImage, Shape2D), FrontalError> {
    if texture.width() != template.depth.width() || texture.height() != template.depth.height() {
        return Err(FrontalError::BadTemplate(
            "texture and depth dimensions differ".into(),
        ));
    }
    let (w, h) = (template.depth.width(), template.depth.height());
    let theta = yaw_deg.to_radians();
    let (s, c) = theta.sin_cos();
    let n = template.landmarks.n_landmarks() as f64;
    let cx = template.landmarks.points().iter().map(|p| p.x).sum::<f64>() / n;
    let cz = template.landmarks.points().iter().map(|p| p.z).sum::<f64>() / n;
    let rotate = |x: f64, z: f64| -> (f64, f64) {
        (
            cx + c * (x - cx) + s * (z - cz),
            cz - s * (x - cx) + c * (z - cz),
        )
    };

    // Z-buffered splat: larger depth means closer to the camera, so the
    // near surface wins where the rotated face overlaps itself.
    let mut value = vec![0.0_f64; w * h];
    let mut zbuf = vec![f64::NEG_INFINITY; w * h];
    for y in 0..h {
        for x in 0..w {
            if !template.depth.valid(x, y) {
                continue;
            }
            let (rx, rz) = rotate(x as f64, template.depth.get(x, y));
            let ox = rx.round();
            if ox < 0.0 || ox >= w as f64 {
                continue;
            }
            let idx = y * w + ox as usize;
            if rz > zbuf[idx] {
                zbuf[idx] = rz;
                value[idx] = texture.get(x, y);
            }
        }
    }

    let landmarks = Shape2D::from_points(
        &template
            .landmarks
            .points()
            .iter()
            .map(|p| {
                let (rx, _) = rotate(p.x, p.z);
                Point2::new(rx, p.y)
            })
            .collect::<Vec<_>>(),
    );

    // Fill raster gaps left by the stretched far side, but only inside the
    // rotated landmark hull; everything else stays background.
    let filled: Vec<bool> = zbuf.iter().map(|&z| z.is_finite()).collect();
    let hull = super::pipeline::hull_mask_for(w, h, &landmarks.points());
    let mut out = GrayImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if filled[idx] {
                out.set(x, y, value[idx]);
            } else if hull[idx] {
                match idw_fill(&value, &filled, w, h, x, y) {
                    Some(v) => out.set(x, y, v),
                    None => out.set_valid(x, y, false),
                }
            } else {
                out.set_valid(x, y, false);
            }
        }
    }
    Ok((out, landmarks))
}
