use super::{GeometryError, GrayImage, Point2, Result};

pub(crate) const DEGENERATE_AREA_EPS: f64 = 1e-12;

/// Triangulated set of 2D vertices. Triangles store vertex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for t in &triangles {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(GeometryError::Degenerate("triangle index out of range".into()));
            }
            let area = signed_area(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]);
            if area.abs() < DEGENERATE_AREA_EPS {
                return Err(GeometryError::Degenerate(format!(
                    "triangle {t:?} has near-zero area {area}"
                )));
            }
        }
        Ok(TriangleMesh { vertices, triangles })
    }

    /// Same triangle topology over a different vertex set.
    pub fn with_vertices(&self, vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(GeometryError::LengthMismatch(vertices.len(), self.vertices.len()));
        }
        TriangleMesh::new(vertices, self.triangles.clone())
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Signed area of triangle `i` under the current vertex positions.
    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangles[i];
        signed_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }
}

#[inline]
pub(crate) fn signed_area(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

/// Affine map taking triangle (a0,b0,c0) onto (a1,b1,c1), as a 2x3 matrix.
fn triangle_affine(
    a0: &Point2,
    b0: &Point2,
    c0: &Point2,
    a1: &Point2,
    b1: &Point2,
    c1: &Point2,
) -> Option<[[f64; 3]; 2]> {
    let det = (b0.x - a0.x) * (c0.y - a0.y) - (c0.x - a0.x) * (b0.y - a0.y);
    if det.abs() < 2.0 * DEGENERATE_AREA_EPS {
        return None;
    }
    // Inverse of [b0-a0 | c0-a0] composed with [b1-a1 | c1-a1].
    let inv = [
        [(c0.y - a0.y) / det, -(c0.x - a0.x) / det],
        [-(b0.y - a0.y) / det, (b0.x - a0.x) / det],
    ];
    let lin = [
        [
            (b1.x - a1.x) * inv[0][0] + (c1.x - a1.x) * inv[1][0],
            (b1.x - a1.x) * inv[0][1] + (c1.x - a1.x) * inv[1][1],
        ],
        [
            (b1.y - a1.y) * inv[0][0] + (c1.y - a1.y) * inv[1][0],
            (b1.y - a1.y) * inv[0][1] + (c1.y - a1.y) * inv[1][1],
        ],
    ];
    Some([
        [lin[0][0], lin[0][1], a1.x - lin[0][0] * a0.x - lin[0][1] * a0.y],
        [lin[1][0], lin[1][1], a1.y - lin[1][0] * a0.x - lin[1][1] * a0.y],
    ])
}

/// Warps `image` from `src_mesh` onto `dst_mesh` by per-triangle affine
/// sampling with bilinear interpolation. The meshes must share triangle
/// topology. Output pixels outside all destination triangles, or whose
/// affine preimage leaves the valid source region, are marked invalid.
pub fn piecewise_affine_warp(
    src_mesh: &TriangleMesh,
    dst_mesh: &TriangleMesh,
    image: &GrayImage,
    out_width: usize,
    out_height: usize,
) -> Result<GrayImage> {
    if src_mesh.triangles() != dst_mesh.triangles()
        || src_mesh.vertices().len() != dst_mesh.vertices().len()
    {
        return Err(GeometryError::TopologyMismatch);
    }
    let mut out = GrayImage::new(out_width, out_height);
    let mut written = vec![false; out_width * out_height];
    for (ti, tri) in dst_mesh.triangles().iter().enumerate() {
        let [ia, ib, ic] = *tri;
        let (a1, b1, c1) = (
            dst_mesh.vertices()[ia],
            dst_mesh.vertices()[ib],
            dst_mesh.vertices()[ic],
        );
        let (a0, b0, c0) = (
            src_mesh.vertices()[ia],
            src_mesh.vertices()[ib],
            src_mesh.vertices()[ic],
        );
        let area = signed_area(&a1, &b1, &c1);
        if area.abs() < DEGENERATE_AREA_EPS {
            return Err(GeometryError::Degenerate(format!(
                "destination triangle {ti} is degenerate"
            )));
        }
        let affine = triangle_affine(&a1, &b1, &c1, &a0, &b0, &c0).ok_or_else(|| {
            GeometryError::Degenerate(format!("destination triangle {ti} is degenerate"))
        })?;
        let xmin = a1.x.min(b1.x).min(c1.x).floor().max(0.0) as usize;
        let xmax = (a1.x.max(b1.x).max(c1.x).ceil() as usize).min(out_width.saturating_sub(1));
        let ymin = a1.y.min(b1.y).min(c1.y).floor().max(0.0) as usize;
        let ymax = (a1.y.max(b1.y).max(c1.y).ceil() as usize).min(out_height.saturating_sub(1));
        for y in ymin..=ymax.min(out_height.saturating_sub(1)) {
            for x in xmin..=xmax {
                if written[y * out_width + x] {
                    continue;
                }
                let p = Point2::new(x as f64, y as f64);
                // Barycentric sign test, inclusive edges.
                let w0 = signed_area(&p, &b1, &c1) / area;
                let w1 = signed_area(&a1, &p, &c1) / area;
                let w2 = signed_area(&a1, &b1, &p) / area;
                let eps = 1e-9;
                if w0 < -eps || w1 < -eps || w2 < -eps {
                    continue;
                }
                let sx = affine[0][0] * p.x + affine[0][1] * p.y + affine[0][2];
                let sy = affine[1][0] * p.x + affine[1][1] * p.y + affine[1][2];
                written[y * out_width + x] = true;
                match image.sample_bilinear(sx, sy) {
                    Some(v) => out.set(x, y, v),
                    None => {
                        written[y * out_width + x] = true;
                        out.set(x, y, 0.0);
                        out.set_valid(x, y, false);
                    }
                }
            }
        }
    }
    // Anything no triangle claimed is invalid.
    for y in 0..out_height {
        for x in 0..out_width {
            if !written[y * out_width + x] {
                out.set_valid(x, y, false);
            }
        }
    }
    Ok(out)
}
