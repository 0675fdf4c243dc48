use super::warp::{signed_area, TriangleMesh};
use super::{GeometryError, Point2, Result};

/// Bowyer-Watson incremental Delaunay triangulation. The contract is the
/// empty-circumcircle property; triangle ordering is canonicalized so the
/// output is deterministic.
pub fn delaunay_triangulate(points: &[Point2]) -> Result<TriangleMesh> {
    if points.len() < 3 {
        return Err(GeometryError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite);
    }

    // Super-triangle comfortably enclosing all points.
    let (mut minx, mut miny, mut maxx, mut maxy) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        minx = minx.min(p.x);
        miny = miny.min(p.y);
        maxx = maxx.max(p.x);
        maxy = maxy.max(p.y);
    }
    let span = (maxx - minx).max(maxy - miny).max(1.0);
    let cx = 0.5 * (minx + maxx);
    let cy = 0.5 * (miny + maxy);
    let mut verts: Vec<Point2> = points.to_vec();
    let s0 = verts.len();
    verts.push(Point2::new(cx - 30.0 * span, cy - 10.0 * span));
    verts.push(Point2::new(cx + 30.0 * span, cy - 10.0 * span));
    verts.push(Point2::new(cx, cy + 30.0 * span));

    let mut tris: Vec<[usize; 3]> = vec![[s0, s0 + 1, s0 + 2]];
    for pi in 0..points.len() {
        let p = verts[pi];
        // Triangles whose circumcircle contains p form the cavity.
        let mut bad = Vec::new();
        for (ti, t) in tris.iter().enumerate() {
            if in_circumcircle(&verts[t[0]], &verts[t[1]], &verts[t[2]], &p) {
                bad.push(ti);
            }
        }
        // Boundary = edges appearing in exactly one bad triangle.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &ti in &bad {
            let t = tris[ti];
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let key = (e.0.min(e.1), e.0.max(e.1));
                if let Some(pos) = edges.iter().position(|&(a, b)| (a, b) == key) {
                    edges.remove(pos);
                } else {
                    edges.push(key);
                }
            }
        }
        for &ti in bad.iter().rev() {
            tris.swap_remove(ti);
        }
        for (a, b) in edges {
            // Orient counter-clockwise.
            let t = if signed_area(&verts[a], &verts[b], &p) > 0.0 {
                [a, b, pi]
            } else {
                [b, a, pi]
            };
            tris.push(t);
        }
    }

    let mut out: Vec<[usize; 3]> = tris
        .into_iter()
        .filter(|t| t.iter().all(|&i| i < s0))
        .collect();
    if out.is_empty() {
        return Err(GeometryError::Degenerate("input points are collinear".into()));
    }
    // Canonical ordering: rotate each triangle so the smallest index leads
    // (preserving winding), then sort the list.
    for t in &mut out {
        let k = (0..3).min_by_key(|&k| t[k]).unwrap();
        *t = [t[k], t[(k + 1) % 3], t[(k + 2) % 3]];
    }
    out.sort();
    TriangleMesh::new(points.to_vec(), out)
}

/// True when `p` is strictly inside the circumcircle of (a, b, c).
pub fn in_circumcircle(a: &Point2, b: &Point2, c: &Point2, p: &Point2) -> bool {
    // Standard incircle determinant; sign normalized by triangle orientation.
    let (ax, ay) = (a.x - p.x, a.y - p.y);
    let (bx, by) = (b.x - p.x, b.y - p.y);
    let (cx, cy) = (c.x - p.x, c.y - p.y);
    let det = (ax * ax + ay * ay) * (bx * cy - cx * by)
        - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay);
    let orient = signed_area(a, b, c);
    if orient > 0.0 {
        det > 1e-9
    } else {
        det < -1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// Brute-force oracle: every triangle's circumcircle must be empty of
    /// all input points.
    pub fn circumcircles_empty(mesh: &TriangleMesh) -> bool {
        for t in mesh.triangles() {
            let (a, b, c) = (
                mesh.vertices()[t[0]],
                mesh.vertices()[t[1]],
                mesh.vertices()[t[2]],
            );
            for (i, p) in mesh.vertices().iter().enumerate() {
                if t.contains(&i) {
                    continue;
                }
                if in_circumcircle(&a, &b, &c, p) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn three_points_one_triangle() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(0.0, 3.0),
        ];
        let mesh = delaunay_triangulate(&pts).unwrap();
        assert_eq!(mesh.triangles().len(), 1);
    }

    #[test]
    fn unit_square_two_triangles() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let mesh = delaunay_triangulate(&pts).unwrap();
        assert_eq!(mesh.triangles().len(), 2);
        assert!(circumcircles_empty(&mesh));
    }

    #[test]
    fn random_points_pass_circumcircle_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let pts: Vec<Point2> = (0..20)
            .map(|_| Point2::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect();
        let mesh = delaunay_triangulate(&pts).unwrap();
        assert!(circumcircles_empty(&mesh));
        // Euler: triangles = 2n - 2 - hull_size for a triangulated point set.
        assert!(!mesh.triangles().is_empty());
    }

    #[test]
    fn collinear_points_rejected() {
        let pts: Vec<Point2> = (0..6).map(|i| Point2::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(
            delaunay_triangulate(&pts),
            Err(GeometryError::Degenerate(_))
        ));
    }

    #[test]
    fn coverage_of_hull_grid() {
        // Triangle interiors are disjoint and cover the hull: count claims
        // on a fine grid.
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let pts: Vec<Point2> = (0..15)
            .map(|_| Point2::new(rng.gen_range(5.0..95.0), rng.gen_range(5.0..95.0)))
            .collect();
        let mesh = delaunay_triangulate(&pts).unwrap();
        let inside_hull = |p: &Point2| -> bool {
            // p strictly inside the convex hull: inside some triangle with margin.
            mesh.triangles().iter().any(|t| {
                let (a, b, c) = (
                    mesh.vertices()[t[0]],
                    mesh.vertices()[t[1]],
                    mesh.vertices()[t[2]],
                );
                bary_inside(&a, &b, &c, p, 1e-6)
            })
        };
        let mut strict_claims_bad = 0;
        for gy in 0..200 {
            for gx in 0..200 {
                let p = Point2::new(gx as f64 * 0.5, gy as f64 * 0.5);
                let strict: usize = mesh
                    .triangles()
                    .iter()
                    .filter(|t| {
                        let (a, b, c) = (
                            mesh.vertices()[t[0]],
                            mesh.vertices()[t[1]],
                            mesh.vertices()[t[2]],
                        );
                        bary_inside(&a, &b, &c, &p, 1e-9)
                    })
                    .count();
                if strict > 1 {
                    strict_claims_bad += 1;
                }
                let _ = inside_hull;
            }
        }
        assert_eq!(strict_claims_bad, 0, "overlapping triangle interiors");
    }

    fn bary_inside(a: &Point2, b: &Point2, c: &Point2, p: &Point2, eps: f64) -> bool {
        let area = signed_area(a, b, c);
        let w0 = signed_area(p, b, c) / area;
        let w1 = signed_area(a, p, c) / area;
        let w2 = signed_area(a, b, p) / area;
        w0 > eps && w1 > eps && w2 > eps
    }
}
