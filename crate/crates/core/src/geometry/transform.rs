use super::{GeometryError, Point3, Result};

/// Similarity transform in homogeneous 4x4 form: scale `s > 0`, proper
/// rotation `R` and translation `t`, last row fixed to (0,0,0,1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform3D {
    m: [[f64; 4]; 4],
}

impl SimilarityTransform3D {
    pub fn identity() -> Self {
        Self::from_parts(1.0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], [0.0; 3])
    }

    pub fn from_parts(scale: f64, rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Self {
        let mut m = [[0.0; 4]; 4];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] = scale * rotation[r][c];
            }
            m[r][3] = translation[r];
        }
        m[3][3] = 1.0;
        SimilarityTransform3D { m }
    }

    pub fn translation(t: [f64; 3]) -> Self {
        Self::from_parts(1.0, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], t)
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    pub fn scale(&self) -> f64 {
        // Rows of sR have norm s.
        let r = self.m[0];
        (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
    }

    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let s = self.scale();
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = self.m[i][j] / s;
            }
        }
        r
    }

    pub fn translation_vec(&self) -> [f64; 3] {
        [self.m[0][3], self.m[1][3], self.m[2][3]]
    }

    /// Homogeneous multiply; w stays 1 for similarity transforms.
    pub fn apply(&self, p: Point3) -> Point3 {
        let v = [p.x, p.y, p.z, 1.0];
        let mut out = [0.0; 3];
        for r in 0..3 {
            out[r] = self.m[r][0] * v[0] + self.m[r][1] * v[1] + self.m[r][2] * v[2] + self.m[r][3];
        }
        Point3::new(out[0], out[1], out[2])
    }

    /// Matrix product `self * other` (apply `other` first).
    pub fn compose(&self, other: &SimilarityTransform3D) -> SimilarityTransform3D {
        let mut m = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += self.m[r][k] * other.m[k][c];
                }
                m[r][c] = acc;
            }
        }
        SimilarityTransform3D { m }
    }

    /// Max absolute entry-wise difference between the two 4x4 matrices.
    pub fn max_entry_diff(&self, other: &SimilarityTransform3D) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                worst = worst.max((self.m[r][c] - other.m[r][c]).abs());
            }
        }
        worst
    }
}

/// Applies `t` to a point. Thin wrapper kept for call-site symmetry with the
/// other geometry free functions.
pub fn apply_transform(t: &SimilarityTransform3D, p: Point3) -> Point3 {
    t.apply(p)
}

/// Eigendecomposition of a small symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors as columns). Deterministic.
pub fn jacobi_eigen_sym<const N: usize>(a: [[f64; N]; N]) -> ([f64; N], [[f64; N]; N]) {
    let mut a = a;
    let mut v = [[0.0; N]; N];
    for i in 0..N {
        v[i][i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..N {
            for q in (p + 1)..N {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..N {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut vals = [0.0; N];
    for i in 0..N {
        vals[i] = a[i][i];
    }
    (vals, v)
}

fn quat_to_rotation(q: [f64; 4]) -> [[f64; 3]; 3] {
    let [w, x, y, z] = q;
    [
        [
            w * w + x * x - y * y - z * z,
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            w * w - x * x + y * y - z * z,
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            w * w - x * x - y * y + z * z,
        ],
    ]
}

/// Closed-form similarity alignment of two 3D point sets: returns the
/// transform minimizing `sum ||s*R*src_i + t - dst_i||^2`. The rotation comes
/// from the dominant eigenvector of the 4x4 quaternion cross-covariance
/// matrix.
pub fn horn_align(src: &[Point3], dst: &[Point3]) -> Result<SimilarityTransform3D> {
    if src.len() != dst.len() {
        return Err(GeometryError::LengthMismatch(src.len(), dst.len()));
    }
    if src.len() < 3 {
        return Err(GeometryError::TooFewPoints {
            needed: 3,
            got: src.len(),
        });
    }
    if src.iter().chain(dst.iter()).any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let n = src.len() as f64;
    let centroid = |pts: &[Point3]| {
        let mut c = [0.0; 3];
        for p in pts {
            c[0] += p.x;
            c[1] += p.y;
            c[2] += p.z;
        }
        [c[0] / n, c[1] / n, c[2] / n]
    };
    let cs = centroid(src);
    let cd = centroid(dst);
    let centered = |pts: &[Point3], c: [f64; 3]| -> Vec<[f64; 3]> {
        pts.iter().map(|p| [p.x - c[0], p.y - c[1], p.z - c[2]]).collect()
    };
    let ps = centered(src, cs);
    let pd = centered(dst, cd);

    // Collinearity / coincidence check on the source scatter matrix.
    let mut scatter = [[0.0; 3]; 3];
    for p in &ps {
        for i in 0..3 {
            for j in 0..3 {
                scatter[i][j] += p[i] * p[j];
            }
        }
    }
    let (mut evals, _) = jacobi_eigen_sym(scatter);
    evals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if evals[0] <= 1e-18 || evals[1] <= 1e-12 * evals[0] {
        return Err(GeometryError::Degenerate(
            "source points are collinear or coincident".into(),
        ));
    }

    // Cross-covariance M and Horn's symmetric 4x4 N matrix.
    let mut m = [[0.0; 3]; 3];
    for (p, q) in ps.iter().zip(pd.iter()) {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += p[i] * q[j];
            }
        }
    }
    let (sxx, sxy, sxz) = (m[0][0], m[0][1], m[0][2]);
    let (syx, syy, syz) = (m[1][0], m[1][1], m[1][2]);
    let (szx, szy, szz) = (m[2][0], m[2][1], m[2][2]);
    let nmat = [
        [sxx + syy + szz, syz - szy, szx - sxz, sxy - syx],
        [syz - szy, sxx - syy - szz, sxy + syx, szx + sxz],
        [szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy],
        [sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz],
    ];
    let (vals, vecs) = jacobi_eigen_sym(nmat);
    let mut best = 0;
    for i in 1..4 {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    let mut q = [
        vecs[0][best],
        vecs[1][best],
        vecs[2][best],
        vecs[3][best],
    ];
    let qn = (q.iter().map(|v| v * v).sum::<f64>()).sqrt();
    for v in &mut q {
        *v /= qn;
    }
    let rot = quat_to_rotation(q);

    // Least-squares optimal scale for the stated objective.
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, q) in ps.iter().zip(pd.iter()) {
        let rp = [
            rot[0][0] * p[0] + rot[0][1] * p[1] + rot[0][2] * p[2],
            rot[1][0] * p[0] + rot[1][1] * p[1] + rot[1][2] * p[2],
            rot[2][0] * p[0] + rot[2][1] * p[1] + rot[2][2] * p[2],
        ];
        num += rp[0] * q[0] + rp[1] * q[1] + rp[2] * q[2];
        den += p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    }
    let s = num / den;
    if !(s.is_finite() && s > 0.0) {
        return Err(GeometryError::Degenerate(format!(
            "recovered non-positive scale {s}"
        )));
    }
    let mut t = [0.0; 3];
    for i in 0..3 {
        t[i] = cd[i] - s * (rot[i][0] * cs[0] + rot[i][1] * cs[1] + rot[i][2] * cs[2]);
    }
    Ok(SimilarityTransform3D::from_parts(s, rot, t))
}
