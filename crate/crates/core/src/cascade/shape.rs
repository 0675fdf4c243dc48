use crate::geometry::Point2;
use serde::{Deserialize, Serialize};

/// Flat landmark coordinate vector `[x1, y1, ..., xN, yN]` in pixel units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape2D(Vec<f64>);

/// Axis-aligned rectangle used for cascade initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Shape2D {
    pub fn new(coords: Vec<f64>) -> Self {
        assert!(coords.len() % 2 == 0, "shape vector length must be even");
        Shape2D(coords)
    }

    pub fn zeros(n_landmarks: usize) -> Self {
        Shape2D(vec![0.0; 2 * n_landmarks])
    }

    pub fn from_points(points: &[Point2]) -> Self {
        let mut v = Vec::with_capacity(points.len() * 2);
        for p in points {
            v.push(p.x);
            v.push(p.y);
        }
        Shape2D(v)
    }

    pub fn n_landmarks(&self) -> usize {
        self.0.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn point(&self, i: usize) -> Point2 {
        Point2::new(self.0[2 * i], self.0[2 * i + 1])
    }

    pub fn set_point(&mut self, i: usize, p: Point2) {
        self.0[2 * i] = p.x;
        self.0[2 * i + 1] = p.y;
    }

    pub fn points(&self) -> Vec<Point2> {
        (0..self.n_landmarks()).map(|i| self.point(i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.n_landmarks() as f64;
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..self.n_landmarks() {
            cx += self.0[2 * i];
            cy += self.0[2 * i + 1];
        }
        Point2::new(cx / n, cy / n)
    }

    pub fn bbox(&self) -> BoundingBox {
        let (mut minx, mut miny) = (f64::MAX, f64::MAX);
        let (mut maxx, mut maxy) = (f64::MIN, f64::MIN);
        for i in 0..self.n_landmarks() {
            let p = self.point(i);
            minx = minx.min(p.x);
            miny = miny.min(p.y);
            maxx = maxx.max(p.x);
            maxy = maxy.max(p.y);
        }
        BoundingBox {
            x: minx,
            y: miny,
            width: maxx - minx,
            height: maxy - miny,
        }
    }

    pub fn add(&self, delta: &[f64]) -> Shape2D {
        assert_eq!(self.0.len(), delta.len());
        Shape2D(self.0.iter().zip(delta).map(|(a, b)| a + b).collect())
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Shape2D {
        let mut out = self.clone();
        for i in 0..out.n_landmarks() {
            out.0[2 * i] += dx;
            out.0[2 * i + 1] += dy;
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Shape2D {
        Shape2D(self.0.iter().map(|v| v * s).collect())
    }

    /// Mean per-landmark Euclidean distance to `other`.
    pub fn mean_landmark_error(&self, other: &Shape2D) -> f64 {
        assert_eq!(self.0.len(), other.0.len());
        let n = self.n_landmarks();
        (0..n).map(|i| self.point(i).dist(&other.point(i))).sum::<f64>() / n as f64
    }
}

impl BoundingBox {
    pub fn center(&self) -> Point2 {
        Point2::new(self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x && p.y >= self.y && p.x <= self.x + self.width && p.y <= self.y + self.height
    }
}

/// Flat 3D landmark vector `[x1, y1, z1, ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape3D(Vec<f64>);

impl Shape3D {
    pub fn new(coords: Vec<f64>) -> Self {
        assert!(coords.len() % 3 == 0, "shape vector length must divide by 3");
        Shape3D(coords)
    }

    pub fn from_points(points: &[crate::geometry::Point3]) -> Self {
        let mut v = Vec::with_capacity(points.len() * 3);
        for p in points {
            v.push(p.x);
            v.push(p.y);
            v.push(p.z);
        }
        Shape3D(v)
    }

    pub fn n_landmarks(&self) -> usize {
        self.0.len() / 3
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn point(&self, i: usize) -> crate::geometry::Point3 {
        crate::geometry::Point3::new(self.0[3 * i], self.0[3 * i + 1], self.0[3 * i + 2])
    }

    pub fn points(&self) -> Vec<crate::geometry::Point3> {
        (0..self.n_landmarks()).map(|i| self.point(i)).collect()
    }

    /// Drops the depth coordinate.
    pub fn xy(&self) -> Shape2D {
        let mut v = Vec::with_capacity(self.n_landmarks() * 2);
        for i in 0..self.n_landmarks() {
            v.push(self.0[3 * i]);
            v.push(self.0[3 * i + 1]);
        }
        Shape2D::new(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbox_and_centroid() {
        let s = Shape2D::new(vec![0.0, 0.0, 4.0, 0.0, 4.0, 2.0, 0.0, 2.0]);
        let b = s.bbox();
        assert_eq!((b.x, b.y, b.width, b.height), (0.0, 0.0, 4.0, 2.0));
        assert_eq!(s.centroid(), Point2::new(2.0, 1.0));
    }
}
