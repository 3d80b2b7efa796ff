//! Projective plane transforms for frame alignment.

use crate::error::{Error, Result};

const DET_EPS: f64 = 1e-12;

/// 3x3 projective matrix acting on homogeneous pixel coordinates
/// `(x, y, 1)`, normalized so `m[2][2] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform2D {
    m: [[f64; 3]; 3],
}

impl Transform2D {
    /// Validates invertibility and normalizes the bottom-right entry to 1.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Transform("non-finite matrix entry".into()));
        }
        let det = det3(&m);
        if det.abs() <= DET_EPS {
            return Err(Error::Transform(format!(
                "matrix is singular (|det| = {:e})",
                det.abs()
            )));
        }
        let s = m[2][2];
        if s.abs() <= DET_EPS {
            return Err(Error::Transform(
                "cannot normalize: m[2][2] is (near) zero".into(),
            ));
        }
        let mut n = m;
        for row in &mut n {
            for v in row {
                *v /= s;
            }
        }
        Ok(Self { m: n })
    }

    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Maps `(x, y)` to `(x + dx, y + dy)`.
    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            m: [[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]],
        }
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn det(&self) -> f64 {
        det3(&self.m)
    }

    /// Adjugate-based inverse, renormalized to `m[2][2] == 1`.
    pub fn inverse(&self) -> Result<Transform2D> {
        let m = &self.m;
        let det = det3(m);
        if det.abs() <= DET_EPS {
            return Err(Error::Transform("cannot invert singular matrix".into()));
        }
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        let mut inv = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                inv[i][j] = adj[i][j] / det;
            }
        }
        Transform2D::new(inv)
    }

    /// Composition `self * other` (apply `other` first).
    pub fn compose(&self, other: &Transform2D) -> Result<Transform2D> {
        let a = &self.m;
        let b = &other.m;
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Transform2D::new(out)
    }

    /// Applies the transform to a point, with homogeneous divide.
    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.m;
        let u = m[0][0] * x + m[0][1] * y + m[0][2];
        let v = m[1][0] * x + m[1][1] * y + m[1][2];
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        (u / w, v / w)
    }

    /// Frobenius norm of `self - identity`.
    pub fn frobenius_from_identity(&self) -> f64 {
        let id = Transform2D::identity();
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let d = self.m[i][j] - id.m[i][j];
                s += d * d;
            }
        }
        s.sqrt()
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
