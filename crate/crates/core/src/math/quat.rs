//! Unit quaternions and 3×3 rotation matrices.
//!
//! Storage order is scalar first: `(η, ε_x, ε_y, ε_z)`. Every constructor
//! checks the norm; inputs within `NORM_TOLERANCE` of unity are renormalized,
//! anything further off is rejected. All operations on a [`Quaternion`]
//! therefore start from a unit value and renormalize their result.

use std::ops::Neg;

use serde::{Deserialize, Serialize};

use super::{MathError, Vec3};

/// Largest accepted deviation `|‖q‖ − 1|` before a quaternion is rejected.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Unit quaternion `{η, ε}` with Hamilton product convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "[f64; 4]")]
pub struct Quaternion {
    eta: f64,
    eps: Vec3,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        eta: 1.0,
        eps: [0.0, 0.0, 0.0],
    };

    /// Builds a quaternion from scalar-first components, normalizing small
    /// deviations and rejecting non-unit or non-finite input.
    pub fn new(eta: f64, ex: f64, ey: f64, ez: f64) -> Result<Self, MathError> {
        let norm = (eta * eta + ex * ex + ey * ey + ez * ez).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(MathError::NonUnitQuaternion { norm });
        }
        Ok(Self {
            eta: eta / norm,
            eps: [ex / norm, ey / norm, ez / norm],
        })
    }

    pub fn from_array(c: [f64; 4]) -> Result<Self, MathError> {
        Self::new(c[0], c[1], c[2], c[3])
    }

    /// Normalizes an arbitrary nonzero 4-vector. Used where the caller owns a
    /// direction (eigenvectors, averages) rather than sensor data.
    pub(crate) fn from_direction(c: [f64; 4]) -> Option<Self> {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return None;
        }
        Some(Self {
            eta: c[0] / norm,
            eps: [c[1] / norm, c[2] / norm, c[3] / norm],
        })
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, MathError> {
        let n = super::norm(axis);
        if !(n.is_finite() && n > 0.0) || !angle.is_finite() {
            return Err(MathError::DegenerateAxis);
        }
        let (s, c) = (angle / 2.0).sin_cos();
        Ok(Self {
            eta: c,
            eps: [axis[0] / n * s, axis[1] / n * s, axis[2] / n * s],
        }
        .renormalized())
    }

    /// Exponential map of a rotation vector (axis × angle).
    pub fn from_rotation_vector(v: Vec3) -> Self {
        let angle = super::norm(v);
        if angle < 1e-12 {
            return Self::from_direction([1.0, v[0] / 2.0, v[1] / 2.0, v[2] / 2.0])
                .unwrap_or(Self::IDENTITY);
        }
        let (s, c) = (angle / 2.0).sin_cos();
        Self {
            eta: c,
            eps: [v[0] / angle * s, v[1] / angle * s, v[2] / angle * s],
        }
        .renormalized()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn eps(&self) -> Vec3 {
        self.eps
    }

    /// Components in storage order `(η, ε_x, ε_y, ε_z)`.
    pub fn to_array(&self) -> [f64; 4] {
        [self.eta, self.eps[0], self.eps[1], self.eps[2]]
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.eta * other.eta + super::dot(self.eps, other.eps)
    }

    /// Conjugate, which is the inverse for a unit quaternion.
    pub fn inverse(&self) -> Self {
        Self {
            eta: self.eta,
            eps: [-self.eps[0], -self.eps[1], -self.eps[2]],
        }
    }

    /// Hamilton product `self ⊗ rhs`, renormalized.
    pub fn mul(&self, rhs: &Quaternion) -> Self {
        let (a0, a) = (self.eta, self.eps);
        let (b0, b) = (rhs.eta, rhs.eps);
        let cross = super::cross(a, b);
        Self {
            eta: a0 * b0 - super::dot(a, b),
            eps: [
                a0 * b[0] + b0 * a[0] + cross[0],
                a0 * b[1] + b0 * a[1] + cross[1],
                a0 * b[2] + b0 * a[2] + cross[2],
            ],
        }
        .renormalized()
    }

    /// Rotation angle in `[0, π]`, independent of the double-cover sign.
    pub fn angle(&self) -> f64 {
        let v = super::norm(self.eps);
        2.0 * v.atan2(self.eta.abs())
    }

    /// Angle of the relative rotation between two quaternions.
    pub fn angle_to(&self, other: &Quaternion) -> f64 {
        self.inverse().mul(other).angle()
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        self.to_rotation_matrix().apply(v)
    }

    pub fn to_rotation_matrix(&self) -> RotationMatrix {
        let (n, [x, y, z]) = (self.eta, self.eps);
        RotationMatrix([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - z * n),
                2.0 * (x * z + y * n),
            ],
            [
                2.0 * (x * y + z * n),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - x * n),
            ],
            [
                2.0 * (x * z - y * n),
                2.0 * (y * z + x * n),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ])
    }

    /// Inverse of [`Quaternion::to_rotation_matrix`] (Shepperd's method).
    /// The sign of the result is chosen with `η ≥ 0`.
    pub fn from_rotation_matrix(r: &RotationMatrix) -> Result<Self, MathError> {
        let m = &r.0;
        let trace = m[0][0] + m[1][1] + m[2][2];
        let c = if trace > m[0][0].max(m[1][1]).max(m[2][2]) {
            let s = 2.0 * (1.0 + trace).sqrt();
            [
                s / 4.0,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            ]
        } else if m[0][0] >= m[1][1] && m[0][0] >= m[2][2] {
            let s = 2.0 * (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt();
            [
                (m[2][1] - m[1][2]) / s,
                s / 4.0,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            ]
        } else if m[1][1] >= m[2][2] {
            let s = 2.0 * (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt();
            [
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                s / 4.0,
                (m[1][2] + m[2][1]) / s,
            ]
        } else {
            let s = 2.0 * (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt();
            [
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                s / 4.0,
            ]
        };
        let q = Self::new(c[0], c[1], c[2], c[3])?;
        Ok(if q.eta < 0.0 { -q } else { q })
    }

    fn renormalized(self) -> Self {
        Self::from_direction(self.to_array()).unwrap_or(Self::IDENTITY)
    }
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Self::Output {
        Self {
            eta: -self.eta,
            eps: [-self.eps[0], -self.eps[1], -self.eps[2]],
        }
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        q.to_array()
    }
}

impl TryFrom<[f64; 4]> for Quaternion {
    type Error = MathError;

    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        Self::from_array(c)
    }
}

impl<'de> Deserialize<'de> for Quaternion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let c = <[f64; 4]>::deserialize(d)?;
        Self::from_array(c).map_err(serde::de::Error::custom)
    }
}

/// Row-major 3×3 rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix =
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_columns(x: Vec3, y: Vec3, z: Vec3) -> Self {
        RotationMatrix([[x[0], y[0], z[0]], [x[1], y[1], z[1]], [x[2], y[2], z[2]]])
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn column(&self, j: usize) -> Vec3 {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn matmul(&self, rhs: &RotationMatrix) -> RotationMatrix {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        RotationMatrix(out)
    }

    pub fn transpose(&self) -> RotationMatrix {
        let m = &self.0;
        RotationMatrix([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// `‖RᵀR − I‖_max`.
    pub fn orthonormality_error(&self) -> f64 {
        let p = self.transpose().matmul(self);
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p.0[i][j] - target).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &RotationMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }
}

pub fn quat_to_rotmat(q: &Quaternion) -> RotationMatrix {
    q.to_rotation_matrix()
}

pub fn quat_mul(a: &Quaternion, b: &Quaternion) -> Quaternion {
    a.mul(b)
}

pub fn quat_inverse(q: &Quaternion) -> Quaternion {
    q.inverse()
}
