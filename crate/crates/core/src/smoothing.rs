//! Sliding-average smoothing of pose increments and robot pose integration.
//!
//! Position increments are averaged arithmetically. Orientation increments
//! are averaged as the principal left singular vector of the 4×N matrix of
//! (sign-aligned) window quaternions, obtained from the eigen-decomposition
//! of the 4×4 scatter matrix `M·Mᵀ`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{add, PoseIncrement, Quaternion, Vec3};

/// Window size used by the reference pipeline.
pub const DEFAULT_WINDOW: usize = 10;

/// Singular-value gap below which the principal direction is ambiguous.
pub const SPECTRUM_GAP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmoothingError {
    #[error("cannot average an empty window")]
    EmptyWindow,
    #[error("smoothing window must hold at least one increment")]
    InvalidWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub window: usize,
}

impl SmootherConfig {
    pub fn new(window: usize) -> Result<Self, SmoothingError> {
        if window == 0 {
            return Err(SmoothingError::InvalidWindow);
        }
        Ok(Self { window })
    }
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
        }
    }
}

/// Target pose of the slave end-effector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    pub p: Vec3,
    pub q: Quaternion,
}

impl RobotPose {
    pub fn new(p: Vec3, q: Quaternion) -> Self {
        Self { p, q }
    }
}

impl Default for RobotPose {
    fn default() -> Self {
        Self {
            p: [0.0; 3],
            q: Quaternion::IDENTITY,
        }
    }
}

/// Component-wise mean of the window's position increments.
pub fn avg_position(window: &[PoseIncrement]) -> Result<Vec3, SmoothingError> {
    if window.is_empty() {
        return Err(SmoothingError::EmptyWindow);
    }
    let mut sum = [0.0; 3];
    for inc in window {
        sum = add(sum, inc.dp);
    }
    let n = window.len() as f64;
    Ok([sum[0] / n, sum[1] / n, sum[2] / n])
}

/// Result of [`avg_quaternion`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuaternionAverage {
    pub q: Quaternion,
    /// Set when the top two singular values were too close to pick a
    /// principal direction; `q` is then the normalized arithmetic mean.
    pub degenerate: bool,
}

/// Principal-direction average of a window of unit quaternions, oldest first.
///
/// Every element is flipped into the hemisphere of the first element before
/// stacking, and the result is signed to agree with the newest element.
pub fn avg_quaternion(window: &[Quaternion]) -> Result<QuaternionAverage, SmoothingError> {
    let first = window.first().ok_or(SmoothingError::EmptyWindow)?;
    let newest = window[window.len() - 1];

    let aligned: Vec<[f64; 4]> = window
        .iter()
        .map(|q| if q.dot(first) < 0.0 { -*q } else { *q })
        .map(|q| q.to_array())
        .collect();

    let mut scatter = [[0.0; 4]; 4];
    for c in &aligned {
        for i in 0..4 {
            for j in 0..4 {
                scatter[i][j] += c[i] * c[j];
            }
        }
    }
    let (values, vectors) = symmetric_eigen4(scatter);

    // eigenvalues of M·Mᵀ are the squared singular values of M
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sigma1 = values[order[0]].max(0.0).sqrt();
    let sigma2 = values[order[1]].max(0.0).sqrt();

    let (direction, degenerate) = if sigma1 - sigma2 < SPECTRUM_GAP_TOLERANCE {
        let mut mean = [0.0; 4];
        for c in &aligned {
            for k in 0..4 {
                mean[k] += c[k];
            }
        }
        (mean, true)
    } else {
        let k = order[0];
        (
            [vectors[0][k], vectors[1][k], vectors[2][k], vectors[3][k]],
            false,
        )
    };

    // aligned elements all have positive dot with `first`, so neither branch
    // can produce a zero vector
    let mut q = Quaternion::from_direction(direction).ok_or(SmoothingError::EmptyWindow)?;
    if q.dot(&newest) < 0.0 {
        q = -q;
    }
    Ok(QuaternionAverage { q, degenerate })
}

/// `p ← p + dp`, `q ← dq ⊗ q`.
pub fn apply_pose_update(pose: &RobotPose, dp_avg: Vec3, dq_avg: &Quaternion) -> RobotPose {
    RobotPose {
        p: add(pose.p, dp_avg),
        q: dq_avg.mul(&pose.q),
    }
}

/// Ring buffer of the most recent `window` increments.
///
/// Before the window fills, averages run over whatever has arrived.
#[derive(Debug, Clone)]
pub struct IncrementSmoother {
    config: SmootherConfig,
    increments: VecDeque<PoseIncrement>,
    degenerate_count: u64,
}

/// Smoothed increment ready to be integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedIncrement {
    pub dp: Vec3,
    pub dq: Quaternion,
    pub degenerate: bool,
}

impl IncrementSmoother {
    pub fn new(config: SmootherConfig) -> Self {
        Self {
            config,
            increments: VecDeque::with_capacity(config.window),
            degenerate_count: 0,
        }
    }

    pub fn config(&self) -> SmootherConfig {
        self.config
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn degenerate_count(&self) -> u64 {
        self.degenerate_count
    }

    pub fn clear(&mut self) {
        self.increments.clear();
    }

    /// Pushes one increment and returns the window average.
    pub fn push(&mut self, inc: PoseIncrement) -> SmoothedIncrement {
        if self.increments.len() == self.config.window {
            self.increments.pop_front();
        }
        self.increments.push_back(inc);
        let window = self.increments.make_contiguous();
        // the window is non-empty here, so neither average can fail
        let dp = avg_position(window).unwrap_or(inc.dp);
        let quats: Vec<Quaternion> = window.iter().map(|i| i.dq).collect();
        let avg = avg_quaternion(&quats).unwrap_or(QuaternionAverage {
            q: inc.dq,
            degenerate: true,
        });
        if avg.degenerate {
            self.degenerate_count += 1;
        }
        SmoothedIncrement {
            dp,
            dq: avg.q,
            degenerate: avg.degenerate,
        }
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric 4×4 matrix.
///
/// Returns eigenvalues and a matrix whose columns are the matching unit
/// eigenvectors.
fn symmetric_eigen4(mut a: [[f64; 4]; 4]) -> ([f64; 4], [[f64; 4]; 4]) {
    let mut v = [[0.0; 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return ([0.0; 4], v);
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..4 {
            for q in (p + 1)..4 {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= f64::EPSILON * 1e-3 * scale {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2], a[3][3]], v)
}
