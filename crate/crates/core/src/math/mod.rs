//! Quaternion algebra and the two-segment arm model.
//!
//! The inertial, shoulder and manipulator-base frames are assumed to share
//! one orientation, so no frame alignment happens anywhere in this crate: a
//! wrist displacement in the shoulder frame is used directly as a robot
//! end-effector displacement (1:1 scaling).

mod kinematics;
mod quat;

pub use kinematics::{
    pose_increment, wrist_position, ArmModel, ImuReading, ImuSample, PoseIncrement,
};
pub use quat::{
    quat_inverse, quat_mul, quat_to_rotmat, Quaternion, RotationMatrix, NORM_TOLERANCE,
};

use thiserror::Error;

/// Cartesian 3-vector, meters unless stated otherwise.
pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("quaternion norm {norm} is not within tolerance of 1")]
    NonUnitQuaternion { norm: f64 },
    #[error("rotation axis must be finite and nonzero")]
    DegenerateAxis,
    #[error("arm segment lengths must be positive and finite (upper={upper}, forearm={forearm})")]
    InvalidArm { upper: f64, forearm: f64 },
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}
