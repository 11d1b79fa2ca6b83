//! Wrist position from two armband orientations, and pose increments.

use serde::{Deserialize, Serialize};

use super::{sub, MathError, Quaternion, Vec3};

/// Upper-arm and forearm lengths in meters.
///
/// The elbow sits at `[l_upper, 0, 0]` in the elbow frame and the wrist at
/// `[l_forearm, 0, 0]` in the wrist frame, i.e. each armband's local x axis
/// points along its segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    upper: f64,
    forearm: f64,
}

impl ArmModel {
    pub const DEFAULT_UPPER: f64 = 0.30;
    pub const DEFAULT_FOREARM: f64 = 0.25;

    pub fn new(upper: f64, forearm: f64) -> Result<Self, MathError> {
        if !(upper.is_finite() && forearm.is_finite() && upper > 0.0 && forearm > 0.0) {
            return Err(MathError::InvalidArm { upper, forearm });
        }
        Ok(Self { upper, forearm })
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn forearm(&self) -> f64 {
        self.forearm
    }

    pub fn reach(&self) -> f64 {
        self.upper + self.forearm
    }

    /// Shoulder-to-elbow offset expressed in the elbow frame.
    pub fn shoulder_to_elbow(&self) -> Vec3 {
        [self.upper, 0.0, 0.0]
    }

    /// Elbow-to-wrist offset expressed in the wrist frame.
    pub fn elbow_to_wrist(&self) -> Vec3 {
        [self.forearm, 0.0, 0.0]
    }
}

impl Default for ArmModel {
    fn default() -> Self {
        Self {
            upper: Self::DEFAULT_UPPER,
            forearm: Self::DEFAULT_FOREARM,
        }
    }
}

/// One synchronized reading of both armbands' orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t_us: u64,
    pub q_upper: Quaternion,
    pub q_forearm: Quaternion,
}

impl ImuSample {
    pub fn new(t_us: u64, q_upper: Quaternion, q_forearm: Quaternion) -> Self {
        Self {
            t_us,
            q_upper,
            q_forearm,
        }
    }

    /// Validates raw scalar-first components as delivered by a sensor.
    pub fn from_raw(t_us: u64, upper: [f64; 4], forearm: [f64; 4]) -> Result<Self, MathError> {
        Ok(Self::new(
            t_us,
            Quaternion::from_array(upper)?,
            Quaternion::from_array(forearm)?,
        ))
    }
}

/// Unvalidated reading as delivered by the armbands: scalar-first
/// quaternion components for the upper arm and the forearm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuReading {
    pub t_us: u64,
    pub upper: [f64; 4],
    pub forearm: [f64; 4],
}

impl ImuReading {
    pub fn from_sample(sample: &ImuSample) -> Self {
        Self {
            t_us: sample.t_us,
            upper: sample.q_upper.to_array(),
            forearm: sample.q_forearm.to_array(),
        }
    }

    pub fn validate(&self) -> Result<ImuSample, MathError> {
        ImuSample::from_raw(self.t_us, self.upper, self.forearm)
    }
}

/// Position and orientation change of the wrist between two IMU samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseIncrement {
    pub t_us: u64,
    pub dp: Vec3,
    pub dq: Quaternion,
}

impl PoseIncrement {
    pub fn zero(t_us: u64) -> Self {
        Self {
            t_us,
            dp: [0.0; 3],
            dq: Quaternion::IDENTITY,
        }
    }
}

/// Shoulder-to-wrist vector in the shoulder frame.
pub fn wrist_position(arm: &ArmModel, sample: &ImuSample) -> Vec3 {
    let elbow = sample
        .q_upper
        .to_rotation_matrix()
        .apply(arm.shoulder_to_elbow());
    let forearm = sample
        .q_forearm
        .to_rotation_matrix()
        .apply(arm.elbow_to_wrist());
    super::add(elbow, forearm)
}

/// `dp = p_curr − p_prev`, `dq = q_curr ⊗ q_prev⁻¹`.
pub fn pose_increment(
    prev: (Vec3, Quaternion),
    curr: (Vec3, Quaternion),
    t_us: u64,
) -> PoseIncrement {
    PoseIncrement {
        t_us,
        dp: sub(curr.0, prev.0),
        dq: curr.1.mul(&prev.1.inverse()),
    }
}
