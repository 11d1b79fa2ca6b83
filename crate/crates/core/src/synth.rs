//! Synthetic operator data: wrist shapes traced at constant speed (turned
//! into armband quaternions by two-link inverse kinematics) and sEMG noise
//! streams for relaxed and contracted muscle states.
//!
//! Shapes lie in the vertical X–Z plane of the shoulder frame at a fixed Y
//! offset (`center[1]`). Size is the side length for squares and triangles
//! and the (circum)radius for circles and pentagrams.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{
    add, cross, dot, norm, scale, sub, ArmModel, ImuReading, Quaternion, RotationMatrix, Vec3,
};
use crate::metrics::{Trajectory, TrajectorySample};
use crate::semg::{SemgFrame, CHANNELS};

/// IMU sample period (50 Hz).
pub const IMU_PERIOD_US: u64 = 20_000;
/// sEMG sample period (200 Hz).
pub const SEMG_PERIOD_US: u64 = 5_000;
/// Minimum clearance from the reach limits for generated paths.
pub const REACH_MARGIN: f64 = 1e-3;

pub const RELAXED_AMPLITUDE: f64 = 5.0;
pub const CONTRACTED_AMPLITUDE: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("path point {point:?} at distance {distance:.4} m is outside the reachable shell [{min:.4}, {max:.4}]")]
    UnreachablePath {
        point: Vec3,
        distance: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid shape spec: {0}")]
    InvalidSpec(String),
    #[error("unknown shape '{0}' (expected square, triangle, circle or pentagram)")]
    UnknownShape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Square,
    Triangle,
    Circle,
    Pentagram,
}

impl Shape {
    pub const ALL: [Shape; 4] = [
        Shape::Square,
        Shape::Triangle,
        Shape::Circle,
        Shape::Pentagram,
    ];

    /// Default size giving a 0.3 m characteristic extent.
    pub fn default_size(self) -> f64 {
        match self {
            Shape::Square | Shape::Triangle => 0.3,
            Shape::Circle | Shape::Pentagram => 0.15,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Square => "square",
            Shape::Triangle => "triangle",
            Shape::Circle => "circle",
            Shape::Pentagram => "pentagram",
        }
    }

    /// Closed outline in plane coordinates `(u, v)` centred on the origin.
    /// Circles return `None` and are handled analytically.
    fn vertices(self, size: f64) -> Option<Vec<[f64; 2]>> {
        let on_circle = |r: f64, deg: f64| {
            let a = deg.to_radians();
            [r * a.cos(), r * a.sin()]
        };
        let h = size / 2.0;
        let mut v = match self {
            Shape::Square => vec![[-h, -h], [h, -h], [h, h], [-h, h]],
            Shape::Triangle => {
                let r = size / 3f64.sqrt();
                vec![on_circle(r, 90.0), on_circle(r, 210.0), on_circle(r, 330.0)]
            }
            Shape::Pentagram => (0..5)
                .map(|k| on_circle(size, 90.0 + 144.0 * k as f64))
                .collect(),
            Shape::Circle => return None,
        };
        v.push(v[0]);
        Some(v)
    }

    /// Point at normalized arc length `s ∈ [0, 1]`.
    pub fn point(self, size: f64, s: f64) -> [f64; 2] {
        let s = s.clamp(0.0, 1.0);
        let Some(v) = self.vertices(size) else {
            let a = 2.0 * std::f64::consts::PI * s;
            return [size * a.cos(), size * a.sin()];
        };
        let lens: Vec<f64> = v
            .windows(2)
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .collect();
        let total: f64 = lens.iter().sum();
        if total == 0.0 {
            return v[0];
        }
        let mut remaining = s * total;
        let last = lens.len() - 1;
        for (i, (w, &len)) in v.windows(2).zip(&lens).enumerate() {
            if remaining <= len || i == last {
                let f = if len > 0.0 {
                    (remaining / len).min(1.0)
                } else {
                    0.0
                };
                return [
                    w[0][0] + f * (w[1][0] - w[0][0]),
                    w[0][1] + f * (w[1][1] - w[0][1]),
                ];
            }
            remaining -= len;
        }
        v[v.len() - 1]
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(Shape::Square),
            "triangle" => Ok(Shape::Triangle),
            "circle" => Ok(Shape::Circle),
            "pentagram" => Ok(Shape::Pentagram),
            other => Err(SynthError::UnknownShape(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeSpec {
    pub shape: Shape,
    pub size: f64,
    /// Shape centre in the shoulder frame.
    pub center: Vec3,
    pub duration_s: f64,
    /// Standard deviation of the per-axis rotation-vector noise (rad)
    /// applied to each quaternion.
    pub noise_q: f64,
    /// Correlation time of the orientation noise (s). Each axis follows a
    /// stationary first-order Gauss-Markov process with standard deviation
    /// `noise_q`; 0 gives independent samples.
    pub noise_tau_s: f64,
    pub seed: u64,
}

impl Default for ShapeSpec {
    fn default() -> Self {
        Self::new(Shape::Square)
    }
}

impl ShapeSpec {
    pub const DEFAULT_CENTER: Vec3 = [0.32, 0.10, 0.0];
    pub const DEFAULT_DURATION_S: f64 = 20.0;
    pub const DEFAULT_NOISE_TAU_S: f64 = 0.5;

    pub fn new(shape: Shape) -> Self {
        Self {
            shape,
            size: shape.default_size(),
            center: Self::DEFAULT_CENTER,
            duration_s: Self::DEFAULT_DURATION_S,
            noise_q: 0.0,
            noise_tau_s: Self::DEFAULT_NOISE_TAU_S,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.size >= 0.0 && self.size.is_finite()) {
            return Err(SynthError::InvalidSpec(format!(
                "size {} must be >= 0",
                self.size
            )));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(SynthError::InvalidSpec(format!(
                "duration {} must be positive",
                self.duration_s
            )));
        }
        if !(self.noise_q >= 0.0 && self.noise_q.is_finite()) {
            return Err(SynthError::InvalidSpec("noise_q must be >= 0".into()));
        }
        if !(self.noise_tau_s >= 0.0 && self.noise_tau_s.is_finite()) {
            return Err(SynthError::InvalidSpec("noise_tau_s must be >= 0".into()));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(SynthError::InvalidSpec("center must be finite".into()));
        }
        Ok(())
    }

    /// Wrist target in the shoulder frame at normalized arc length `s`.
    pub fn point(&self, s: f64) -> Vec3 {
        let [u, v] = self.shape.point(self.size, s);
        [self.center[0] + u, self.center[1], self.center[2] + v]
    }
}

/// Generated IMU stream and the noise-free wrist path it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeTrace {
    pub imu: Vec<ImuReading>,
    pub truth: Trajectory,
}

/// Upper-arm and forearm orientations placing the wrist at `target`.
///
/// The elbow lies in the plane spanned by the shoulder–wrist line and the
/// downward direction, on the lower side (elbow down). Both segment frames
/// have x along the segment and y along the common elbow hinge axis.
pub fn arm_ik(arm: &ArmModel, target: Vec3) -> Result<(Quaternion, Quaternion), SynthError> {
    let r = norm(target);
    let (min, max) = reach_shell(arm);
    if !(r >= min && r <= max) {
        return Err(SynthError::UnreachablePath {
            point: target,
            distance: r,
            min,
            max,
        });
    }
    let (lu, lf) = (arm.upper(), arm.forearm());
    let dir = scale(target, 1.0 / r);
    // downward direction projected off the shoulder–wrist line
    let mut down = [0.0, 0.0, -1.0];
    if (1.0 - dot(dir, down).abs()) < 1e-9 {
        down = [-1.0, 0.0, 0.0];
    }
    let n = sub(down, scale(dir, dot(down, dir)));
    let n = scale(n, 1.0 / norm(n));
    let cos_a = ((lu * lu + r * r - lf * lf) / (2.0 * lu * r)).clamp(-1.0, 1.0);
    let sin_a = (1.0 - cos_a * cos_a).sqrt();
    let upper_dir = add(scale(dir, cos_a), scale(n, sin_a));
    let elbow = scale(upper_dir, lu);
    let fore = sub(target, elbow);
    let fore_dir = scale(fore, 1.0 / norm(fore));
    let hinge = cross(dir, n);

    let frame = |x: Vec3| -> Result<Quaternion, SynthError> {
        let z = cross(x, hinge);
        let z = scale(z, 1.0 / norm(z));
        let y = cross(z, x);
        Quaternion::from_rotation_matrix(&RotationMatrix::from_columns(x, y, z))
            .map_err(|e| SynthError::InvalidSpec(e.to_string()))
    };
    Ok((frame(upper_dir)?, frame(fore_dir)?))
}

/// Reachable distances from the shoulder, with [`REACH_MARGIN`] clearance.
pub fn reach_shell(arm: &ArmModel) -> (f64, f64) {
    (
        (arm.upper() - arm.forearm()).abs() + REACH_MARGIN,
        arm.reach() - REACH_MARGIN,
    )
}

/// Traces the shape at constant speed, sampled at 50 Hz from t = 0 through
/// the closing point.
pub fn gen_shape(spec: &ShapeSpec, arm: &ArmModel) -> Result<ShapeTrace, SynthError> {
    spec.validate()?;
    let steps = ((spec.duration_s * 1e6) / IMU_PERIOD_US as f64)
        .round()
        .max(1.0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, 1.0).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let a = if spec.noise_tau_s > 0.0 {
        (-(IMU_PERIOD_US as f64 * 1e-6) / spec.noise_tau_s).exp()
    } else {
        0.0
    };
    let innovation = spec.noise_q * (1.0 - a * a).sqrt();
    // one process per segment, started from its stationary distribution
    let mut state = [[0.0f64; 3]; 2];
    for axis in state.iter_mut().flatten() {
        *axis = spec.noise_q * noise.sample(&mut rng);
    }
    let mut started = false;
    let mut perturb = |qs: [Quaternion; 2]| -> [Quaternion; 2] {
        if spec.noise_q == 0.0 {
            return qs;
        }
        if started {
            for axis in state.iter_mut().flatten() {
                *axis = a * *axis + innovation * noise.sample(&mut rng);
            }
        }
        started = true;
        [
            Quaternion::from_rotation_vector(state[0]).mul(&qs[0]),
            Quaternion::from_rotation_vector(state[1]).mul(&qs[1]),
        ]
    };

    let mut imu = Vec::with_capacity(steps as usize + 1);
    let mut truth = Vec::with_capacity(steps as usize + 1);
    for k in 0..=steps {
        let t_us = k * IMU_PERIOD_US;
        let target = spec.point(k as f64 / steps as f64);
        let (qu, qf) = arm_ik(arm, target)?;
        truth.push(TrajectorySample {
            t_us,
            p: target,
            q: Some(qf),
        });
        let [qu, qf] = perturb([qu, qf]);
        imu.push(ImuReading {
            t_us,
            upper: qu.to_array(),
            forearm: qf.to_array(),
        });
    }
    let truth = Trajectory::new(truth).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    Ok(ShapeTrace { imu, truth })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemgProfile {
    Relaxed,
    Contracted,
}

/// sEMG stream description. Samples are zero-mean Gaussian with standard
/// deviation `gain × amplitude`, where the amplitude depends on whether the
/// sample time falls inside one of the `contracted` intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemgSpec {
    pub duration_s: f64,
    pub gain: f64,
    pub seed: u64,
    pub relaxed_amplitude: f64,
    pub contracted_amplitude: f64,
    /// `[start_s, end_s)` intervals of muscle contraction.
    pub contracted: Vec<(f64, f64)>,
}

impl Default for SemgSpec {
    fn default() -> Self {
        Self {
            duration_s: 1.0,
            gain: 1.0,
            seed: 0,
            relaxed_amplitude: RELAXED_AMPLITUDE,
            contracted_amplitude: CONTRACTED_AMPLITUDE,
            contracted: Vec::new(),
        }
    }
}

impl SemgSpec {
    /// Contraction during the middle third of the run.
    pub fn middle_third(duration_s: f64, seed: u64) -> Self {
        Self {
            duration_s,
            seed,
            contracted: vec![(duration_s / 3.0, 2.0 * duration_s / 3.0)],
            ..Self::default()
        }
    }

    pub fn is_contracted(&self, t_s: f64) -> bool {
        self.contracted.iter().any(|&(a, b)| t_s >= a && t_s < b)
    }
}

/// 200 Hz, 8-channel stream following the spec's contraction schedule.
pub fn gen_semg_stream(spec: &SemgSpec) -> Result<Vec<SemgFrame>, SynthError> {
    if !(spec.duration_s > 0.0 && spec.duration_s.is_finite()) {
        return Err(SynthError::InvalidSpec(
            "sEMG duration must be positive".into(),
        ));
    }
    if !(spec.gain >= 0.0 && spec.relaxed_amplitude >= 0.0 && spec.contracted_amplitude >= 0.0) {
        return Err(SynthError::InvalidSpec(
            "sEMG gain and amplitudes must be >= 0".into(),
        ));
    }
    let n = (spec.duration_s * 1e6 / SEMG_PERIOD_US as f64).round() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let mut frames = Vec::with_capacity(n as usize);
    for k in 0..n {
        let t_us = k * SEMG_PERIOD_US;
        let amp = if spec.is_contracted(t_us as f64 / 1e6) {
            spec.contracted_amplitude
        } else {
            spec.relaxed_amplitude
        };
        let sd = spec.gain * amp;
        let ch: [i32; CHANNELS] = std::array::from_fn(|_| {
            let v: f64 = unit.sample(&mut rng);
            (v * sd).round() as i32
        });
        frames.push(SemgFrame { t_us, ch });
    }
    Ok(frames)
}

/// Constant-profile stream: relaxed (amplitude 5) or contracted (50).
pub fn gen_semg(
    profile: SemgProfile,
    duration_s: f64,
    gain: f64,
    seed: u64,
) -> Result<Vec<SemgFrame>, SynthError> {
    let contracted = match profile {
        SemgProfile::Relaxed => Vec::new(),
        SemgProfile::Contracted => vec![(0.0, f64::INFINITY)],
    };
    gen_semg_stream(&SemgSpec {
        duration_s,
        gain,
        seed,
        contracted,
        ..SemgSpec::default()
    })
}

/// Labeled feature dataset of `per_class` relaxed and `per_class`
/// contracted windows, each of `window_len` frames.
pub fn gen_labeled_windows(
    per_class: usize,
    window_len: usize,
    gain: f64,
    seed: u64,
) -> Result<Vec<(Vec<SemgFrame>, crate::semg::GripState)>, SynthError> {
    use crate::semg::GripState;
    let duration = (per_class * window_len) as f64 * SEMG_PERIOD_US as f64 / 1e6;
    let relaxed = gen_semg(SemgProfile::Relaxed, duration, gain, seed)?;
    let contracted = gen_semg(
        SemgProfile::Contracted,
        duration,
        gain,
        seed.wrapping_add(1),
    )?;
    let mut out = Vec::with_capacity(2 * per_class);
    for (frames, label) in [(relaxed, GripState::Open), (contracted, GripState::Closed)] {
        for chunk in frames.chunks_exact(window_len).take(per_class) {
            out.push((chunk.to_vec(), label));
        }
    }
    Ok(out)
}
