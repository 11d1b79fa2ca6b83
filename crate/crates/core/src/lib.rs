//! Wearable Cartesian teleoperation from two IMU/sEMG armbands.
//!
//! The upper-arm and forearm armband orientations give the wrist position
//! through a two-segment arm model; successive wrist poses become pose
//! increments that a slave robot integrates after sliding-average
//! smoothing. Forearm sEMG windows drive a logistic-regression grasp
//! classifier that opens and closes the gripper. A two-host protocol bridges
//! the 50 Hz sensor rate and the 1000 Hz robot control rate.
//!
//! Modules:
//! - [`math`]: quaternions, rotation matrices, wrist kinematics and increments
//! - [`semg`]: MAV/WL/RMS features, logistic regression, debouncing
//! - [`smoothing`]: increment averaging and robot pose integration
//! - [`sync`]: wire codec, simulated channel, both hosts, simulator, TCP runner
//! - [`metrics`]: trajectory pairing, per-axis RMSE and MAE
//! - [`synth`]: synthetic shape traces and sEMG streams
//! - [`io`]: file formats (sensor logs, trajectories, datasets, models)
//! - [`cli`]: the `teleop` command line

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod io;
pub mod math;
pub mod metrics;
pub mod semg;
pub mod smoothing;
pub mod sync;
pub mod synth;
