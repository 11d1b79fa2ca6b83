//! Sliding-window smoothing of noisy pose increments.
//!
//! ```text
//! cargo run --example increment_smoothing
//! ```

use armband_teleop::math::{norm, sub, PoseIncrement, Quaternion};
use armband_teleop::smoothing::{
    apply_pose_update, avg_quaternion, IncrementSmoother, RobotPose, SmootherConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let jitter = Normal::new(0.0, 0.002)?;

    // 2 mm per step along x with 2 mm noise on every axis
    let truth_step = [0.002, 0.0, 0.0];
    let turn = Quaternion::from_axis_angle([0.0, 0.0, 1.0], 0.01)?;
    let mut raw = RobotPose::default();
    let mut smooth = RobotPose::default();
    let mut smoother = IncrementSmoother::new(SmootherConfig::default());
    let (mut raw_dev, mut smooth_dev) = (0.0f64, 0.0f64);
    for k in 1..=200u64 {
        let dp = truth_step.map(|c| c + jitter.sample(&mut rng));
        let inc = PoseIncrement {
            t_us: k * 20_000,
            dp,
            dq: turn,
        };
        raw = apply_pose_update(&raw, inc.dp, &inc.dq);
        let s = smoother.push(inc);
        smooth = apply_pose_update(&smooth, s.dp, &s.dq);
        raw_dev = raw_dev.max(norm(sub(dp, truth_step)));
        smooth_dev = smooth_dev.max(norm(sub(s.dp, truth_step)));
    }
    println!(
        "largest per-step deviation: raw {:.2} mm, smoothed {:.2} mm",
        raw_dev * 1e3,
        smooth_dev * 1e3
    );
    println!(
        "end positions: raw x={:.4} m, smoothed x={:.4} m",
        raw.p[0], smooth.p[0]
    );
    println!("heading after 200 steps: {:.2} rad", smooth.q.angle());

    // antipodal signs do not disturb the quaternion average
    let window: Vec<Quaternion> = (0..10)
        .map(|_| {
            let q =
                Quaternion::from_axis_angle([1.0, 0.0, 0.0], rng.gen_range(0.25..0.35)).unwrap();
            if rng.gen_bool(0.5) {
                -q
            } else {
                q
            }
        })
        .collect();
    let avg = avg_quaternion(&window)?;
    println!(
        "mean of 10 rotations near 0.3 rad about x: {:.4} rad, degenerate={}",
        avg.q.angle(),
        avg.degenerate
    );
    Ok(())
}
