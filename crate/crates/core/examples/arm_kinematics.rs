//! Wrist position and pose increments from two armband orientations.
//!
//! ```text
//! cargo run --example arm_kinematics
//! ```

use std::f64::consts::FRAC_PI_2;

use armband_teleop::math::{pose_increment, wrist_position, ArmModel, ImuSample, Quaternion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arm = ArmModel::new(0.30, 0.25)?;
    let down = Quaternion::from_axis_angle([0.0, 1.0, 0.0], FRAC_PI_2)?;

    // upper arm hanging down, elbow bending the forearm forward over one second
    let mut prev = None;
    for k in 0..=5u64 {
        let bend = FRAC_PI_2 * k as f64 / 5.0;
        let forearm = Quaternion::from_axis_angle([0.0, 1.0, 0.0], FRAC_PI_2 - bend)?;
        let sample = ImuSample::new(k * 200_000, down, forearm);
        let p = wrist_position(&arm, &sample);
        print!(
            "t={:.1}s wrist=[{:+.3}, {:+.3}, {:+.3}]",
            k as f64 * 0.2,
            p[0],
            p[1],
            p[2]
        );
        if let Some(before) = prev {
            let inc = pose_increment(before, (p, forearm), sample.t_us);
            print!(
                "  dp=[{:+.4}, {:+.4}, {:+.4}] dq angle={:.1} deg",
                inc.dp[0],
                inc.dp[1],
                inc.dp[2],
                inc.dq.angle().to_degrees()
            );
        }
        println!();
        prev = Some((p, forearm));
    }

    let r = down.to_rotation_matrix();
    println!(
        "R(upper) det={:.6} orthonormality error={:.1e}",
        r.determinant(),
        r.orthonormality_error()
    );
    println!(
        "reach shell: [{:.2}, {:.2}] m",
        (arm.upper() - arm.forearm()).abs(),
        arm.reach()
    );
    Ok(())
}
