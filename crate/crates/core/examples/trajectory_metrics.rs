//! Pairs two timestamped trajectories and reports per-axis RMSE and MAE,
//! round-tripping them through the CSV format used by `teleop eval`.
//!
//! ```text
//! cargo run --example trajectory_metrics
//! ```

use armband_teleop::io::{trajectory_from_csv, trajectory_to_csv};
use armband_teleop::metrics::{evaluate, Trajectory, TrajectorySample, AXES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sample = |t_us: u64, p: [f64; 3]| TrajectorySample { t_us, p, q: None };
    // robot lags the human by 30 ms on a 0.1 m/s sweep along x and is 5 mm high
    let human = Trajectory::new(
        (0..100)
            .map(|k| sample(k * 20_000, [0.002 * k as f64, 0.0, 0.0]))
            .collect(),
    )?;
    let robot = Trajectory::new(
        (0..2000)
            .map(|k| {
                let t = k as f64 * 1e-3;
                sample(k * 1000, [(0.1 * (t - 0.03)).max(0.0), 0.0, 0.005])
            })
            .collect(),
    )?;

    let csv = trajectory_to_csv(&robot);
    println!(
        "robot CSV: {} lines, header '{}'",
        csv.lines().count(),
        csv.lines().next().unwrap_or("")
    );
    let robot = trajectory_from_csv("robot.csv".as_ref(), &csv)?;

    let report = evaluate(&human, &robot, 500)?;
    for (axis, name) in AXES.iter().enumerate() {
        let e = report.axis(axis);
        println!("{name}: rmse {:.4} m, mae {:.4} m", e.rmse, e.mae);
    }
    println!(
        "{} pairs, {} human samples without a robot sample nearby",
        report.paired, report.unpaired
    );
    Ok(())
}
