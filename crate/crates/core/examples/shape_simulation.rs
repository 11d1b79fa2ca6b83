//! Traces the four test shapes through the simulated two-host pipeline on
//! an ideal and a degraded link and prints per-axis tracking errors.
//!
//! ```text
//! cargo run --release --example shape_simulation
//! ```

use armband_teleop::math::ArmModel;
use armband_teleop::metrics::{evaluate, TableReport, DEFAULT_PAIR_TOLERANCE_US};
use armband_teleop::sync::{run_simulation, ChannelModel, Scenario, SimConfig};
use armband_teleop::synth::{gen_shape, Shape, ShapeSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arm = ArmModel::default();
    let links = [
        ("ideal", ChannelModel::ideal()),
        (
            "degraded",
            ChannelModel {
                latency_us: 20_000,
                jitter_us: 10_000,
                drop_prob: 0.05,
                seed: 0,
            },
        ),
    ];
    for (label, channel) in links {
        let mut table = TableReport::default();
        for shape in Shape::ALL {
            let spec = ShapeSpec {
                noise_q: 0.3f64.to_radians(),
                ..ShapeSpec::new(shape)
            };
            let trace = gen_shape(&spec, &arm)?;
            let scenario = Scenario {
                arm,
                imu: trace.imu,
                semg: Vec::new(),
            };
            let config = SimConfig {
                channel,
                ..SimConfig::default()
            };
            let out = run_simulation(&scenario, None, &config)?;
            let report = evaluate(&out.human, &out.commanded, DEFAULT_PAIR_TOLERANCE_US)?;
            table.insert(shape.name(), &report);
            println!(
                "{label:>8} {:<9} rmse [{:.4} {:.4} {:.4}] mae [{:.4} {:.4} {:.4}] dropped {}",
                shape.name(),
                report.rmse[0],
                report.rmse[1],
                report.rmse[2],
                report.mae[0],
                report.mae[1],
                report.mae[2],
                out.stats.messages_dropped
            );
        }
        println!("{}", serde_json::to_string(&table)?);
    }
    Ok(())
}
