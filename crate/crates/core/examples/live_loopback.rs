//! Runs Host 1 and Host 2 on separate threads over a loopback TCP link.
//!
//! ```text
//! cargo run --example live_loopback
//! ```

use std::net::TcpListener;
use std::thread;

use armband_teleop::math::ArmModel;
use armband_teleop::metrics::{evaluate, DEFAULT_PAIR_TOLERANCE_US};
use armband_teleop::sync::live::{run_host1, run_host2_on, LiveConfig};
use armband_teleop::sync::Scenario;
use armband_teleop::synth::{gen_shape, Shape, ShapeSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arm = ArmModel::default();
    let spec = ShapeSpec {
        duration_s: 3.0,
        ..ShapeSpec::new(Shape::Circle)
    };
    let scenario = Scenario {
        arm,
        imu: gen_shape(&spec, &arm)?.imu,
        semg: Vec::new(),
    };
    let config = LiveConfig::default();

    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?.to_string();
    let host2 = thread::spawn({
        let config = config.clone();
        move || run_host2_on(listener, &config)
    });
    let h1 = run_host1(&addr, &scenario, None, &config)?;
    let h2 = host2.join().expect("host2 thread")?;

    println!("host1 sent {} messages", h1.stats.messages_sent);
    println!(
        "host2 received {}, integrated {}, ran {} control cycles, ended stale={}",
        h2.stats.messages_received, h2.stats.integrations, h2.stats.control_cycles, h2.final_stale
    );
    let report = evaluate(&h1.human, &h2.commanded, DEFAULT_PAIR_TOLERANCE_US)?;
    println!(
        "tracking rmse [{:.4} {:.4} {:.4}] m",
        report.rmse[0], report.rmse[1], report.rmse[2]
    );
    Ok(())
}
