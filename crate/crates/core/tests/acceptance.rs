//! Acceptance suite. Each criterion prints one `PASS` or `FAIL` line; the
//! process exits non-zero when any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use armband_teleop::io;
use armband_teleop::math::{
    norm, pose_increment, sub, wrist_position, ArmModel, ImuSample, PoseIncrement, Quaternion,
};
use armband_teleop::metrics::{evaluate, DEFAULT_PAIR_TOLERANCE_US};
use armband_teleop::semg::{
    build_feature_vector, decide, predict_prob, train, GripState, LabeledFeatures, LogisticModel,
    TrainConfig, DEFAULT_WINDOW_LEN, FEATURE_DIM,
};
use armband_teleop::smoothing::{
    apply_pose_update, avg_quaternion, IncrementSmoother, RobotPose, SmootherConfig,
};
use armband_teleop::sync::live::{run_host2_on, LiveConfig};
use armband_teleop::sync::wire::{frame_with_prefix, FrameDecoder};
use armband_teleop::sync::{
    decode_message, run_simulation, ChannelModel, EventKind, Host2, Host2Config, Payload,
    PoseIntegrator, Receiver, Scenario, SimChannel, SimConfig, WireError, WireMessage,
};
use armband_teleop::synth::{
    gen_labeled_windows, gen_semg_stream, gen_shape, SemgSpec, Shape, ShapeSpec,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("kinematics vs rotation-matrix oracle", c1_kinematics),
        ("increment round trip (N=1)", c2_round_trip),
        ("quaternion averaging", c3_averaging),
        ("grasp classifier", c4_classifier),
        ("ideal channel identity", c5_ideal_channel),
        ("degraded channel envelope", c6_degraded_channel),
        ("consume-once rate bridging", c7_consume_once),
        ("determinism and fault tolerance", c8_determinism_faults),
        ("wire codec", c9_wire_codec),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    let _ = panic::take_hook();
    println!(
        "{}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.map(|x| x / n);
        }
    }
}

fn random_axis(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = norm(v);
    v.map(|x| x / n)
}

fn oracle_rotate(q: [f64; 4], v: [f64; 3]) -> [f64; 3] {
    let uq = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
    let r = uq.to_rotation_matrix() * Vector3::new(v[0], v[1], v[2]);
    [r.x, r.y, r.z]
}

fn c1_kinematics() -> Outcome {
    let arm = ArmModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<([f64; 4], [f64; 4])> = (0..1000)
        .map(|_| (random_unit(&mut rng), random_unit(&mut rng)))
        .collect();

    let start = Instant::now();
    let positions: Vec<[f64; 3]> = pairs
        .iter()
        .map(|(u, f)| {
            let s = ImuSample::from_raw(0, *u, *f).expect("unit quaternions");
            wrist_position(&arm, &s)
        })
        .collect();
    let elapsed = start.elapsed();

    let reach = arm.upper() + arm.forearm();
    let mut max_err: f64 = 0.0;
    let mut max_len: f64 = 0.0;
    for ((u, f), p) in pairs.iter().zip(&positions) {
        let e = oracle_rotate(*u, [arm.upper(), 0.0, 0.0]);
        let w = oracle_rotate(*f, [arm.forearm(), 0.0, 0.0]);
        let expected = [e[0] + w[0], e[1] + w[1], e[2] + w[2]];
        max_err = max_err.max(norm(sub(*p, expected)));
        max_len = max_len.max(norm(*p));
    }
    check(
        max_err <= 1e-9 && max_len <= reach && elapsed < Duration::from_secs(1),
        format!(
            "max err {max_err:.2e} m, max |p| {max_len:.6} m <= {reach} m, {:.1} ms",
            ms(elapsed)
        ),
    )
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn rot(axis: [f64; 3], angle: f64) -> Quaternion {
    Quaternion::from_axis_angle(axis, angle).expect("unit axis")
}

fn c2_round_trip() -> Outcome {
    let arm = ArmModel::default();
    let start = Instant::now();
    let samples: Vec<ImuSample> = (0..=500u64)
        .map(|k| {
            let t = k as f64 * 0.02;
            let upper = rot([0.0, 0.0, 1.0], 0.6 * (0.7 * t).sin())
                .mul(&rot([0.0, 1.0, 0.0], 0.4 * (1.1 * t + 0.3).sin()))
                .mul(&rot([1.0, 0.0, 0.0], 0.3 * (0.5 * t).sin()));
            let forearm = upper
                .mul(&rot([0.0, 1.0, 0.0], -0.9 + 0.5 * (0.9 * t).sin()))
                .mul(&rot([1.0, 0.0, 0.0], 0.8 * (1.3 * t + 1.0).cos()));
            ImuSample::new(k * 20_000, upper, forearm)
        })
        .collect();
    let poses: Vec<_> = samples
        .iter()
        .map(|s| (wrist_position(&arm, s), s.q_forearm))
        .collect();

    let mut smoother = IncrementSmoother::new(SmootherConfig::new(1).expect("window 1"));
    let mut robot = RobotPose::new(poses[0].0, poses[0].1);
    for (k, w) in poses.windows(2).enumerate() {
        let inc = pose_increment(w[0], w[1], (k as u64 + 1) * 20_000);
        let s = smoother.push(inc);
        robot = apply_pose_update(&robot, s.dp, &s.dq);
    }
    let elapsed = start.elapsed();

    let last = poses.last().expect("non-empty");
    let dp = norm(sub(robot.p, last.0));
    let dq = robot.q.angle_to(&last.1);
    check(
        dp <= 1e-6 && dq <= 1e-6 && elapsed < Duration::from_secs(1),
        format!(
            "{dp:.2e} m, {dq:.2e} rad after 500 increments, {:.1} ms",
            ms(elapsed)
        ),
    )
}

fn c3_averaging() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_dot: f64 = 1.0;
    let mut worst_angle: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let signed = |rng: &mut ChaCha8Rng, q: [f64; 4]| {
        if rng.gen_bool(0.5) {
            q.map(|x| -x)
        } else {
            q
        }
    };

    for _ in 0..1000 {
        let q = random_unit(&mut rng);
        let window: Vec<Quaternion> = (0..10)
            .map(|_| Quaternion::from_array(signed(&mut rng, q)).expect("unit"))
            .collect();
        let avg = avg_quaternion(&window).expect("non-empty").q;
        worst_dot = worst_dot.min(avg.dot(window.last().expect("non-empty")));
        worst_norm = worst_norm.max((avg.norm() - 1.0).abs());
    }

    for _ in 0..1000 {
        let c = Quaternion::from_array(random_unit(&mut rng)).expect("unit");
        let window: Vec<Quaternion> = (0..10)
            .map(|_| {
                let angle = rng.gen_range(0.0..10f64.to_radians());
                let q = c.mul(&rot(random_axis(&mut rng), angle));
                Quaternion::from_array(signed(&mut rng, q.to_array())).expect("unit")
            })
            .collect();
        let avg = avg_quaternion(&window).expect("non-empty").q;
        let reference = window[0].to_array();
        let mut mean = [0.0; 4];
        for q in &window {
            let a = q.to_array();
            let s = if (0..4).map(|i| a[i] * reference[i]).sum::<f64>() < 0.0 {
                -1.0
            } else {
                1.0
            };
            for i in 0..4 {
                mean[i] += s * a[i];
            }
        }
        let n = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
        let oracle = Quaternion::from_array(mean.map(|x| x / n)).expect("unit");
        worst_angle = worst_angle.max(avg.angle_to(&oracle).to_degrees());
        worst_norm = worst_norm.max((avg.norm() - 1.0).abs());
    }

    // Windows with no dominant direction still produce unit quaternions.
    let basis = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let flat: Vec<Quaternion> = basis
        .iter()
        .map(|b| Quaternion::from_array(*b).expect("unit"))
        .collect();
    let avg = avg_quaternion(&flat).expect("non-empty").q;
    worst_norm = worst_norm.max((avg.norm() - 1.0).abs());

    check(
        worst_dot >= 1.0 - 1e-12 && worst_angle <= 0.05 && worst_norm <= 1e-12,
        format!(
            "rank-1 min dot 1-{:.1e}, 10 deg max deviation {worst_angle:.4} deg, max |norm-1| {worst_norm:.1e}",
            1.0 - worst_dot
        ),
    )
}

fn c4_classifier() -> Outcome {
    let windows =
        gen_labeled_windows(1000, DEFAULT_WINDOW_LEN, 1.0, 4).map_err(|e| e.to_string())?;
    let mut train_set = Vec::new();
    let mut test_set = Vec::new();
    for (i, (frames, label)) in windows.iter().enumerate() {
        let x = build_feature_vector(frames).map_err(|e| e.to_string())?;
        let sample = LabeledFeatures { x, label: *label };
        if i % 5 == 4 {
            test_set.push(sample);
        } else {
            train_set.push(sample);
        }
    }
    let (model, _) = train(&train_set, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let correct = test_set
        .iter()
        .filter(|s| decide(predict_prob(&model, &s.x)) == s.label)
        .count();
    let accuracy = correct as f64 / test_set.len() as f64;

    let flat = LogisticModel::from_weights([0.0; FEATURE_DIM], 0.0);
    let p_tie = predict_prob(&flat, &test_set[0].x);
    let tie_open = p_tie == 0.5 && decide(p_tie) == GripState::Open && decide(0.5).as_u8() == 0;

    check(
        accuracy >= 0.99 && tie_open,
        format!(
            "held-out accuracy {accuracy:.4} on {} windows ({} train), p=0.5 -> state {}",
            test_set.len(),
            train_set.len(),
            decide(0.5).as_u8()
        ),
    )
}

fn teleop(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_teleop"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "teleop {}: {}",
            args[0],
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn c5_ideal_channel() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let warm_up_us = SmootherConfig::default().window as u64 * 20_000;
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    let mut rows = Vec::new();
    for shape in Shape::ALL {
        let name = shape.name();
        let log = dir.path().join(format!("{name}.jsonl"));
        let run_dir = dir.path().join(name);
        let start = Instant::now();
        teleop(&["synth", "--shape", name, "--out", path_str(&log)])?;
        teleop(&[
            "run-sim",
            "--scenario",
            path_str(&log),
            "--out-dir",
            path_str(&run_dir),
        ])?;
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);

        let human =
            io::read_trajectory(&run_dir.join("human_filtered.csv")).map_err(|e| e.to_string())?;
        let robot =
            io::read_trajectory(&run_dir.join("commanded.csv")).map_err(|e| e.to_string())?;
        let report = evaluate(&human.since(warm_up_us), &robot, DEFAULT_PAIR_TOLERANCE_US)
            .map_err(|e| e.to_string())?;
        if report.paired < 900 {
            return Err(format!("{name}: only {} paired samples", report.paired));
        }
        worst = worst.max(report.max_rmse());
        rows.push(format!("{name} {:.1e}", report.max_rmse()));
    }
    check(
        worst <= 1e-6 && slowest < Duration::from_secs(10),
        format!(
            "max per-axis RMSE: {}; slowest shape {:.2} s",
            rows.join(", "),
            slowest.as_secs_f64()
        ),
    )
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn c6_degraded_channel() -> Outcome {
    let arm = ArmModel::default();
    let mut ok = true;
    let mut rows = Vec::new();
    for shape in Shape::ALL {
        let mut spec = ShapeSpec::new(shape);
        spec.noise_q = 0.3f64.to_radians();
        spec.noise_tau_s = ShapeSpec::DEFAULT_NOISE_TAU_S;
        spec.seed = 0;
        let trace = gen_shape(&spec, &arm).map_err(|e| e.to_string())?;
        let scenario = Scenario {
            arm,
            imu: trace.imu,
            semg: Vec::new(),
        };
        let config = SimConfig {
            channel: ChannelModel {
                latency_us: 20_000,
                jitter_us: 10_000,
                drop_prob: 0.05,
                seed: 0,
            },
            ..SimConfig::default()
        };
        let out = run_simulation(&scenario, None, &config).map_err(|e| e.to_string())?;
        let report = evaluate(&out.human, &out.commanded, DEFAULT_PAIR_TOLERANCE_US)
            .map_err(|e| e.to_string())?;
        let pass = report.max_rmse() <= 0.0165 && report.max_mae() <= 0.0124;
        ok &= pass;
        rows.push(format!(
            "{} rmse {:.4} mae {:.4}{}",
            shape.name(),
            report.max_rmse(),
            report.max_mae(),
            if pass { "" } else { " over limit" }
        ));
    }
    check(
        ok,
        format!(
            "worst axis per shape: {}; limits 0.0165/0.0124 m",
            rows.join(", ")
        ),
    )
}

fn c7_consume_once() -> Outcome {
    let start_p = [0.4, 0.0, 0.4];
    let mut host = Host2::new(Host2Config::default());
    host.calibrate(0, RobotPose::new(start_p, Quaternion::IDENTITY));
    let mut channel = SimChannel::new(ChannelModel::ideal()).map_err(|e| e.to_string())?;
    let mut receiver = Receiver::new();
    let mut last = None;
    for t in (0..=1_000_000u64).step_by(1000) {
        if t > 0 && t % 20_000 == 0 {
            let inc = PoseIncrement {
                t_us: t,
                dp: [0.001, 0.0, 0.0],
                dq: Quaternion::IDENTITY,
            };
            channel.send(t, WireMessage::pose_inc(&inc).encode());
        }
        if t % 4000 == 0 {
            host.receive_step(t, &mut receiver, &mut channel);
        }
        last = Some(host.control_step(t).map_err(|e| e.to_string())?);
    }
    let last = last.expect("control ran");
    let moved_mm = (last.pose.p[0] - start_p[0]) * 1e3;
    let stats = host.stats();
    check(
        (moved_mm - 50.0).abs() <= 1e-9 && stats.integrations == 50 && stats.control_cycles == 1001,
        format!(
            "moved {moved_mm:.12} mm over {} control cycles, {} integrations",
            stats.control_cycles, stats.integrations
        ),
    )
}

fn square_scenario(seed: u64, with_emg: bool) -> Result<Scenario, String> {
    let arm = ArmModel::default();
    let mut spec = ShapeSpec::new(Shape::Square);
    spec.noise_q = 0.3f64.to_radians();
    spec.seed = seed;
    let trace = gen_shape(&spec, &arm).map_err(|e| e.to_string())?;
    let semg = if with_emg {
        gen_semg_stream(&SemgSpec::middle_third(spec.duration_s, seed))
            .map_err(|e| e.to_string())?
    } else {
        Vec::new()
    };
    Ok(Scenario {
        arm,
        imu: trace.imu,
        semg,
    })
}

fn small_model() -> Result<LogisticModel, String> {
    let windows =
        gen_labeled_windows(200, DEFAULT_WINDOW_LEN, 1.0, 11).map_err(|e| e.to_string())?;
    let data: Vec<LabeledFeatures> = windows
        .iter()
        .map(|(f, label)| build_feature_vector(f).map(|x| LabeledFeatures { x, label: *label }))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    train(&data, &TrainConfig::default())
        .map(|(m, _)| m)
        .map_err(|e| e.to_string())
}

fn c8_determinism_faults() -> Outcome {
    // Identical seeds, identical logs.
    let scenario = square_scenario(5, true)?;
    let model = small_model()?;
    let degraded = SimConfig {
        channel: ChannelModel {
            latency_us: 20_000,
            jitter_us: 10_000,
            drop_prob: 0.3,
            seed: 9,
        },
        ..SimConfig::default()
    };
    let a = run_simulation(&scenario, Some(&model), &degraded).map_err(|e| e.to_string())?;
    let b = run_simulation(&scenario, Some(&model), &degraded).map_err(|e| e.to_string())?;
    let other = SimConfig {
        channel: ChannelModel {
            seed: 10,
            ..degraded.channel
        },
        ..degraded.clone()
    };
    let c = run_simulation(&scenario, Some(&model), &other).map_err(|e| e.to_string())?;
    let log = a.events_jsonl();
    if log != b.events_jsonl()
        || io::trajectory_to_csv(&a.commanded) != io::trajectory_to_csv(&b.commanded)
    {
        return Err("identical seeds produced different logs".into());
    }
    if log == c.events_jsonl() {
        return Err("a different channel seed produced the same log".into());
    }
    if a.stats.grip_changes == 0 {
        return Err("grasp scenario produced no grip command".into());
    }

    // Total loss holds the calibration pose and reports staleness.
    let lossy = SimConfig {
        channel: ChannelModel {
            drop_prob: 1.0,
            ..ChannelModel::ideal()
        },
        ..SimConfig::default()
    };
    let calib = lossy.calibration_pose().map_err(|e| e.to_string())?;
    let held = run_simulation(&scenario, Some(&model), &lossy).map_err(|e| e.to_string())?;
    let all_held = held
        .commanded
        .samples()
        .iter()
        .all(|s| s.p == calib.p && s.q.is_none_or(|q| q == calib.q));
    let expected_stale = held
        .commanded
        .samples()
        .iter()
        .filter(|s| s.t_us > lossy.host2.staleness_us)
        .count() as u64;
    let flagged = held
        .events
        .iter()
        .any(|e| matches!(e.kind, EventKind::Stale { .. }));
    if !(all_held
        && held.stats.integrations == 0
        && flagged
        && held.stats.stale_cycles == expected_stale)
    {
        return Err(format!(
            "drop_prob=1: held {all_held}, integrations {}, stale cycles {} (expected {expected_stale})",
            held.stats.integrations, held.stats.stale_cycles
        ));
    }

    let live = live_disconnect()?;
    Ok(format!(
        "{} byte event log reproduced; drop_prob=1 held calibration with {} stale cycles; {live}",
        log.len(),
        held.stats.stale_cycles
    ))
}

/// A raw client calibrates, streams a few increments and vanishes.
fn live_disconnect() -> Result<String, String> {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?;
    let config = LiveConfig {
        accept_timeout_ms: 5_000,
        ..LiveConfig::default()
    };
    let calib = config.run.calibration_pose().map_err(|e| e.to_string())?;

    let client = std::thread::spawn(move || -> std::io::Result<()> {
        use std::io::Write;
        let mut stream = std::net::TcpStream::connect(addr)?;
        let mut send = |msg: WireMessage| -> std::io::Result<()> {
            stream.write_all(&frame_with_prefix(&msg.encode()).expect("short frame"))
        };
        send(WireMessage::calibrate(0, &calib))?;
        for k in 1..=10u64 {
            std::thread::sleep(Duration::from_millis(20));
            let inc = PoseIncrement {
                t_us: k * 20_000,
                dp: [0.002, -0.001, 0.0005 * k as f64],
                dq: rot([0.0, 0.0, 1.0], 0.01),
            };
            send(WireMessage::pose_inc(&inc))?;
        }
        Ok(())
    });

    let start = Instant::now();
    let out = run_host2_on(listener, &config).map_err(|e| format!("host2: {e}"))?;
    let elapsed = start.elapsed();
    client
        .join()
        .map_err(|_| "client panicked".to_string())?
        .map_err(|e| e.to_string())?;

    let disconnected_at = out
        .disconnected_at_us
        .ok_or("host2 did not observe the disconnect")?;
    let mut integrator = PoseIntegrator::new(calib, &config.run.host2);
    let mut expected = calib;
    for e in &out.events {
        if let EventKind::Integrate { msg_t_us, .. } = e.kind {
            let k = msg_t_us / 20_000;
            expected = integrator.integrate(&PoseIncrement {
                t_us: msg_t_us,
                dp: [0.002, -0.001, 0.0005 * k as f64],
                dq: rot([0.0, 0.0, 1.0], 0.01),
            });
        }
    }
    let tail: Vec<_> = out
        .commanded
        .samples()
        .iter()
        .filter(|s| s.t_us >= disconnected_at)
        .collect();
    let held = !tail.is_empty()
        && tail
            .iter()
            .all(|s| s.p == expected.p && s.q.is_none_or(|q| q == expected.q));
    if !(held && out.final_stale && out.stats.integrations > 0 && elapsed < Duration::from_secs(5))
    {
        return Err(format!(
            "live: held {held}, final stale {}, integrations {}, {:.2} s",
            out.final_stale,
            out.stats.integrations,
            elapsed.as_secs_f64()
        ));
    }
    Ok(format!(
        "live peer loss at {:.0} ms ended cleanly holding the pose after {} integrations",
        disconnected_at as f64 / 1e3,
        out.stats.integrations
    ))
}

/// Bitwise IEEE CRC-32 (reflected, polynomial 0xEDB88320).
fn crc32_oracle(bytes: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            crc = if crc & 1 != 0 {
                (crc >> 1) ^ 0xEDB8_8320
            } else {
                crc >> 1
            };
        }
    }
    !crc
}

fn random_finite(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v = f64::from_bits(rng.gen());
        if v.is_finite() {
            return v;
        }
    }
}

fn random_message(rng: &mut ChaCha8Rng) -> WireMessage {
    let t_us = rng.gen();
    let grip = rng.gen_bool(0.5);
    let kind = rng.gen_range(0..3);
    let mut seven = || -> ([f64; 3], [f64; 4]) {
        let v: [f64; 7] = std::array::from_fn(|_| {
            if rng.gen_bool(0.5) {
                rng.gen_range(-1.0..1.0)
            } else {
                random_finite(rng)
            }
        });
        ([v[0], v[1], v[2]], [v[3], v[4], v[5], v[6]])
    };
    let payload = match kind {
        0 => {
            let (dp, dq) = seven();
            Payload::PoseInc { dp, dq }
        }
        1 => {
            let (p, q) = seven();
            Payload::Calibrate { p, q }
        }
        _ => Payload::Grip(if grip {
            GripState::Closed
        } else {
            GripState::Open
        }),
    };
    WireMessage { t_us, payload }
}

fn c9_wire_codec() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let messages: Vec<WireMessage> = (0..1000).map(|_| random_message(&mut rng)).collect();

    let mut stream = Vec::new();
    for msg in &messages {
        let bytes = msg.encode();
        let body = bytes.len() - 4;
        let crc = u32::from_le_bytes(bytes[body..].try_into().expect("4 bytes"));
        if crc != crc32_oracle(&bytes[..body]) {
            return Err(format!(
                "crc of {:?} disagrees with the bitwise oracle",
                msg.kind()
            ));
        }
        if decode_message(&bytes).as_ref() != Ok(msg) {
            return Err(format!("round trip changed {msg:?}"));
        }
        stream.extend(frame_with_prefix(&bytes).map_err(|e| e.to_string())?);
    }

    let mut decoder = FrameDecoder::new();
    let mut streamed = Vec::new();
    let mut rest = stream.as_slice();
    while !rest.is_empty() {
        let n = rng.gen_range(1..=rest.len().min(97));
        decoder.extend(&rest[..n]);
        rest = &rest[n..];
        while let Some(frame) = decoder.next_frame() {
            streamed.push(decode_message(&frame).map_err(|e| e.to_string())?);
        }
    }
    if streamed != messages {
        return Err("chunked stream did not reproduce the message sequence".into());
    }

    let mut corruptions = 0;
    for msg in &messages {
        let bytes = msg.encode();
        for pos in 0..bytes.len() {
            let mut bad = bytes.clone();
            bad[pos] ^= rng.gen_range(1..=255u8);
            corruptions += 1;
            match decode_message(&bad) {
                Err(WireError::BadCrc { .. }) | Err(WireError::BadMagic(_)) => {}
                other => return Err(format!("byte {pos} corrupted gave {other:?}")),
            }
        }
    }
    Ok(format!(
        "1000 round trips, {} streamed frames, {corruptions} single-byte corruptions rejected",
        streamed.len()
    ))
}
