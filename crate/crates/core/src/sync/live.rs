//! Both hosts on wall-clock threads over TCP.
//!
//! Host 1 runs the sEMG and IMU processes on their own threads; they hand
//! messages by value to a writer thread that owns the socket. Host 2 runs a
//! receive thread (non-blocking socket, 250 Hz) that hands decoded batches
//! to the control thread (1000 Hz), which only ever `try_recv`s.
//!
//! Ticks are scheduled at absolute deadlines from a per-host origin taken
//! when the connection is established, and recorded at their nominal times,
//! so a late tick never shifts the ones after it. `time_scale` stretches
//! wall time per virtual second (2.0 runs at half speed).

use std::io::{ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::metrics::{Trajectory, TrajectorySample};
use crate::semg::{GripState, LogisticModel};

use super::events::{Event, EventKind, SyncStats};
use super::host2::{Host2, ReceivedBatch, Receiver};
use super::sim::{send_event, ImuProcess, Scenario, SemgProcess, SimConfig};
use super::wire::{frame_with_prefix, FrameDecoder, WireMessage};
use super::SyncError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    /// Rates, Host 2 limits, features and calibration pose. The channel
    /// model is unused: the transport is the real one.
    pub run: SimConfig,
    /// Host 1 keeps retrying the connection for this long.
    pub connect_timeout_ms: u64,
    /// Host 2 waits this long for Host 1 to connect.
    pub accept_timeout_ms: u64,
    /// Wall seconds per virtual second.
    pub time_scale: f64,
    /// Hard cap on Host 2's run length (virtual µs).
    pub max_duration_us: Option<u64>,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            run: SimConfig::default(),
            connect_timeout_ms: 5_000,
            accept_timeout_ms: 30_000,
            time_scale: 1.0,
            max_duration_us: None,
        }
    }
}

impl LiveConfig {
    pub fn validate(&self) -> Result<(), SyncError> {
        self.run.validate()?;
        if !(self.time_scale > 0.0 && self.time_scale.is_finite()) {
            return Err(SyncError::ScenarioInvalid(
                "time_scale must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Virtual clock over a wall-clock origin.
#[derive(Debug, Clone, Copy)]
struct Clock {
    origin: Instant,
    scale: f64,
}

impl Clock {
    fn now_us(&self) -> u64 {
        (self.origin.elapsed().as_secs_f64() * 1e6 / self.scale) as u64
    }

    fn sleep_until(&self, t_us: u64) {
        let deadline = self.origin + Duration::from_secs_f64(t_us as f64 * 1e-6 * self.scale);
        let now = Instant::now();
        if deadline > now {
            thread::sleep(deadline - now);
        }
    }
}

/// Host 1 results: the operator side of the run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Host1Output {
    pub human: Trajectory,
    pub human_filtered: Trajectory,
    pub grip_decisions: Vec<(u64, GripState)>,
    pub events: Vec<Event>,
    pub stats: SyncStats,
    /// Set when Host 2 went away before the scenario finished.
    pub peer_disconnected: bool,
}

/// Host 2 results: the robot side of the run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Host2Output {
    pub commanded: Trajectory,
    pub grip: Vec<(u64, GripState)>,
    pub events: Vec<Event>,
    pub stats: SyncStats,
    /// Control time at which Host 2 processed the connection close.
    pub disconnected_at_us: Option<u64>,
    /// Stale flag on the last control cycle.
    pub final_stale: bool,
}

/// Connects with exponential backoff (20 ms doubling, capped at 500 ms)
/// until `timeout` elapses.
pub fn connect_with_retry(addr: &str, timeout: Duration) -> Result<TcpStream, SyncError> {
    let fail = |reason: String| SyncError::ConnectFailed {
        addr: addr.to_string(),
        reason,
    };
    let addrs: Vec<SocketAddr> = addr
        .to_socket_addrs()
        .map_err(|e| fail(e.to_string()))?
        .collect();
    if addrs.is_empty() {
        return Err(fail("address did not resolve".into()));
    }
    let start = Instant::now();
    let mut backoff = Duration::from_millis(20);
    loop {
        let mut last_err = String::new();
        for a in &addrs {
            let left = timeout
                .saturating_sub(start.elapsed())
                .max(Duration::from_millis(1));
            match TcpStream::connect_timeout(a, left) {
                Ok(s) => return Ok(s),
                Err(e) => last_err = e.to_string(),
            }
        }
        if start.elapsed() >= timeout {
            return Err(fail(format!("gave up after {:?}: {last_err}", timeout)));
        }
        thread::sleep(backoff.min(timeout.saturating_sub(start.elapsed())));
        backoff = (backoff * 2).min(Duration::from_millis(500));
    }
}

/// Host 1: connects, sends CALIBRATE at t = 0, then replays the scenario's
/// sensor streams at their process rates. Returns once both streams are
/// exhausted (plus one IMU period) and the socket is flushed and closed.
pub fn run_host1(
    addr: &str,
    scenario: &Scenario,
    model: Option<&LogisticModel>,
    config: &LiveConfig,
) -> Result<Host1Output, SyncError> {
    scenario.validate()?;
    config.validate()?;
    let calibration = config.run.calibration_pose()?;
    let mut stream = connect_with_retry(addr, Duration::from_millis(config.connect_timeout_ms))?;
    stream.set_nodelay(true)?;
    let clock = Clock {
        origin: Instant::now(),
        scale: config.time_scale,
    };
    let rates = config.run.rates;
    let end_us = scenario.last_timestamp() + rates.imu_period_us;

    let (tx, rx) = mpsc::channel::<(u64, WireMessage)>();
    let mut events = vec![Event {
        t_us: 0,
        kind: EventKind::Calibrate {
            p: calibration.p,
            q: calibration.q.to_array(),
        },
    }];
    if model.is_none() && !scenario.semg.is_empty() {
        events.push(Event {
            t_us: 0,
            kind: EventKind::ModelMissing,
        });
    }
    // queued ahead of every sensor message
    let _ = tx.send((0, WireMessage::calibrate(0, &calibration)));

    thread::scope(|s| -> Result<Host1Output, SyncError> {
        let writer = s.spawn(move || {
            let mut sent = Vec::new();
            let mut disconnected = false;
            for (now, msg) in rx {
                let frame = match frame_with_prefix(&msg.encode()) {
                    Ok(f) => f,
                    Err(_) => continue,
                };
                if stream.write_all(&frame).is_err() {
                    disconnected = true;
                    break;
                }
                sent.push(send_event(now, &msg));
            }
            let _ = stream.flush();
            let _ = stream.shutdown(std::net::Shutdown::Both);
            (sent, disconnected)
        });

        let imu_tx = tx.clone();
        let imu = s.spawn(move || {
            let mut process = ImuProcess::new(scenario, calibration, &config.run.host2);
            let mut events = Vec::new();
            let mut now = 0;
            while now <= end_us && !process.exhausted() {
                clock.sleep_until(now);
                if let Some(msg) = process.tick(now, &mut events) {
                    if imu_tx.send((now, msg)).is_err() {
                        break;
                    }
                }
                now += rates.imu_period_us;
            }
            (
                process.human,
                process.human_filtered,
                process.faults,
                events,
            )
        });

        let semg_tx = tx;
        let semg = s.spawn(move || -> Result<_, SyncError> {
            let mut process = SemgProcess::new(scenario, model, &config.run);
            let mut events = Vec::new();
            let mut now = 0;
            while now <= end_us && !process.exhausted() && model.is_some() {
                clock.sleep_until(now);
                for msg in process.tick(now, &mut events)? {
                    if semg_tx.send((now, msg)).is_err() {
                        return Ok((process.decisions, events));
                    }
                }
                now += rates.semg_period_us;
            }
            Ok((process.decisions, events))
        });

        let (human, human_filtered, faults, imu_events) =
            imu.join().map_err(|_| panicked("IMU"))?;
        let semg_result = semg.join().map_err(|_| panicked("sEMG"))?;
        let (sent, disconnected) = writer.join().map_err(|_| panicked("writer"))?;
        let (grip_decisions, semg_events) = semg_result?;

        let stats = SyncStats {
            messages_sent: sent.len() as u64,
            imu_faults: faults,
            ..SyncStats::default()
        };
        events.extend(sent);
        events.extend(imu_events);
        events.extend(semg_events);
        if disconnected {
            events.push(Event {
                t_us: clock.now_us(),
                kind: EventKind::PeerDisconnected,
            });
        }
        events.sort_by_key(|e| e.t_us);
        Ok(Host1Output {
            human,
            human_filtered,
            grip_decisions,
            events,
            stats,
            peer_disconnected: disconnected,
        })
    })
}

fn panicked(what: &str) -> SyncError {
    SyncError::Io(format!("{what} thread panicked"))
}

/// What the receive thread hands to the control thread.
enum Inbound {
    Batch(Box<ReceivedBatch>),
    /// Host 1 closed the connection (or it failed).
    Closed,
}

/// Host 2 bound to `addr`.
pub fn run_host2(addr: &str, config: &LiveConfig) -> Result<Host2Output, SyncError> {
    let listener = TcpListener::bind(addr).map_err(|e| SyncError::ConnectFailed {
        addr: addr.to_string(),
        reason: format!("bind: {e}"),
    })?;
    run_host2_on(listener, config)
}

/// Host 2 on an already bound listener: accepts one Host 1, then runs until
/// the peer disconnects and the held pose has been flagged stale (or
/// `max_duration_us` passes).
pub fn run_host2_on(listener: TcpListener, config: &LiveConfig) -> Result<Host2Output, SyncError> {
    config.validate()?;
    let mut stream =
        accept_with_timeout(&listener, Duration::from_millis(config.accept_timeout_ms))?;
    stream.set_nonblocking(true)?;
    stream.set_nodelay(true)?;
    let clock = Clock {
        origin: Instant::now(),
        scale: config.time_scale,
    };
    let rates = config.run.rates;
    let max_us = config.max_duration_us.unwrap_or(u64::MAX);
    let (tx, rx) = mpsc::channel::<Inbound>();
    let (stop_tx, stop_rx) = mpsc::channel::<()>();

    thread::scope(|s| {
        s.spawn(move || {
            let mut receiver = Receiver::new();
            let mut decoder = FrameDecoder::new();
            let mut buf = [0u8; 4096];
            let mut now = 0;
            loop {
                clock.sleep_until(now);
                if stop_rx.try_recv().is_ok() {
                    return;
                }
                let mut closed = false;
                loop {
                    match stream.read(&mut buf) {
                        Ok(0) => {
                            closed = true;
                            break;
                        }
                        Ok(n) => decoder.extend(&buf[..n]),
                        Err(e) if e.kind() == ErrorKind::WouldBlock => break,
                        Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                        Err(_) => {
                            closed = true;
                            break;
                        }
                    }
                }
                let frames: Vec<Vec<u8>> = std::iter::from_fn(|| decoder.next_frame()).collect();
                let batch = receiver.ingest(now, &frames);
                if !batch.is_empty() && tx.send(Inbound::Batch(Box::new(batch))).is_err() {
                    return;
                }
                if closed {
                    let _ = tx.send(Inbound::Closed);
                    return;
                }
                now += rates.receive_period_us;
            }
        });

        let result = control_loop(&rx, clock, config, max_us);
        let _ = stop_tx.send(());
        result
    })
}

fn control_loop(
    rx: &mpsc::Receiver<Inbound>,
    clock: Clock,
    config: &LiveConfig,
    max_us: u64,
) -> Result<Host2Output, SyncError> {
    let period = config.run.rates.control_period_us;
    let mut host2 = Host2::new(config.run.host2);
    let mut out = Host2Output::default();
    let mut last_grip = GripState::Open;
    let mut now = 0;
    loop {
        clock.sleep_until(now);
        loop {
            match rx.try_recv() {
                Ok(Inbound::Batch(b)) => host2.apply(*b),
                // Stamped on the control clock: every command from this tick
                // on already includes the final batch.
                Ok(Inbound::Closed) => {
                    out.disconnected_at_us.get_or_insert(now);
                    out.events.push(Event {
                        t_us: now,
                        kind: EventKind::PeerDisconnected,
                    });
                }
                Err(mpsc::TryRecvError::Empty) => break,
                Err(mpsc::TryRecvError::Disconnected) => {
                    out.disconnected_at_us.get_or_insert(now);
                    break;
                }
            }
        }
        if host2.state().calibrated {
            let cmd = host2.control_step(now)?;
            let _ = out.commanded.push(TrajectorySample {
                t_us: now,
                p: cmd.pose.p,
                q: Some(cmd.pose.q),
            });
            if cmd.grip != last_grip {
                out.grip.push((now, cmd.grip));
                last_grip = cmd.grip;
            }
            out.final_stale = cmd.stale;
        }
        out.events.extend(
            host2
                .drain_events()
                .into_iter()
                .map(|(t_us, kind)| Event { t_us, kind }),
        );
        if out.disconnected_at_us.is_some() {
            if !host2.state().calibrated {
                return Err(SyncError::PeerDisconnected);
            }
            if out.final_stale {
                break;
            }
        }
        if now >= max_us {
            break;
        }
        now += period;
    }
    out.stats = host2.stats();
    out.events.sort_by_key(|e| e.t_us);
    Ok(out)
}

fn accept_with_timeout(listener: &TcpListener, timeout: Duration) -> Result<TcpStream, SyncError> {
    listener.set_nonblocking(true)?;
    let start = Instant::now();
    loop {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nonblocking(false)?;
                return Ok(stream);
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => {
                if start.elapsed() >= timeout {
                    let addr = listener
                        .local_addr()
                        .map(|a| a.to_string())
                        .unwrap_or_default();
                    return Err(SyncError::ConnectFailed {
                        addr,
                        reason: format!("no peer connected within {timeout:?}"),
                    });
                }
                thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(e.into()),
        }
    }
}
