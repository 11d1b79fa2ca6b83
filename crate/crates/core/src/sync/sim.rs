//! Deterministic discrete-event run of both hosts on a virtual µs clock.

use serde::{Deserialize, Serialize};

use crate::math::{ArmModel, ImuReading, Vec3};
use crate::metrics::{Trajectory, TrajectorySample};
use crate::semg::{FeatureConfig, GripState, LogisticModel, SemgFrame, DEFAULT_DEBOUNCE};
use crate::smoothing::RobotPose;

use super::channel::{ChannelModel, SendOutcome, SimChannel};
use super::events::{Event, EventKind, SyncStats};
use super::host1::{ImuFrontEnd, SemgFrontEnd};
use super::host2::{Host2, Host2Config, PoseIntegrator, Receiver};
use super::wire::WireMessage;
use super::SyncError;

/// Process periods in µs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rates {
    pub semg_period_us: u64,
    pub imu_period_us: u64,
    pub receive_period_us: u64,
    pub control_period_us: u64,
}

impl Default for Rates {
    fn default() -> Self {
        Self {
            semg_period_us: 5_000,
            imu_period_us: 20_000,
            receive_period_us: 4_000,
            control_period_us: 1_000,
        }
    }
}

impl Rates {
    pub fn validate(&self) -> Result<(), SyncError> {
        if [
            self.semg_period_us,
            self.imu_period_us,
            self.receive_period_us,
            self.control_period_us,
        ]
        .contains(&0)
        {
            return Err(SyncError::ScenarioInvalid(
                "process periods must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Recorded sensor streams plus the operator's arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub arm: ArmModel,
    pub imu: Vec<ImuReading>,
    pub semg: Vec<SemgFrame>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SyncError> {
        if self.imu.is_empty() {
            return Err(SyncError::ScenarioInvalid(
                "scenario has no IMU readings".into(),
            ));
        }
        if self.imu.windows(2).any(|w| w[1].t_us < w[0].t_us) {
            return Err(SyncError::ScenarioInvalid("IMU timestamps decrease".into()));
        }
        if self.semg.windows(2).any(|w| w[1].t_us < w[0].t_us) {
            return Err(SyncError::ScenarioInvalid(
                "sEMG timestamps decrease".into(),
            ));
        }
        Ok(())
    }

    pub fn last_timestamp(&self) -> u64 {
        let imu = self.imu.last().map_or(0, |r| r.t_us);
        let semg = self.semg.last().map_or(0, |f| f.t_us);
        imu.max(semg)
    }
}

/// Tunables of a run. Everything here is echoed into run outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub rates: Rates,
    pub channel: ChannelModel,
    pub host2: Host2Config,
    pub features: FeatureConfig,
    pub debounce: u32,
    /// Robot pose established at calibration (t = 0).
    pub calibration_p: Vec3,
    pub calibration_q: [f64; 4],
    /// Run length; defaults to the last sensor timestamp plus a settling tail.
    pub duration_us: Option<u64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rates: Rates::default(),
            channel: ChannelModel::ideal(),
            host2: Host2Config::default(),
            features: FeatureConfig::default(),
            debounce: DEFAULT_DEBOUNCE,
            calibration_p: [0.4, 0.0, 0.4],
            calibration_q: [1.0, 0.0, 0.0, 0.0],
            duration_us: None,
        }
    }
}

impl SimConfig {
    pub fn calibration_pose(&self) -> Result<RobotPose, SyncError> {
        let q = crate::math::Quaternion::from_array(self.calibration_q)?;
        Ok(RobotPose::new(self.calibration_p, q))
    }

    pub fn validate(&self) -> Result<(), SyncError> {
        self.rates.validate()?;
        self.channel.validate()?;
        self.host2.validate()?;
        FeatureConfig::new(self.features.window_len, self.features.hop)?;
        self.calibration_pose()?;
        Ok(())
    }

    /// End of the run for a given scenario.
    pub fn end_us(&self, scenario: &Scenario) -> u64 {
        self.duration_us.unwrap_or_else(|| {
            let tail = self.channel.latency_us
                + self.channel.jitter_us
                + 2 * self.rates.imu_period_us.max(self.rates.receive_period_us);
            let end = scenario.last_timestamp() + tail;
            end.div_ceil(self.rates.control_period_us) * self.rates.control_period_us
        })
    }
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Commanded robot pose, one sample per control cycle.
    pub commanded: Trajectory,
    /// Human wrist pose mapped into robot coordinates through the calibration.
    pub human: Trajectory,
    /// The human increments passed through the same smoothing and
    /// integration as the robot side, without any channel effects.
    pub human_filtered: Trajectory,
    /// Commanded gripper state changes.
    pub grip: Vec<(u64, GripState)>,
    /// Debounced classifier decisions on Host 1.
    pub grip_decisions: Vec<(u64, GripState)>,
    pub events: Vec<Event>,
    pub stats: SyncStats,
}

impl RunOutput {
    /// The event log as JSON Lines.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            // Event serialization cannot fail: all fields are plain data
            out.push_str(&serde_json::to_string(e).unwrap_or_default());
            out.push('\n');
        }
        out
    }
}

/// Maps raw wrist poses into robot coordinates: translation by the offset
/// between the first wrist position and the calibration position, and the
/// relative forearm rotation applied to the calibration orientation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HumanCalibration {
    wrist0: Vec3,
    q0_inv: crate::math::Quaternion,
    robot: RobotPose,
}

impl HumanCalibration {
    pub(crate) fn new(wrist0: Vec3, q_forearm0: crate::math::Quaternion, robot: RobotPose) -> Self {
        Self {
            wrist0,
            q0_inv: q_forearm0.inverse(),
            robot,
        }
    }

    pub(crate) fn map(
        &self,
        t_us: u64,
        wrist: Vec3,
        q_forearm: crate::math::Quaternion,
    ) -> TrajectorySample {
        let p = crate::math::add(self.robot.p, crate::math::sub(wrist, self.wrist0));
        let q = q_forearm.mul(&self.q0_inv).mul(&self.robot.q);
        TrajectorySample {
            t_us,
            p,
            q: Some(q),
        }
    }
}

/// Host 1's IMU process over a recorded stream: on each tick it takes the
/// newest reading that has arrived (older unprocessed ones are superseded),
/// records the human reference trajectories and emits the increment.
pub(crate) struct ImuProcess<'a> {
    readings: &'a [ImuReading],
    cursor: usize,
    front: ImuFrontEnd,
    calibration: RobotPose,
    human_cal: Option<HumanCalibration>,
    reference: PoseIntegrator,
    pub(crate) human: Trajectory,
    pub(crate) human_filtered: Trajectory,
    pub(crate) faults: u64,
}

impl<'a> ImuProcess<'a> {
    pub(crate) fn new(scenario: &'a Scenario, calibration: RobotPose, host2: &Host2Config) -> Self {
        Self {
            readings: &scenario.imu,
            cursor: 0,
            front: ImuFrontEnd::new(scenario.arm),
            calibration,
            human_cal: None,
            reference: PoseIntegrator::new(calibration, host2),
            human: Trajectory::default(),
            human_filtered: Trajectory::default(),
            faults: 0,
        }
    }

    pub(crate) fn exhausted(&self) -> bool {
        self.cursor >= self.readings.len()
    }

    pub(crate) fn tick(&mut self, now: u64, events: &mut Vec<Event>) -> Option<WireMessage> {
        let mut newest = None;
        while self.cursor < self.readings.len() && self.readings[self.cursor].t_us <= now {
            newest = Some(self.readings[self.cursor]);
            self.cursor += 1;
        }
        let reading = newest?;
        let step = match self.front.step(&reading) {
            Ok(step) => step,
            Err(e) => {
                self.faults += 1;
                events.push(Event {
                    t_us: now,
                    kind: EventKind::ImuFault {
                        error: e.to_string(),
                    },
                });
                return None;
            }
        };
        let calibration = self.calibration;
        let cal = *self.human_cal.get_or_insert_with(|| {
            HumanCalibration::new(step.wrist, step.sample.q_forearm, calibration)
        });
        // timestamps are nondecreasing; equal ones are dropped
        let _ = self
            .human
            .push(cal.map(step.sample.t_us, step.wrist, step.sample.q_forearm));
        let pose = match step.increment {
            None => calibration,
            Some(inc) => self.reference.integrate(&inc),
        };
        let _ = self.human_filtered.push(TrajectorySample {
            t_us: step.sample.t_us,
            p: pose.p,
            q: Some(pose.q),
        });
        step.message()
    }
}

/// Host 1's sEMG process: classifies every completed window and emits a
/// grip message on each debounced change.
pub(crate) struct SemgProcess<'a> {
    frames: &'a [SemgFrame],
    cursor: usize,
    front: SemgFrontEnd,
    pub(crate) decisions: Vec<(u64, GripState)>,
}

impl<'a> SemgProcess<'a> {
    pub(crate) fn new(
        scenario: &'a Scenario,
        model: Option<&LogisticModel>,
        config: &SimConfig,
    ) -> Self {
        Self {
            frames: &scenario.semg,
            cursor: 0,
            front: SemgFrontEnd::new(model.cloned(), config.features, config.debounce),
            decisions: Vec::new(),
        }
    }

    pub(crate) fn exhausted(&self) -> bool {
        self.cursor >= self.frames.len()
    }

    pub(crate) fn tick(
        &mut self,
        now: u64,
        events: &mut Vec<Event>,
    ) -> Result<Vec<WireMessage>, SyncError> {
        let mut out = Vec::new();
        while self.cursor < self.frames.len() && self.frames[self.cursor].t_us <= now {
            let frame = self.frames[self.cursor];
            self.cursor += 1;
            if !self.front.has_model() {
                continue;
            }
            if let Some(step) = self.front.push_frame(frame)? {
                if let Some(msg) = step.message {
                    self.decisions.push((now, step.debounced));
                    events.push(Event {
                        t_us: now,
                        kind: EventKind::GripDecision {
                            state: step.debounced,
                            prob: step.prob,
                        },
                    });
                    out.push(msg);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Process {
    Semg,
    Imu,
    Receive,
    Control,
}

/// Runs both hosts over the scenario. Processes due at the same µs run in
/// the order sEMG, IMU, receive, control.
pub fn run_simulation(
    scenario: &Scenario,
    model: Option<&LogisticModel>,
    config: &SimConfig,
) -> Result<RunOutput, SyncError> {
    scenario.validate()?;
    config.validate()?;
    let calibration = config.calibration_pose()?;
    let end_us = config.end_us(scenario);

    let mut imu = ImuProcess::new(scenario, calibration, &config.host2);
    let mut semg = SemgProcess::new(scenario, model, config);
    let mut channel = SimChannel::new(config.channel)?;
    let mut receiver = Receiver::new();
    let mut host2 = Host2::new(config.host2);

    let mut events: Vec<Event> = Vec::new();
    let mut stats = SyncStats::default();
    let mut commanded = Trajectory::default();
    let mut grip = Vec::new();

    host2.calibrate(0, calibration);
    if model.is_none() && !scenario.semg.is_empty() {
        events.push(Event {
            t_us: 0,
            kind: EventKind::ModelMissing,
        });
    }

    let schedule = [
        (Process::Semg, config.rates.semg_period_us),
        (Process::Imu, config.rates.imu_period_us),
        (Process::Receive, config.rates.receive_period_us),
        (Process::Control, config.rates.control_period_us),
    ];
    let mut next_fire = [0u64; 4];
    let mut last_grip = GripState::Open;

    let send = |channel: &mut SimChannel,
                events: &mut Vec<Event>,
                stats: &mut SyncStats,
                now: u64,
                msg: WireMessage| {
        events.push(send_event(now, &msg));
        stats.messages_sent += 1;
        if channel.send(now, msg.encode()) == SendOutcome::Dropped {
            stats.messages_dropped += 1;
            events.push(Event {
                t_us: now,
                kind: EventKind::Drop {
                    msg: msg.kind().name().to_string(),
                    msg_t_us: msg.t_us,
                },
            });
        }
    };

    loop {
        let now = *next_fire.iter().min().unwrap_or(&u64::MAX);
        if now > end_us {
            break;
        }
        for (slot, (process, period)) in schedule.iter().enumerate() {
            if next_fire[slot] != now {
                continue;
            }
            next_fire[slot] += period;
            match process {
                Process::Semg => {
                    for msg in semg.tick(now, &mut events)? {
                        send(&mut channel, &mut events, &mut stats, now, msg);
                    }
                }
                Process::Imu => {
                    if let Some(msg) = imu.tick(now, &mut events) {
                        send(&mut channel, &mut events, &mut stats, now, msg);
                    }
                }
                Process::Receive => {
                    host2.receive_step(now, &mut receiver, &mut channel);
                }
                Process::Control => {
                    let out = host2.control_step(now)?;
                    let _ = commanded.push(TrajectorySample {
                        t_us: now,
                        p: out.pose.p,
                        q: Some(out.pose.q),
                    });
                    if out.grip != last_grip {
                        grip.push((now, out.grip));
                        last_grip = out.grip;
                    }
                }
            }
            events.extend(
                host2
                    .drain_events()
                    .into_iter()
                    .map(|(t_us, kind)| Event { t_us, kind }),
            );
        }
    }

    let host2_stats = host2.stats();
    stats = SyncStats {
        messages_sent: stats.messages_sent,
        messages_dropped: stats.messages_dropped,
        imu_faults: imu.faults,
        ..host2_stats
    };
    Ok(RunOutput {
        commanded,
        human: imu.human,
        human_filtered: imu.human_filtered,
        grip,
        grip_decisions: semg.decisions,
        events,
        stats,
    })
}

pub(crate) fn send_event(now: u64, msg: &WireMessage) -> Event {
    Event {
        t_us: now,
        kind: EventKind::Send {
            msg: msg.kind().name().to_string(),
            msg_t_us: msg.t_us,
        },
    }
}
