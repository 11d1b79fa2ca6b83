//! Slave side: the 250 Hz receive check and the 1000 Hz control loop.
//!
//! The receive check drains every queued frame and keeps only the newest
//! pose increment. The control loop integrates each received increment
//! exactly once; between arrivals it re-commands the held target pose.

use serde::{Deserialize, Serialize};

use crate::math::{norm, scale, PoseIncrement, Quaternion, Vec3};
use crate::semg::{GripCommand, GripState};
use crate::smoothing::{apply_pose_update, IncrementSmoother, RobotPose, SmootherConfig};

use super::channel::FrameSource;
use super::events::{EventKind, SyncStats};
use super::wire::{decode_message, Payload};
use super::SyncError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Host2Config {
    /// Age of the last accepted message beyond which the state is stale.
    pub staleness_us: u64,
    /// Half side of the workspace box centred on the calibration position.
    pub workspace_half_extent: f64,
    /// Per-increment displacement limit (m).
    pub max_step: f64,
    pub smoother: SmootherConfig,
}

impl Default for Host2Config {
    fn default() -> Self {
        Self {
            staleness_us: 100_000,
            workspace_half_extent: 0.5,
            max_step: 0.05,
            smoother: SmootherConfig::default(),
        }
    }
}

impl Host2Config {
    pub fn validate(&self) -> Result<(), SyncError> {
        if !(self.workspace_half_extent > 0.0 && self.max_step > 0.0) {
            return Err(SyncError::ScenarioInvalid(
                "workspace_half_extent and max_step must be positive".into(),
            ));
        }
        SmootherConfig::new(self.smoother.window)
            .map_err(|e| SyncError::ScenarioInvalid(e.to_string()))?;
        Ok(())
    }
}

/// Smoothing plus integration of pose increments into a target pose, with
/// the step limit and workspace clamp applied.
#[derive(Debug, Clone)]
pub struct PoseIntegrator {
    smoother: IncrementSmoother,
    origin: Vec3,
    pose: RobotPose,
    half_extent: f64,
    max_step: f64,
}

impl PoseIntegrator {
    pub fn new(calibration: RobotPose, config: &Host2Config) -> Self {
        Self {
            smoother: IncrementSmoother::new(config.smoother),
            origin: calibration.p,
            pose: calibration,
            half_extent: config.workspace_half_extent,
            max_step: config.max_step,
        }
    }

    pub fn pose(&self) -> RobotPose {
        self.pose
    }

    pub fn degenerate_count(&self) -> u64 {
        self.smoother.degenerate_count()
    }

    pub fn integrate(&mut self, inc: &PoseIncrement) -> RobotPose {
        let len = norm(inc.dp);
        let dp = if len > self.max_step {
            scale(inc.dp, self.max_step / len)
        } else {
            inc.dp
        };
        let smoothed = self.smoother.push(PoseIncrement { dp, ..*inc });
        let mut next = apply_pose_update(&self.pose, smoothed.dp, &smoothed.dq);
        for k in 0..3 {
            next.p[k] = next.p[k].clamp(
                self.origin[k] - self.half_extent,
                self.origin[k] + self.half_extent,
            );
        }
        self.pose = next;
        next
    }
}

/// Everything one receive check extracted from the link.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReceivedBatch {
    /// Receive time of the batch.
    pub at_us: u64,
    pub pose: Option<PoseIncrement>,
    pub grip: Option<GripCommand>,
    pub calibrate: Option<RobotPose>,
    /// Valid messages accepted in this batch.
    pub accepted: u64,
    pub stats: SyncStats,
    pub events: Vec<EventKind>,
}

impl ReceivedBatch {
    pub fn is_empty(&self) -> bool {
        self.accepted == 0 && self.events.is_empty()
    }
}

/// Decoding half of the receive check. Owns no control state, so it can run
/// in its own context and hand batches over by value.
#[derive(Debug, Clone, Default)]
pub struct Receiver {
    newest_pose_t: Option<u64>,
    newest_grip_t: Option<u64>,
}

impl Receiver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Non-blocking poll: drains all arrived frames into one batch.
    pub fn poll(&mut self, now_us: u64, source: &mut impl FrameSource) -> ReceivedBatch {
        let frames = source.poll_frames(now_us);
        self.ingest(now_us, &frames)
    }

    pub fn ingest(&mut self, now_us: u64, frames: &[Vec<u8>]) -> ReceivedBatch {
        let mut batch = ReceivedBatch {
            at_us: now_us,
            ..Default::default()
        };
        for frame in frames {
            let msg = match decode_message(frame) {
                Ok(m) => m,
                Err(e) => {
                    batch.stats.decode_errors += 1;
                    batch.events.push(EventKind::DecodeError {
                        error: e.to_string(),
                    });
                    continue;
                }
            };
            batch.stats.messages_received += 1;
            batch.events.push(EventKind::Receive {
                msg: msg.kind().name().to_string(),
                msg_t_us: msg.t_us,
            });
            match msg.payload {
                Payload::PoseInc { .. } => {
                    let inc = match msg.as_pose_increment() {
                        Some(Ok(inc)) => inc,
                        Some(Err(e)) => {
                            batch.stats.invalid_payloads += 1;
                            batch.events.push(EventKind::InvalidPayload {
                                error: e.to_string(),
                            });
                            continue;
                        }
                        None => continue,
                    };
                    if self.newest_pose_t.is_some_and(|t| inc.t_us <= t) {
                        batch.stats.out_of_order += 1;
                        batch
                            .events
                            .push(EventKind::OutOfOrder { msg_t_us: inc.t_us });
                        continue;
                    }
                    self.newest_pose_t = Some(inc.t_us);
                    if let Some(older) = batch.pose.replace(inc) {
                        batch.stats.coalesced += 1;
                        batch.events.push(EventKind::Coalesced {
                            msg_t_us: older.t_us,
                        });
                    }
                    batch.accepted += 1;
                }
                Payload::Grip(state) => {
                    if self.newest_grip_t.is_some_and(|t| msg.t_us < t) {
                        batch.stats.out_of_order += 1;
                        batch
                            .events
                            .push(EventKind::OutOfOrder { msg_t_us: msg.t_us });
                        continue;
                    }
                    self.newest_grip_t = Some(msg.t_us);
                    batch.grip = Some(GripCommand {
                        t_us: msg.t_us,
                        state,
                    });
                    batch.accepted += 1;
                }
                Payload::Calibrate { p, q } => match Quaternion::from_array(q) {
                    Ok(q) => {
                        // increments queued ahead of a calibration belong to
                        // the previous session
                        if batch.pose.take().is_some() {
                            batch.stats.coalesced += 1;
                        }
                        batch.calibrate = Some(RobotPose::new(p, q));
                        batch.accepted += 1;
                    }
                    Err(e) => {
                        batch.stats.invalid_payloads += 1;
                        batch.events.push(EventKind::InvalidPayload {
                            error: e.to_string(),
                        });
                    }
                },
            }
        }
        batch
    }
}

/// Shared view of the slave-side synchronization state.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncState {
    pub latest_increment: Option<PoseIncrement>,
    pub latest_grip: Option<GripCommand>,
    pub target_pose: RobotPose,
    pub last_update_us: u64,
    pub stale: bool,
    pub calibrated: bool,
}

/// One 1000 Hz command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub t_us: u64,
    pub pose: RobotPose,
    pub grip: GripState,
    pub stale: bool,
    pub integrated: bool,
}

/// Control-side state machine of Host 2.
#[derive(Debug, Clone)]
pub struct Host2 {
    config: Host2Config,
    state: SyncState,
    integrator: Option<PoseIntegrator>,
    pending: bool,
    commanded_grip: GripState,
    stats: SyncStats,
    events: Vec<(u64, EventKind)>,
}

impl Host2 {
    pub fn new(config: Host2Config) -> Self {
        Self {
            config,
            state: SyncState {
                latest_increment: None,
                latest_grip: None,
                target_pose: RobotPose::default(),
                last_update_us: 0,
                stale: false,
                calibrated: false,
            },
            integrator: None,
            pending: false,
            commanded_grip: GripState::Open,
            stats: SyncStats::default(),
            events: Vec::new(),
        }
    }

    pub fn config(&self) -> &Host2Config {
        &self.config
    }

    pub fn state(&self) -> &SyncState {
        &self.state
    }

    pub fn stats(&self) -> SyncStats {
        let mut s = self.stats;
        s.degenerate_averages = self.integrator.as_ref().map_or(0, |i| i.degenerate_count());
        s
    }

    /// Takes the events recorded since the last call.
    pub fn drain_events(&mut self) -> Vec<(u64, EventKind)> {
        std::mem::take(&mut self.events)
    }

    /// Sets the initial robot pose and restarts the increment chain.
    pub fn calibrate(&mut self, now_us: u64, pose: RobotPose) {
        self.integrator = Some(PoseIntegrator::new(pose, &self.config));
        self.state.target_pose = pose;
        self.state.latest_increment = None;
        self.state.calibrated = true;
        self.state.last_update_us = now_us;
        self.state.stale = false;
        self.pending = false;
        self.events.push((
            now_us,
            EventKind::Calibrate {
                p: pose.p,
                q: pose.q.to_array(),
            },
        ));
    }

    /// Applies one receive batch to the state.
    pub fn apply(&mut self, batch: ReceivedBatch) {
        let at = batch.at_us;
        self.stats = self.stats.merged(&batch.stats);
        self.events
            .extend(batch.events.into_iter().map(|e| (at, e)));
        if let Some(pose) = batch.calibrate {
            self.calibrate(at, pose);
        }
        if let Some(inc) = batch.pose {
            if self.state.calibrated {
                self.state.latest_increment = Some(inc);
                self.pending = true;
            }
        }
        if let Some(grip) = batch.grip {
            self.state.latest_grip = Some(grip);
        }
        if batch.accepted > 0 {
            self.state.last_update_us = self.state.last_update_us.max(at);
        }
    }

    /// Receive check against a frame source (simulation driver).
    pub fn receive_step(
        &mut self,
        now_us: u64,
        receiver: &mut Receiver,
        source: &mut impl FrameSource,
    ) -> &SyncState {
        let batch = receiver.poll(now_us, source);
        self.apply(batch);
        &self.state
    }

    /// One control cycle: integrate a newly received increment at most once,
    /// otherwise hold the target pose.
    pub fn control_step(&mut self, now_us: u64) -> Result<ControlOutput, SyncError> {
        let integrator = match (self.state.calibrated, self.integrator.as_mut()) {
            (true, Some(i)) => i,
            _ => return Err(SyncError::NotCalibrated),
        };
        self.stats.control_cycles += 1;

        let mut integrated = false;
        if self.pending {
            if let Some(inc) = self.state.latest_increment {
                let pose = integrator.integrate(&inc);
                self.state.target_pose = pose;
                self.stats.integrations += 1;
                integrated = true;
                self.events.push((
                    now_us,
                    EventKind::Integrate {
                        msg_t_us: inc.t_us,
                        p: pose.p,
                    },
                ));
            }
            self.pending = false;
        }

        let grip = self.state.latest_grip.map_or(GripState::Open, |g| g.state);
        if grip != self.commanded_grip {
            self.commanded_grip = grip;
            self.stats.grip_changes += 1;
            self.events
                .push((now_us, EventKind::GripCommand { state: grip }));
        }

        let age = now_us.saturating_sub(self.state.last_update_us);
        self.stats.max_staleness_us = self.stats.max_staleness_us.max(age);
        let stale = age > self.config.staleness_us;
        if stale {
            self.stats.stale_cycles += 1;
        }
        if stale != self.state.stale {
            self.events.push((
                now_us,
                if stale {
                    EventKind::Stale { age_us: age }
                } else {
                    EventKind::Fresh
                },
            ));
            self.state.stale = stale;
        }

        Ok(ControlOutput {
            t_us: now_us,
            pose: self.state.target_pose,
            grip,
            stale,
            integrated,
        })
    }
}
