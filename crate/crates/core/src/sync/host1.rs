//! Master side: IMU kinematics at 50 Hz and sEMG grasp recognition at 200 Hz.

use crate::math::{
    pose_increment, wrist_position, ArmModel, ImuReading, ImuSample, PoseIncrement, Quaternion,
    Vec3,
};
use crate::semg::{
    build_feature_vector, decide, predict_prob, Debouncer, FeatureConfig, FeatureVector, GripState,
    LogisticModel, SemgFrame, Windower,
};

use super::wire::WireMessage;
use super::SyncError;

/// Turns successive IMU readings into pose-increment messages.
#[derive(Debug, Clone)]
pub struct ImuFrontEnd {
    arm: ArmModel,
    prev: Option<(Vec3, Quaternion)>,
    faults: u64,
}

/// What one accepted IMU reading produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuStep {
    pub sample: ImuSample,
    pub wrist: Vec3,
    pub increment: Option<PoseIncrement>,
}

impl ImuStep {
    pub fn message(&self) -> Option<WireMessage> {
        self.increment.as_ref().map(WireMessage::pose_inc)
    }
}

impl ImuFrontEnd {
    pub fn new(arm: ArmModel) -> Self {
        Self {
            arm,
            prev: None,
            faults: 0,
        }
    }

    pub fn arm(&self) -> &ArmModel {
        &self.arm
    }

    pub fn faults(&self) -> u64 {
        self.faults
    }

    /// Computes the wrist pose and, from the second accepted reading on, the
    /// increment against the previous accepted reading. A reading with a
    /// non-unit quaternion is rejected and leaves the previous pose intact.
    pub fn step(&mut self, reading: &ImuReading) -> Result<ImuStep, SyncError> {
        let sample = match reading.validate() {
            Ok(s) => s,
            Err(e) => {
                self.faults += 1;
                return Err(SyncError::Math(e));
            }
        };
        let wrist = wrist_position(&self.arm, &sample);
        let curr = (wrist, sample.q_forearm);
        let increment = self
            .prev
            .map(|prev| pose_increment(prev, curr, sample.t_us));
        self.prev = Some(curr);
        Ok(ImuStep {
            sample,
            wrist,
            increment,
        })
    }
}

/// Windowed grasp classifier with debounced output.
#[derive(Debug, Clone)]
pub struct SemgFrontEnd {
    model: Option<LogisticModel>,
    windower: Windower,
    debouncer: Debouncer,
}

/// Classification of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemgStep {
    pub t_us: u64,
    pub prob: f64,
    pub decision: GripState,
    pub debounced: GripState,
    /// Set when the debounced state changed.
    pub message: Option<WireMessage>,
}

impl SemgFrontEnd {
    pub fn new(model: Option<LogisticModel>, features: FeatureConfig, debounce: u32) -> Self {
        Self {
            model,
            windower: Windower::new(features),
            debouncer: Debouncer::new(debounce),
        }
    }

    pub fn has_model(&self) -> bool {
        self.model.is_some()
    }

    pub fn state(&self) -> GripState {
        self.debouncer.state()
    }

    /// Classifies one complete window; emits `GRIP` on a debounced change.
    pub fn semg_step(&mut self, t_us: u64, window: &[SemgFrame]) -> Result<SemgStep, SyncError> {
        if self.model.is_none() {
            return Err(SyncError::ModelNotLoaded);
        }
        let x = build_feature_vector(window)?;
        self.classify(t_us, &x)
    }

    /// Feeds one frame to the streaming windower, classifying whenever a
    /// window completes.
    pub fn push_frame(&mut self, frame: SemgFrame) -> Result<Option<SemgStep>, SyncError> {
        if self.model.is_none() {
            return Err(SyncError::ModelNotLoaded);
        }
        match self.windower.push(frame) {
            Some(x) => self.classify(frame.t_us, &x).map(Some),
            None => Ok(None),
        }
    }

    fn classify(&mut self, t_us: u64, x: &FeatureVector) -> Result<SemgStep, SyncError> {
        let model = self.model.as_ref().ok_or(SyncError::ModelNotLoaded)?;
        let prob = predict_prob(model, x);
        let decision = decide(prob);
        let message = self
            .debouncer
            .push(decision)
            .map(|state| WireMessage::grip(t_us, state));
        Ok(SemgStep {
            t_us,
            prob,
            decision,
            debounced: self.debouncer.state(),
            message,
        })
    }
}
