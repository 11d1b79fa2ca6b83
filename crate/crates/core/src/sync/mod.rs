//! Two-host motion mapping synchronization.
//!
//! Host 1 runs the sEMG (200 Hz) and IMU (50 Hz) processes and sends pose
//! increments and grip changes. Host 2 checks for messages at 250 Hz and
//! commands the robot at 1000 Hz. [`sim`] drives both on a virtual clock;
//! [`live`] runs them on threads over TCP.

pub mod channel;
pub mod events;
pub mod host1;
pub mod host2;
pub mod live;
pub mod sim;
pub mod wire;

pub use channel::{ChannelModel, FrameSource, SendOutcome, SimChannel};
pub use events::{Event, EventKind, SyncStats};
pub use host1::{ImuFrontEnd, ImuStep, SemgFrontEnd, SemgStep};
pub use host2::{
    ControlOutput, Host2, Host2Config, PoseIntegrator, ReceivedBatch, Receiver, SyncState,
};
pub use sim::{run_simulation, Rates, RunOutput, Scenario, SimConfig};
pub use wire::{decode_message, encode_message, MessageKind, Payload, WireError, WireMessage};

use thiserror::Error;

use crate::math::MathError;
use crate::semg::SemgError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyncError {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Semg(#[from] SemgError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("no classifier model loaded")]
    ModelNotLoaded,
    #[error("control step before calibration")]
    NotCalibrated,
    #[error("invalid scenario: {0}")]
    ScenarioInvalid(String),
    #[error("could not connect to {addr}: {reason}")]
    ConnectFailed { addr: String, reason: String },
    #[error("peer disconnected")]
    PeerDisconnected,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SyncError {
    fn from(e: std::io::Error) -> Self {
        SyncError::Io(e.to_string())
    }
}
