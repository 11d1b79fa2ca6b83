use serde::{Deserialize, Serialize};

use crate::math::Vec3;
use crate::semg::GripState;

/// One line of the run's JSON Lines event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t_us: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Calibrate { p: Vec3, q: [f64; 4] },
    Send { msg: String, msg_t_us: u64 },
    Drop { msg: String, msg_t_us: u64 },
    Receive { msg: String, msg_t_us: u64 },
    Coalesced { msg_t_us: u64 },
    OutOfOrder { msg_t_us: u64 },
    DecodeError { error: String },
    InvalidPayload { error: String },
    Integrate { msg_t_us: u64, p: Vec3 },
    GripDecision { state: GripState, prob: f64 },
    GripCommand { state: GripState },
    Stale { age_us: u64 },
    Fresh,
    ImuFault { error: String },
    ModelMissing,
    PeerDisconnected,
}

/// Counters reported at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SyncStats {
    pub messages_sent: u64,
    pub messages_dropped: u64,
    pub messages_received: u64,
    pub decode_errors: u64,
    pub invalid_payloads: u64,
    pub coalesced: u64,
    pub out_of_order: u64,
    pub integrations: u64,
    pub control_cycles: u64,
    pub stale_cycles: u64,
    pub max_staleness_us: u64,
    pub degenerate_averages: u64,
    pub imu_faults: u64,
    pub grip_changes: u64,
}

impl SyncStats {
    /// Field-wise sum, used to merge the per-context counters of a live run.
    pub fn merged(&self, other: &SyncStats) -> SyncStats {
        SyncStats {
            messages_sent: self.messages_sent + other.messages_sent,
            messages_dropped: self.messages_dropped + other.messages_dropped,
            messages_received: self.messages_received + other.messages_received,
            decode_errors: self.decode_errors + other.decode_errors,
            invalid_payloads: self.invalid_payloads + other.invalid_payloads,
            coalesced: self.coalesced + other.coalesced,
            out_of_order: self.out_of_order + other.out_of_order,
            integrations: self.integrations + other.integrations,
            control_cycles: self.control_cycles + other.control_cycles,
            stale_cycles: self.stale_cycles + other.stale_cycles,
            max_staleness_us: self.max_staleness_us.max(other.max_staleness_us),
            degenerate_averages: self.degenerate_averages + other.degenerate_averages,
            imu_faults: self.imu_faults + other.imu_faults,
            grip_changes: self.grip_changes + other.grip_changes,
        }
    }
}
