//! Simulated lossy, delayed link from Host 1 to Host 2.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SyncError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelModel {
    pub latency_us: u64,
    /// Each delay is drawn uniformly from `latency_us ± jitter_us`.
    pub jitter_us: u64,
    pub drop_prob: f64,
    pub seed: u64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ChannelModel {
    /// Lossless, zero-latency link.
    pub fn ideal() -> Self {
        Self {
            latency_us: 0,
            jitter_us: 0,
            drop_prob: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SyncError> {
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(SyncError::ScenarioInvalid(format!(
                "drop_prob {} outside [0, 1]",
                self.drop_prob
            )));
        }
        Ok(())
    }
}

/// Result of handing one frame to the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SendOutcome {
    Dropped,
    Scheduled { deliver_at_us: u64 },
}

/// Anything Host 2 can poll for raw frames without blocking.
pub trait FrameSource {
    /// Every frame that has arrived by `now_us`, in arrival order.
    fn poll_frames(&mut self, now_us: u64) -> Vec<Vec<u8>>;
}

/// Deterministic in-memory channel driven by a seeded PRNG.
#[derive(Debug, Clone)]
pub struct SimChannel {
    model: ChannelModel,
    rng: ChaCha8Rng,
    in_flight: BTreeMap<(u64, u64), Vec<u8>>,
    next_seq: u64,
}

impl SimChannel {
    pub fn new(model: ChannelModel) -> Result<Self, SyncError> {
        model.validate()?;
        Ok(Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            in_flight: BTreeMap::new(),
            next_seq: 0,
        })
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    pub fn send(&mut self, now_us: u64, frame: Vec<u8>) -> SendOutcome {
        let seq = self.next_seq;
        self.next_seq += 1;
        // draw both variates for every frame so the random stream does not
        // depend on earlier outcomes
        let drop_draw: f64 = self.rng.gen();
        let jitter = if self.model.jitter_us > 0 {
            self.rng
                .gen_range(-(self.model.jitter_us as i64)..=self.model.jitter_us as i64)
        } else {
            0
        };
        if drop_draw < self.model.drop_prob {
            return SendOutcome::Dropped;
        }
        let delay = (self.model.latency_us as i64 + jitter).max(0) as u64;
        let deliver_at_us = now_us + delay;
        self.in_flight.insert((deliver_at_us, seq), frame);
        SendOutcome::Scheduled { deliver_at_us }
    }
}

impl FrameSource for SimChannel {
    fn poll_frames(&mut self, now_us: u64) -> Vec<Vec<u8>> {
        let later = self.in_flight.split_off(&(now_us + 1, 0));
        let ready = std::mem::replace(&mut self.in_flight, later);
        ready.into_values().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_channel_delivers_immediately_in_order() {
        let mut ch = SimChannel::new(ChannelModel::ideal()).unwrap();
        assert_eq!(
            ch.send(100, vec![1]),
            SendOutcome::Scheduled { deliver_at_us: 100 }
        );
        ch.send(100, vec![2]);
        assert!(ch.poll_frames(99).is_empty());
        assert_eq!(ch.poll_frames(100), vec![vec![1], vec![2]]);
        assert!(ch.poll_frames(1000).is_empty());
    }

    #[test]
    fn full_loss_drops_everything() {
        let model = ChannelModel {
            drop_prob: 1.0,
            ..ChannelModel::ideal()
        };
        let mut ch = SimChannel::new(model).unwrap();
        for i in 0..100 {
            assert_eq!(ch.send(i, vec![0]), SendOutcome::Dropped);
        }
        assert_eq!(ch.in_flight(), 0);
    }

    #[test]
    fn delays_stay_within_jitter_band() {
        let model = ChannelModel {
            latency_us: 20_000,
            jitter_us: 10_000,
            drop_prob: 0.0,
            seed: 3,
        };
        let mut ch = SimChannel::new(model).unwrap();
        for i in 0..1000 {
            match ch.send(i, vec![]) {
                SendOutcome::Scheduled { deliver_at_us } => {
                    let d = deliver_at_us - i;
                    assert!((10_000..=30_000).contains(&d));
                }
                SendOutcome::Dropped => panic!("unexpected drop"),
            }
        }
    }

    #[test]
    fn drop_rate_tracks_probability_and_seed() {
        let model = ChannelModel {
            drop_prob: 0.3,
            seed: 11,
            ..ChannelModel::ideal()
        };
        let run = || {
            let mut ch = SimChannel::new(model).unwrap();
            (0..10_000).map(|i| ch.send(i, vec![])).collect::<Vec<_>>()
        };
        let a = run();
        assert_eq!(a, run());
        let drops = a.iter().filter(|o| **o == SendOutcome::Dropped).count();
        assert!((2700..3300).contains(&drops), "{drops}");
    }

    #[test]
    fn invalid_probability_rejected() {
        let model = ChannelModel {
            drop_prob: 1.5,
            ..ChannelModel::ideal()
        };
        assert!(SimChannel::new(model).is_err());
    }
}
