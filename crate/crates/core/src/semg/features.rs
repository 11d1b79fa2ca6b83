//! Per-channel window features: mean absolute value, waveform length and
//! root mean square.

use serde::{Deserialize, Serialize};

use super::SemgError;

pub const CHANNELS: usize = 8;
pub const FEATURES_PER_CHANNEL: usize = 3;
pub const FEATURE_DIM: usize = CHANNELS * FEATURES_PER_CHANNEL;

/// 100 samples at 200 Hz.
pub const DEFAULT_WINDOW_LEN: usize = 100;

/// One 8-channel sEMG sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemgFrame {
    pub t_us: u64,
    pub ch: [i32; CHANNELS],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub window_len: usize,
    pub hop: usize,
}

impl FeatureConfig {
    pub fn new(window_len: usize, hop: usize) -> Result<Self, SemgError> {
        if window_len < 2 || hop == 0 {
            return Err(SemgError::InvalidFeatureConfig { window_len, hop });
        }
        Ok(Self { window_len, hop })
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            window_len: DEFAULT_WINDOW_LEN,
            hop: DEFAULT_WINDOW_LEN,
        }
    }
}

/// `[MAV₁, WL₁, RMS₁, …, MAV₈, WL₈, RMS₈]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn mav(&self, channel: usize) -> f64 {
        self.0[channel * FEATURES_PER_CHANNEL]
    }

    pub fn wl(&self, channel: usize) -> f64 {
        self.0[channel * FEATURES_PER_CHANNEL + 1]
    }

    pub fn rms(&self, channel: usize) -> f64 {
        self.0[channel * FEATURES_PER_CHANNEL + 2]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn check_len(samples: &[f64]) -> Result<(), SemgError> {
    if samples.len() < 2 {
        return Err(SemgError::WindowTooShort {
            got: samples.len(),
            need: 2,
        });
    }
    Ok(())
}

pub fn feat_mav(samples: &[f64]) -> Result<f64, SemgError> {
    check_len(samples)?;
    Ok(samples.iter().map(|x| x.abs()).sum::<f64>() / samples.len() as f64)
}

pub fn feat_wl(samples: &[f64]) -> Result<f64, SemgError> {
    check_len(samples)?;
    Ok(samples.windows(2).map(|w| (w[1] - w[0]).abs()).sum())
}

pub fn feat_rms(samples: &[f64]) -> Result<f64, SemgError> {
    check_len(samples)?;
    Ok((samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64).sqrt())
}

/// Extracts one channel of a frame window as floating-point samples.
pub fn channel_samples(window: &[SemgFrame], channel: usize) -> Vec<f64> {
    window.iter().map(|f| f.ch[channel] as f64).collect()
}

/// Channel-major 24-D feature vector of a complete window.
pub fn build_feature_vector(window: &[SemgFrame]) -> Result<FeatureVector, SemgError> {
    let mut x = [0.0; FEATURE_DIM];
    for channel in 0..CHANNELS {
        let s = channel_samples(window, channel);
        let base = channel * FEATURES_PER_CHANNEL;
        x[base] = feat_mav(&s)?;
        x[base + 1] = feat_wl(&s)?;
        x[base + 2] = feat_rms(&s)?;
    }
    Ok(FeatureVector(x))
}

/// Same as [`build_feature_vector`] but from raw channel rows of arbitrary
/// width, as found in dataset files.
pub fn feature_vector_from_rows(rows: &[Vec<i64>]) -> Result<FeatureVector, SemgError> {
    let mut frames = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() != CHANNELS {
            return Err(SemgError::ChannelCountMismatch { got: row.len() });
        }
        let mut ch = [0i32; CHANNELS];
        for (dst, &v) in ch.iter_mut().zip(row) {
            *dst = i32::try_from(v).map_err(|_| SemgError::NonFiniteFeature)?;
        }
        frames.push(SemgFrame { t_us: 0, ch });
    }
    build_feature_vector(&frames)
}

/// Streaming windower: accepts frames one at a time and yields a feature
/// vector every `hop` frames once `window_len` frames have been seen.
#[derive(Debug, Clone)]
pub struct Windower {
    config: FeatureConfig,
    buf: std::collections::VecDeque<SemgFrame>,
    since_last: usize,
    emitted: u64,
}

impl Windower {
    pub fn new(config: FeatureConfig) -> Self {
        Self {
            config,
            buf: std::collections::VecDeque::with_capacity(config.window_len),
            since_last: 0,
            emitted: 0,
        }
    }

    pub fn config(&self) -> FeatureConfig {
        self.config
    }

    pub fn push(&mut self, frame: SemgFrame) -> Option<FeatureVector> {
        if self.buf.len() == self.config.window_len {
            self.buf.pop_front();
        }
        self.buf.push_back(frame);
        self.since_last += 1;
        let ready = self.buf.len() == self.config.window_len
            && (self.emitted == 0 || self.since_last >= self.config.hop);
        if !ready {
            return None;
        }
        self.since_last = 0;
        self.emitted += 1;
        build_feature_vector(self.buf.make_contiguous()).ok()
    }
}
