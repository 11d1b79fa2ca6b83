//! Human-versus-robot trajectory comparison: per-axis RMSE and MAE over
//! timestamp-paired samples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Quaternion, Vec3};

/// Default pairing tolerance: under half a 50 Hz period.
pub const DEFAULT_PAIR_TOLERANCE_US: u64 = 2000;

pub const AXES: [&str; 3] = ["X", "Y", "Z"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("no sample pairs to evaluate")]
    NoPairs,
    #[error("timestamps must be strictly increasing (index {index}: {prev} then {next})")]
    NonMonotonicTimestamps { index: usize, prev: u64, next: u64 },
    #[error("axis index {0} out of range")]
    BadAxis(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t_us: u64,
    pub p: Vec3,
    pub q: Option<Quaternion>,
}

/// Time-ordered positions (and optional orientations).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self, MetricsError> {
        for (i, w) in samples.windows(2).enumerate() {
            if w[1].t_us <= w[0].t_us {
                return Err(MetricsError::NonMonotonicTimestamps {
                    index: i + 1,
                    prev: w[0].t_us,
                    next: w[1].t_us,
                });
            }
        }
        Ok(Self { samples })
    }

    /// Appends a sample, rejecting timestamps that do not increase.
    pub fn push(&mut self, sample: TrajectorySample) -> Result<(), MetricsError> {
        if let Some(last) = self.samples.last() {
            if sample.t_us <= last.t_us {
                return Err(MetricsError::NonMonotonicTimestamps {
                    index: self.samples.len(),
                    prev: last.t_us,
                    next: sample.t_us,
                });
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples with `t_us >= from_us`.
    pub fn since(&self, from_us: u64) -> Trajectory {
        Trajectory {
            samples: self
                .samples
                .iter()
                .filter(|s| s.t_us >= from_us)
                .copied()
                .collect(),
        }
    }

    pub fn translated(&self, offset: Vec3) -> Trajectory {
        Trajectory {
            samples: self
                .samples
                .iter()
                .map(|s| TrajectorySample {
                    p: crate::math::add(s.p, offset),
                    ..*s
                })
                .collect(),
        }
    }
}

/// One matched pair: `human` from the first trajectory, `robot` from the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePair {
    pub t_us: u64,
    pub human: Vec3,
    pub robot: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub pairs: Vec<SamplePair>,
    pub unpaired: usize,
}

/// Pairs every sample of `a` with the nearest-in-time sample of `b` when it
/// lies within `tol_us`. Ties go to the earlier `b` sample.
pub fn pair_trajectories(
    a: &Trajectory,
    b: &Trajectory,
    tol_us: u64,
) -> Result<Pairing, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptyTrajectory);
    }
    let bs = b.samples();
    let mut pairs = Vec::with_capacity(a.len());
    let mut unpaired = 0;
    for s in a.samples() {
        let idx = bs.partition_point(|x| x.t_us < s.t_us);
        let mut best: Option<(u64, &TrajectorySample)> = None;
        for cand in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
            if let Some(c) = bs.get(cand) {
                let d = c.t_us.abs_diff(s.t_us);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, c));
                }
            }
        }
        match best {
            Some((d, c)) if d <= tol_us => pairs.push(SamplePair {
                t_us: s.t_us,
                human: s.p,
                robot: c.p,
            }),
            _ => unpaired += 1,
        }
    }
    Ok(Pairing { pairs, unpaired })
}

pub fn rmse(pairs: &[SamplePair], axis: usize) -> Result<f64, MetricsError> {
    if axis > 2 {
        return Err(MetricsError::BadAxis(axis));
    }
    if pairs.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let sum: f64 = pairs
        .iter()
        .map(|p| (p.human[axis] - p.robot[axis]).powi(2))
        .sum();
    Ok((sum / pairs.len() as f64).sqrt())
}

pub fn mae(pairs: &[SamplePair], axis: usize) -> Result<f64, MetricsError> {
    if axis > 2 {
        return Err(MetricsError::BadAxis(axis));
    }
    if pairs.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let sum: f64 = pairs
        .iter()
        .map(|p| (p.human[axis] - p.robot[axis]).abs())
        .sum();
    Ok(sum / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisError {
    pub rmse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: Vec3,
    pub mae: Vec3,
    pub paired: usize,
    pub unpaired: usize,
}

impl MetricsReport {
    pub fn axis(&self, axis: usize) -> AxisError {
        AxisError {
            rmse: self.rmse[axis],
            mae: self.mae[axis],
        }
    }

    pub fn max_rmse(&self) -> f64 {
        self.rmse.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_mae(&self) -> f64 {
        self.mae.iter().copied().fold(0.0, f64::max)
    }

    /// `{"X": {"rmse", "mae"}, "Y": …, "Z": …}`.
    pub fn by_axis(&self) -> BTreeMap<String, AxisError> {
        AXES.iter()
            .enumerate()
            .map(|(i, name)| (name.to_string(), self.axis(i)))
            .collect()
    }
}

pub fn evaluate(
    human: &Trajectory,
    robot: &Trajectory,
    tol_us: u64,
) -> Result<MetricsReport, MetricsError> {
    let pairing = pair_trajectories(human, robot, tol_us)?;
    let mut r = [0.0; 3];
    let mut m = [0.0; 3];
    for axis in 0..3 {
        r[axis] = rmse(&pairing.pairs, axis)?;
        m[axis] = mae(&pairing.pairs, axis)?;
    }
    Ok(MetricsReport {
        rmse: r,
        mae: m,
        paired: pairing.pairs.len(),
        unpaired: pairing.unpaired,
    })
}

/// Shape-keyed reports laid out like a per-shape, per-axis results table:
/// `{"square": {"X": {"rmse", "mae"}, …}, …}` plus pairing counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TableReport {
    pub shapes: BTreeMap<String, BTreeMap<String, AxisError>>,
    pub counts: BTreeMap<String, PairCounts>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub paired: usize,
    pub unpaired: usize,
}

impl TableReport {
    pub fn insert(&mut self, shape: &str, report: &MetricsReport) {
        self.shapes.insert(shape.to_string(), report.by_axis());
        self.counts.insert(
            shape.to_string(),
            PairCounts {
                paired: report.paired,
                unpaired: report.unpaired,
            },
        );
    }
}
