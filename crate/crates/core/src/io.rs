//! On-disk formats: sensor logs (JSON Lines), trajectories (CSV or JSON
//! Lines), labelled sEMG datasets (JSON Lines) and models (JSON).
//!
//! Every writer goes through [`write_atomic`], so a reader never observes a
//! half-written file.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{ArmModel, ImuReading, Quaternion};
use crate::metrics::{Trajectory, TrajectorySample};
use crate::semg::{
    feature_vector_from_rows, FeatureConfig, GripState, LabeledFeatures, LogisticModel, SemgFrame,
    CHANNELS,
};
use crate::sync::sim::Scenario;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    Invalid(String),
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn parse(path: &Path, line: usize, msg: impl ToString) -> Self {
        IoError::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.to_string(),
        }
    }
}

/// Writes `bytes` to a sibling temp file, syncs it, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| IoError::Invalid(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(IoError::io(path, e));
    }
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| IoError::Invalid(e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Non-empty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

// ---------------------------------------------------------------------------
// Sensor logs

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Device {
    Upper,
    Forearm,
}

/// One armband record: an orientation (`q`) or, for the forearm band only,
/// one 8-channel sEMG sample (`emg`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorRecord {
    pub t_us: u64,
    pub dev: Device,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emg: Option<[i32; CHANNELS]>,
}

impl SensorRecord {
    fn check(&self) -> Result<(), String> {
        match (self.q, self.emg) {
            (Some(q), None) => {
                Quaternion::from_array(q).map_err(|e| e.to_string())?;
                Ok(())
            }
            (None, Some(_)) if self.dev == Device::Forearm => Ok(()),
            (None, Some(_)) => Err("emg records must come from the forearm band".into()),
            _ => Err("record must carry exactly one of q or emg".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SensorLog {
    pub records: Vec<SensorRecord>,
}

impl SensorLog {
    /// Records ordered by time; at equal times upper precedes forearm and
    /// orientation precedes sEMG.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let mut records = Vec::with_capacity(2 * scenario.imu.len() + scenario.semg.len());
        for r in &scenario.imu {
            records.push(SensorRecord {
                t_us: r.t_us,
                dev: Device::Upper,
                q: Some(r.upper),
                emg: None,
            });
            records.push(SensorRecord {
                t_us: r.t_us,
                dev: Device::Forearm,
                q: Some(r.forearm),
                emg: None,
            });
        }
        records.extend(scenario.semg.iter().map(|f| SensorRecord {
            t_us: f.t_us,
            dev: Device::Forearm,
            q: None,
            emg: Some(f.ch),
        }));
        let rank = |r: &SensorRecord| match (r.dev, r.q.is_some()) {
            (Device::Upper, _) => 0,
            (Device::Forearm, true) => 1,
            (Device::Forearm, false) => 2,
        };
        records.sort_by_key(|r| (r.t_us, rank(r)));
        Self { records }
    }

    /// Pairs each forearm orientation with the latest upper-arm orientation
    /// at or before it. Forearm samples preceding any upper-arm sample are
    /// skipped.
    pub fn to_scenario(&self, arm: ArmModel) -> Scenario {
        let mut upper: Option<(u64, [f64; 4])> = None;
        let mut ordered: Vec<&SensorRecord> = self.records.iter().collect();
        ordered.sort_by_key(|r| (r.t_us, r.dev == Device::Forearm));
        let mut imu = Vec::new();
        let mut semg = Vec::new();
        for r in ordered {
            match (r.dev, r.q, r.emg) {
                (Device::Upper, Some(q), _) => upper = Some((r.t_us, q)),
                (Device::Forearm, Some(q), _) => {
                    if let Some((_, u)) = upper {
                        imu.push(ImuReading {
                            t_us: r.t_us,
                            upper: u,
                            forearm: q,
                        });
                    }
                }
                (_, None, Some(ch)) => semg.push(SemgFrame { t_us: r.t_us, ch }),
                _ => {}
            }
        }
        Scenario { arm, imu, semg }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).unwrap_or_default());
            out.push('\n');
        }
        out
    }

    /// Parses and validates: quaternions unit within tolerance, per-stream
    /// timestamps nondecreasing.
    pub fn parse(path: &Path, text: &str) -> Result<Self, IoError> {
        let mut records = Vec::new();
        // last timestamp per (device, orientation|emg) stream
        let mut last = [None::<u64>; 4];
        for (n, line) in lines(text) {
            let r: SensorRecord =
                serde_json::from_str(line).map_err(|e| IoError::parse(path, n, e))?;
            r.check().map_err(|e| IoError::parse(path, n, e))?;
            let stream = (r.dev == Device::Forearm) as usize * 2 + r.emg.is_some() as usize;
            if let Some(prev) = last[stream] {
                if r.t_us < prev {
                    return Err(IoError::parse(
                        path,
                        n,
                        format!("timestamp {} goes back from {}", r.t_us, prev),
                    ));
                }
            }
            last[stream] = Some(r.t_us);
            records.push(r);
        }
        Ok(Self { records })
    }
}

pub fn read_sensor_log(path: &Path) -> Result<SensorLog, IoError> {
    SensorLog::parse(path, &read_text(path)?)
}

pub fn write_sensor_log(path: &Path, log: &SensorLog) -> Result<(), IoError> {
    write_atomic(path, log.to_jsonl().as_bytes())
}

// ---------------------------------------------------------------------------
// Trajectories

const CSV_HEADER: &str = "t_us,x,y,z";
const CSV_HEADER_Q: &str = "t_us,x,y,z,qw,qx,qy,qz";

/// CSV with orientation columns when every sample carries one.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let with_q = !traj.is_empty() && traj.samples().iter().all(|s| s.q.is_some());
    let mut out = String::from(if with_q { CSV_HEADER_Q } else { CSV_HEADER });
    out.push('\n');
    for s in traj.samples() {
        // `{}` on f64 prints the shortest representation that round-trips
        let _ = write!(out, "{},{},{},{}", s.t_us, s.p[0], s.p[1], s.p[2]);
        if let (true, Some(q)) = (with_q, s.q) {
            let [w, x, y, z] = q.to_array();
            let _ = write!(out, ",{w},{x},{y},{z}");
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_from_csv(path: &Path, text: &str) -> Result<Trajectory, IoError> {
    let mut it = lines(text);
    let (_, header) = it
        .next()
        .ok_or_else(|| IoError::parse(path, 1, "missing header"))?;
    let header: String = header.chars().filter(|c| !c.is_whitespace()).collect();
    let with_q = match header.as_str() {
        CSV_HEADER => false,
        CSV_HEADER_Q => true,
        other => {
            return Err(IoError::parse(
                path,
                1,
                format!("unexpected header '{other}', expected '{CSV_HEADER}' or '{CSV_HEADER_Q}'"),
            ))
        }
    };
    let cols = if with_q { 8 } else { 4 };
    let mut samples = Vec::new();
    for (n, line) in it {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols {
            return Err(IoError::parse(
                path,
                n,
                format!("expected {cols} columns, got {}", fields.len()),
            ));
        }
        let t_us: u64 = fields[0]
            .parse()
            .map_err(|e| IoError::parse(path, n, format!("t_us: {e}")))?;
        let mut v = [0.0f64; 7];
        for (dst, f) in v.iter_mut().zip(&fields[1..]) {
            *dst = f
                .parse()
                .map_err(|e| IoError::parse(path, n, format!("'{f}': {e}")))?;
            if !dst.is_finite() {
                return Err(IoError::parse(path, n, "non-finite value"));
            }
        }
        let q = if with_q {
            Some(
                Quaternion::from_array([v[3], v[4], v[5], v[6]])
                    .map_err(|e| IoError::parse(path, n, e))?,
            )
        } else {
            None
        };
        samples.push(TrajectorySample {
            t_us,
            p: [v[0], v[1], v[2]],
            q,
        });
    }
    Trajectory::new(samples).map_err(|e| IoError::parse(path, 0, e))
}

pub fn trajectory_to_jsonl(traj: &Trajectory) -> String {
    let mut out = String::new();
    for s in traj.samples() {
        out.push_str(&serde_json::to_string(s).unwrap_or_default());
        out.push('\n');
    }
    out
}

pub fn trajectory_from_jsonl(path: &Path, text: &str) -> Result<Trajectory, IoError> {
    let samples = lines(text)
        .map(|(n, l)| {
            serde_json::from_str::<TrajectorySample>(l).map_err(|e| IoError::parse(path, n, e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Trajectory::new(samples).map_err(|e| IoError::parse(path, 0, e))
}

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl" | "ndjson")
    )
}

/// Reads CSV, or JSON Lines when the extension is `.jsonl`.
pub fn read_trajectory(path: &Path) -> Result<Trajectory, IoError> {
    let text = read_text(path)?;
    if is_jsonl(path) {
        trajectory_from_jsonl(path, &text)
    } else {
        trajectory_from_csv(path, &text)
    }
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), IoError> {
    let text = if is_jsonl(path) {
        trajectory_to_jsonl(traj)
    } else {
        trajectory_to_csv(traj)
    };
    write_atomic(path, text.as_bytes())
}

// ---------------------------------------------------------------------------
// Datasets and models

/// One labelled window of raw sEMG rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub label: GripState,
    pub emg: Vec<[i32; CHANNELS]>,
}

impl DatasetRecord {
    pub fn from_frames(frames: &[SemgFrame], label: GripState) -> Self {
        Self {
            label,
            emg: frames.iter().map(|f| f.ch).collect(),
        }
    }

    pub fn features(&self) -> Result<LabeledFeatures, IoError> {
        let rows: Vec<Vec<i64>> = self
            .emg
            .iter()
            .map(|r| r.iter().map(|&v| v as i64).collect())
            .collect();
        let x = feature_vector_from_rows(&rows).map_err(|e| IoError::Invalid(e.to_string()))?;
        Ok(LabeledFeatures {
            x,
            label: self.label,
        })
    }
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>, IoError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (n, line) in lines(&text) {
        let rec: DatasetRecord =
            serde_json::from_str(line).map_err(|e| IoError::parse(path, n, e))?;
        if rec.emg.len() < 2 {
            return Err(IoError::parse(
                path,
                n,
                format!("window has {} rows, need at least 2", rec.emg.len()),
            ));
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(IoError::parse(path, 0, "dataset is empty"));
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, records: &[DatasetRecord]) -> Result<(), IoError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| IoError::Invalid(e.to_string()))?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Dataset records converted to feature vectors. Windows of unequal length
/// are allowed; the feature window length recorded in the model is the
/// first window's.
pub fn dataset_features(
    records: &[DatasetRecord],
) -> Result<(Vec<LabeledFeatures>, FeatureConfig), IoError> {
    let len = records.first().map(|r| r.emg.len()).unwrap_or(0);
    let config = FeatureConfig::new(len, len).map_err(|e| IoError::Invalid(e.to_string()))?;
    let feats = records
        .iter()
        .map(DatasetRecord::features)
        .collect::<Result<Vec<_>, _>>()?;
    Ok((feats, config))
}

pub fn read_model(path: &Path) -> Result<LogisticModel, IoError> {
    let text = read_text(path)?;
    let model: LogisticModel =
        serde_json::from_str(&text).map_err(|e| IoError::parse(path, 0, e))?;
    model.validate().map_err(|e| IoError::parse(path, 0, e))?;
    Ok(model)
}

pub fn write_model(path: &Path, model: &LogisticModel) -> Result<(), IoError> {
    write_json(path, model)
}
