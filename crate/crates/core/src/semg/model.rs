//! Binary logistic-regression grasp classifier.

use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, FeatureVector, FEATURE_DIM};
use super::SemgError;

/// Gripper command: open (relaxed muscle) or closed (contraction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(into = "u8", try_from = "u8")]
pub enum GripState {
    #[default]
    Open,
    Closed,
}

impl GripState {
    pub fn as_u8(self) -> u8 {
        match self {
            GripState::Open => 0,
            GripState::Closed => 1,
        }
    }
}

impl From<GripState> for u8 {
    fn from(s: GripState) -> u8 {
        s.as_u8()
    }
}

impl TryFrom<u8> for GripState {
    type Error = SemgError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(GripState::Open),
            1 => Ok(GripState::Closed),
            other => Err(SemgError::InvalidLabel(other as i64)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GripCommand {
    pub t_us: u64,
    pub state: GripState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub features: FeatureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2: 1e-4,
            epochs: 500,
            features: FeatureConfig::default(),
        }
    }
}

/// Trained weights together with the per-dimension standardization they
/// expect. `predict_prob` takes raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub config: TrainConfig,
}

impl LogisticModel {
    /// Model with no standardization (mean 0, std 1).
    pub fn from_weights(w: [f64; FEATURE_DIM], b: f64) -> Self {
        Self {
            w: w.to_vec(),
            b,
            mean: vec![0.0; FEATURE_DIM],
            std: vec![1.0; FEATURE_DIM],
            config: TrainConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SemgError> {
        for (name, v) in [("w", &self.w), ("mean", &self.mean), ("std", &self.std)] {
            if v.len() != FEATURE_DIM {
                return Err(SemgError::InvalidModel(format!(
                    "{name} has {} entries, expected {FEATURE_DIM}",
                    v.len()
                )));
            }
        }
        let finite = self
            .w
            .iter()
            .chain(&self.mean)
            .chain(&self.std)
            .all(|v| v.is_finite())
            && self.b.is_finite();
        if !finite {
            return Err(SemgError::InvalidModel("non-finite parameter".into()));
        }
        if self.std.iter().any(|&s| s <= 0.0) {
            return Err(SemgError::InvalidModel(
                "std entries must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `Wᵀ·standardize(x) + b`.
    pub fn logit(&self, x: &FeatureVector) -> f64 {
        let mut z = self.b;
        for k in 0..FEATURE_DIM {
            z += self.w[k] * (x.0[k] - self.mean[k]) / self.std[k];
        }
        z
    }

    /// Equivalent model acting on raw features, with the standardization
    /// folded into the weights and bias.
    pub fn fold_standardization(&self) -> LogisticModel {
        let mut w = [0.0; FEATURE_DIM];
        let mut b = self.b;
        for k in 0..FEATURE_DIM {
            w[k] = self.w[k] / self.std[k];
            b -= w[k] * self.mean[k];
        }
        LogisticModel {
            config: self.config,
            ..LogisticModel::from_weights(w, b)
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Probability that the window shows a contraction.
pub fn predict_prob(model: &LogisticModel, x: &FeatureVector) -> f64 {
    sigmoid(model.logit(x))
}

/// Closed only when the probability strictly exceeds one half.
pub fn decide(p: f64) -> GripState {
    if p > 0.5 {
        GripState::Closed
    } else {
        GripState::Open
    }
}

/// One labeled training window.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub x: FeatureVector,
    pub label: GripState,
}

/// Per-epoch loss history of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub samples: usize,
    pub positives: usize,
    pub losses: Vec<f64>,
    pub train_accuracy: f64,
}

/// Full-batch gradient descent on mean cross-entropy plus `l2·‖w‖²`,
/// starting from zero on standardized features.
pub fn train(
    dataset: &[LabeledFeatures],
    config: &TrainConfig,
) -> Result<(LogisticModel, TrainReport), SemgError> {
    if dataset.is_empty() {
        return Err(SemgError::EmptyDataset);
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite())
        || config.l2.is_nan()
        || config.l2 < 0.0
    {
        return Err(SemgError::InvalidTrainConfig);
    }
    if dataset.iter().any(|s| s.x.0.iter().any(|v| !v.is_finite())) {
        return Err(SemgError::NonFiniteFeature);
    }
    let positives = dataset
        .iter()
        .filter(|s| s.label == GripState::Closed)
        .count();
    if positives == 0 || positives == dataset.len() {
        return Err(SemgError::SingleClassDataset);
    }

    let n = dataset.len() as f64;
    let mut mean = vec![0.0; FEATURE_DIM];
    for s in dataset {
        for k in 0..FEATURE_DIM {
            mean[k] += s.x.0[k] / n;
        }
    }
    let mut std = vec![0.0; FEATURE_DIM];
    for s in dataset {
        for k in 0..FEATURE_DIM {
            std[k] += (s.x.0[k] - mean[k]).powi(2) / n;
        }
    }
    for s in std.iter_mut() {
        *s = s.sqrt();
        // constant dimension: leave it centered but unscaled
        if *s < 1e-12 {
            *s = 1.0;
        }
    }

    let rows: Vec<([f64; FEATURE_DIM], f64)> = dataset
        .iter()
        .map(|s| {
            let mut z = [0.0; FEATURE_DIM];
            for k in 0..FEATURE_DIM {
                z[k] = (s.x.0[k] - mean[k]) / std[k];
            }
            (z, f64::from(s.label.as_u8()))
        })
        .collect();

    let mut w = [0.0; FEATURE_DIM];
    let mut b = 0.0;
    let loss_of = |w: &[f64; FEATURE_DIM], b: f64| -> f64 {
        let mut total = 0.0;
        for (z, y) in &rows {
            let logit = b + w.iter().zip(z).map(|(a, c)| a * c).sum::<f64>();
            // log(1 + e^{-logit}) for y=1, log(1 + e^{logit}) for y=0
            let signed = if *y > 0.5 { -logit } else { logit };
            total += softplus(signed);
        }
        total / n + config.l2 * w.iter().map(|v| v * v).sum::<f64>()
    };

    let mut losses = Vec::with_capacity(config.epochs + 1);
    losses.push(loss_of(&w, b));
    for epoch in 0..config.epochs {
        let mut gw = [0.0; FEATURE_DIM];
        let mut gb = 0.0;
        for (z, y) in &rows {
            let logit = b + w.iter().zip(z).map(|(a, c)| a * c).sum::<f64>();
            let r = sigmoid(logit) - y;
            for k in 0..FEATURE_DIM {
                gw[k] += r * z[k] / n;
            }
            gb += r / n;
        }
        for k in 0..FEATURE_DIM {
            w[k] -= config.learning_rate * (gw[k] + 2.0 * config.l2 * w[k]);
        }
        b -= config.learning_rate * gb;

        let loss = loss_of(&w, b);
        let prev = *losses.last().unwrap_or(&f64::INFINITY);
        if !loss.is_finite() || loss > prev + 1e-12 * prev.abs().max(1.0) {
            return Err(SemgError::TrainingDiverged {
                epoch: epoch + 1,
                previous: prev,
                current: loss,
            });
        }
        losses.push(loss);
    }

    let model = LogisticModel {
        w: w.to_vec(),
        b,
        mean,
        std,
        config: *config,
    };
    let correct = dataset
        .iter()
        .filter(|s| decide(predict_prob(&model, &s.x)) == s.label)
        .count();
    let report = TrainReport {
        samples: dataset.len(),
        positives,
        losses,
        train_accuracy: correct as f64 / n,
    };
    Ok((model, report))
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Emits a state change only after `required` consecutive identical
/// decisions that differ from the current state.
#[derive(Debug, Clone)]
pub struct Debouncer {
    required: u32,
    state: GripState,
    candidate: GripState,
    streak: u32,
}

pub const DEFAULT_DEBOUNCE: u32 = 2;

impl Debouncer {
    pub fn new(required: u32) -> Self {
        Self {
            required: required.max(1),
            state: GripState::Open,
            candidate: GripState::Open,
            streak: 0,
        }
    }

    pub fn state(&self) -> GripState {
        self.state
    }

    /// Returns the new state when this decision completes a transition.
    pub fn push(&mut self, decision: GripState) -> Option<GripState> {
        if decision == self.state {
            self.streak = 0;
            return None;
        }
        if decision == self.candidate && self.streak > 0 {
            self.streak += 1;
        } else {
            self.candidate = decision;
            self.streak = 1;
        }
        if self.streak >= self.required {
            self.state = decision;
            self.streak = 0;
            return Some(decision);
        }
        None
    }
}

impl Default for Debouncer {
    fn default() -> Self {
        Self::new(DEFAULT_DEBOUNCE)
    }
}
