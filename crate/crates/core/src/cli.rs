//! The `teleop` command line.
//!
//! Exit codes: 0 success, 2 invalid input or arguments, 3 runtime fault.
//! Failures print one JSON object to stderr:
//! `{"error": "validation"|"runtime", "message": "...", "exit_code": n}`.
//!
//! Run settings resolve as command-line flag, then `--config` TOML file,
//! then built-in default. `run-sim` and `run-live` echo the effective
//! settings into their output directory as `config.toml`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::io::{self, DatasetRecord, IoError, SensorLog};
use crate::math::{ArmModel, MathError};
use crate::metrics::{evaluate, MetricsError, TableReport, Trajectory, DEFAULT_PAIR_TOLERANCE_US};
use crate::semg::{
    decide, predict_prob, train, GripState, LabeledFeatures, SemgError, TrainConfig,
};
use crate::sync::live::{run_host1, run_host2, LiveConfig};
use crate::sync::{run_simulation, ChannelModel, Event, Scenario, SimConfig, SyncError};
use crate::synth::{
    gen_labeled_windows, gen_semg_stream, gen_shape, SemgSpec, Shape, ShapeSpec, SynthError,
};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (kind, msg) = match self {
            CliError::Validation(m) => ("validation", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        json!({ "error": kind, "message": msg, "exit_code": self.exit_code() })
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<SyncError> for CliError {
    fn from(e: SyncError) -> Self {
        match e {
            SyncError::ConnectFailed { .. } | SyncError::PeerDisconnected | SyncError::Io(_) => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Validation(e.to_string())
            }
        }
    )*};
}
validation_from!(SynthError, SemgError, MetricsError, MathError);

/// Reading inputs fails as validation; writing outputs fails as runtime.
fn input(e: IoError) -> CliError {
    CliError::Validation(e.to_string())
}

fn output(e: IoError) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "teleop",
    version,
    about = "Armband teleoperation: synthesis, training, simulation, live runs and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic sensor log (shape trace plus optional sEMG), or a
    /// labelled sEMG dataset with --dataset
    Synth(SynthArgs),
    /// Train the grasp classifier from a labelled dataset
    Train(TrainArgs),
    /// Run both hosts over a sensor log on the simulated channel
    RunSim(RunSimArgs),
    /// Run one host over TCP
    RunLive(RunLiveArgs),
    /// Compare human and robot trajectories (per-axis RMSE and MAE)
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmgProfile {
    None,
    Relaxed,
    Contracted,
    /// Contraction during the middle third of the trace
    Grasp,
}

#[derive(Debug, Args)]
pub struct ArmArgs {
    /// Upper-arm length (m)
    #[arg(long)]
    pub upper: Option<f64>,
    /// Forearm length (m)
    #[arg(long)]
    pub forearm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Shape to trace
    #[arg(long, required_unless_present = "dataset")]
    pub shape: Option<Shape>,
    /// Output sensor log (or dataset with --dataset)
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth trajectory output; defaults to `<out>` with a `.truth.csv` suffix
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Side length (square, triangle) or radius (circle, pentagram), m
    #[arg(long)]
    pub size: Option<f64>,
    /// Shape centre in the shoulder frame, "x,y,z" in m
    #[arg(long, value_parser = parse_vec3)]
    pub center: Option<[f64; 3]>,
    /// Traversal duration (s)
    #[arg(long, default_value_t = ShapeSpec::DEFAULT_DURATION_S)]
    pub duration: f64,
    /// Per-axis orientation noise standard deviation (rad)
    #[arg(long, default_value_t = 0.0)]
    pub noise_q: f64,
    /// Orientation noise correlation time (s); 0 for independent samples
    #[arg(long, default_value_t = ShapeSpec::DEFAULT_NOISE_TAU_S)]
    pub noise_tau: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// sEMG stream to include in the log
    #[arg(long, value_enum, default_value_t = EmgProfile::None)]
    pub emg: EmgProfile,
    /// sEMG noise gain (standard deviation = gain × amplitude)
    #[arg(long, default_value_t = 1.0)]
    pub emg_gain: f64,
    /// Write a labelled dataset with this many windows per class instead
    #[arg(long)]
    pub dataset: Option<usize>,
    /// Dataset window length (samples)
    #[arg(long, default_value_t = crate::semg::DEFAULT_WINDOW_LEN)]
    pub window: usize,
    #[command(flatten)]
    pub arm: ArmArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labelled dataset (JSON Lines)
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Training report output (JSON); also printed to stdout
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Fraction of each class held out for evaluation (every k-th window)
    #[arg(long, default_value_t = 0.0)]
    pub holdout: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Settings file (TOML)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Classifier model (JSON)
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Staleness threshold (µs)
    #[arg(long)]
    pub staleness_us: Option<u64>,
    /// Smoothing window length
    #[arg(long)]
    pub window: Option<usize>,
    /// Run length (µs)
    #[arg(long)]
    pub duration_us: Option<u64>,
    #[command(flatten)]
    pub arm: ArmArgs,
}

#[derive(Debug, Args)]
pub struct RunSimArgs {
    /// Sensor log (JSON Lines)
    #[arg(long)]
    pub scenario: PathBuf,
    /// Channel model as "latency_us=…,jitter_us=…,drop_prob=…,seed=…"
    /// (any subset; unset keys come from the config file or the ideal link)
    #[arg(long)]
    pub channel: Option<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Role {
    Host1,
    Host2,
}

#[derive(Debug, Args)]
pub struct RunLiveArgs {
    #[arg(long, value_enum)]
    pub role: Role,
    /// host1: address to connect to; host2: address to listen on
    #[arg(long)]
    pub addr: String,
    /// Sensor log to replay (host1)
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub time_scale: Option<f64>,
    #[arg(long)]
    pub connect_timeout_ms: Option<u64>,
    #[arg(long)]
    pub accept_timeout_ms: Option<u64>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Human trajectory (CSV or JSON Lines); repeat for several shapes
    #[arg(long, required = true)]
    pub human: Vec<PathBuf>,
    /// Robot trajectory, one per --human
    #[arg(long, required = true)]
    pub robot: Vec<PathBuf>,
    /// Row label per pair (default: the human file stem)
    #[arg(long)]
    pub shape: Vec<String>,
    #[arg(long)]
    pub report: PathBuf,
    /// Pairing tolerance (µs)
    #[arg(long, default_value_t = DEFAULT_PAIR_TOLERANCE_US)]
    pub tolerance_us: u64,
    /// Ignore samples before this time (µs), e.g. filter warm-up
    #[arg(long, default_value_t = 0)]
    pub skip_us: u64,
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected 3 values, got {}", v.len()))
}

/// Applies "key=value,…" overrides to a channel model.
pub fn parse_channel(spec: &str, base: ChannelModel) -> Result<ChannelModel, CliError> {
    let mut ch = base;
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part.split_once('=').ok_or_else(|| {
            CliError::Validation(format!("channel entry '{part}' is not key=value"))
        })?;
        let bad = |e: &dyn std::fmt::Display| CliError::Validation(format!("channel {key}: {e}"));
        match key.trim() {
            "latency_us" => ch.latency_us = value.trim().parse().map_err(|e| bad(&e))?,
            "jitter_us" => ch.jitter_us = value.trim().parse().map_err(|e| bad(&e))?,
            "drop_prob" => ch.drop_prob = value.trim().parse().map_err(|e| bad(&e))?,
            "seed" => ch.seed = value.trim().parse().map_err(|e| bad(&e))?,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown channel key '{other}'"
                )))
            }
        }
    }
    ch.validate()?;
    Ok(ch)
}

/// Settings file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct ToolConfig {
    pub arm: ArmSection,
    pub run: SimConfig,
    pub live: LiveSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmSection {
    pub upper: f64,
    pub forearm: f64,
}

impl Default for ArmSection {
    fn default() -> Self {
        Self {
            upper: ArmModel::DEFAULT_UPPER,
            forearm: ArmModel::DEFAULT_FOREARM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveSection {
    pub connect_timeout_ms: u64,
    pub accept_timeout_ms: u64,
    pub time_scale: f64,
    pub max_duration_us: Option<u64>,
}

impl Default for LiveSection {
    fn default() -> Self {
        let d = LiveConfig::default();
        Self {
            connect_timeout_ms: d.connect_timeout_ms,
            accept_timeout_ms: d.accept_timeout_ms,
            time_scale: d.time_scale,
            max_duration_us: d.max_duration_us,
        }
    }
}

impl ToolConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = io::read_text(p).map_err(input)?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
            }
        }
    }

    fn apply_run_args(&mut self, args: &RunArgs) {
        if let Some(v) = args.staleness_us {
            self.run.host2.staleness_us = v;
        }
        if let Some(v) = args.window {
            self.run.host2.smoother.window = v;
        }
        if let Some(v) = args.duration_us {
            self.run.duration_us = Some(v);
        }
        if let Some(v) = args.arm.upper {
            self.arm.upper = v;
        }
        if let Some(v) = args.arm.forearm {
            self.arm.forearm = v;
        }
    }

    pub fn arm(&self) -> Result<ArmModel, CliError> {
        Ok(ArmModel::new(self.arm.upper, self.arm.forearm)?)
    }

    pub fn live(&self) -> LiveConfig {
        LiveConfig {
            run: self.run.clone(),
            connect_timeout_ms: self.live.connect_timeout_ms,
            accept_timeout_ms: self.live.accept_timeout_ms,
            time_scale: self.live.time_scale,
            max_duration_us: self.live.max_duration_us,
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Runtime(format!("config serialization: {e}")))
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::Validation(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train_cmd(a),
        Command::RunSim(a) => run_sim(a),
        Command::RunLive(a) => run_live(a),
        Command::Eval(a) => eval(a),
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    if let Some(per_class) = a.dataset {
        if per_class == 0 || a.window < 2 {
            return Err(CliError::Validation(
                "--dataset and --window must be positive (window >= 2)".into(),
            ));
        }
        let windows = gen_labeled_windows(per_class, a.window, a.emg_gain, a.seed)?;
        let records: Vec<DatasetRecord> = windows
            .iter()
            .map(|(frames, label)| DatasetRecord::from_frames(frames, *label))
            .collect();
        io::write_dataset(&a.out, &records).map_err(output)?;
        print_json(&json!({ "dataset": a.out, "windows": records.len(), "window_len": a.window }));
        return Ok(());
    }
    let shape = a
        .shape
        .ok_or_else(|| CliError::Validation("--shape is required".into()))?;
    let arm = ArmModel::new(
        a.arm.upper.unwrap_or(ArmModel::DEFAULT_UPPER),
        a.arm.forearm.unwrap_or(ArmModel::DEFAULT_FOREARM),
    )?;
    let spec = ShapeSpec {
        shape,
        size: a.size.unwrap_or(shape.default_size()),
        center: a.center.unwrap_or(ShapeSpec::DEFAULT_CENTER),
        duration_s: a.duration,
        noise_q: a.noise_q,
        noise_tau_s: a.noise_tau,
        seed: a.seed,
    };
    let trace = gen_shape(&spec, &arm)?;
    let semg = match a.emg {
        EmgProfile::None => Vec::new(),
        profile => {
            let mut s = SemgSpec {
                duration_s: a.duration,
                gain: a.emg_gain,
                seed: a.seed.wrapping_add(0x5e),
                ..SemgSpec::default()
            };
            s.contracted = match profile {
                EmgProfile::Contracted => vec![(0.0, f64::INFINITY)],
                EmgProfile::Grasp => SemgSpec::middle_third(a.duration, 0).contracted,
                _ => Vec::new(),
            };
            gen_semg_stream(&s)?
        }
    };
    let scenario = Scenario {
        arm,
        imu: trace.imu,
        semg,
    };
    let truth_path = a.truth.unwrap_or_else(|| sibling(&a.out, "truth.csv"));
    io::write_sensor_log(&a.out, &SensorLog::from_scenario(&scenario)).map_err(output)?;
    io::write_trajectory(&truth_path, &trace.truth).map_err(output)?;
    print_json(&json!({
        "sensor_log": a.out,
        "truth": truth_path,
        "imu_samples": scenario.imu.len(),
        "semg_samples": scenario.semg.len(),
        "spec": spec,
    }));
    Ok(())
}

/// `dir/stem.suffix` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn accuracy(model: &crate::semg::LogisticModel, data: &[LabeledFeatures]) -> f64 {
    let correct = data
        .iter()
        .filter(|s| decide(predict_prob(model, &s.x)) == s.label)
        .count();
    correct as f64 / data.len().max(1) as f64
}

fn train_cmd(a: TrainArgs) -> Result<(), CliError> {
    if !(0.0..1.0).contains(&a.holdout) {
        return Err(CliError::Validation("--holdout must be in [0, 1)".into()));
    }
    let records = io::read_dataset(&a.data).map_err(input)?;
    let (features, feature_cfg) = io::dataset_features(&records).map_err(input)?;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        learning_rate: a.lr.unwrap_or(defaults.learning_rate),
        l2: a.l2.unwrap_or(defaults.l2),
        epochs: a.epochs.unwrap_or(defaults.epochs),
        features: feature_cfg,
    };
    // every k-th window of each class is held out
    let (mut fit, mut held) = (Vec::new(), Vec::new());
    if a.holdout > 0.0 {
        let stride = (1.0 / a.holdout).round().max(2.0) as usize;
        for label in [GripState::Open, GripState::Closed] {
            for (i, s) in features.iter().filter(|s| s.label == label).enumerate() {
                if i % stride == stride - 1 {
                    held.push(s.clone());
                } else {
                    fit.push(s.clone());
                }
            }
        }
    } else {
        fit = features;
    }
    let (model, report) = train(&fit, &config)?;
    io::write_model(&a.model_out, &model).map_err(output)?;
    let summary = json!({
        "model": a.model_out,
        "samples": report.samples,
        "positives": report.positives,
        "initial_loss": report.losses.first(),
        "final_loss": report.losses.last(),
        "train_accuracy": report.train_accuracy,
        "holdout_samples": held.len(),
        "holdout_accuracy": if held.is_empty() { None } else { Some(accuracy(&model, &held)) },
        "config": config,
    });
    if let Some(p) = &a.report {
        io::write_json(p, &summary).map_err(output)?;
    }
    print_json(&summary);
    Ok(())
}

fn load_scenario(path: &Path, arm: ArmModel) -> Result<Scenario, CliError> {
    let log = io::read_sensor_log(path).map_err(input)?;
    let scenario = log.to_scenario(arm);
    scenario.validate()?;
    Ok(scenario)
}

fn load_model(path: Option<&PathBuf>) -> Result<Option<crate::semg::LogisticModel>, CliError> {
    path.map(|p| io::read_model(p).map_err(input)).transpose()
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

fn write_events(path: &Path, events: &[Event]) -> Result<(), CliError> {
    let mut s = String::new();
    for e in events {
        s.push_str(&serde_json::to_string(e).unwrap_or_default());
        s.push('\n');
    }
    io::write_atomic(path, s.as_bytes()).map_err(output)
}

fn write_grip(path: &Path, grip: &[(u64, GripState)]) -> Result<(), CliError> {
    let mut s = String::from("t_us,state\n");
    for (t, g) in grip {
        s.push_str(&format!("{t},{}\n", g.as_u8()));
    }
    io::write_atomic(path, s.as_bytes()).map_err(output)
}

fn metrics_json(human: &Trajectory, robot: &Trajectory) -> serde_json::Value {
    match evaluate(human, robot, DEFAULT_PAIR_TOLERANCE_US) {
        Ok(r) => {
            json!({ "rmse": r.rmse, "mae": r.mae, "paired": r.paired, "unpaired": r.unpaired })
        }
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn run_sim(a: RunSimArgs) -> Result<(), CliError> {
    let mut cfg = ToolConfig::load(a.run.config.as_deref())?;
    cfg.apply_run_args(&a.run);
    if let Some(spec) = &a.channel {
        cfg.run.channel = parse_channel(spec, cfg.run.channel)?;
    }
    cfg.run.validate()?;
    let arm = cfg.arm()?;
    let scenario = load_scenario(&a.scenario, arm)?;
    let model = load_model(a.run.model.as_ref())?;
    let out = run_simulation(&scenario, model.as_ref(), &cfg.run)?;

    let dir = &a.run.out_dir;
    prepare_out_dir(dir)?;
    io::write_trajectory(&dir.join("commanded.csv"), &out.commanded).map_err(output)?;
    io::write_trajectory(&dir.join("human.csv"), &out.human).map_err(output)?;
    io::write_trajectory(&dir.join("human_filtered.csv"), &out.human_filtered).map_err(output)?;
    write_grip(&dir.join("grip.csv"), &out.grip)?;
    write_events(&dir.join("events.jsonl"), &out.events)?;
    io::write_atomic(&dir.join("config.toml"), cfg.to_toml()?.as_bytes()).map_err(output)?;
    let summary = json!({
        "stats": out.stats,
        "commanded_samples": out.commanded.len(),
        "grip_changes": out.grip.len(),
        "vs_human": metrics_json(&out.human, &out.commanded),
        "vs_human_filtered": metrics_json(&out.human_filtered, &out.commanded),
    });
    io::write_json(&dir.join("summary.json"), &summary).map_err(output)?;
    print_json(&summary);
    Ok(())
}

fn run_live(a: RunLiveArgs) -> Result<(), CliError> {
    let mut cfg = ToolConfig::load(a.run.config.as_deref())?;
    cfg.apply_run_args(&a.run);
    if let Some(v) = a.time_scale {
        cfg.live.time_scale = v;
    }
    if let Some(v) = a.connect_timeout_ms {
        cfg.live.connect_timeout_ms = v;
    }
    if let Some(v) = a.accept_timeout_ms {
        cfg.live.accept_timeout_ms = v;
    }
    let live = cfg.live();
    live.validate()?;
    let dir = &a.run.out_dir;
    match a.role {
        Role::Host1 => {
            let path = a
                .scenario
                .as_ref()
                .ok_or_else(|| CliError::Validation("--scenario is required for host1".into()))?;
            let scenario = load_scenario(path, cfg.arm()?)?;
            let model = load_model(a.run.model.as_ref())?;
            let out = run_host1(&a.addr, &scenario, model.as_ref(), &live)?;
            prepare_out_dir(dir)?;
            io::write_trajectory(&dir.join("human.csv"), &out.human).map_err(output)?;
            io::write_trajectory(&dir.join("human_filtered.csv"), &out.human_filtered)
                .map_err(output)?;
            write_events(&dir.join("events.jsonl"), &out.events)?;
            io::write_atomic(&dir.join("config.toml"), cfg.to_toml()?.as_bytes())
                .map_err(output)?;
            let summary = json!({
                "role": "host1",
                "stats": out.stats,
                "grip_decisions": out.grip_decisions.len(),
                "peer_disconnected": out.peer_disconnected,
            });
            io::write_json(&dir.join("summary.json"), &summary).map_err(output)?;
            print_json(&summary);
        }
        Role::Host2 => {
            let out = run_host2(&a.addr, &live)?;
            prepare_out_dir(dir)?;
            io::write_trajectory(&dir.join("commanded.csv"), &out.commanded).map_err(output)?;
            write_grip(&dir.join("grip.csv"), &out.grip)?;
            write_events(&dir.join("events.jsonl"), &out.events)?;
            io::write_atomic(&dir.join("config.toml"), cfg.to_toml()?.as_bytes())
                .map_err(output)?;
            let summary = json!({
                "role": "host2",
                "stats": out.stats,
                "commanded_samples": out.commanded.len(),
                "disconnected_at_us": out.disconnected_at_us,
                "final_stale": out.final_stale,
            });
            io::write_json(&dir.join("summary.json"), &summary).map_err(output)?;
            print_json(&summary);
        }
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<(), CliError> {
    if a.human.len() != a.robot.len() {
        return Err(CliError::Validation(format!(
            "{} --human files but {} --robot files",
            a.human.len(),
            a.robot.len()
        )));
    }
    if !a.shape.is_empty() && a.shape.len() != a.human.len() {
        return Err(CliError::Validation(
            "give one --shape per --human or none".into(),
        ));
    }
    let mut table = TableReport::default();
    for (i, (h, r)) in a.human.iter().zip(&a.robot).enumerate() {
        let human = io::read_trajectory(h).map_err(input)?.since(a.skip_us);
        let robot = io::read_trajectory(r).map_err(input)?.since(a.skip_us);
        let report = evaluate(&human, &robot, a.tolerance_us)?;
        let label = match a.shape.get(i) {
            Some(s) => s.clone(),
            None => h
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| i.to_string()),
        };
        table.insert(&label, &report);
    }
    io::write_json(&a.report, &table).map_err(output)?;
    print_json(&serde_json::to_value(&table).unwrap_or_default());
    Ok(())
}
