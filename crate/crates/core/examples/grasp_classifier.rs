//! Trains the logistic grasp classifier on synthetic sEMG and streams a
//! relax/contract/relax recording through the windower and debouncer.
//!
//! ```text
//! cargo run --example grasp_classifier
//! ```

use armband_teleop::semg::{
    build_feature_vector, decide, predict_prob, train, Debouncer, FeatureConfig, LabeledFeatures,
    TrainConfig, Windower, DEFAULT_DEBOUNCE, DEFAULT_WINDOW_LEN,
};
use armband_teleop::synth::{gen_labeled_windows, gen_semg_stream, SemgSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let windows = gen_labeled_windows(300, DEFAULT_WINDOW_LEN, 1.0, 1)?;
    let data: Vec<LabeledFeatures> = windows
        .iter()
        .map(|(frames, label)| {
            Ok(LabeledFeatures {
                x: build_feature_vector(frames)?,
                label: *label,
            })
        })
        .collect::<Result<_, armband_teleop::semg::SemgError>>()?;
    let (model, report) = train(&data, &TrainConfig::default())?;
    println!(
        "trained on {} windows: loss {:.4} -> {:.4}, accuracy {:.3}",
        report.samples,
        report.losses[0],
        report.losses[report.losses.len() - 1],
        report.train_accuracy
    );

    // 6 s recording, contracted between 2 s and 4 s, one decision every 100 ms
    let stream = gen_semg_stream(&SemgSpec::middle_third(6.0, 7))?;
    let mut windower = Windower::new(FeatureConfig::new(DEFAULT_WINDOW_LEN, 20)?);
    let mut debouncer = Debouncer::new(DEFAULT_DEBOUNCE);
    for frame in stream {
        if let Some(x) = windower.push(frame) {
            let p = predict_prob(&model, &x);
            if let Some(state) = debouncer.push(decide(p)) {
                println!(
                    "t={:.2}s p={p:.3} -> grip {:?}",
                    frame.t_us as f64 / 1e6,
                    state
                );
            }
        }
    }
    println!("p = 0.5 decides {:?}", decide(0.5));
    Ok(())
}
