//! Synthetic study generation with planted effects, then feature extraction.
//!
//! `cargo run --example synth_to_dataset`

use sa_core::eval::spearman;
use sa_core::featureset::{build_dataset, FeatureParams, FEATURE_NAMES};
use sa_core::synthgen::{generate, SynthConfig};

fn main() -> sa_core::Result<()> {
    let cfg = SynthConfig {
        n_participants: 8,
        total_windows: 240,
        seed: 3,
        ..SynthConfig::default()
    };
    let (sessions, truth) = generate(&cfg)?;
    let s = &sessions[0];
    println!(
        "{} sessions; first: {}/{} with {} GSR, {} IBI, {} gaze samples and {} SA prompts",
        sessions.len(),
        s.manifest.participant_id,
        s.manifest.drive_id,
        s.gsr.len(),
        s.ibi.len(),
        s.gaze.len(),
        s.prompts.len()
    );
    println!("planted: {:?}", truth.informative_features);

    let data = build_dataset(&sessions, &FeatureParams::default())?;
    let y = data.labels();
    let mut counts = [0usize; 4];
    for &l in &y {
        counts[l as usize] += 1;
    }
    println!("{} labeled windows, label counts {counts:?}", data.len());
    println!("\nSpearman correlation of each feature with the SA label:");
    for (j, name) in FEATURE_NAMES.iter().enumerate() {
        let (x, yy): (Vec<f64>, Vec<f64>) = data
            .column(j)
            .iter()
            .zip(&y)
            .filter_map(|(v, &l)| v.map(|v| (v, l)))
            .unzip();
        let rho = spearman(&x, &yy).map_or("-".into(), |r| format!("{r:+.3}"));
        let mark = if truth.informative_features.iter().any(|f| f == name) {
            "*"
        } else {
            ""
        };
        println!("  {name:<32} {rho:>7} {mark}");
    }
    Ok(())
}
