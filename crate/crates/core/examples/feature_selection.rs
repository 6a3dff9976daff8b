//! Held-out SHAP ranking followed by incremental top-k selection.
//!
//! `cargo run --example feature_selection`

use sa_core::eval::{kfold_cv, CvConfig};
use sa_core::explain::{fold_shap, incremental_selection, rank_features};
use sa_core::featureset::FeatureParams;
use sa_core::gbdt::TrainParams;
use sa_core::synthgen::{synth_dataset, SynthConfig};

fn main() -> sa_core::Result<()> {
    let cfg = SynthConfig {
        n_participants: 10,
        total_windows: 400,
        ..SynthConfig::default()
    };
    let (data, truth) = synth_dataset(&cfg, &FeatureParams::default())?;
    let x = data.to_matrix();
    let y = data.labels();
    let params = TrainParams::default();
    let cv = CvConfig {
        k: 5,
        ..CvConfig::default()
    };

    let run = kfold_cv(&x, &y, None, &params, &cv)?;
    let ranking = rank_features(&fold_shap(&run, &x)?)?;
    println!("ranking (planted features marked *):");
    for (i, e) in ranking.entries.iter().take(10).enumerate() {
        let mark = if truth.informative_features.contains(&e.feature) {
            "*"
        } else {
            ""
        };
        println!("  {:>2}. {:<32} {:.4} {mark}", i + 1, e.feature, e.score);
    }

    let sel = incremental_selection(&x, &y, None, &ranking, &params, &cv, 1..=10, &[&run.report])?;
    println!("\nselection curve:");
    for p in &sel.curve {
        let star = if p.k == sel.k_star { "  <- k*" } else { "" };
        println!("  k = {:>2}: RMSE {:.4}{star}", p.k, p.rmse);
    }
    println!("selected: {:?}", sel.features);
    println!("all 21 features: RMSE {:.4}", run.report.pooled.rmse);
    Ok(())
}
