//! Participant-grouped k-fold cross-validation and the final refit.
//!
//! `cargo run --example cross_validation`

use sa_core::eval::{fit_final, kfold_cv, CvConfig};
use sa_core::featureset::FeatureParams;
use sa_core::gbdt::TrainParams;
use sa_core::synthgen::{synth_dataset, SynthConfig};

fn main() -> sa_core::Result<()> {
    let cfg = SynthConfig {
        n_participants: 12,
        total_windows: 480,
        ..SynthConfig::default()
    };
    let (data, _) = synth_dataset(&cfg, &FeatureParams::default())?;
    let x = data.to_matrix();
    let y = data.labels();
    let groups = data.participants();
    let params = TrainParams::default();

    for grouped in [false, true] {
        let cv = CvConfig {
            k: 5,
            grouped,
            ..CvConfig::default()
        };
        let run = kfold_cv(&x, &y, Some(&groups), &params, &cv)?;
        println!("grouped = {grouped}");
        for f in &run.report.folds {
            println!(
                "  fold {}: train {:>3} test {:>3} best iteration {:>4} RMSE {:.4}",
                f.fold, f.n_train, f.n_test, f.best_iteration, f.metrics.rmse
            );
        }
        let p = &run.report.pooled;
        println!(
            "  pooled: RMSE {:.4} MAE {:.4} r {:.3}",
            p.rmse,
            p.mae,
            p.corr.unwrap_or(f64::NAN)
        );
        if grouped {
            let model = fit_final(&x, &y, &params, &run.report)?;
            println!("final model: {} trees (median best iteration)", model.trees.len());
        }
    }
    Ok(())
}
