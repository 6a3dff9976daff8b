//! Leaf-wise gradient boosting with early stopping on a held-out split.
//!
//! `cargo run --example train_gbdt`

use sa_core::eval::metrics;
use sa_core::featureset::FeatureParams;
use sa_core::gbdt::{train_detailed, TrainParams};
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

    let (train_rows, valid_rows): (Vec<usize>, Vec<usize>) = (0..x.n_rows()).partition(|i| i % 5 != 0);
    let pick = |rows: &[usize]| rows.iter().map(|&i| y[i]).collect::<Vec<_>>();
    let (tx, ty) = (x.select_rows(&train_rows), pick(&train_rows));
    let (vx, vy) = (x.select_rows(&valid_rows), pick(&valid_rows));

    let params = TrainParams {
        early_stopping_rounds: 50,
        ..TrainParams::default()
    };
    let out = train_detailed(&tx, &ty, &params, Some((&vx, &vy)))?;
    let h = &out.history;
    println!(
        "{} rounds run, best iteration {}, {} trees kept",
        h.train_rmse.len(),
        h.best_iteration,
        out.ensemble.trees.len()
    );
    for r in (0..h.train_rmse.len()).step_by(25) {
        println!(
            "  round {r:>4}: train RMSE {:.4}  valid RMSE {:.4}",
            h.train_rmse[r], h.valid_rmse[r]
        );
    }
    let m = metrics(&vy, &out.ensemble.predict_matrix(&vx)?)?;
    println!(
        "held-out: RMSE {:.4}  MAE {:.4}  r {:.3}",
        m.rmse,
        m.mae,
        m.corr.unwrap_or(f64::NAN)
    );
    Ok(())
}
