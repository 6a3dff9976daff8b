//! Exact TreeSHAP attributions for a boosted ensemble.
//!
//! `cargo run --example tree_shap`

use sa_core::explain::{shap_matrix, tree_shap};
use sa_core::featureset::FeatureParams;
use sa_core::gbdt::{train, TrainParams};
use sa_core::synthgen::{synth_dataset, SynthConfig};

fn main() -> sa_core::Result<()> {
    let cfg = SynthConfig {
        n_participants: 10,
        total_windows: 400,
        ..SynthConfig::default()
    };
    let (data, _) = synth_dataset(&cfg, &FeatureParams::default())?;
    let x = data.to_matrix();
    let params = TrainParams {
        max_rounds: 150,
        ..TrainParams::default()
    };
    let model = train(&x, &data.labels(), &params, None)?;

    let row = x.row(0);
    let s = tree_shap(&model, &row)?;
    let total = s.base + s.phi.iter().sum::<f64>();
    println!(
        "row 0: base {:.4} + sum(phi) {:+.4} = {:.6}, model says {:.6}",
        s.base,
        s.phi.iter().sum::<f64>(),
        total,
        model.predict_row(&row)
    );
    let mut local: Vec<(usize, f64)> = s.phi.iter().copied().enumerate().collect();
    local.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    for &(j, v) in local.iter().take(5) {
        println!("  {:<32} {:+.4}  (value {:.3})", x.names()[j], v, row[j]);
    }

    let all: Vec<usize> = (0..x.n_rows()).collect();
    let m = shap_matrix(&model, &x, &all)?;
    let mut global: Vec<(&String, f64)> = m.feature_names.iter().zip(m.mean_abs()).collect();
    global.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("\nmean |SHAP| over {} rows:", m.n_rows());
    for (name, v) in global.iter().take(8) {
        println!("  {name:<32} {v:.4}");
    }
    Ok(())
}
