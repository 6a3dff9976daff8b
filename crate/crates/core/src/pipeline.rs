//! The staged pipeline: synth → extract → train → explain → select →
//! report. Each stage reads the previous stages' artifacts from disk and
//! writes its own, so any stage can be rerun alone.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::eval::{
    effect_bins_csv, effects_summary_csv, feature_effect_report, fit_final, kfold_cv, metrics, CvReport, CvRun, Metrics,
};
use crate::explain::{
    fold_shap, incremental_selection, rank_features, top_k_columns, ImportanceRanking, SelectionResult, ShapMatrix,
};
use crate::featureset::{build_dataset_from_dirs, load_dataset, save_dataset, Dataset};
use crate::gbdt::Ensemble;
use crate::session::discover_sessions;
use crate::synthgen::{write_sessions, GroundTruth, GROUND_TRUTH_FILE};

pub const MODEL_FILE: &str = "model.json";
pub const CV_REPORT_FILE: &str = "cv_report.json";
pub const FOLDS_DIR: &str = "folds";
pub const SHAP_FILE: &str = "shap.csv";
pub const RANKING_FILE: &str = "ranking.json";
pub const EFFECTS_DIR: &str = "effects";
pub const EFFECTS_SUMMARY_FILE: &str = "summary.csv";
pub const SELECTION_CURVE_FILE: &str = "selection_curve.csv";
pub const SELECTION_FILE: &str = "selection.json";
pub const SELECTED_MODEL_FILE: &str = "model_selected.json";
pub const REPORT_FILE: &str = "report.md";

pub fn fold_model_path(out: &Path, fold: usize) -> PathBuf {
    out.join(FOLDS_DIR).join(format!("fold_{fold:02}.json"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn save_model(model: &Ensemble, path: &Path) -> Result<()> {
    write_text(path, &(model.to_json()? + "\n"))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::malformed(path, e))
}

/// Generates the synthetic study: session directories plus
/// `ground_truth.json`.
pub fn synth(cfg: &PipelineConfig) -> Result<GroundTruth> {
    let truth = write_sessions(&cfg.synth, &cfg.sessions_dir())?;
    truth.save(&cfg.paths.out.join(GROUND_TRUTH_FILE))?;
    log::info!(
        "wrote {} windows to {}",
        truth.windows.len(),
        cfg.sessions_dir().display()
    );
    Ok(truth)
}

/// Raw sessions → `dataset.csv`.
pub fn extract(cfg: &PipelineConfig) -> Result<Dataset> {
    let root = cfg.sessions_dir();
    if !root.is_dir() {
        return Err(Error::MissingInput(root));
    }
    let dirs = discover_sessions(&root)?;
    if dirs.is_empty() {
        return Err(Error::MissingInput(root.join("*/manifest.json")));
    }
    let data = build_dataset_from_dirs(&dirs, &cfg.features)?;
    save_dataset(&data, &cfg.dataset_path())?;
    log::info!("extracted {} rows from {} sessions", data.len(), dirs.len());
    Ok(data)
}

fn labeled_inputs(cfg: &PipelineConfig) -> Result<Dataset> {
    let data = load_dataset(&cfg.dataset_path())?;
    if data.is_empty() {
        return Err(Error::InsufficientData("dataset has no rows".into()));
    }
    Ok(data)
}

/// Cross-validation plus a final all-rows model: `cv_report.json`,
/// `folds/fold_XX.json` and `model.json`.
pub fn train(cfg: &PipelineConfig) -> Result<CvReport> {
    let data = labeled_inputs(cfg)?;
    let (x, y) = (data.to_matrix(), data.labels());
    let groups = data.participants();
    let run = kfold_cv(&x, &y, Some(&groups), &cfg.train, &cfg.cv)?;
    let out = &cfg.paths.out;
    for (f, model) in run.models.iter().enumerate() {
        save_model(model, &fold_model_path(out, f))?;
    }
    write_json(&out.join(CV_REPORT_FILE), &run.report)?;
    let model = fit_final(&x, &y, &cfg.train, &run.report)?;
    save_model(&model, &out.join(MODEL_FILE))?;
    log::info!(
        "cv rmse {:.4}, final model with {} trees",
        run.report.pooled.rmse,
        model.trees.len()
    );
    Ok(run.report)
}

/// Reloads the fold models and held-out rows written by [`train`].
pub fn load_cv_run(out: &Path) -> Result<CvRun> {
    let report: CvReport = read_json(&out.join(CV_REPORT_FILE))?;
    let models = (0..report.k)
        .map(|f| Ensemble::load(&fold_model_path(out, f)))
        .collect::<Result<Vec<_>>>()?;
    let mut test_rows = vec![Vec::new(); report.k];
    for o in &report.oof {
        let rows = test_rows
            .get_mut(o.fold)
            .ok_or_else(|| Error::Schema(format!("out-of-fold row {} names fold {}", o.row, o.fold)))?;
        rows.push(o.row);
    }
    Ok(CvRun {
        report,
        models,
        test_rows,
    })
}

/// Out-of-fold attributions as CSV: `row,base,<feature>...`.
pub fn shap_csv(m: &ShapMatrix) -> String {
    let mut s = String::from("row,base");
    for n in &m.feature_names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for ((id, base), phi) in m.row_ids.iter().zip(&m.base).zip(&m.values) {
        let _ = write!(s, "{id},{base}");
        for v in phi {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub shap: ShapMatrix,
    pub ranking: ImportanceRanking,
}

/// Held-out SHAP of every fold model: `shap.csv`, `ranking.json` and the
/// per-feature effect tables under `effects/`.
pub fn explain(cfg: &PipelineConfig) -> Result<Explanation> {
    let data = labeled_inputs(cfg)?;
    let x = data.to_matrix();
    let out = &cfg.paths.out;
    let run = load_cv_run(out)?;
    if run.report.n_rows != x.n_rows() || run.report.features != x.names() {
        return Err(Error::Schema(format!(
            "{} was built for a different dataset",
            out.join(CV_REPORT_FILE).display()
        )));
    }
    let per_fold = fold_shap(&run, &x)?;
    let ranking = rank_features(&per_fold)?;
    let shap = ShapMatrix::concat(&per_fold)?.sorted_by_row();
    write_text(&out.join(SHAP_FILE), &shap_csv(&shap))?;
    write_json(&out.join(RANKING_FILE), &ranking)?;
    let effects = feature_effect_report(&shap, &x, cfg.effects.max_bins)?;
    let dir = out.join(EFFECTS_DIR);
    for e in &effects {
        write_text(&dir.join(format!("{}.csv", e.feature)), &effect_bins_csv(e))?;
    }
    write_text(&dir.join(EFFECTS_SUMMARY_FILE), &effects_summary_csv(&effects))?;
    Ok(Explanation { shap, ranking })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Incremental selection along `ranking.json`: `selection_curve.csv`,
/// `selection.json` and `model_selected.json`.
pub fn select(cfg: &PipelineConfig) -> Result<SelectionResult> {
    let data = labeled_inputs(cfg)?;
    let (x, y) = (data.to_matrix(), data.labels());
    let groups = data.participants();
    let out = &cfg.paths.out;
    let ranking: ImportanceRanking = read_json(&out.join(RANKING_FILE))?;
    let all: Option<CvReport> = read_json(&out.join(CV_REPORT_FILE)).ok();
    let known: Vec<&CvReport> = all.iter().collect();
    let result = incremental_selection(
        &x,
        &y,
        Some(&groups),
        &ranking,
        &cfg.train,
        &cfg.cv,
        cfg.k_range(),
        &known,
    )?;
    let mut curve = String::from("k,rmse,mae,corr\n");
    for p in &result.curve {
        let _ = writeln!(curve, "{},{},{},{}", p.k, p.rmse, p.mae, opt(p.corr));
    }
    write_text(&out.join(SELECTION_CURVE_FILE), &curve)?;
    write_json(&out.join(SELECTION_FILE), &result)?;
    let cols = top_k_columns(&x, &ranking, result.k_star)?;
    let model = fit_final(&x.select_columns(&cols), &y, &cfg.train, &result.report)?;
    save_model(&model, &out.join(SELECTED_MODEL_FILE))?;
    log::info!(
        "selected k* = {} (rmse {:.4})",
        result.k_star,
        result.report.pooled.rmse
    );
    Ok(result)
}

/// Metrics recomputed from a report's stored out-of-fold predictions.
pub fn recompute_metrics(report: &CvReport) -> Result<Metrics> {
    let y: Vec<f64> = report.oof.iter().map(|o| o.y).collect();
    let yhat: Vec<f64> = report.oof.iter().map(|o| o.yhat).collect();
    metrics(&y, &yhat)
}

fn fmt_corr(c: Option<f64>) -> String {
    c.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

/// Markdown summary built only from the stage artifacts.
pub fn render_report(
    data: &Dataset,
    all: &CvReport,
    selection: &SelectionResult,
    ranking: &ImportanceRanking,
) -> Result<String> {
    let m_all = recompute_metrics(all)?;
    let m_sel = recompute_metrics(&selection.report)?;
    let mut counts = [0usize; 4];
    for r in &data.rows {
        counts[r.sa_label as usize] += 1;
    }
    let mut participants = data.participants();
    participants.dedup();
    let mut s = String::from("# SA prediction report\n\n");
    let _ = writeln!(
        s,
        "Dataset: {} rows, {} features, {} participants. Labels 0/1/2/3: {}/{}/{}/{}.\n",
        data.len(),
        all.features.len(),
        participants.len(),
        counts[0],
        counts[1],
        counts[2],
        counts[3]
    );
    let _ = writeln!(
        s,
        "Cross-validation: {} folds, seed {}, {}.\n",
        all.k,
        all.seed,
        if all.grouped {
            "grouped by participant"
        } else {
            "rows shuffled individually"
        }
    );
    s.push_str("## Model performance\n\n| Feature set | k | RMSE | MAE | Corr |\n|---|---|---|---|---|\n");
    for (name, k, m) in [
        ("All features", all.features.len(), &m_all),
        ("Selected features", selection.k_star, &m_sel),
    ] {
        let _ = writeln!(
            s,
            "| {name} | {k} | {:.4} | {:.4} | {} |",
            m.rmse,
            m.mae,
            fmt_corr(m.corr)
        );
    }
    s.push_str("\n## Importance ranking\n\nFold-averaged mean |SHAP| on held-out rows.\n\n| Rank | Feature | Score |\n|---|---|---|\n");
    for (i, e) in ranking.entries.iter().enumerate() {
        let _ = writeln!(s, "| {} | {} | {:.6} |", i + 1, e.feature, e.score);
    }
    s.push_str("\n## Selection curve\n\n| k | RMSE | MAE | Corr |\n|---|---|---|---|\n");
    for p in &selection.curve {
        let mark = if p.k == selection.k_star { " (k*)" } else { "" };
        let _ = writeln!(
            s,
            "| {}{mark} | {:.4} | {:.4} | {} |",
            p.k,
            p.rmse,
            p.mae,
            fmt_corr(p.corr)
        );
    }
    let _ = writeln!(s, "\nSelected features: {}.", selection.features.join(", "));
    Ok(s)
}

/// Writes `report.md` and returns its text.
pub fn report(cfg: &PipelineConfig) -> Result<String> {
    let out = &cfg.paths.out;
    let data = labeled_inputs(cfg)?;
    let all: CvReport = read_json(&out.join(CV_REPORT_FILE))?;
    let selection: SelectionResult = read_json(&out.join(SELECTION_FILE))?;
    let ranking: ImportanceRanking = read_json(&out.join(RANKING_FILE))?;
    let text = render_report(&data, &all, &selection, &ranking)?;
    write_text(&out.join(REPORT_FILE), &text)?;
    Ok(text)
}

/// Every stage in order.
pub fn run_all(cfg: &PipelineConfig) -> Result<String> {
    synth(cfg)?;
    extract(cfg)?;
    train(cfg)?;
    explain(cfg)?;
    select(cfg)?;
    report(cfg)
}
