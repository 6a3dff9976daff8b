//! Acceptance run: one pass/fail line per criterion, nonzero exit on any
//! failure. Criteria 6 and 9 drive the `sa` binary; the rest use the library.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::checks::{self, Check};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sa_core::config::PipelineConfig;
use sa_core::eval::{kfold_cv, CvRun};
use sa_core::explain::{fold_shap, incremental_selection, rank_features, tree_shap, ImportanceRanking};
use sa_core::featureset::{load_dataset, Dataset, N_FEATURES};
use sa_core::gbdt::{train, FeatureMatrix, TrainParams};
use sa_core::synthgen::{synth_dataset, GroundTruth};

const SEEDS: std::ops::Range<u64> = 0..10;
const CHAIN: [&str; 6] = ["synth", "extract", "train", "explain", "select", "report"];

struct Outcome {
    id: usize,
    title: &'static str,
    result: Check,
    secs: f64,
}

fn timed(id: usize, title: &'static str, f: impl FnOnce() -> Check) -> Outcome {
    let t = Instant::now();
    let result = f();
    let o = Outcome {
        id,
        title,
        result,
        secs: t.elapsed().as_secs_f64(),
    };
    print_line(&o);
    o
}

fn print_line(o: &Outcome) {
    let (status, detail) = match &o.result {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {} [{status}] {}: {detail} ({:.1} s)", o.id, o.title, o.secs);
}

fn run_chain(out: &Path, threads: &str) -> Result<f64, String> {
    let t = Instant::now();
    for stage in CHAIN {
        let o = Command::new(env!("CARGO_BIN_EXE_sa"))
            .args([stage, "--threads", threads, "--out", out.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!(
                "`sa {stage}` failed: {}",
                String::from_utf8_lossy(&o.stderr).trim()
            ));
        }
    }
    Ok(t.elapsed().as_secs_f64())
}

fn shape_and_speed(out: &Path) -> Check {
    let secs = run_chain(out, "4")?;
    let data = load_dataset(&out.join("dataset.csv")).map_err(|e| e.to_string())?;
    let n_features = data.to_matrix().n_features();
    let labels_ok = data.rows.iter().all(|r| r.sa_label <= 3);
    let summary = format!(
        "{} rows, {n_features} features, chain {secs:.1} s with --threads 4",
        data.len()
    );
    if data.len() == 1634 && n_features == N_FEATURES && labels_ok && secs < 60.0 {
        Ok(summary)
    } else {
        Err(format!("{summary}; labels in 0..=3: {labels_ok}"))
    }
}

fn determinism(first: &Path, second: &Path) -> Check {
    if !first.join("report.md").is_file() {
        return Err("reference chain did not complete".into());
    }
    run_chain(second, "1")?;
    let diff = common::tree_diff(first, second);
    let n_files = common::tree_bytes(first).len();
    if diff.is_empty() {
        Ok(format!(
            "{n_files} artifacts byte-identical between --threads 4 and --threads 1"
        ))
    } else {
        Err(format!(
            "{} of {n_files} artifacts differ, e.g. {}",
            diff.len(),
            diff[0].display()
        ))
    }
}

fn shap_local_accuracy(data: &Dataset) -> Check {
    let x = data.to_matrix();
    let params = TrainParams {
        max_rounds: 10,
        ..TrainParams::default()
    };
    let t = Instant::now();
    let model = train(&x, &data.labels(), &params, None).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let row = x.row(rng.random_range(0..x.n_rows()));
        let s = tree_shap(&model, &row).map_err(|e| e.to_string())?;
        let err = (s.base + s.phi.iter().sum::<f64>() - model.predict_row(&row)).abs();
        worst = worst.max(err);
    }
    let secs = t.elapsed().as_secs_f64();
    let summary = format!(
        "{} trees, 1000 rows, max |base + sum(phi) - f(x)| = {worst:.1e}, train + SHAP {secs:.2} s",
        model.trees.len()
    );
    if worst <= 1e-9 && secs < 10.0 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

struct SeedRun {
    seed: u64,
    x: FeatureMatrix,
    y: Vec<f64>,
    groups: Vec<String>,
    truth: GroundTruth,
    cv: CvRun,
    ranking: ImportanceRanking,
    cfg: PipelineConfig,
}

fn seed_run(seed: u64, data: Dataset, truth: GroundTruth) -> Result<SeedRun, String> {
    let mut cfg = PipelineConfig::default();
    cfg.set_seed(seed);
    let x = data.to_matrix();
    let y = data.labels();
    let groups: Vec<String> = data.participants().iter().map(|s| s.to_string()).collect();
    let g: Vec<&str> = groups.iter().map(String::as_str).collect();
    let cv = kfold_cv(&x, &y, Some(&g), &cfg.train, &cfg.cv).map_err(|e| e.to_string())?;
    let ranking = rank_features(&fold_shap(&cv, &x).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    Ok(SeedRun {
        seed,
        x,
        y,
        groups,
        truth,
        cv,
        ranking,
        cfg,
    })
}

fn planted_recovery(runs: &[SeedRun]) -> Check {
    let mut recovered = 0;
    let mut corrs = Vec::new();
    let mut misses = Vec::new();
    for r in runs {
        let top = r.ranking.top(12);
        let missing: Vec<&String> = r
            .truth
            .informative_features
            .iter()
            .filter(|f| !top.contains(f))
            .collect();
        if missing.is_empty() {
            recovered += 1;
        } else {
            misses.push(format!("seed {} misses {missing:?}", r.seed));
        }
        corrs.push(r.cv.report.pooled.corr.unwrap_or(f64::NAN));
    }
    let min_corr = corrs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut summary = format!(
        "planted features all in top 12 for {recovered}/{} seeds; out-of-fold corr min {min_corr:.3}, mean {:.3}",
        runs.len(),
        corrs.iter().sum::<f64>() / corrs.len() as f64
    );
    if !misses.is_empty() {
        summary += &format!(" ({})", misses.join("; "));
    }
    if recovered * 10 >= 9 * runs.len() && corrs.iter().all(|&c| c >= 0.7) {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn selection_property(runs: &[SeedRun]) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for r in runs {
        let g: Vec<&str> = r.groups.iter().map(String::as_str).collect();
        let sel = incremental_selection(
            &r.x,
            &r.y,
            Some(&g),
            &r.ranking,
            &r.cfg.train,
            &r.cfg.cv,
            1..=N_FEATURES,
            &[&r.cv.report],
        )
        .map_err(|e| e.to_string())?;
        let at_all = sel.curve.iter().find(|p| p.k == N_FEATURES).map(|p| p.rmse).unwrap();
        let at_star = sel.report.pooled.rmse;
        ok &= at_star <= at_all;
        lines.push(format!("k*={} {:.4}<={:.4}", sel.k_star, at_star, at_all));
    }
    let summary = lines.join(", ");
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn main() {
    let start = Instant::now();
    let mut outcomes = vec![
        timed(2, "SHAP equals coalition enumeration", || {
            checks::shap_vs_enumeration(50, 20, 2)
        }),
        timed(3, "split search equals exhaustive search; loss non-increasing", || {
            let a = checks::split_vs_exhaustive(100, 3)?;
            let b = checks::loss_non_increasing(200, 0..10)?;
            Ok(format!("{a}; {b}"))
        }),
        timed(4, "RMSSD and I-DT oracles", || {
            let a = checks::rmssd_vs_formula(10_000, 4)?;
            let b = checks::idt_vs_reference(1000, 4)?;
            Ok(format!("{a}; {b}"))
        }),
        timed(5, "metric oracles", || checks::metrics_vs_naive(100, 10_000, 5)),
    ];

    let tmp = tempfile::tempdir().expect("temporary directory");
    let (first, second) = (tmp.path().join("threads4"), tmp.path().join("threads1"));
    outcomes.push(timed(6, "end-to-end shape and runtime", || shape_and_speed(&first)));
    outcomes.push(timed(9, "determinism across thread counts", || {
        determinism(&first, &second)
    }));

    let t = Instant::now();
    let mut runs = Vec::new();
    let mut setup_error = None;
    let mut seed0 = None;
    for seed in SEEDS {
        let mut cfg = PipelineConfig::default();
        cfg.set_seed(seed);
        let made = synth_dataset(&cfg.synth, &cfg.features)
            .map_err(|e| e.to_string())
            .and_then(|(data, truth)| {
                if seed == 0 {
                    seed0 = Some(data.clone());
                }
                seed_run(seed, data, truth)
            });
        match made {
            Ok(r) => runs.push(r),
            Err(e) => {
                setup_error = Some(format!("seed {seed}: {e}"));
                break;
            }
        }
    }
    println!(
        "prepared {} seeded studies ({:.1} s)",
        runs.len(),
        t.elapsed().as_secs_f64()
    );

    outcomes.push(timed(1, "SHAP local accuracy", || match &seed0 {
        Some(d) => shap_local_accuracy(d),
        None => Err(setup_error.clone().unwrap_or_default()),
    }));
    let fail_setup = || Err(setup_error.clone().unwrap_or_default());
    outcomes.push(timed(7, "planted-signal recovery", || {
        if setup_error.is_some() {
            fail_setup()
        } else {
            planted_recovery(&runs)
        }
    }));
    outcomes.push(timed(8, "selection curve property", || {
        if setup_error.is_some() {
            fail_setup()
        } else {
            selection_property(&runs)
        }
    }));

    outcomes.sort_by_key(|o| o.id);
    println!("\nsummary");
    for o in &outcomes {
        print_line(o);
    }
    let passed = outcomes.iter().filter(|o| o.result.is_ok()).count();
    println!(
        "acceptance: {passed}/{} criteria passed in {:.0} s",
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if passed != outcomes.len() {
        std::process::exit(1);
    }
}
