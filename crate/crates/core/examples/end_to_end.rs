//! The whole artifact pipeline on a small study, written to a directory.
//!
//! `cargo run --example end_to_end [OUT_DIR]`

use sa_core::config::PipelineConfig;
use sa_core::pipeline;

const CONFIG: &str = r#"
seed = 11

[synth]
n_participants = 10
total_windows = 300

[cv]
k = 5

[selection]
k_max = 10
"#;

fn main() -> sa_core::Result<()> {
    let mut cfg = PipelineConfig::from_toml(CONFIG)?;
    cfg.paths.out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("sa_end_to_end"));
    let report = pipeline::run_all(&cfg)?;
    println!("{report}");
    println!("artifacts in {}:", cfg.paths.out.display());
    let mut names: Vec<_> = std::fs::read_dir(&cfg.paths.out)
        .map_err(|e| sa_core::Error::io(&cfg.paths.out, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for n in names {
        println!("  {n}");
    }
    Ok(())
}
