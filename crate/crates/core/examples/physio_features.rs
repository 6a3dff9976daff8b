//! Tonic/phasic skin-conductance decomposition and heart-rate features.
//!
//! `cargo run --example physio_features`

use sa_core::physio::{decompose_gsr, hr_from_ibi, rmssd, GsrParams, RmssdMode};
use sa_core::timebase::{make_windows, window_mean, Sample, TimedSeries};

fn main() -> sa_core::Result<()> {
    // 4 Hz skin conductance: slow drift plus skin-conductance responses every 20 s
    let rate = 4.0;
    let samples = (0..(90.0 * rate) as usize)
        .map(|i| {
            let t = i as f64 * 1_000.0 / rate;
            let drift = 2.0 + t / 60_000.0;
            let since = t % 20_000.0;
            let scr = if since > 2_000.0 {
                0.4 * (-(since - 2_000.0) / 3_000.0).exp()
            } else {
                0.0
            };
            Sample::new(t, drift + scr)
        })
        .collect();
    let raw = TimedSeries::new("gsr", rate, 0.0, samples)?;
    let parts = decompose_gsr(&raw, &GsrParams::default())?;
    for w in make_windows(0.0, 90_000.0) {
        println!(
            "window {}: raw {:.3} uS  tonic {:.3} uS  phasic {:+.4} uS",
            w.index,
            window_mean(&raw, &w).unwrap_or(f64::NAN),
            window_mean(&parts.tonic, &w).unwrap_or(f64::NAN),
            window_mean(&parts.phasic, &w).unwrap_or(f64::NAN),
        );
    }

    let ibi = [812.0, 798.0, 830.0, 845.0, 801.0, 779.0, 790.0, 822.0];
    println!("\ninter-beat intervals (ms): {ibi:?}");
    println!("heart rate          {:.2} bpm", hr_from_ibi(&ibi).unwrap());
    println!(
        "RMSSD (mean square) {:.3} ms",
        rmssd(&ibi, RmssdMode::Standard).unwrap()
    );
    println!(
        "RMSSD (sum square)  {:.3} ms",
        rmssd(&ibi, RmssdMode::RootSumSquares).unwrap()
    );
    Ok(())
}
