//! Dispersion-threshold fixation detection and per-AOI window metrics.
//!
//! `cargo run --example fixation_detection`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sa_core::gaze::{detect_fixations_idt, gaze_window_metrics, label_fixations, Aoi, AoiConfig, GazePoint, IdtParams};
use sa_core::timebase::{make_windows, Sample, TimedSeries};

fn main() -> sa_core::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // 60 Hz gaze hopping between road, tablet and mirrors
    let targets = [(0.0, 5.0), (30.0, -20.0), (-30.0, 5.0), (0.0, -9.0), (30.0, 5.0)];
    let period = 1_000.0 / 60.0;
    let mut samples = Vec::new();
    let mut t = 0.0;
    while t < 60_000.0 {
        let (cx, cy) = targets[rng.random_range(0..targets.len())];
        let dwell = rng.random_range(150.0..900.0);
        let end = t + dwell;
        while t < end {
            let p = GazePoint::new(cx + rng.random_range(-0.2..0.2), cy + rng.random_range(-0.2..0.2));
            samples.push(Sample::new(t, p));
            t += period;
        }
        // saccade
        for _ in 0..3 {
            samples.push(Sample::new(
                t,
                GazePoint::new(rng.random_range(-40.0..40.0), rng.random_range(-25.0..15.0)),
            ));
            t += period;
        }
    }
    let gaze = TimedSeries::new("eye_tracker", 60.0, 0.0, samples)?;

    let aoi = AoiConfig::default();
    let mut fixations = detect_fixations_idt(&gaze, &IdtParams::default());
    label_fixations(&mut fixations, &aoi);
    println!("{} samples -> {} fixations", gaze.len(), fixations.len());
    for f in fixations.iter().take(5) {
        println!(
            "  [{:>7.1}, {:>7.1}] ms  {:>5.1} ms  at ({:+.2}, {:+.2})  {:?}",
            f.start_ms,
            f.end_ms,
            f.duration_ms(),
            f.centroid.x_deg,
            f.centroid.y_deg,
            f.aoi.map(Aoi::name)
        );
    }

    for w in make_windows(0.0, 60_000.0) {
        let m = gaze_window_metrics(&fixations, &w, &aoi);
        println!("window {}", w.index);
        for a in Aoi::ALL {
            let s = m.get(a);
            println!(
                "  {:<9} n={:<3} duration {:>7}  dispersion {:>6}",
                a.name(),
                s.number_of_fixations,
                s.mean_duration_ms.map_or("-".into(), |v| format!("{v:.1}")),
                s.mean_dispersion_deg.map_or("-".into(), |v| format!("{v:.3}")),
            );
        }
    }
    Ok(())
}
