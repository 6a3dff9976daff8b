//! Device delay correction, 30 s windowing and SA label attachment.
//!
//! `cargo run --example windows_and_sync`

use sa_core::featureset::attach_labels;
use sa_core::session::SaPrompt;
use sa_core::timebase::{make_windows, window_mean, Sample, TimedSeries};

fn main() -> sa_core::Result<()> {
    // heart rate logged at 1 Hz by a device running 1.5 s behind the drive clock
    let samples = (0..150)
        .map(|i| Sample::new(1_500.0 + i as f64 * 1_000.0, 70.0 + (i / 30) as f64 * 5.0))
        .collect();
    let hr = TimedSeries::new("hr_band", 1.0, 1_500.0, samples)?;
    let aligned = hr.apply_delay();
    println!(
        "{}: {} samples, raw start {} ms, aligned start {} ms",
        hr.device_id(),
        hr.len(),
        hr.first_t_ms(),
        aligned.first_t_ms()
    );

    let windows = make_windows(0.0, 140_000.0);
    let prompts = [
        SaPrompt {
            t_ms: 31_000.0,
            sa_label: 2,
        },
        SaPrompt {
            t_ms: 95_000.0,
            sa_label: 1,
        },
        SaPrompt {
            t_ms: 97_000.0,
            sa_label: 3,
        },
    ];
    let labels = attach_labels(&windows, &prompts);
    for (w, label) in windows.iter().zip(&labels) {
        let mean = window_mean(&aligned, w).map_or("-".into(), |m| format!("{m:.1}"));
        let label = label.map_or("-".into(), |l| l.to_string());
        println!(
            "window {} [{:>6}, {:>6}) ms  mean HR {mean:>5}  SA {label}",
            w.index, w.start_ms, w.end_ms
        );
    }
    Ok(())
}
