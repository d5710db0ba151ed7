//! Generate a synthetic PV series, window it, and inspect the split.
//!
//! Run with: cargo run --example prepare_dataset

use pvcast::dataset;
use pvcast::synth::{generate, SynthConfig};

fn main() {
    let series = generate(&SynthConfig {
        days: 10,
        samples_per_day: 60,
        capacity_mw: 80.0,
        ..SynthConfig::default()
    });
    println!(
        "raw series: {} samples, step {} min, capacity {} MW",
        series.len(),
        series.step.num_minutes(),
        series.capacity_mw
    );

    let prepared = dataset::prepare(&series, 60, 0.8).expect("series long enough");
    println!(
        "windows: {} total = {} train + {} test (L = {})",
        prepared.num_windows(),
        prepared.split_index,
        prepared.num_test_windows(),
        prepared.window_length
    );
    println!(
        "normalization: offset {:.3} MW, scale {:.3} MW",
        prepared.norm.offset, prepared.norm.scale
    );

    // windows slide one sample at a time over the concatenated days
    let w0 = prepared.window(0);
    let w1 = prepared.window(1);
    assert_eq!(&w0[1..], &w1[..59]);
    println!(
        "first window covers {} .. {}, target at {}",
        prepared.target_time(0, 1) - chrono::Duration::minutes(15 * 60),
        prepared.target_time(0, 1),
        prepared.target_time(0, 1)
    );
    println!(
        "first target: {:.4} normalized = {:.3} MW",
        prepared.target(0, 1),
        prepared.denormalize(prepared.target(0, 1))
    );
}
