//! Sweep the recurrent stack depth and rank by test MAE.
//!
//! Run with: cargo run --release --example depth_sweep

use pvcast::pipeline::{depth_sweep, DataConfig, ExperimentConfig, StackSettings};
use pvcast::training::TrainConfig;

fn main() {
    let cfg = ExperimentConfig {
        data: DataConfig::Synth {
            days: 10,
            samples_per_day: 48,
            capacity_mw: 100.0,
            seed: 42,
            noise_fraction: 0.05,
        },
        window_length: 24,
        max_horizon: 1,
        stack: StackSettings {
            hidden_size: 8,
            ..StackSettings::default()
        },
        training: TrainConfig {
            epochs: 10,
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    };

    let report = depth_sweep(&cfg, &[1, 2, 3]).unwrap();
    println!("depth   MAE(MW)  RMSE(MW)");
    for row in &report.rows {
        println!("{:>5} {:>9.4} {:>9.4}", row.depth, row.point.mae, row.point.rmse);
    }
    println!("best depth by MAE: {}", report.best_depth);
}
