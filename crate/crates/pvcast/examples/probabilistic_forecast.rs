//! Full pipeline: train, fit per-horizon joint densities, roll 1–4 step
//! forecasts with 95% intervals, and print the metric battery.
//!
//! Run with: cargo run --release --example probabilistic_forecast

use pvcast::pipeline::{run_experiment, DataConfig, ExperimentConfig, ModelKind};
use pvcast::training::TrainConfig;

fn main() {
    let cfg = ExperimentConfig {
        data: DataConfig::Synth {
            days: 20,
            samples_per_day: 48,
            capacity_mw: 100.0,
            seed: 42,
            noise_fraction: 0.05,
        },
        window_length: 24,
        model: ModelKind::Mlp,
        training: TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        },
        max_horizon: 4,
        ..ExperimentConfig::default()
    };

    let report = run_experiment(&cfg, None).unwrap();
    println!("horizon   MAE(MW)  MARE(%)  RMSE(MW)       r      R2  PICP(%)  PIAW(MW)");
    for h in &report.horizons {
        println!(
            "{:>7}  {:>8.4} {:>8.3} {:>9.4} {:>7.4} {:>7.4} {:>8.1} {:>9.3}",
            h.horizon,
            h.point.mae,
            h.point.mare_pct,
            h.point.rmse,
            h.point.pearson,
            h.point.r2,
            h.interval.picp_pct,
            h.interval.piaw
        );
    }

    println!("\nsample 1-step intervals:");
    let h1 = &report.horizons[0];
    for i in 0..5.min(h1.intervals.len()) {
        println!(
            "{}  actual {:>7.3}  pred {:>7.3}  [{:>7.3}, {:>7.3}]",
            h1.series.timestamps[i],
            h1.series.actual_mw[i],
            h1.series.pred_mw[i],
            h1.intervals[i].lower,
            h1.intervals[i].upper
        );
    }
}
