//! Train several baseline regressors on the identical split and tabulate
//! the reference model's relative gain.
//!
//! Run with: cargo run --release --example compare_baselines

use pvcast::pipeline::{compare_models, DataConfig, ExperimentConfig, ModelKind};
use pvcast::training::TrainConfig;

fn main() {
    let cfg = ExperimentConfig {
        data: DataConfig::Synth {
            days: 15,
            samples_per_day: 48,
            capacity_mw: 100.0,
            seed: 42,
            noise_fraction: 0.05,
        },
        window_length: 24,
        training: TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    };

    let kinds = [
        ModelKind::Mlp, // reference
        ModelKind::Elm,
        ModelKind::Cart,
        ModelKind::Gbdt,
        ModelKind::Persistence,
    ];
    let report = compare_models(&cfg, &kinds).unwrap();

    println!("model        MAE(MW)  RMSE(MW)       r  ref. gain");
    for row in &report.rows {
        let gain = row
            .reference_gain_pct
            .map_or("        —".to_string(), |g| format!("{g:>8.2}%"));
        println!(
            "{:<11} {:>8.4} {:>9.4} {:>7.4}  {gain}",
            row.model.name(),
            row.point.mae,
            row.point.rmse,
            row.point.pearson
        );
    }
    println!("svr          not implemented");
}
