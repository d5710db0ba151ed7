//! Train a small ConvLSTM stack on synthetic data and watch the loss fall.
//!
//! Run with: cargo run --release --example train_forecaster

use pvcast::dataset;
use pvcast::recurrent::{bptt_train, StackConfig, StackModel};
use pvcast::synth::{generate, SynthConfig};
use pvcast::training::{Forecaster, TrainConfig};

fn main() {
    let series = generate(&SynthConfig {
        days: 12,
        samples_per_day: 48,
        capacity_mw: 100.0,
        ..SynthConfig::default()
    });
    let dataset = dataset::prepare(&series, 24, 0.8).unwrap();

    let mut model = StackModel::new(StackConfig {
        num_layers: 2,
        hidden_size: 8,
        window_length: 24,
        ..StackConfig::default()
    });
    let history = bptt_train(
        &mut model,
        &dataset,
        &TrainConfig {
            epochs: 15,
            ..TrainConfig::default()
        },
    )
    .unwrap();

    for (i, (t, v)) in history
        .train_loss
        .iter()
        .zip(&history.validation_loss)
        .enumerate()
    {
        println!("epoch {:>2}  train {:.6}  val {:.6}", i + 1, t, v);
    }
    if history.stopped_early {
        println!("(stopped early)");
    }

    // one-step prediction on the first test window
    let i = dataset.split_index;
    let pred = model.predict_norm(dataset.window(i)).unwrap();
    println!(
        "first test window: predicted {:.3} MW, actual {:.3} MW",
        dataset.denormalize(pred),
        dataset.denormalize(dataset.target(i, 1))
    );
}
