//! Verify the autodiff engine against central finite differences on a
//! 2-layer ConvLSTM stack driving an MSE loss.
//!
//! Run with: cargo run --release --example gradient_check

use pvcast::recurrent::{StackConfig, StackModel};
use pvcast::tensor::Tape;
use pvcast::training::TapeModel;

fn loss(model: &StackModel, window: &[f64], target: f64) -> f64 {
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, window).unwrap();
    let l = tape.mse_loss(out, &[target]).unwrap();
    tape.scalar(l)
}

fn main() {
    let mut model = StackModel::new(StackConfig {
        num_layers: 2,
        hidden_size: 3,
        window_length: 6,
        ..StackConfig::default()
    });
    let window: Vec<f64> = (0..6).map(|i| 0.1 + 0.12 * i as f64).collect();
    let target = 0.8;

    // analytic gradients via one backward sweep
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, &window).unwrap();
    let l = tape.mse_loss(out, &[target]).unwrap();
    model.params_mut().zero_grads();
    tape.backward(l, model.params_mut()).unwrap();

    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let ids: Vec<_> = model.params().ids().collect();
    for id in ids {
        for k in 0..model.params().tensor(id).data.len() {
            let analytic = model.params().tensor(id).grad[k];
            let orig = model.params().tensor(id).data[k];
            model.params_mut().tensor_mut(id).data[k] = orig + eps;
            let up = loss(&model, &window, target);
            model.params_mut().tensor_mut(id).data[k] = orig - eps;
            let down = loss(&model, &window, target);
            model.params_mut().tensor_mut(id).data[k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let rel = (analytic - numeric).abs() / analytic.abs().max(1e-6);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    println!("checked {checked} parameters, worst relative error {worst:.3e}");
    assert!(worst < 1e-4, "gradient check failed");
    println!("all gradients match finite differences");
}
