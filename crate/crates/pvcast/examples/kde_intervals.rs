//! Kernel density estimation on its own: fit a joint density of
//! (predicted, actual) pairs with Gaussian noise and check how well the
//! extracted 95% intervals calibrate.
//!
//! Run with: cargo run --release --example kde_intervals

use pvcast::kde::{conditional_interval, estimate_joint, DensityModel, GridSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let sigma = 3.0;
    // actual = predicted + N(0, σ²). Keep the prediction spread moderate:
    // Silverman bandwidths scale with the overall spread, and h ≫ σ would
    // smear the conditional far beyond the true noise width.
    let fit: Vec<(f64, f64)> = (0..2000)
        .map(|_| {
            let p = rng.gen_range(0.0..20.0);
            (p, p + sigma * gaussian(&mut rng))
        })
        .collect();

    let model = DensityModel::new(fit).unwrap();
    println!(
        "bandwidths: h_pred {:.4}, h_actual {:.4} (Silverman)",
        model.h_pred, model.h_actual
    );
    let grid = estimate_joint(&model, &GridSpec::default());
    println!("grid mass: {:.5} (should be ≈ 1)", grid.integrated_mass());

    // held-out pairs from the same process
    let mut hits = 0;
    let mut width_sum = 0.0;
    let n_test = 1000;
    for _ in 0..n_test {
        let p = rng.gen_range(2.0..18.0);
        let a = p + sigma * gaussian(&mut rng);
        let iv = conditional_interval(&grid, p, 0.95).unwrap();
        if iv.contains(a) {
            hits += 1;
        }
        width_sum += iv.width();
    }
    println!(
        "PICP {:.1}% (nominal 95%), mean width {:.3} MW (pure-noise width {:.3})",
        100.0 * hits as f64 / n_test as f64,
        width_sum / n_test as f64,
        2.0 * 1.96 * sigma
    );
}
