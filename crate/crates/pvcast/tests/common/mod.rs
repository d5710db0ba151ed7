//! Shared oracles for the integration suites.

use pvcast::tensor::{NodeId, ParamId, ParamSet, Tape};

/// Compares the tape's analytic gradients against central finite
/// differences for every parameter entry; returns the worst relative error
/// (with a 1e-6 absolute floor in the denominator).
///
/// `forward` must rebuild the graph from scratch and return a scalar loss
/// node; it is called once per perturbation.
pub fn worst_gradient_error(
    set: &mut ParamSet,
    mut forward: impl FnMut(&mut Tape, &ParamSet) -> NodeId,
) -> f64 {
    let mut tape = Tape::new();
    let loss = forward(&mut tape, set);
    set.zero_grads();
    tape.backward(loss, set).expect("backward succeeds");
    let ids: Vec<ParamId> = set.ids().collect();
    let analytic: Vec<Vec<f64>> = ids.iter().map(|&id| set.tensor(id).grad.clone()).collect();

    let eps = 1e-5;
    let eval = |set: &ParamSet, forward: &mut dyn FnMut(&mut Tape, &ParamSet) -> NodeId| {
        let mut t = Tape::new();
        let l = forward(&mut t, set);
        t.scalar(l)
    };
    let mut worst: f64 = 0.0;
    for (gi, &id) in ids.iter().enumerate() {
        for k in 0..set.tensor(id).data.len() {
            let orig = set.tensor(id).data[k];
            set.tensor_mut(id).data[k] = orig + eps;
            let up = eval(set, &mut forward);
            set.tensor_mut(id).data[k] = orig - eps;
            let down = eval(set, &mut forward);
            set.tensor_mut(id).data[k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let rel = (analytic[gi][k] - numeric).abs() / analytic[gi][k].abs().max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}
