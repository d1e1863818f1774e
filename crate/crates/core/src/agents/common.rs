use crate::error::Result;
use crate::nn::{Matrix, Mlp, Optimizer, OptimizerKind};

/// Layer widths `[input, hidden.., output]`.
pub(crate) fn layer_dims(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut d = Vec::with_capacity(hidden.len() + 2);
    d.push(input);
    d.extend_from_slice(hidden);
    d.push(output);
    d
}

pub(crate) fn make_optimizer(kind: OptimizerKind, lr: f64, net: &Mlp) -> Optimizer {
    Optimizer::new(kind, lr, net.num_params())
}

/// Squared-error regression of a single-output critic onto `targets`.
/// Returns the loss and the parameter gradient.
pub(crate) fn critic_regression(critic: &Mlp, input: &Matrix, targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (q, tape) = critic.forward_tape(input)?;
    let b = targets.len() as f64;
    let mut loss = 0.0;
    let mut g = Matrix::zeros(q.rows(), 1);
    for (i, y) in targets.iter().enumerate() {
        let e = q.get(i, 0) - y;
        loss += e * e / b;
        g.set(i, 0, 2.0 * e / b);
    }
    let (grads, _) = critic.backward(&tape, &g)?;
    Ok((loss, grads))
}

/// Elementwise `min(q1, q2)` of two single-column outputs.
pub(crate) fn twin_min(q1: &Matrix, q2: &Matrix) -> Vec<f64> {
    q1.as_slice().iter().zip(q2.as_slice()).map(|(a, b)| a.min(*b)).collect()
}

pub(crate) fn sgd(params: &mut [f64], grads: &[f64], lr: f64) {
    params.iter_mut().zip(grads).for_each(|(p, g)| *p -= lr * g);
}
