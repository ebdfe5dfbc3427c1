//! Random GIN instances and a finite-difference gradient check.

#![allow(dead_code)]

use netcomplete::nn::{bce_loss_observed, decode_probabilities, gin_forward, GinModel, GinShape, Tape};
use netcomplete::{Graph, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-4;

pub struct Instance {
    pub model: GinModel,
    pub a_hat: Matrix,
    pub observed: Graph,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=10);
    let n_obs = rng.random_range(2..n);
    let shape = GinShape {
        num_layers: 2,
        hidden_dim: rng.random_range(1..=4),
        embed_dim: rng.random_range(1..=4),
    };
    let mut a_hat = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < 0.4 {
                a_hat[(i, j)] = 1.0;
                a_hat[(j, i)] = 1.0;
            }
        }
    }
    let observed = Graph::from_matrix(&a_hat.top_left(n_obs)).unwrap();
    let mut model = GinModel::new(n, shape, &mut rng).unwrap();
    // Move every tensor off its initial value so that eps and biases matter.
    for m in model.params_mut() {
        for v in m.data_mut() {
            *v += rng.random_range(-0.3..0.3);
        }
    }
    Instance { model, a_hat, observed }
}

pub fn loss(model: &GinModel, inst: &Instance) -> f64 {
    let mut tape = Tape::new();
    let a = tape.constant(inst.a_hat.clone());
    let h = gin_forward(&mut tape, model, a).unwrap();
    let p = decode_probabilities(&mut tape, h).unwrap();
    let l = bce_loss_observed(&mut tape, p, &inst.observed).unwrap();
    tape.value(l)[(0, 0)]
}

pub fn analytic(inst: &Instance) -> Vec<Matrix> {
    let mut tape = Tape::new();
    let a = tape.constant(inst.a_hat.clone());
    let h = gin_forward(&mut tape, &inst.model, a).unwrap();
    let p = decode_probabilities(&mut tape, h).unwrap();
    let l = bce_loss_observed(&mut tape, p, &inst.observed).unwrap();
    let grads = tape.backward(l).unwrap();
    inst.model
        .params()
        .iter()
        .enumerate()
        .map(|(id, m)| grads.get(id).cloned().unwrap_or_else(|| Matrix::zeros(m.rows(), m.cols())))
        .collect()
}

/// Largest relative error over every parameter entry.
pub fn max_relative_error(seed: u64) -> f64 {
    let inst = random_instance(seed);
    let grads = analytic(&inst);
    let mut worst: f64 = 0.0;
    let n_params = inst.model.params().len();
    for id in 0..n_params {
        let len = inst.model.params()[id].data().len();
        for k in 0..len {
            let mut plus = inst.model.clone();
            plus.params_mut()[id].data_mut()[k] += STEP;
            let mut minus = inst.model.clone();
            minus.params_mut()[id].data_mut()[k] -= STEP;
            let numeric = (loss(&plus, &inst) - loss(&minus, &inst)) / (2.0 * STEP);
            let a = grads[id].data()[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}
