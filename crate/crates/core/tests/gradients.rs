//! Reverse-mode gradients of the full encoder → decoder → loss pipeline
//! against central finite differences.

mod common;

use common::{analytic, max_relative_error, random_instance};
use netcomplete::nn::{bce_loss_observed, decode_probabilities, gin_forward, Tape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..20 {
        let err = max_relative_error(seed);
        assert!(err < 1e-4, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn eps_gradient_is_nonzero_with_neighbours() {
    let inst = random_instance(3);
    assert!(inst.a_hat.sum() > 0.0);
    let grads = analytic(&inst);
    assert!(grads[0][(0, 0)].abs() > 0.0);
}

#[test]
fn loss_ignores_entries_outside_observed_block() {
    let inst = random_instance(5);
    let n = inst.a_hat.rows();
    let n_obs = inst.observed.n();
    let mut tape = Tape::new();
    let a = tape.constant(inst.a_hat.clone());
    let h = gin_forward(&mut tape, &inst.model, a).unwrap();
    let p = decode_probabilities(&mut tape, h).unwrap();
    let base = tape.value(p).clone();
    let reference = {
        let mut t = Tape::new();
        let pv = t.constant(base.clone());
        let l = bce_loss_observed(&mut t, pv, &inst.observed).unwrap();
        t.value(l)[(0, 0)]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut changed = base.clone();
    for i in 0..n {
        for j in 0..n {
            if i >= n_obs || j >= n_obs {
                changed[(i, j)] = rng.random::<f64>();
            }
        }
    }
    let mut t = Tape::new();
    let pv = t.constant(changed);
    let l = bce_loss_observed(&mut t, pv, &inst.observed).unwrap();
    assert_eq!(t.value(l)[(0, 0)].to_bits(), reference.to_bits());
}

#[test]
fn encoder_is_permutation_equivariant() {
    // Relabelling nodes and permuting the one-hot weight rows to match
    // permutes the embeddings the same way.
    let inst = random_instance(8);
    let n = inst.a_hat.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.reverse();
    order.swap(0, n / 2);
    let a_perm = inst.a_hat.permuted(&order);
    let mut model_perm = inst.model.clone();
    {
        let w1 = &mut model_perm.layers_mut()[0].w1;
        let orig = w1.clone();
        for (new, &old) in order.iter().enumerate() {
            w1.row_mut(new).copy_from_slice(orig.row(old));
        }
    }
    let (h, _) = netcomplete::nn::encode_decode(&inst.model, &inst.a_hat).unwrap();
    let (hp, _) = netcomplete::nn::encode_decode(&model_perm, &a_perm).unwrap();
    for (new, &old) in order.iter().enumerate() {
        for (x, y) in hp.row(new).iter().zip(h.row(old)) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
