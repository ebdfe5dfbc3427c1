use crate::matrix::Matrix;
use crate::nn::tape::Gradients;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moment estimates, one pair per parameter tensor.
#[derive(Clone, Debug, Default)]
pub struct AdamState {
    step: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> u64 {
        self.step
    }
}

/// Bias-corrected Adam update. Parameters without a gradient in `grads` are
/// treated as having a zero gradient this step.
pub fn adam_step(params: &mut [&mut Matrix], grads: &Gradients, state: &mut AdamState, lr: f64) {
    if state.m.len() != params.len() {
        state.m = params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect();
        state.v = state.m.clone();
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    for (id, param) in params.iter_mut().enumerate() {
        let m = state.m[id].data_mut();
        let v = state.v[id].data_mut();
        let g = grads.get(id).map(Matrix::data);
        for (k, w) in param.data_mut().iter_mut().enumerate() {
            let gk = g.map_or(0.0, |g| g[k]);
            m[k] = BETA1 * m[k] + (1.0 - BETA1) * gk;
            v[k] = BETA2 * v[k] + (1.0 - BETA2) * gk * gk;
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
}
