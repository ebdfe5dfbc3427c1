//! Graph Isomorphism Network encoder, inner-product decoder and the
//! observed-block cross-entropy loss.
//!
//! A GIN layer maps node states `h` to `MLP((1 + eps) h + A h)` where the MLP
//! is affine → ReLU → affine. With one-hot node features the first layer's
//! input product `I · W1` is just `W1`, so that layer reads its weight table
//! directly and applies the (linear) aggregation after the first affine map.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::nn::tape::{Tape, Var};

/// Number of parameter tensors per layer: eps, w1, b1, w2, b2.
pub const PARAMS_PER_LAYER: usize = 5;

/// Checkpoint format version written by [`GinModel::to_checkpoint`].
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct GinLayer {
    /// `1 x 1` learnable self-weight offset.
    pub eps: Matrix,
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
}

impl GinLayer {
    /// Glorot-uniform weights, zero biases, `eps = 0`.
    pub fn new<R: Rng + ?Sized>(d_in: usize, d_hidden: usize, d_out: usize, rng: &mut R) -> Self {
        Self {
            eps: Matrix::zeros(1, 1),
            w1: glorot(d_in, d_hidden, rng),
            b1: Matrix::zeros(1, d_hidden),
            w2: glorot(d_hidden, d_out, rng),
            b2: Matrix::zeros(1, d_out),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.cols()
    }

    fn tensors(&self) -> [&Matrix; PARAMS_PER_LAYER] {
        [&self.eps, &self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn tensors_mut(&mut self) -> [&mut Matrix; PARAMS_PER_LAYER] {
        [
            &mut self.eps,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
        ]
    }
}

fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Matrix {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Matrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-bound..=bound))
}

/// Layer widths for a [`GinModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GinShape {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
}

impl Default for GinShape {
    fn default() -> Self {
        Self {
            num_layers: 2,
            hidden_dim: 64,
            embed_dim: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GinModel {
    layers: Vec<GinLayer>,
}

impl GinModel {
    /// Fresh model for `n_nodes` one-hot inputs.
    pub fn new<R: Rng + ?Sized>(n_nodes: usize, shape: GinShape, rng: &mut R) -> Result<Self> {
        if shape.num_layers == 0 || shape.hidden_dim == 0 || shape.embed_dim == 0 || n_nodes == 0 {
            return Err(Error::InvalidParameter(format!("degenerate GIN shape {shape:?}")));
        }
        let layers = (0..shape.num_layers)
            .map(|l| {
                let d_in = if l == 0 { n_nodes } else { shape.hidden_dim };
                let d_out = if l + 1 == shape.num_layers {
                    shape.embed_dim
                } else {
                    shape.hidden_dim
                };
                GinLayer::new(d_in, shape.hidden_dim, d_out, rng)
            })
            .collect();
        Ok(Self { layers })
    }

    /// Wraps explicit layers, checking that widths chain.
    pub fn from_layers(layers: Vec<GinLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("GIN model needs at least one layer".into()));
        }
        for l in &layers {
            let d_hidden = l.w1.cols();
            let ok = l.eps.shape() == (1, 1)
                && l.b1.shape() == (1, d_hidden)
                && l.w2.rows() == d_hidden
                && l.b2.shape() == (1, l.w2.cols());
            if !ok {
                return Err(Error::InvalidParameter("inconsistent GIN layer tensors".into()));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::ShapeMismatch {
                    op: "GinModel::from_layers",
                    left: (pair[0].input_dim(), pair[0].output_dim()),
                    right: (pair[1].input_dim(), pair[1].output_dim()),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[GinLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [GinLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn embed_dim(&self) -> usize {
        self.layers.last().expect("non-empty").output_dim()
    }

    /// All parameter tensors in id order (layer-major, then eps, w1, b1, w2, b2).
    pub fn params(&self) -> Vec<&Matrix> {
        self.layers.iter().flat_map(|l| l.tensors()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        self.layers.iter_mut().flat_map(|l| l.tensors_mut()).collect()
    }

    pub fn param_names(&self) -> Vec<String> {
        (0..self.layers.len())
            .flat_map(|l| {
                ["eps", "w1", "b1", "w2", "b2"]
                    .into_iter()
                    .map(move |t| format!("layer{l}.{t}"))
            })
            .collect()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let params = self
            .param_names()
            .into_iter()
            .zip(self.params())
            .map(|(name, m)| NamedTensor {
                name,
                rows: m.rows(),
                cols: m.cols(),
                data: m.data().to_vec(),
            })
            .collect();
        Checkpoint {
            version: CHECKPOINT_VERSION,
            params,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported checkpoint version {}",
                ck.version
            )));
        }
        if ck.params.is_empty() || ck.params.len() % PARAMS_PER_LAYER != 0 {
            return Err(Error::InvalidParameter("checkpoint has a partial layer".into()));
        }
        let mut layers = Vec::new();
        for chunk in ck.params.chunks(PARAMS_PER_LAYER) {
            let l = layers.len();
            let mut t = chunk.iter().zip(["eps", "w1", "b1", "w2", "b2"]).map(|(nt, want)| {
                if nt.name != format!("layer{l}.{want}") {
                    return Err(Error::InvalidParameter(format!(
                        "expected tensor layer{l}.{want}, found {}",
                        nt.name
                    )));
                }
                Matrix::from_vec(nt.rows, nt.cols, nt.data.clone())
            });
            let mut next = || t.next().expect("chunk has five tensors");
            layers.push(GinLayer {
                eps: next()?,
                w1: next()?,
                b1: next()?,
                w2: next()?,
                b2: next()?,
            });
        }
        Self::from_layers(layers)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Versioned, JSON-serializable list of named parameter tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub params: Vec<NamedTensor>,
}

/// Input to one GIN layer.
#[derive(Clone, Copy, Debug)]
pub enum LayerInput {
    /// Identity features: node `v`'s state is the `v`-th unit vector.
    OneHot,
    Dense(Var),
}

fn check_finite(tape: &Tape, v: Var, what: &str) -> Result<Var> {
    if !tape.value(v).is_finite() {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(v)
}

/// The GIN neighbourhood sum `(1 + eps) h + A h`.
pub fn aggregate(tape: &mut Tape, h: Var, a_hat: Var, eps: Var) -> Result<Var> {
    let scaled = tape.one_plus_scale(h, eps)?;
    let neigh = tape.matmul(a_hat, h)?;
    tape.add(scaled, neigh)
}

/// One GIN layer. Its tensors are recorded on the tape under ids
/// `param_base .. param_base + 5`.
pub fn gin_layer_forward(
    tape: &mut Tape,
    layer: &GinLayer,
    param_base: usize,
    input: LayerInput,
    a_hat: Var,
) -> Result<Var> {
    let n = tape.value(a_hat).rows();
    if tape.value(a_hat).shape() != (n, n) {
        return Err(Error::ShapeMismatch {
            op: "gin_layer_forward",
            left: tape.value(a_hat).shape(),
            right: (n, n),
        });
    }
    let [eps, w1, b1, w2, b2] = layer.tensors();
    let eps = tape.param(param_base, eps.clone());
    let w1 = tape.param(param_base + 1, w1.clone());
    let b1 = tape.param(param_base + 2, b1.clone());
    let w2 = tape.param(param_base + 3, w2.clone());
    let b2 = tape.param(param_base + 4, b2.clone());

    let pre = match input {
        LayerInput::OneHot => {
            if layer.input_dim() != n {
                return Err(Error::ShapeMismatch {
                    op: "gin_layer_forward (one-hot)",
                    left: (n, n),
                    right: layer.w1.shape(),
                });
            }
            // ((1+eps) I + A) W1 == (1+eps) W1 + A W1
            aggregate(tape, w1, a_hat, eps)?
        }
        LayerInput::Dense(h) => {
            let agg = aggregate(tape, h, a_hat, eps)?;
            tape.matmul(agg, w1)?
        }
    };
    let pre = tape.add_row(pre, b1)?;
    let act = tape.relu(pre);
    let out = tape.matmul(act, w2)?;
    let out = tape.add_row(out, b2)?;
    check_finite(tape, out, "GIN layer output")
}

/// Full encoder with one-hot features: `H = GIN(A, I)`.
pub fn gin_forward(tape: &mut Tape, model: &GinModel, a_hat: Var) -> Result<Var> {
    let mut input = LayerInput::OneHot;
    let mut out = None;
    for (l, layer) in model.layers().iter().enumerate() {
        let h = gin_layer_forward(tape, layer, l * PARAMS_PER_LAYER, input, a_hat)?;
        input = LayerInput::Dense(h);
        out = Some(h);
    }
    Ok(out.expect("model has at least one layer"))
}

/// `P = sigmoid(H Hᵀ)`.
pub fn decode_probabilities(tape: &mut Tape, h: Var) -> Result<Var> {
    if !tape.value(h).is_finite() {
        return Err(Error::NonFinite("embeddings".into()));
    }
    let logits = tape.gram(h);
    let p = tape.sigmoid(logits);
    check_finite(tape, p, "decoded probabilities")
}

/// Mean clamped cross-entropy over the observed pairs `i < j < n_obs`.
pub fn bce_loss_observed(tape: &mut Tape, p: Var, observed: &Graph) -> Result<Var> {
    tape.bce_block(p, &observed.adjacency_matrix())
}

/// Untaped forward pass returning `(H, P)`.
pub fn encode_decode(model: &GinModel, a_hat: &Matrix) -> Result<(Matrix, Matrix)> {
    let mut tape = Tape::new();
    let a = tape.constant(a_hat.clone());
    let h = gin_forward(&mut tape, model, a)?;
    let p = decode_probabilities(&mut tape, h)?;
    Ok((tape.value(h).clone(), tape.value(p).clone()))
}
