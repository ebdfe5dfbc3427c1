//! Iterative completion: encode the working adjacency, decode edge
//! probabilities, fit the observed block, and periodically resample the
//! unobserved (inverted-L) region from density-matched probabilities.
//!
//! RNG consumption order for one run: model initialization, then one
//! Bernoulli draw per inverted-L pair at each sampling event (pairs visited
//! column by column: `j` from `n_obs` to `n - 1`, `i` from `0` to `j - 1`).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, PartialGraph};
use crate::matrix::Matrix;
use crate::nn::{
    adam_step, bce_loss_observed, decode_probabilities, encode_decode, gin_forward, AdamState,
    GinModel, GinShape, Tape,
};

/// Denominators below this make the scale factor zero.
pub const GAMMA_DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompleterConfig {
    pub epochs: usize,
    /// Epochs before the first sampling event.
    pub warmup: usize,
    /// Epochs between sampling events.
    pub sample_interval: usize,
    pub lr: f64,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
}

impl Default for CompleterConfig {
    fn default() -> Self {
        let shape = GinShape::default();
        Self {
            epochs: 1000,
            warmup: 200,
            sample_interval: 10,
            lr: 7e-4,
            num_layers: shape.num_layers,
            hidden_dim: shape.hidden_dim,
            embed_dim: shape.embed_dim,
        }
    }
}

impl CompleterConfig {
    pub fn shape(&self) -> GinShape {
        GinShape {
            num_layers: self.num_layers,
            hidden_dim: self.hidden_dim,
            embed_dim: self.embed_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.warmup >= self.epochs {
            return Err(Error::InvalidParameter(format!(
                "warmup ({}) must be smaller than epochs ({})",
                self.warmup, self.epochs
            )));
        }
        if self.sample_interval == 0 {
            return Err(Error::InvalidParameter("sample_interval must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning rate {} must be positive", self.lr)));
        }
        if self.num_layers == 0 || self.hidden_dim == 0 || self.embed_dim == 0 {
            return Err(Error::InvalidParameter("layer widths must be positive".into()));
        }
        Ok(())
    }

    /// Whether the epoch numbered `epoch` (0-based) ends with a sampling event.
    pub fn samples_at(&self, epoch: usize) -> bool {
        epoch >= self.warmup && (epoch - self.warmup) % self.sample_interval == 0
    }
}

/// Mutable state of one completion run.
#[derive(Clone, Debug)]
pub struct CompleterState {
    config: CompleterConfig,
    n_obs: usize,
    a_hat: Matrix,
    model: GinModel,
    adam: AdamState,
    epoch: usize,
    losses: Vec<f64>,
    gammas: Vec<GammaEvent>,
}

/// One sampling event: the epoch it happened after, the scale factor used and
/// the number of inverted-L edges drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEvent {
    pub epoch: usize,
    pub gamma: f64,
    pub sampled_edges: usize,
}

impl CompleterState {
    pub fn a_hat(&self) -> &Matrix {
        &self.a_hat
    }

    pub fn model(&self) -> &GinModel {
        &self.model
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn gammas(&self) -> &[GammaEvent] {
        &self.gammas
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n(&self) -> usize {
        self.a_hat.rows()
    }

    /// Number of edges currently present in the inverted-L region.
    pub fn sampled_edge_count(&self) -> usize {
        let n = self.n();
        (self.n_obs..n)
            .map(|j| (0..j).filter(|&i| self.a_hat[(i, j)] != 0.0).count())
            .sum()
    }
}

/// Embeds the observed block in an otherwise empty `n x n` adjacency and
/// builds a fresh encoder with `n` one-hot inputs.
pub fn init_state<R: Rng + ?Sized>(
    pg: &PartialGraph,
    cfg: &CompleterConfig,
    rng: &mut R,
) -> Result<CompleterState> {
    cfg.validate()?;
    let n = pg.n();
    let mut a_hat = Matrix::zeros(n, n);
    for (i, j) in pg.observed().edges() {
        a_hat[(i, j)] = 1.0;
        a_hat[(j, i)] = 1.0;
    }
    let model = GinModel::new(n, cfg.shape(), rng)?;
    Ok(CompleterState {
        config: cfg.clone(),
        n_obs: pg.n_obs(),
        a_hat,
        model,
        adam: AdamState::new(),
        epoch: 0,
        losses: Vec::new(),
        gammas: Vec::new(),
    })
}

/// Probability scale factor matching the expected inverted-L density to the
/// observed density:
///
/// `gamma = (L / O) * E_obs / sum_L P`
///
/// where `O = n_obs (n_obs - 1)` and `L = n (n - 1) - O` count ordered
/// off-diagonal entries of the observed block and the inverted-L region,
/// `E_obs` is the number of observed edges, and `sum_L P` sums `P` over
/// unordered inverted-L pairs (equivalently, all pairs minus observed pairs).
/// All sums skip the diagonal. Returns 0 when the denominator vanishes.
pub fn compute_gamma(p: &Matrix, a_obs: &Graph, n: usize, n_obs: usize) -> f64 {
    debug_assert_eq!(p.shape(), (n, n));
    debug_assert_eq!(a_obs.n(), n_obs);
    let sum_l: f64 = (n_obs..n).map(|j| (0..j).map(|i| p[(i, j)]).sum::<f64>()).sum();
    if sum_l < GAMMA_DENOMINATOR_FLOOR || n_obs < 2 {
        return 0.0;
    }
    let obs_entries = (n_obs * (n_obs - 1)) as f64;
    let l_entries = (n * (n - 1)) as f64 - obs_entries;
    (l_entries / obs_entries) * a_obs.edge_count() as f64 / sum_l
}

/// Redraws every inverted-L pair as `Bernoulli(min(1, gamma * P[i][j]))`.
/// The observed block is left untouched. Returns the number of edges drawn.
pub fn sample_inverted_l<R: Rng + ?Sized>(
    state: &mut CompleterState,
    p: &Matrix,
    gamma: f64,
    rng: &mut R,
) -> usize {
    let n = state.n();
    let mut drawn = 0;
    for j in state.n_obs..n {
        for i in 0..j {
            let prob = (gamma * p[(i, j)]).clamp(0.0, 1.0);
            let edge = rng.random::<f64>() < prob;
            let v = if edge { 1.0 } else { 0.0 };
            drawn += edge as usize;
            state.a_hat[(i, j)] = v;
            state.a_hat[(j, i)] = v;
        }
    }
    drawn
}

/// One optimisation step on the observed block, followed by a sampling event
/// when the schedule calls for one. Returns the loss before the update.
pub fn train_epoch<R: Rng + ?Sized>(
    state: &mut CompleterState,
    pg: &PartialGraph,
    rng: &mut R,
) -> Result<f64> {
    let mut tape = Tape::new();
    let a = tape.constant(state.a_hat.clone());
    let h = gin_forward(&mut tape, &state.model, a)?;
    let p = decode_probabilities(&mut tape, h)?;
    let loss = bce_loss_observed(&mut tape, p, pg.observed())?;
    let loss_value = tape.value(loss)[(0, 0)];
    if !loss_value.is_finite() {
        return Err(Error::NonFinite(format!("loss at epoch {}", state.epoch)));
    }
    let grads = tape.backward(loss)?;
    adam_step(&mut state.model.params_mut(), &grads, &mut state.adam, state.config.lr);

    if state.config.samples_at(state.epoch) {
        let pv = tape.value(p);
        let gamma = compute_gamma(pv, pg.observed(), state.n(), state.n_obs);
        let sampled_edges = sample_inverted_l(state, pv, gamma, rng);
        state.gammas.push(GammaEvent {
            epoch: state.epoch,
            gamma,
            sampled_edges,
        });
    }
    state.epoch += 1;
    state.losses.push(loss_value);
    Ok(loss_value)
}

/// Output of [`complete`].
#[derive(Clone, Debug)]
pub struct CompletionResult {
    /// Edge probabilities from the trained encoder on the final working
    /// adjacency.
    pub p_final: Matrix,
    /// Final working adjacency: the observed block plus the last sample.
    pub a_sampled: Graph,
    pub loss_trace: Vec<f64>,
    pub gamma_trace: Vec<GammaEvent>,
    pub model: GinModel,
}

/// Runs the full schedule.
pub fn complete<R: Rng + ?Sized>(
    pg: &PartialGraph,
    cfg: &CompleterConfig,
    rng: &mut R,
) -> Result<CompletionResult> {
    let mut state = init_state(pg, cfg, rng)?;
    while state.epoch < cfg.epochs {
        train_epoch(&mut state, pg, rng)?;
    }
    let (_, p_final) = encode_decode(&state.model, &state.a_hat)?;
    Ok(CompletionResult {
        p_final,
        a_sampled: Graph::from_matrix(&state.a_hat)?,
        loss_trace: state.losses,
        gamma_trace: state.gammas,
        model: state.model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::graph::hide_nodes;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn small_config() -> CompleterConfig {
        CompleterConfig {
            epochs: 30,
            warmup: 10,
            sample_interval: 5,
            hidden_dim: 8,
            embed_dim: 4,
            ..CompleterConfig::default()
        }
    }

    fn path4() -> PartialGraph {
        PartialGraph::new(Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap(), 1).unwrap()
    }

    fn observed_block_intact(state: &CompleterState, pg: &PartialGraph) -> bool {
        let a = state.a_hat();
        (0..pg.n_obs()).all(|i| {
            (0..pg.n_obs()).all(|j| (a[(i, j)] == 1.0) == pg.observed().has_edge(i, j))
        })
    }

    #[test]
    fn config_validation() {
        assert!(CompleterConfig::default().validate().is_ok());
        let bad = CompleterConfig { warmup: 1000, ..CompleterConfig::default() };
        assert!(bad.validate().is_err());
        let bad = CompleterConfig { sample_interval: 0, ..CompleterConfig::default() };
        assert!(bad.validate().is_err());
        let cfg: CompleterConfig = serde_json::from_str(r#"{"epochs": 100, "warmup": 10}"#).unwrap();
        assert_eq!(cfg.sample_interval, CompleterConfig::default().sample_interval);
        assert!(serde_json::from_str::<CompleterConfig>(r#"{"epoch": 100}"#).is_err());
    }

    #[test]
    fn init_embeds_observed_block() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let pg = PartialGraph::new(g, 2).unwrap();
        let state = init_state(&pg, &small_config(), &mut rng(0)).unwrap();
        let a = state.a_hat();
        assert_eq!(a.shape(), (5, 5));
        for k in 3..5 {
            assert!((0..5).all(|x| a[(k, x)] == 0.0 && a[(x, k)] == 0.0));
        }
        assert!(observed_block_intact(&state, &pg));
        assert_eq!(state.model().input_dim(), 5);
    }

    #[test]
    fn init_is_deterministic() {
        let pg = path4();
        let a = init_state(&pg, &small_config(), &mut rng(3)).unwrap();
        let b = init_state(&pg, &small_config(), &mut rng(3)).unwrap();
        assert_eq!(a.model(), b.model());
    }

    #[test]
    fn gamma_for_uniform_probabilities_matches_density() {
        let mut r = rng(4);
        for _ in 0..10 {
            let n_obs = r.random_range(3..12);
            let n = n_obs + r.random_range(1..6);
            let g = generators::gen_ws(n_obs + n_obs % 2 + 4, 2, 0.3, &mut r).unwrap();
            let obs = g.induced(&(0..n_obs).collect::<Vec<_>>()).unwrap();
            if obs.edge_count() == 0 {
                continue;
            }
            let c = r.random_range(0.05..0.9);
            let p = Matrix::filled(n, n, c);
            let gamma = compute_gamma(&p, &obs, n, n_obs);
            let l_pairs = (n * (n - 1) - n_obs * (n_obs - 1)) / 2;
            let expected_edges = gamma * c * l_pairs as f64;
            let density_target = obs.density() * l_pairs as f64;
            assert!((expected_edges - density_target).abs() < 1e-9 * density_target.max(1.0));
        }
    }

    #[test]
    fn gamma_degenerate_cases() {
        let p = Matrix::filled(5, 5, 0.4);
        assert_eq!(compute_gamma(&p, &Graph::empty(3), 5, 3), 0.0);
        let obs = Graph::from_edges(3, [(0, 1)]).unwrap();
        let mut p = Matrix::filled(5, 5, 0.4);
        for j in 3..5 {
            for i in 0..5 {
                p[(i, j)] = 0.0;
                p[(j, i)] = 0.0;
            }
        }
        assert_eq!(compute_gamma(&p, &obs, 5, 3), 0.0);
    }

    #[test]
    fn gamma_matches_hand_computation() {
        let mut r = rng(5);
        let n = 10;
        let n_obs = 6;
        let pairs: Vec<_> = (0..n_obs)
            .flat_map(|i| ((i + 1)..n_obs).map(move |j| (i, j)))
            .collect::<Vec<_>>()
            .into_iter()
            .filter(|_| r.random::<f64>() < 0.5)
            .collect();
        let obs = Graph::from_edges(n_obs, pairs).unwrap();
        let raw = Matrix::from_fn(n, n, |_, _| r.random_range(0.0..1.0));
        let p = Matrix::from_fn(n, n, |i, j| if i == j { raw[(i, i)] } else { raw[(i.min(j), i.max(j))] });
        // Sums over ordered off-diagonal entries of each region.
        let mut sum_a = 0.0;
        let mut sum_all = 0.0;
        let mut sum_obs = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                sum_all += p[(i, j)];
                if i < n_obs && j < n_obs {
                    sum_obs += p[(i, j)];
                    sum_a += if obs.has_edge(i, j) { 1.0 } else { 0.0 };
                }
            }
        }
        let entries_all = (n * n - n) as f64;
        let entries_obs = (n_obs * n_obs - n_obs) as f64;
        let hand = (entries_all - entries_obs) / entries_obs * sum_a / (sum_all - sum_obs);
        let gamma = compute_gamma(&p, &obs, n, n_obs);
        assert!((gamma - hand).abs() < 1e-12 * hand, "{gamma} vs {hand}");
    }

    #[test]
    fn sampling_extremes() {
        let pg = path4();
        let mut state = init_state(&pg, &small_config(), &mut rng(0)).unwrap();
        let p = Matrix::filled(5, 5, 0.5);
        assert_eq!(sample_inverted_l(&mut state, &p, 0.0, &mut rng(1)), 0);
        assert_eq!(state.sampled_edge_count(), 0);
        assert_eq!(sample_inverted_l(&mut state, &p, 2.0, &mut rng(1)), 4);
        assert_eq!(state.sampled_edge_count(), 4);
        assert!(state.a_hat().is_symmetric());
        assert!(observed_block_intact(&state, &pg));
        // Full resample: gamma 0 clears the earlier draw.
        sample_inverted_l(&mut state, &p, 0.0, &mut rng(1));
        assert_eq!(state.sampled_edge_count(), 0);
    }

    #[test]
    fn sampling_count_is_binomial() {
        // 1000 inverted-L pairs: n_obs = 2, n_miss chosen so C(n,2) - 1 = 1000
        // is impossible exactly, so use n = 46 (C(46,2) - C(n_obs,2) = 1035 - 1).
        let obs = Graph::from_edges(20, [(0, 1)]).unwrap();
        let pg = PartialGraph::new(obs, 32).unwrap();
        let n = pg.n();
        let l_pairs = n * (n - 1) / 2 - 20 * 19 / 2;
        let mut state = init_state(&pg, &small_config(), &mut rng(0)).unwrap();
        let p = Matrix::filled(n, n, 0.3);
        let mean = 0.3 * l_pairs as f64;
        let sd = (l_pairs as f64 * 0.3 * 0.7).sqrt();
        let mut r = rng(9);
        for _ in 0..20 {
            let k = sample_inverted_l(&mut state, &p, 1.0, &mut r) as f64;
            assert!((k - mean).abs() < 3.5 * sd, "{k} vs {mean}");
        }
    }

    #[test]
    fn warmup_gates_sampling_and_block_is_immutable() {
        let pg = path4();
        let cfg = small_config();
        let mut state = init_state(&pg, &cfg, &mut rng(0)).unwrap();
        let mut r = rng(1);
        for epoch in 0..cfg.epochs {
            train_epoch(&mut state, &pg, &mut r).unwrap();
            if epoch < cfg.warmup {
                assert_eq!(state.sampled_edge_count(), 0);
                assert!(state.gammas().is_empty());
            }
            assert!(observed_block_intact(&state, &pg));
            assert!(state.a_hat().is_symmetric());
            assert!((0..5).all(|i| state.a_hat()[(i, i)] == 0.0));
        }
        let events: Vec<usize> = state.gammas().iter().map(|e| e.epoch).collect();
        assert_eq!(events, vec![10, 15, 20, 25]);
        assert!(state.gammas().iter().all(|e| e.gamma >= 0.0));
    }

    #[test]
    fn complete_shapes_and_determinism() {
        let pg = path4();
        let cfg = small_config();
        let a = complete(&pg, &cfg, &mut rng(2)).unwrap();
        let b = complete(&pg, &cfg, &mut rng(2)).unwrap();
        assert_eq!(a.p_final.shape(), (5, 5));
        assert_eq!(a.a_sampled.n(), 5);
        assert!(a.p_final.is_symmetric());
        assert!(a.p_final.data().iter().all(|&x| x > 0.0 && x < 1.0));
        assert_eq!(a.p_final, b.p_final);
        assert_eq!(a.a_sampled, b.a_sampled);
        assert_eq!(a.loss_trace, b.loss_trace);
        assert_eq!(a.loss_trace.len(), cfg.epochs);
    }

    #[test]
    fn loss_decreases_on_small_world() {
        for seed in 0..5 {
            let mut r = rng(seed);
            let g = generators::gen_ws(64, 4, 0.1, &mut r).unwrap();
            let h = hide_nodes(&g, 16, &mut r).unwrap();
            let cfg = CompleterConfig { epochs: 100, warmup: 50, lr: 1e-2, ..CompleterConfig::default() };
            let out = complete(&h.partial, &cfg, &mut r).unwrap();
            let first = out.loss_trace[0];
            let last = *out.loss_trace.last().unwrap();
            assert!(last < 0.5 * first, "seed {seed}: {first} -> {last}");
        }
    }

    #[test]
    fn training_raises_probabilities_on_observed_edges() {
        let k8 = Graph::from_edges(8, (0..8).flat_map(|i| ((i + 1)..8).map(move |j| (i, j)))).unwrap();
        let pg = PartialGraph::new(k8, 2).unwrap();
        let cfg = CompleterConfig {
            epochs: 150,
            warmup: 100,
            sample_interval: 10,
            lr: 1e-2,
            hidden_dim: 16,
            embed_dim: 8,
            ..CompleterConfig::default()
        };
        let mean_obs = |p: &Matrix| {
            let s: f64 = (0..8).flat_map(|i| ((i + 1)..8).map(move |j| (i, j))).map(|(i, j)| p[(i, j)]).sum();
            s / 28.0
        };
        let out = complete(&pg, &cfg, &mut rng(3)).unwrap();
        assert!(mean_obs(&out.p_final) > 0.9);
        // Baseline: random embeddings of the same width score about 0.5.
        let mut r = rng(4);
        let h = Matrix::from_fn(10, 8, |_, _| r.random_range(-1.0..1.0) / 8f64.sqrt());
        let p_rand = h.gram().map(crate::nn::sigmoid);
        assert!(mean_obs(&out.p_final) > mean_obs(&p_rand));
        assert!(*out.loss_trace.last().unwrap() < 1e-3);
    }
}
