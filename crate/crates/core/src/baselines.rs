//! Reference completions: degree-product preferential attachment extended to
//! unobserved nodes, and a decoder fed random embeddings.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::PartialGraph;
use crate::matrix::Matrix;
use crate::nn::{decode_probabilities, Tape};

/// Which baseline produced a score matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Pa,
    RandomDe,
}

#[derive(Clone, Debug)]
pub struct BaselineOutput {
    /// Symmetric `n x n` scores in `[0, 1]`.
    pub p: Matrix,
    pub kind: BaselineKind,
    /// Set when every score is zero because no observed node has an edge.
    pub degenerate: bool,
}

/// Preferential attachment scores for a completion instance.
///
/// Observed pairs score `D(x) D(y)`, observed–unobserved pairs score the
/// observed endpoint's degree, and unobserved–unobserved pairs score 0. All
/// scores are divided by the largest one. Degrees are observed degrees.
pub fn pa_complete(pg: &PartialGraph) -> BaselineOutput {
    let n = pg.n();
    let n_obs = pg.n_obs();
    let deg: Vec<f64> = pg.observed().degrees().into_iter().map(|d| d as f64).collect();
    let score = |i: usize, j: usize| -> f64 {
        match (i < n_obs, j < n_obs) {
            _ if i == j => 0.0,
            (true, true) => deg[i] * deg[j],
            (true, false) => deg[i],
            (false, true) => deg[j],
            (false, false) => 0.0,
        }
    };
    let mut p = Matrix::from_fn(n, n, score);
    let max = p.data().iter().copied().fold(0.0, f64::max);
    let degenerate = max == 0.0;
    if !degenerate {
        p = p.map(|x| x / max);
    }
    BaselineOutput {
        p,
        kind: BaselineKind::Pa,
        degenerate,
    }
}

/// Decodes i.i.d. Gaussian embeddings scaled by `1/sqrt(d)`; no training.
pub fn random_decoder_complete<R: Rng + ?Sized>(
    pg: &PartialGraph,
    d: usize,
    rng: &mut R,
) -> Result<BaselineOutput> {
    if d == 0 {
        return Err(crate::Error::InvalidParameter("embedding width must be positive".into()));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let h = Matrix::from_fn(pg.n(), d, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
    let mut tape = Tape::new();
    let hv = tape.constant(h);
    let p = decode_probabilities(&mut tape, hv)?;
    Ok(BaselineOutput {
        p: tape.value(p).clone(),
        kind: BaselineKind::RandomDe,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn star_scores_by_hand() {
        let star = Graph::from_edges(5, (1..5).map(|i| (0, i))).unwrap();
        let out = pa_complete(&PartialGraph::new(star, 1).unwrap());
        // Largest raw score: hub-leaf 4*1 = hub-unobserved 4.
        assert_eq!(out.p[(0, 5)], 1.0);
        assert_eq!(out.p[(1, 5)], 0.25);
        assert_eq!(out.p[(0, 1)], 1.0);
        assert_eq!(out.p[(1, 2)], 1.0 / 4.0);
        assert_eq!(out.p[(5, 5)], 0.0);
        assert!(!out.degenerate);
    }

    #[test]
    fn pa_matches_score_table() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let pairs: Vec<_> = (0..30)
            .flat_map(|i| ((i + 1)..30).map(move |j| (i, j)))
            .collect::<Vec<_>>()
            .into_iter()
            .filter(|_| r.random::<f64>() < 0.2)
            .collect();
        let g = Graph::from_edges(30, pairs).unwrap();
        let pg = PartialGraph::new(g.clone(), 6).unwrap();
        let out = pa_complete(&pg);
        let mut raw = vec![vec![0.0; 36]; 36];
        let mut max: f64 = 0.0;
        for (i, row) in raw.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                if i == j {
                    continue;
                }
                let di = if i < 30 { g.degree(i).unwrap() as f64 } else { -1.0 };
                let dj = if j < 30 { g.degree(j).unwrap() as f64 } else { -1.0 };
                *cell = match (di >= 0.0, dj >= 0.0) {
                    (true, true) => di * dj,
                    (true, false) => di,
                    (false, true) => dj,
                    (false, false) => 0.0,
                };
                max = max.max(*cell);
            }
        }
        for i in 0..36 {
            for j in 0..36 {
                assert_eq!(out.p[(i, j)], raw[i][j] / max);
            }
        }
        assert_eq!(out.p.data().iter().copied().fold(0.0, f64::max), 1.0);
        assert!(out.p.is_symmetric());
    }

    #[test]
    fn pa_isolated_block_is_degenerate() {
        let out = pa_complete(&PartialGraph::new(Graph::empty(4), 2).unwrap());
        assert!(out.degenerate);
        assert!(out.p.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pa_is_permutation_equivariant() {
        let g = Graph::from_edges(6, [(0, 1), (0, 2), (2, 3), (3, 4), (1, 5), (2, 5)]).unwrap();
        let order = [3, 0, 5, 1, 4, 2];
        let relabeled = g.relabeled(&order).unwrap();
        let a = pa_complete(&PartialGraph::new(g, 2).unwrap());
        let b = pa_complete(&PartialGraph::new(relabeled, 2).unwrap());
        let full_order: Vec<usize> = order.iter().copied().chain([6, 7]).collect();
        assert_eq!(a.p.permuted(&full_order), b.p);
    }

    #[test]
    fn random_decoder_is_deterministic_and_centered() {
        let pg = PartialGraph::new(Graph::from_edges(3, [(0, 1)]).unwrap(), 2).unwrap();
        let a = random_decoder_complete(&pg, 32, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = random_decoder_complete(&pg, 32, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a.p, b.p);
        assert!(a.p.is_symmetric());
        assert!(random_decoder_complete(&pg, 0, &mut ChaCha8Rng::seed_from_u64(5)).is_err());

        // Off-diagonal mean: inner products are symmetric around 0.
        let pg = PartialGraph::new(Graph::from_edges(60, [(0, 1)]).unwrap(), 40).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(6);
        let mut total = 0.0;
        let mut count = 0.0;
        for _ in 0..5 {
            let out = random_decoder_complete(&pg, 32, &mut r).unwrap();
            for i in 0..100 {
                for j in (i + 1)..100 {
                    total += out.p[(i, j)];
                    count += 1.0;
                }
            }
        }
        assert!((total / count - 0.5).abs() < 0.01);
    }
}
