use serde::{Deserialize, Serialize};

use super::lap::linear_assignment;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;

/// Largest unobserved block `brute_force_align` accepts.
pub const MAX_BRUTE_FORCE: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatcherConfig {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            max_iters: 50,
            tol: 1e-6,
        }
    }
}

/// Two symmetric zero-diagonal matrices whose first `n_obs` indices are in
/// known correspondence.
#[derive(Clone, Debug)]
pub struct SeededMatchProblem {
    a_true: Matrix,
    a_pred: Matrix,
    n_obs: usize,
}

impl SeededMatchProblem {
    pub fn new(a_true: Matrix, a_pred: Matrix, n_obs: usize) -> Result<Self> {
        let n = a_true.rows();
        for (name, m) in [("a_true", &a_true), ("a_pred", &a_pred)] {
            if m.shape() != (n, n) {
                return Err(Error::ShapeMismatch {
                    op: "SeededMatchProblem::new",
                    left: a_true.shape(),
                    right: m.shape(),
                });
            }
            if !m.is_finite() || !m.is_symmetric() || (0..n).any(|i| m[(i, i)] != 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite, symmetric, with zero diagonal"
                )));
            }
        }
        if n_obs >= n {
            return Err(Error::InvalidParameter(format!(
                "seed count {n_obs} leaves no unobserved nodes among {n}"
            )));
        }
        Ok(SeededMatchProblem {
            a_true,
            a_pred,
            n_obs,
        })
    }

    /// Builds the problem from two graphs on the same node count.
    pub fn from_graphs(truth: &Graph, pred: &Graph, n_obs: usize) -> Result<Self> {
        Self::new(truth.adjacency_matrix(), pred.adjacency_matrix(), n_obs)
    }

    pub fn a_true(&self) -> &Matrix {
        &self.a_true
    }

    pub fn a_pred(&self) -> &Matrix {
        &self.a_pred
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n(&self) -> usize {
        self.a_true.rows()
    }

    pub fn n_miss(&self) -> usize {
        self.n() - self.n_obs
    }

    /// Same problem with the roles of the two matrices exchanged.
    pub fn swapped(&self) -> Self {
        SeededMatchProblem {
            a_true: self.a_pred.clone(),
            a_pred: self.a_true.clone(),
            n_obs: self.n_obs,
        }
    }
}

/// Outcome of an alignment.
///
/// `perm[k] = t` sends predicted node `n_obs + k` to true node `n_obs + t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub perm: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    /// Relaxed objective after each Frank–Wolfe step, starting from the
    /// barycenter. Empty for exact search.
    #[serde(default)]
    pub relaxed_trace: Vec<f64>,
}

impl MatchResult {
    /// Fraction of unobserved nodes sent to `planted[k]`.
    pub fn accuracy(&self, planted: &[usize]) -> f64 {
        let hits = self.perm.iter().zip(planted).filter(|(a, b)| a == b).count();
        hits as f64 / self.perm.len().max(1) as f64
    }
}

fn check_perm(perm: &[usize], m: usize) -> Result<()> {
    if perm.len() != m {
        return Err(Error::InvalidPermutation(format!(
            "expected {m} entries, got {}",
            perm.len()
        )));
    }
    let mut seen = vec![false; m];
    for &t in perm {
        if t >= m || std::mem::replace(&mut seen[t], true) {
            return Err(Error::InvalidPermutation(format!("{perm:?} is not a bijection on 0..{m}")));
        }
    }
    Ok(())
}

/// Full-index map from true node to the predicted node that lands on it.
fn inverse_full(perm: &[usize], n_obs: usize) -> Vec<usize> {
    let mut inv: Vec<usize> = (0..n_obs + perm.len()).collect();
    for (k, &t) in perm.iter().enumerate() {
        inv[n_obs + t] = n_obs + k;
    }
    inv
}

/// Squared error over pairs touching an unobserved index, with `inv` mapping
/// true indices to predicted ones.
fn unobserved_error(prob: &SeededMatchProblem, inv: &[usize]) -> f64 {
    let (a, b, n_obs, n) = (&prob.a_true, &prob.a_pred, prob.n_obs, prob.n());
    let mut s = 0.0;
    for x in n_obs..n {
        for y in 0..n {
            let d = a[(x, y)] - b[(inv[x], inv[y])];
            // Pairs with both ends unobserved appear twice in the loop; pairs
            // with one end observed need doubling for the mirrored entry.
            s += if y < n_obs { 2.0 * d * d } else { d * d };
        }
    }
    s
}

fn seed_error(prob: &SeededMatchProblem) -> f64 {
    let mut s = 0.0;
    for x in 0..prob.n_obs {
        for y in 0..prob.n_obs {
            let d = prob.a_true[(x, y)] - prob.a_pred[(x, y)];
            s += d * d;
        }
    }
    s
}

/// `||A - P Â Pᵀ||_F²` where `P` fixes the seeds and applies `perm`.
pub fn qap_objective(prob: &SeededMatchProblem, perm: &[usize]) -> Result<f64> {
    check_perm(perm, prob.n_miss())?;
    Ok(seed_error(prob) + unobserved_error(prob, &inverse_full(perm, prob.n_obs)))
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Exact minimiser over all permutations of the unobserved block, scanned in
/// lexicographic order so the smallest optimal permutation wins ties.
pub fn brute_force_align(prob: &SeededMatchProblem) -> Result<MatchResult> {
    let m = prob.n_miss();
    if m > MAX_BRUTE_FORCE {
        return Err(Error::TooLarge(format!(
            "exhaustive alignment of {m} nodes (limit {MAX_BRUTE_FORCE})"
        )));
    }
    let base = seed_error(prob);
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = (f64::INFINITY, perm.clone());
    let mut count = 0;
    loop {
        count += 1;
        let value = base + unobserved_error(prob, &inverse_full(&perm, prob.n_obs));
        if value < best.0 {
            best = (value, perm.clone());
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(MatchResult {
        perm: best.1,
        objective: best.0,
        iterations: count,
        relaxed_trace: Vec::new(),
    })
}

/// Blocks of the trace objective. With `Q` the soft matching (rows: true
/// unobserved, columns: predicted unobserved), minimising the Frobenius error
/// is maximising `f(Q) = 2<A21, Q B21> + <A22, Q B22 Qᵀ>`.
struct Blocks {
    /// `A21 B21ᵀ`.
    cross: Matrix,
    a22: Matrix,
    b22: Matrix,
    /// Squared norms of everything but the seed block, used to report `f` as a
    /// Frobenius-style error.
    offset: f64,
}

impl Blocks {
    fn new(prob: &SeededMatchProblem) -> Result<Self> {
        let (n_obs, m) = (prob.n_obs, prob.n_miss());
        let sub = |x: &Matrix, r0: usize, c0: usize, r: usize, c: usize| {
            Matrix::from_fn(r, c, |i, j| x[(r0 + i, c0 + j)])
        };
        let a21 = sub(&prob.a_true, n_obs, 0, m, n_obs);
        let b21 = sub(&prob.a_pred, n_obs, 0, m, n_obs);
        let a22 = sub(&prob.a_true, n_obs, n_obs, m, m);
        let b22 = sub(&prob.a_pred, n_obs, n_obs, m, m);
        let sq = |x: &Matrix| x.data().iter().map(|v| v * v).sum::<f64>();
        let offset = seed_error(prob) + 2.0 * (sq(&a21) + sq(&b21)) + sq(&a22) + sq(&b22);
        Ok(Blocks {
            cross: a21.matmul_t(&b21)?,
            a22,
            b22,
            offset,
        })
    }

    fn value(&self, q: &Matrix) -> Result<f64> {
        let qbq = q.matmul(&self.b22)?.matmul_t(q)?;
        Ok(2.0 * self.cross.dot(q)? + self.a22.dot(&qbq)?)
    }

    fn gradient(&self, q: &Matrix) -> Result<Matrix> {
        let mut g = self.a22.matmul(q)?.matmul(&self.b22)?;
        g.add_scaled(&self.cross, 1.0)?;
        Ok(g.scale(2.0))
    }

    fn relaxed_error(&self, f: f64) -> f64 {
        self.offset - 2.0 * f
    }
}

fn assignment_to_matrix(assign: &[usize]) -> Matrix {
    let mut r = Matrix::zeros(assign.len(), assign.len());
    for (row, &col) in assign.iter().enumerate() {
        r[(row, col)] = 1.0;
    }
    r
}

/// Seeded graph matching by Frank–Wolfe on the doubly stochastic relaxation.
///
/// Starts at the barycenter, moves toward the permutation vertex maximising
/// the linearised objective with an exact line search, and stops when the
/// relative change drops below `tol` or after `max_iters` steps. The final
/// soft matching is rounded with one more assignment.
pub fn sgm_align(prob: &SeededMatchProblem, max_iters: usize, tol: f64) -> Result<MatchResult> {
    let m = prob.n_miss();
    let blocks = Blocks::new(prob)?;
    let mut q = Matrix::filled(m, m, 1.0 / m as f64);
    let mut f = blocks.value(&q)?;
    let mut trace = vec![blocks.relaxed_error(f)];
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let grad = blocks.gradient(&q)?;
        let vertex = assignment_to_matrix(&linear_assignment(&grad.scale(-1.0))?);
        let dir = vertex.sub(&q)?;
        // f(Q + tD) = f(Q) + t·lin + t²·quad
        let lin = grad.dot(&dir)?;
        let quad = blocks.a22.dot(&dir.matmul(&blocks.b22)?.matmul_t(&dir)?)?;
        let step = if quad < 0.0 {
            (-lin / (2.0 * quad)).clamp(0.0, 1.0)
        } else if lin + quad > 0.0 {
            1.0
        } else {
            0.0
        };
        if step == 0.0 {
            break;
        }
        q.add_scaled(&dir, step)?;
        let f_new = blocks.value(&q)?;
        let change = (f_new - f).abs() / f.abs().max(1e-12);
        f = f_new;
        trace.push(blocks.relaxed_error(f));
        if change < tol {
            break;
        }
    }
    let rounded = linear_assignment(&q.scale(-1.0))?;
    // rounded[true_k] = pred_k; invert to index by predicted node.
    let mut perm = vec![0; m];
    for (t, &p) in rounded.iter().enumerate() {
        perm[p] = t;
    }
    let objective = qap_objective(prob, &perm)?;
    Ok(MatchResult {
        perm,
        objective,
        iterations,
        relaxed_trace: trace,
    })
}

/// Moves predicted node `n_obs + k` to `n_obs + perm[k]` in both rows and
/// columns; the observed block is copied unchanged.
pub fn apply_alignment(p: &Matrix, n_obs: usize, perm: &[usize]) -> Result<Matrix> {
    let n = p.rows();
    if p.cols() != n || n_obs + perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "{} unobserved entries for a {}x{} matrix with {n_obs} seeds",
            perm.len(),
            p.rows(),
            p.cols()
        )));
    }
    check_perm(perm, perm.len())?;
    Ok(p.permuted(&inverse_full(perm, n_obs)))
}

/// Binary adjacency with the observed block of `observed`. The
/// observed-unobserved and unobserved-unobserved regions are thresholded
/// separately: each keeps its highest-scoring pairs, as many as make it as
/// dense as the observed block. Ties go to the pair enumerated first (column
/// by column).
pub fn binarize_to_density(p: &Matrix, observed: &Graph) -> Result<Matrix> {
    let n = p.rows();
    let n_obs = observed.n();
    if p.cols() != n || n_obs > n {
        return Err(Error::ShapeMismatch {
            op: "binarize_to_density",
            left: p.shape(),
            right: (n_obs, n_obs),
        });
    }
    let mut out = Matrix::zeros(n, n);
    for (i, j) in observed.edges() {
        out[(i, j)] = 1.0;
        out[(j, i)] = 1.0;
    }
    let regions: [Vec<(usize, usize)>; 2] = [
        (n_obs..n).flat_map(|j| (0..n_obs).map(move |i| (i, j))).collect(),
        (n_obs..n).flat_map(|j| (n_obs..j).map(move |i| (i, j))).collect(),
    ];
    for mut pairs in regions {
        let k = (observed.density() * pairs.len() as f64).round() as usize;
        pairs.sort_by(|a, b| p[*b].total_cmp(&p[*a]));
        for &(i, j) in pairs.iter().take(k) {
            out[(i, j)] = 1.0;
            out[(j, i)] = 1.0;
        }
    }
    Ok(out)
}
