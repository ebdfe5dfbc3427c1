//! Undirected simple graphs, their statistics, edge-list I/O, and the
//! node-hiding corruptor that turns a complete graph into a completion
//! instance.
//!
//! Node relabeling by [`hide_nodes`] keeps observed nodes first, in their
//! original relative order, followed by the hidden nodes in theirs. Every
//! downstream component relies on that layout: the observed block is always
//! the upper-left `n_obs x n_obs` corner of the adjacency matrix.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Undirected simple graph backed by sorted adjacency lists.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edges: usize,
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            edges: 0,
        }
    }

    /// Builds a graph from unordered pairs. Duplicates (in either orientation)
    /// collapse; self-loops and out-of-range endpoints are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::IndexOutOfRange { index: x, len: n });
                }
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut edges = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            edges += list.len();
        }
        Ok(Self {
            adj,
            edges: edges / 2,
        })
    }

    /// Reads a symmetric 0/1 matrix. Entries above 0.5 are edges; only the
    /// upper triangle is consulted.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::ShapeMismatch {
                op: "Graph::from_matrix",
                left: m.shape(),
                right: (m.cols(), m.rows()),
            });
        }
        let n = m.rows();
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        Graph::from_edges(n, edges.filter(|&(i, j)| m[(i, j)] > 0.5))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn degree(&self, v: usize) -> Result<usize> {
        self.adj
            .get(v)
            .map(Vec::len)
            .ok_or(Error::IndexOutOfRange {
                index: v,
                len: self.n(),
            })
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    /// Unordered edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Dense 0/1 adjacency matrix.
    pub fn adjacency_matrix(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(n, n);
        for (i, j) in self.edges() {
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
        }
        m
    }

    /// Subgraph induced on `nodes`, relabeled `0..nodes.len()` in the given
    /// order.
    pub fn induced(&self, nodes: &[usize]) -> Result<Graph> {
        let mut position = vec![usize::MAX; self.n()];
        for (new, &old) in nodes.iter().enumerate() {
            if old >= self.n() {
                return Err(Error::IndexOutOfRange {
                    index: old,
                    len: self.n(),
                });
            }
            position[old] = new;
        }
        let edges = self
            .edges()
            .filter(|&(i, j)| position[i] != usize::MAX && position[j] != usize::MAX)
            .map(|(i, j)| (position[i], position[j]));
        Graph::from_edges(nodes.len(), edges)
    }

    /// Same graph with node `v` renamed to `order.iter().position(v)`, i.e.
    /// `order[new] = old`.
    pub fn relabeled(&self, order: &[usize]) -> Result<Graph> {
        if order.len() != self.n() {
            return Err(Error::InvalidPermutation(format!(
                "expected {} labels, got {}",
                self.n(),
                order.len()
            )));
        }
        let g = self.induced(order)?;
        if g.edge_count() != self.edge_count() {
            return Err(Error::InvalidPermutation("labels are not a bijection".into()));
        }
        Ok(g)
    }

    /// `2m / (n(n-1))`. Graphs with fewer than two nodes have density 0.
    pub fn density(&self) -> f64 {
        let n = self.n() as f64;
        if self.n() < 2 {
            return 0.0;
        }
        2.0 * self.edges as f64 / (n * (n - 1.0))
    }

    /// Number of triangles through `v`.
    fn triangles_at(&self, v: usize) -> usize {
        let nbrs = &self.adj[v];
        let mut count = 0;
        for (a, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[a + 1..] {
                if self.has_edge(x, y) {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn local_clustering(&self, v: usize) -> Result<f64> {
        let d = self.degree(v)?;
        if d < 2 {
            return Ok(0.0);
        }
        let pairs = (d * (d - 1) / 2) as f64;
        Ok(self.triangles_at(v) as f64 / pairs)
    }

    /// Average local clustering coefficient. Nodes of degree 0 or 1 count as
    /// zero rather than being dropped from the average.
    pub fn clustering_coefficient(&self) -> Result<f64> {
        if self.n() == 0 {
            return Err(Error::EmptyInput);
        }
        let total: f64 = (0..self.n())
            .map(|v| self.local_clustering(v))
            .sum::<Result<f64>>()?;
        Ok(total / self.n() as f64)
    }

    pub fn stats(&self) -> Result<GraphStats> {
        Ok(GraphStats {
            nodes: self.n(),
            edges: self.edge_count(),
            density: self.density(),
            clustering: self.clustering_coefficient()?,
        })
    }
}

/// Summary row: node and edge counts, density, average clustering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub density: f64,
    pub clustering: f64,
}

/// Parses a whitespace-separated edge list.
///
/// Blank lines and lines starting with `#` are skipped. Self-loops are
/// dropped, duplicates and reversed pairs collapse, and the node count is one
/// more than the largest index seen.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut pairs = Vec::new();
    let mut max_index = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut next = |what: &str| -> Result<usize> {
            let field = fields.next().ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: format!("missing {what} endpoint"),
            })?;
            field.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad node index {field:?}"),
            })
        };
        let u = next("first")?;
        let v = next("second")?;
        if let Some(extra) = fields.next() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("unexpected trailing field {extra:?}"),
            });
        }
        max_index = Some(max_index.unwrap_or(0).max(u).max(v));
        if u != v {
            pairs.push((u, v));
        }
    }
    let n = max_index.ok_or(Error::EmptyInput)? + 1;
    Graph::from_edges(n, pairs)
}

/// Writes one `i j` line per edge, `i < j`, sorted, newline-terminated.
pub fn save_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    for (i, j) in g.edges() {
        writeln!(out, "{i} {j}").expect("writing to a String cannot fail");
    }
    out
}

/// The observed part of a network plus the number of nodes known to be
/// missing.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialGraph {
    a_obs: Graph,
    n_miss: usize,
}

impl PartialGraph {
    pub fn new(a_obs: Graph, n_miss: usize) -> Result<Self> {
        if a_obs.n() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 observed nodes, got {}",
                a_obs.n()
            )));
        }
        if n_miss < 1 {
            return Err(Error::InvalidParameter("need at least 1 missing node".into()));
        }
        Ok(Self { a_obs, n_miss })
    }

    pub fn observed(&self) -> &Graph {
        &self.a_obs
    }

    pub fn n_obs(&self) -> usize {
        self.a_obs.n()
    }

    pub fn n_miss(&self) -> usize {
        self.n_miss
    }

    /// Total node count `n_obs + n_miss`.
    pub fn n(&self) -> usize {
        self.n_obs() + self.n_miss
    }
}

/// A completion instance together with its ground truth.
#[derive(Clone, Debug)]
pub struct HideResult {
    pub partial: PartialGraph,
    /// The full graph relabeled so observed nodes occupy `0..n_obs`.
    pub truth: Graph,
    /// Original indices of the hidden nodes, in their new order.
    pub hidden_ids: Vec<usize>,
    /// `order[new] = old` for every node.
    pub order: Vec<usize>,
}

/// Hides `count` uniformly chosen nodes of `g`.
pub fn hide_nodes<R: Rng + ?Sized>(g: &Graph, count: usize, rng: &mut R) -> Result<HideResult> {
    let n = g.n();
    if count < 1 || count + 2 > n {
        return Err(Error::InvalidParameter(format!(
            "cannot hide {count} of {n} nodes (need 1 <= count <= n - 2)"
        )));
    }
    let mut hidden = rand::seq::index::sample(rng, n, count).into_vec();
    hidden.sort_unstable();
    let mut is_hidden = vec![false; n];
    for &h in &hidden {
        is_hidden[h] = true;
    }
    let mut order: Vec<usize> = (0..n).filter(|&v| !is_hidden[v]).collect();
    let n_obs = order.len();
    order.extend_from_slice(&hidden);

    let truth = g.relabeled(&order)?;
    let a_obs = truth.induced(&(0..n_obs).collect::<Vec<_>>())?;
    Ok(HideResult {
        partial: PartialGraph::new(a_obs, count)?,
        truth,
        hidden_ids: hidden,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn complete(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))).unwrap()
    }

    #[test]
    fn load_basic() {
        let g = load_edge_list("0 1\n1 2").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn load_dedupes_and_drops_self_loops() {
        let g = load_edge_list("# header\n0 1\n1 0\n\n2 2\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn load_errors_carry_line_numbers() {
        match load_edge_list("0 1\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_edge_list("0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load_edge_list("0 1 2\n"), Err(Error::Parse { .. })));
        assert!(matches!(load_edge_list(""), Err(Error::EmptyInput)));
        assert!(matches!(load_edge_list("# only a comment\n"), Err(Error::EmptyInput)));
    }

    #[test]
    fn save_is_canonical() {
        let g = Graph::from_edges(2, [(1, 0)]).unwrap();
        assert_eq!(save_edge_list(&g), "0 1\n");
        assert_eq!(save_edge_list(&Graph::empty(3)), "");
    }

    #[test]
    fn degrees() {
        let t = triangle();
        for v in 0..3 {
            assert_eq!(t.degree(v).unwrap(), 2);
        }
        let star = Graph::from_edges(6, (1..6).map(|i| (0, i))).unwrap();
        assert_eq!(star.degree(0).unwrap(), 5);
        assert!(matches!(star.degree(6), Err(Error::IndexOutOfRange { index: 6, len: 6 })));
    }

    #[test]
    fn clustering_of_standard_graphs() {
        assert_eq!(complete(5).clustering_coefficient().unwrap(), 1.0);
        assert!(Graph::empty(0).clustering_coefficient().is_err());
        // Star: every node has either degree 1 or no closed pairs.
        let star = Graph::from_edges(6, (1..6).map(|i| (0, i))).unwrap();
        assert_eq!(star.clustering_coefficient().unwrap(), 0.0);
    }

    #[test]
    fn ring_lattice_clustering_matches_formula() {
        // Ring lattice with k = 4: 3(k-2)/(4(k-1)) = 0.5.
        let k = 4.0;
        let expected = 3.0 * (k - 2.0) / (4.0 * (k - 1.0));
        let ring = generators::gen_circulant(100, &[1, 2]).unwrap();
        // Triangle census by explicit enumeration over triples.
        let mut tri = 0usize;
        for a in 0..100 {
            for b in (a + 1)..100 {
                for c in (b + 1)..100 {
                    if ring.has_edge(a, b) && ring.has_edge(b, c) && ring.has_edge(a, c) {
                        tri += 1;
                    }
                }
            }
        }
        // Each node has C(4,2) = 6 neighbor pairs; each triangle closes 3 of them.
        let by_census = (3 * tri) as f64 / (100.0 * 6.0);
        assert_eq!(by_census, expected);
        assert!((ring.clustering_coefficient().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn density_of_complete_graph() {
        assert_eq!(complete(4).density(), 1.0);
        assert_eq!(Graph::empty(5).density(), 0.0);
    }

    #[test]
    fn hide_one_node_of_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = hide_nodes(&triangle(), 1, &mut rng).unwrap();
        assert_eq!(h.partial.n_obs(), 2);
        assert_eq!(h.partial.n_miss(), 1);
        assert_eq!(h.partial.observed().edge_count(), 1);
        assert_eq!(h.truth.edge_count(), 3);
    }

    #[test]
    fn hide_quarter_of_1024() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = generators::gen_ba(1024, 2, &mut rng).unwrap();
        let h = hide_nodes(&g, 256, &mut rng).unwrap();
        assert_eq!(h.partial.n_obs(), 768);
        assert_eq!(h.partial.n_miss(), 256);
    }

    #[test]
    fn hide_count_is_validated() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(hide_nodes(&triangle(), 0, &mut rng).is_err());
        assert!(hide_nodes(&triangle(), 2, &mut rng).is_err());
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<_> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|_| rng.random::<f64>() < p)
            .collect();
        Graph::from_edges(n, pairs).unwrap()
    }

    #[test]
    fn round_trip_random_graph() {
        let g = random_graph(20, 0.2, 11);
        // Isolated trailing nodes do not survive an edge list, so compare on
        // the loaded node count.
        let back = load_edge_list(&save_edge_list(&g)).unwrap();
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        assert_eq!(save_edge_list(&back), save_edge_list(&g));
    }

    proptest! {
        #[test]
        fn hide_preserves_structure(seed in 0u64..10_000, n in 4usize..40, frac in 0.05f64..0.5) {
            let g = random_graph(n, 0.3, seed);
            let count = ((n as f64 * frac) as usize).clamp(1, n - 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = hide_nodes(&g, count, &mut rng).unwrap();
            let n_obs = h.partial.n_obs();
            prop_assert_eq!(h.truth.edge_count(), g.edge_count());
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(h.truth.has_edge(i, j), g.has_edge(h.order[i], h.order[j]));
                    if i < n_obs && j < n_obs {
                        prop_assert_eq!(h.truth.has_edge(i, j), h.partial.observed().has_edge(i, j));
                    }
                }
            }
            // Same seed, same hidden set.
            let mut rng2 = ChaCha8Rng::seed_from_u64(seed);
            prop_assert_eq!(hide_nodes(&g, count, &mut rng2).unwrap().hidden_ids, h.hidden_ids);
        }

        #[test]
        fn save_load_identity(seed in 0u64..10_000, n in 2usize..30) {
            let g = random_graph(n, 0.25, seed);
            // Canonical graphs: the last node has an edge so n survives.
            let g = if g.degree(n - 1).unwrap() == 0 {
                Graph::from_edges(n, g.edges().chain([(0, n - 1)])).unwrap()
            } else { g };
            prop_assert_eq!(load_edge_list(&save_edge_list(&g)).unwrap(), g);
        }

        #[test]
        fn triangle_free_graphs_have_zero_clustering(seed in 0u64..10_000, n in 3usize..30) {
            // Bipartite graphs have no triangles.
            let g = random_graph(n, 0.4, seed);
            let half = n / 2;
            let bip = Graph::from_edges(n, g.edges().filter(|&(i, j)| (i < half) != (j < half))).unwrap();
            prop_assert_eq!(bip.clustering_coefficient().unwrap(), 0.0);
        }
    }
}
