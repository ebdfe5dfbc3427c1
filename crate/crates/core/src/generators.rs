//! Synthetic graph families: Barabási–Albert, Watts–Strogatz, stochastic
//! Kronecker, forest fire, grid and circulant.
//!
//! Every random generator is a pure function of its parameters and the RNG
//! state, so a fixed seed reproduces the graph exactly.

use std::collections::VecDeque;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest Kronecker power accepted; pair enumeration is quadratic in `2^k`.
pub const MAX_KRONECKER_POWER: u32 = 13;

/// Core-periphery initiator used when none is given.
pub const DEFAULT_KRONECKER_INITIATOR: [[f64; 2]; 2] = [[0.9, 0.5], [0.5, 0.2]];

/// Default burn probability for forest-fire growth.
pub const DEFAULT_FOREST_FIRE_P: f64 = 0.35;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Preferential attachment grown from an `m_attach`-node clique. Each new node
/// links to `m_attach` distinct existing nodes with probability proportional
/// to their degree.
pub fn gen_ba<R: Rng + ?Sized>(n: usize, m_attach: usize, rng: &mut R) -> Result<Graph> {
    if m_attach < 1 || m_attach >= n {
        return Err(invalid(format!("BA needs 1 <= m < n, got m={m_attach}, n={n}")));
    }
    let mut edges = Vec::with_capacity(m_attach * n);
    // Each endpoint appears once per incident edge, so a uniform draw from
    // this list is a degree-proportional draw.
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * m_attach * n);
    for i in 0..m_attach {
        for j in (i + 1)..m_attach {
            edges.push((i, j));
            endpoints.extend([i, j]);
        }
    }
    let mut chosen = Vec::with_capacity(m_attach);
    for v in m_attach..n {
        chosen.clear();
        while chosen.len() < m_attach {
            let t = if endpoints.is_empty() {
                rng.random_range(0..v)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((v, t));
            endpoints.extend([v, t]);
        }
    }
    Graph::from_edges(n, edges)
}

/// Watts–Strogatz small world: a ring lattice with `k/2` neighbours per side
/// whose edges are visited lattice-offset by lattice-offset and, with
/// probability `p`, have their far endpoint moved to a uniform node that is
/// neither the near endpoint nor already adjacent to it.
pub fn gen_ws<R: Rng + ?Sized>(n: usize, k: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if k % 2 != 0 || k < 2 || k >= n {
        return Err(invalid(format!("WS needs even 2 <= k < n, got k={k}, n={n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("WS rewiring probability {p} outside [0, 1]")));
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(k + 2); n];
    let link = |adj: &mut Vec<Vec<usize>>, a: usize, b: usize| {
        adj[a].push(b);
        adj[b].push(a);
    };
    for offset in 1..=k / 2 {
        for u in 0..n {
            link(&mut adj, u, (u + offset) % n);
        }
    }
    for offset in 1..=k / 2 {
        for u in 0..n {
            let v = (u + offset) % n;
            if rng.random::<f64>() >= p {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            // Offsets stay below n/2, so no earlier rewiring can have removed
            // this lattice edge.
            let pos = adj[u].iter().position(|&x| x == v).expect("lattice edge present");
            adj[u].swap_remove(pos);
            let back = adj[v].iter().position(|&x| x == u).expect("adjacency is symmetric");
            adj[v].swap_remove(back);
            link(&mut adj, u, w);
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)));
    Graph::from_edges(n, edges)
}

/// Stochastic Kronecker graph on `2^power` nodes. The pair `(i, j)` is an
/// edge with probability `prod_l initiator[bit_l(i)][bit_l(j)]`.
pub fn gen_kronecker<R: Rng + ?Sized>(
    initiator: [[f64; 2]; 2],
    power: u32,
    rng: &mut R,
) -> Result<Graph> {
    if initiator.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(invalid("Kronecker initiator entries must lie in [0, 1]"));
    }
    if power < 1 || power > MAX_KRONECKER_POWER {
        return Err(invalid(format!(
            "Kronecker power must be in 1..={MAX_KRONECKER_POWER}, got {power}"
        )));
    }
    let n = 1usize << power;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let prob: f64 = (0..power)
                .map(|l| initiator[(i >> l) & 1][(j >> l) & 1])
                .product();
            if rng.random::<f64>() < prob {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Undirected forest-fire growth. Each arriving node links to a uniform
/// ambassador, then spreads outward: every burned node ignites a
/// geometrically distributed number (mean `p_fwd / (1 - p_fwd)`) of its
/// not-yet-burned neighbours, and the newcomer links to all of them.
pub fn gen_forest_fire<R: Rng + ?Sized>(n: usize, p_fwd: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..1.0).contains(&p_fwd) {
        return Err(invalid(format!("forest-fire burn probability {p_fwd} outside [0, 1)")));
    }
    if n == 0 {
        return Err(invalid("forest fire needs at least one node"));
    }
    let spread = Geometric::new(1.0 - p_fwd).map_err(|e| invalid(e.to_string()))?;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut burned_at = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut candidates = Vec::new();
    for v in 1..n {
        let ambassador = rng.random_range(0..v);
        burned_at[ambassador] = v;
        queue.clear();
        queue.push_back(ambassador);
        let mut links = vec![ambassador];
        while let Some(x) = queue.pop_front() {
            let want = spread.sample(rng) as usize;
            if want == 0 {
                continue;
            }
            candidates.clear();
            candidates.extend(adj[x].iter().copied().filter(|&y| burned_at[y] != v));
            for &y in candidates.choose_multiple(rng, want) {
                burned_at[y] = v;
                links.push(y);
                queue.push_back(y);
            }
        }
        for y in links {
            adj[v].push(y);
            adj[y].push(v);
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(u, list)| list.iter().filter(move |&&w| w > u).map(move |&w| (u, w)));
    Graph::from_edges(n, edges)
}

/// `rows x cols` lattice with 4-neighbourhoods and no wraparound.
pub fn gen_grid(rows: usize, cols: usize) -> Result<Graph> {
    if rows < 2 || cols < 2 {
        return Err(invalid(format!("grid needs at least 2x2, got {rows}x{cols}")));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::from_edges(rows * cols, edges)
}

/// Node `i` links to `(i ± o) mod n` for each offset `o`.
pub fn gen_circulant(n: usize, offsets: &[usize]) -> Result<Graph> {
    if offsets.is_empty() {
        return Err(invalid("circulant needs at least one offset"));
    }
    let mut offs = offsets.to_vec();
    offs.sort_unstable();
    offs.dedup();
    if offs.iter().any(|&o| o == 0 || 2 * o >= n) {
        return Err(invalid(format!("circulant offsets must satisfy 0 < o < n/2, got {offsets:?} for n={n}")));
    }
    let edges = (0..n).flat_map(|i| offs.iter().map(move |&o| (i, (i + o) % n)));
    Graph::from_edges(n, edges)
}

/// A generator family with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Ba {
        n: usize,
        m: usize,
    },
    Ws {
        n: usize,
        k: usize,
        p: f64,
    },
    Kron {
        #[serde(default = "default_initiator")]
        initiator: [[f64; 2]; 2],
        power: u32,
    },
    Ff {
        n: usize,
        #[serde(default = "default_p_fwd")]
        p_fwd: f64,
    },
    Grid {
        rows: usize,
        cols: usize,
    },
    Circulant {
        n: usize,
        offsets: Vec<usize>,
    },
}

fn default_initiator() -> [[f64; 2]; 2] {
    DEFAULT_KRONECKER_INITIATOR
}

fn default_p_fwd() -> f64 {
    DEFAULT_FOREST_FIRE_P
}

/// A family plus an optional fixed seed. Experiments ignore `seed` and draw
/// from the repeat's stream instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GeneratorSpec {
    pub fn new(family: Family) -> Self {
        Self { family, seed: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Checks parameters without generating anything.
    pub fn validate(&self) -> Result<()> {
        match &self.family {
            Family::Ba { n, m } => {
                if *m < 1 || m >= n {
                    return Err(invalid(format!("BA needs 1 <= m < n, got m={m}, n={n}")));
                }
            }
            Family::Ws { n, k, p } => {
                if k % 2 != 0 || *k < 2 || k >= n || !(0.0..=1.0).contains(p) {
                    return Err(invalid(format!("bad WS parameters n={n} k={k} p={p}")));
                }
            }
            Family::Kron { initiator, power } => {
                if initiator.iter().flatten().any(|x| !(0.0..=1.0).contains(x))
                    || *power < 1
                    || *power > MAX_KRONECKER_POWER
                {
                    return Err(invalid("bad Kronecker parameters"));
                }
            }
            Family::Ff { n, p_fwd } => {
                if *n == 0 || !(0.0..1.0).contains(p_fwd) {
                    return Err(invalid(format!("bad forest-fire parameters n={n} p_fwd={p_fwd}")));
                }
            }
            Family::Grid { rows, cols } => {
                gen_grid(*rows, *cols)?;
            }
            Family::Circulant { n, offsets } => {
                gen_circulant(*n, offsets)?;
            }
        }
        Ok(())
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Graph> {
        self.validate()?;
        match &self.family {
            Family::Ba { n, m } => gen_ba(*n, *m, rng),
            Family::Ws { n, k, p } => gen_ws(*n, *k, *p, rng),
            Family::Kron { initiator, power } => gen_kronecker(*initiator, *power, rng),
            Family::Ff { n, p_fwd } => gen_forest_fire(*n, *p_fwd, rng),
            Family::Grid { rows, cols } => gen_grid(*rows, *cols),
            Family::Circulant { n, offsets } => gen_circulant(*n, offsets),
        }
    }

    /// Generates from the spec's own seed (0 when unset).
    pub fn generate_seeded(&self) -> Result<Graph> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0));
        self.generate(&mut rng)
    }

    /// Family tag as written in JSON, e.g. `ws`.
    pub fn family_name(&self) -> &'static str {
        match &self.family {
            Family::Ba { .. } => "ba",
            Family::Ws { .. } => "ws",
            Family::Kron { .. } => "kron",
            Family::Ff { .. } => "ff",
            Family::Grid { .. } => "grid",
            Family::Circulant { .. } => "circulant",
        }
    }

    /// Short human-readable identifier, e.g. `ws_n256_k4_p0.1`; never contains commas.
    pub fn label(&self) -> String {
        match &self.family {
            Family::Ba { n, m } => format!("ba_n{n}_m{m}"),
            Family::Ws { n, k, p } => format!("ws_n{n}_k{k}_p{p}"),
            Family::Kron { power, .. } => format!("kron_k{power}"),
            Family::Ff { n, p_fwd } => format!("ff_n{n}_p{p_fwd}"),
            Family::Grid { rows, cols } => format!("grid_{rows}x{cols}"),
            Family::Circulant { n, offsets } => {
                let offs: Vec<String> = offsets.iter().map(ToString::to_string).collect();
                format!("circulant_n{n}_o{}", offs.join("+"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn is_connected(g: &Graph) -> bool {
        let mut seen = vec![false; g.n()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in g.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn ba_small_tree() {
        let g = gen_ba(5, 1, &mut rng(1)).unwrap();
        assert_eq!(g.edge_count(), 4);
        assert!(is_connected(&g));
    }

    #[test]
    fn ba_edge_count_and_min_degree() {
        for seed in 0..3 {
            let g = gen_ba(1024, 2, &mut rng(seed)).unwrap();
            assert_eq!(g.edge_count(), 1 + (1024 - 2) * 2);
        }
        let g = gen_ba(64, 2, &mut rng(9)).unwrap();
        for v in 2..64 {
            assert!(g.degree(v).unwrap() >= 2);
        }
    }

    #[test]
    fn ba_is_heavy_tailed() {
        for seed in 0..5 {
            let g = gen_ba(1024, 2, &mut rng(seed)).unwrap();
            let degrees = g.degrees();
            let mean = degrees.iter().sum::<usize>() as f64 / 1024.0;
            let max = *degrees.iter().max().unwrap() as f64;
            assert!(max > 4.0 * mean, "seed {seed}: max {max} mean {mean}");
        }
    }

    #[test]
    fn ba_rejects_bad_parameters() {
        assert!(gen_ba(5, 0, &mut rng(0)).is_err());
        assert!(gen_ba(5, 5, &mut rng(0)).is_err());
    }

    #[test]
    fn ws_lattice_and_edge_count() {
        let g = gen_ws(100, 4, 0.0, &mut rng(0)).unwrap();
        assert_eq!(g, gen_circulant(100, &[1, 2]).unwrap());
        assert!((g.clustering_coefficient().unwrap() - 0.5).abs() < 1e-12);
        for &p in &[0.0, 0.1, 0.5, 1.0] {
            for seed in 0..3 {
                let g = gen_ws(200, 6, p, &mut rng(seed)).unwrap();
                assert_eq!(g.edge_count(), 200 * 6 / 2, "p={p}");
            }
        }
    }

    #[test]
    fn ws_fully_rewired_loses_clustering() {
        for seed in 0..5 {
            let g = gen_ws(1000, 4, 1.0, &mut rng(seed)).unwrap();
            assert!(g.clustering_coefficient().unwrap() < 0.05);
        }
    }

    #[test]
    fn ws_rejects_bad_parameters() {
        assert!(gen_ws(10, 3, 0.1, &mut rng(0)).is_err());
        assert!(gen_ws(10, 10, 0.1, &mut rng(0)).is_err());
        assert!(gen_ws(10, 4, 1.5, &mut rng(0)).is_err());
    }

    #[test]
    fn kronecker_extremes() {
        let g = gen_kronecker([[1.0, 1.0], [1.0, 1.0]], 3, &mut rng(0)).unwrap();
        assert_eq!(g.n(), 8);
        assert_eq!(g.edge_count(), 28);
        let g = gen_kronecker([[0.0, 0.0], [0.0, 0.0]], 4, &mut rng(0)).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(gen_kronecker([[1.2, 0.0], [0.0, 0.0]], 2, &mut rng(0)).is_err());
        assert!(gen_kronecker(DEFAULT_KRONECKER_INITIATOR, 0, &mut rng(0)).is_err());
    }

    #[test]
    fn kronecker_expected_edge_count() {
        // Sum over ordered pairs of the product is (sum of entries)^k; the
        // diagonal contributes (trace)^k; halve for unordered pairs.
        let init = DEFAULT_KRONECKER_INITIATOR;
        let k = 10;
        let total: f64 = init.iter().flatten().sum();
        let trace = init[0][0] + init[1][1];
        let expected = (total.powi(k) - trace.powi(k)) / 2.0;
        let mean = (0..10)
            .map(|s| gen_kronecker(init, k as u32, &mut rng(s)).unwrap().edge_count() as f64)
            .sum::<f64>()
            / 10.0;
        assert!((mean - expected).abs() < 0.1 * expected, "mean {mean} expected {expected}");
    }

    #[test]
    fn forest_fire_properties() {
        let tree = gen_forest_fire(200, 0.0, &mut rng(4)).unwrap();
        assert_eq!(tree.edge_count(), 199);
        assert!(is_connected(&tree));

        let mut cc_fire = 0.0;
        for seed in 0..5 {
            let g = gen_forest_fire(1024, 0.35, &mut rng(seed)).unwrap();
            let mean_degree = 2.0 * g.edge_count() as f64 / 1024.0;
            assert!((2.0..10.0).contains(&mean_degree), "mean degree {mean_degree}");
            cc_fire += g.clustering_coefficient().unwrap();
        }
        assert!(cc_fire / 5.0 > tree.clustering_coefficient().unwrap());
        assert!(gen_forest_fire(10, 1.0, &mut rng(0)).is_err());
    }

    #[test]
    fn grid_structure() {
        assert_eq!(gen_grid(2, 2).unwrap().edge_count(), 4);
        let g = gen_grid(20, 20).unwrap();
        assert_eq!(g.edge_count(), 760);
        assert_eq!(g.clustering_coefficient().unwrap(), 0.0);
        for r in 1..19 {
            for c in 1..19 {
                assert_eq!(g.degree(r * 20 + c).unwrap(), 4);
            }
        }
        assert!(gen_grid(1, 5).is_err());
    }

    #[test]
    fn circulant_structure() {
        let cycle = gen_circulant(10, &[1]).unwrap();
        assert_eq!(cycle.edge_count(), 10);
        assert!(cycle.degrees().iter().all(|&d| d == 2));

        let g = gen_circulant(400, &[1, 3]).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 4));
        assert_eq!(g.clustering_coefficient().unwrap(), 0.0);

        // Vertex-transitive: one node's neighbourhood decides the average.
        let g = gen_circulant(400, &[1, 2]).unwrap();
        let nbrs = g.neighbors(0);
        let closed = nbrs
            .iter()
            .enumerate()
            .flat_map(|(a, &x)| nbrs[a + 1..].iter().map(move |&y| (x, y)))
            .filter(|&(x, y)| g.has_edge(x, y))
            .count();
        assert_eq!(closed as f64 / 6.0, 0.5);
        assert_eq!(g.clustering_coefficient().unwrap(), 0.5);

        assert!(gen_circulant(10, &[]).is_err());
        assert!(gen_circulant(10, &[5]).is_err());
    }

    #[test]
    fn same_seed_same_graph() {
        let specs = [
            Family::Ba { n: 100, m: 3 },
            Family::Ws { n: 100, k: 4, p: 0.3 },
            Family::Kron { initiator: DEFAULT_KRONECKER_INITIATOR, power: 6 },
            Family::Ff { n: 100, p_fwd: 0.35 },
        ];
        for family in specs {
            let spec = GeneratorSpec::new(family).with_seed(42);
            assert_eq!(spec.generate_seeded().unwrap(), spec.generate_seeded().unwrap());
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = GeneratorSpec::new(Family::Ws { n: 256, k: 4, p: 0.1 }).with_seed(3);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"family":"ws","n":256,"k":4,"p":0.1,"seed":3}"#);
        let back: GeneratorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let ff: GeneratorSpec = serde_json::from_str(r#"{"family":"ff","n":50}"#).unwrap();
        assert_eq!(ff.family, Family::Ff { n: 50, p_fwd: DEFAULT_FOREST_FIRE_P });
    }
}
