//! Region-wise balanced evaluation of completion scores.
//!
//! The unobserved part of the adjacency matrix splits into the pairs with one
//! observed endpoint and the pairs with none. Each region is scored as its own
//! binary classification problem: all of its true edges are positives and an
//! equal number of uniformly drawn non-edges are negatives.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Every pair with at least one unobserved endpoint.
    AllL,
    /// Exactly one unobserved endpoint.
    ObsUnobs,
    /// Both endpoints unobserved.
    UnobsUnobs,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::AllL, Region::ObsUnobs, Region::UnobsUnobs];

    pub fn name(self) -> &'static str {
        match self {
            Region::AllL => "all",
            Region::ObsUnobs => "obs_unobs",
            Region::UnobsUnobs => "unobs_unobs",
        }
    }

    pub fn contains(self, i: usize, j: usize, n_obs: usize) -> bool {
        let unobserved = (i >= n_obs) as u8 + (j >= n_obs) as u8;
        i != j
            && match self {
                Region::AllL => unobserved >= 1,
                Region::ObsUnobs => unobserved == 1,
                Region::UnobsUnobs => unobserved == 2,
            }
    }

    /// Unordered pairs `(i, j)`, `i < j`, of the region, column by column.
    pub fn pairs(self, n: usize, n_obs: usize) -> impl Iterator<Item = (usize, usize)> {
        (n_obs..n).flat_map(move |j| {
            let lo = if self == Region::UnobsUnobs { n_obs } else { 0 };
            let hi = if self == Region::ObsUnobs { n_obs } else { j };
            (lo..hi).map(move |i| (i, j))
        })
    }
}

/// Balanced positive/negative pairs drawn from one region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSample {
    pub positives: Vec<(usize, usize)>,
    pub negatives: Vec<(usize, usize)>,
    /// True when the region had fewer non-edges than edges and every non-edge
    /// was used.
    pub imbalanced: bool,
}

/// All region edges plus a uniform sample (without replacement) of as many
/// region non-edges.
pub fn sample_region_pairs<R: Rng + ?Sized>(
    a_true: &Graph,
    n_obs: usize,
    region: Region,
    rng: &mut R,
) -> Result<PairSample> {
    let (positives, non_edges): (Vec<_>, Vec<_>) = region
        .pairs(a_true.n(), n_obs)
        .partition(|&(i, j)| a_true.has_edge(i, j));
    if positives.is_empty() {
        return Err(Error::RegionHasNoEdges { region: region.name() });
    }
    if non_edges.is_empty() {
        return Err(Error::RegionHasNoNonEdges { region: region.name() });
    }
    let imbalanced = non_edges.len() < positives.len();
    let negatives = if imbalanced {
        non_edges
    } else {
        let mut picked = rand::seq::index::sample(rng, non_edges.len(), positives.len()).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|k| non_edges[k]).collect()
    };
    Ok(PairSample {
        positives,
        negatives,
        imbalanced,
    })
}

fn check_scores(pos: &[f64], neg: &[f64]) -> Result<()> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::EmptyInput);
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores".into()));
    }
    Ok(())
}

/// Area under the ROC curve: the fraction of (positive, negative) pairs the
/// scores order correctly, ties counting one half.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check_scores(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    // Mann–Whitney with mid-ranks. Ranks are multiples of 1/2, so the sum is
    // exact in f64 for any realistic sample size.
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < all.len() {
        let mut end = start + 1;
        while end < all.len() && all[end].0 == all[start].0 {
            end += 1;
        }
        let mid_rank = (start + end + 1) as f64 / 2.0;
        let positives = all[start..end].iter().filter(|x| x.1).count();
        rank_sum += mid_rank * positives as f64;
        start = end;
    }
    let n_pos = pos.len() as f64;
    let u = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
    Ok(u / (n_pos * neg.len() as f64))
}

/// Average precision: the mean, over positives, of the precision at each
/// positive's rank when scores are sorted in decreasing order. Ties put
/// negatives first.
pub fn average_precision(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check_scores(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    // Descending by score; `false < true`, so negatives come first in a tie.
    all.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &(_, is_pos)) in all.iter().enumerate() {
        if is_pos {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(total / pos.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionScore {
    pub region: Region,
    pub auc: Option<f64>,
    pub ap: Option<f64>,
    pub positives: usize,
    pub negatives: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// AUC and AP for each region of one completion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub regions: Vec<RegionScore>,
}

impl EvalReport {
    pub fn get(&self, region: Region) -> Option<&RegionScore> {
        self.regions.iter().find(|r| r.region == region)
    }

    pub fn auc(&self, region: Region) -> Option<f64> {
        self.get(region).and_then(|r| r.auc)
    }

    pub fn ap(&self, region: Region) -> Option<f64> {
        self.get(region).and_then(|r| r.ap)
    }
}

/// Scores `p_aligned` against `a_true` on every region. A region that cannot
/// be sampled is reported with its error; the others are still computed.
pub fn evaluate_completion<R: Rng + ?Sized>(
    a_true: &Graph,
    p_aligned: &Matrix,
    n_obs: usize,
    rng: &mut R,
) -> Result<EvalReport> {
    let n = a_true.n();
    if p_aligned.shape() != (n, n) {
        return Err(Error::ShapeMismatch {
            op: "evaluate_completion",
            left: p_aligned.shape(),
            right: (n, n),
        });
    }
    let mut regions = Vec::with_capacity(3);
    for region in Region::ALL {
        let score = match sample_region_pairs(a_true, n_obs, region, rng) {
            Ok(sample) => {
                let pick = |pairs: &[(usize, usize)]| -> Vec<f64> {
                    pairs.iter().map(|&(i, j)| p_aligned[(i, j)]).collect()
                };
                let pos = pick(&sample.positives);
                let neg = pick(&sample.negatives);
                RegionScore {
                    region,
                    auc: Some(auc(&pos, &neg)?),
                    ap: Some(average_precision(&pos, &neg)?),
                    positives: pos.len(),
                    negatives: neg.len(),
                    error: None,
                }
            }
            Err(e) => RegionScore {
                region,
                auc: None,
                ap: None,
                positives: 0,
                negatives: 0,
                error: Some(e.to_string()),
            },
        };
        regions.push(score);
    }
    Ok(EvalReport { regions })
}
