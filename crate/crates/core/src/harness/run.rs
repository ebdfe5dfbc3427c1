use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method, Source};
use super::report::{Cell, ResultRow};
use crate::baselines::{pa_complete, random_decoder_complete};
use crate::completer::complete;
use crate::error::Result;
use crate::graph::{hide_nodes, Graph, HideResult};
use crate::matcher::{apply_alignment, binarize_to_density, sgm_align, MatchResult, MatcherConfig, SeededMatchProblem};
use crate::matrix::Matrix;
use crate::metrics::{evaluate_completion, EvalReport, Region};

/// Score matrix of one method on one hidden instance, before alignment.
pub fn method_scores(
    method: Method,
    hide: &HideResult,
    cfg: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Matrix> {
    let pg = &hide.partial;
    Ok(match method {
        Method::Proposed => complete(pg, &cfg.completer, rng)?.p_final,
        Method::Pa => pa_complete(pg).p,
        Method::RandomDe => random_decoder_complete(pg, cfg.completer.embed_dim, rng)?.p,
    })
}

/// Aligns `p` to `truth` by seeded matching on its density-matched
/// binarisation and returns the permuted scores.
pub fn align_scores(
    truth: &Graph,
    observed: &Graph,
    p: &Matrix,
    matcher: &MatcherConfig,
) -> Result<(Matrix, MatchResult)> {
    let n_obs = observed.n();
    let a_pred = binarize_to_density(p, observed)?;
    let prob = SeededMatchProblem::new(truth.adjacency_matrix(), a_pred, n_obs)?;
    let matched = sgm_align(&prob, matcher.max_iters, matcher.tol)?;
    Ok((apply_alignment(p, n_obs, &matched.perm)?, matched))
}

/// Everything one repeat produced.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub seed: u64,
    /// Clustering coefficient of the full graph.
    pub clustering: f64,
    pub reports: Vec<MethodOutcome>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub report: Option<EvalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Runs repeat `r` of `cfg`.
///
/// The repeat's stream, seeded with `base_seed + r`, produces in order: the
/// graph (unless the source is fixed), the hidden node set, one seed per
/// enabled method in canonical order, and the evaluation seed. Every method is
/// scored on the same negative sample.
pub fn run_repeat(cfg: &ExperimentConfig, fixed: Option<&Graph>, r: usize) -> Result<RepeatOutcome> {
    let seed = cfg.base_seed.wrapping_add(r as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let generated;
    let graph = match (fixed, &cfg.source) {
        (Some(g), _) => g,
        (None, Source::Generator(spec)) => {
            generated = spec.generate(&mut rng)?;
            &generated
        }
        (None, Source::EdgeList { .. }) => {
            generated = cfg.source.fixed_graph()?.expect("edge lists are fixed");
            &generated
        }
    };
    let clustering = graph.clustering_coefficient()?;
    let hide = hide_nodes(graph, cfg.hide_count(graph.n()), &mut rng)?;
    let methods = cfg.method_list();
    let method_seeds: Vec<u64> = methods.iter().map(|_| rng.next_u64()).collect();
    let eval_seed = rng.next_u64();
    let n_obs = hide.partial.n_obs();
    let reports = methods
        .iter()
        .zip(method_seeds)
        .map(|(&method, s)| {
            let outcome = (|| {
                let p = method_scores(method, &hide, cfg, &mut ChaCha8Rng::seed_from_u64(s))?;
                let (aligned, _) = align_scores(&hide.truth, hide.partial.observed(), &p, &cfg.matcher)?;
                evaluate_completion(&hide.truth, &aligned, n_obs, &mut ChaCha8Rng::seed_from_u64(eval_seed))
            })();
            match outcome {
                Ok(report) => MethodOutcome {
                    method,
                    report: Some(report),
                    error: None,
                },
                Err(e) => MethodOutcome {
                    method,
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(RepeatOutcome {
        repeat: r,
        seed,
        clustering,
        reports,
    })
}

/// Per-repeat results of a whole experiment. Failed repeats keep their error.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub network: String,
    pub repeats: Vec<std::result::Result<RepeatOutcome, String>>,
}

impl ExperimentOutcome {
    /// Per-repeat values of one metric, skipping failures.
    pub fn values(&self, method: Method, region: Region, ap: bool) -> Vec<f64> {
        self.successes()
            .flat_map(|rep| rep.reports.iter())
            .filter(|m| m.method == method)
            .filter_map(|m| m.report.as_ref())
            .filter_map(|rep| if ap { rep.ap(region) } else { rep.auc(region) })
            .collect()
    }

    pub fn mean_auc(&self, method: Method, region: Region) -> Option<f64> {
        super::report::mean(&self.values(method, region, false))
    }

    pub fn mean_clustering(&self) -> Option<f64> {
        let cc: Vec<f64> = self.successes().map(|r| r.clustering).collect();
        super::report::mean(&cc)
    }

    fn successes(&self) -> impl Iterator<Item = &RepeatOutcome> {
        self.repeats.iter().filter_map(|r| r.as_ref().ok())
    }

    /// Aggregated rows: methods in canonical order, regions within each.
    pub fn rows(&self, cfg: &ExperimentConfig) -> Vec<ResultRow> {
        let mut notes: BTreeMap<Method, Vec<String>> = BTreeMap::new();
        for (r, rep) in self.repeats.iter().enumerate() {
            match rep {
                Err(e) => {
                    for m in cfg.method_list() {
                        notes.entry(m).or_default().push(format!("repeat {r}: {e}"));
                    }
                }
                Ok(rep) => {
                    for m in &rep.reports {
                        if let Some(e) = &m.error {
                            notes.entry(m.method).or_default().push(format!("repeat {r}: {e}"));
                        }
                        for rs in m.report.iter().flat_map(|x| &x.regions) {
                            if let Some(e) = &rs.error {
                                notes.entry(m.method).or_default().push(format!("repeat {r}: {e}"));
                            }
                        }
                    }
                }
            }
        }
        let mut rows = Vec::new();
        for method in cfg.method_list() {
            for region in Region::ALL {
                let mut row = ResultRow::from_samples(
                    &self.network,
                    method.name(),
                    region,
                    &self.values(method, region, false),
                    &self.values(method, region, true),
                    cfg.base_seed,
                );
                if method == Method::Pa && region == Region::UnobsUnobs {
                    // Scores are identically zero there.
                    row.auc_mean = Cell::NotApplicable;
                    row.auc_std = Cell::NotApplicable;
                    row.ap_mean = Cell::NotApplicable;
                    row.ap_std = Cell::NotApplicable;
                }
                row.notes = notes.get(&method).cloned().unwrap_or_default();
                rows.push(row);
            }
        }
        rows
    }
}

/// Runs every repeat of `cfg`, in parallel when a thread pool is available.
pub fn run_experiment_detailed(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let fixed = cfg.source.fixed_graph()?;
    let repeats = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| run_repeat(cfg, fixed.as_ref(), r).map_err(|e| e.to_string()))
        .collect();
    Ok(ExperimentOutcome {
        network: cfg.network_id(),
        repeats,
    })
}

/// Aggregated result rows of `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    Ok(run_experiment_detailed(cfg)?.rows(cfg))
}
