use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Method, NamedSource, RunSettings, Source};
use super::report::{fmt_opt, simple_csv};
use super::run::{run_experiment_detailed, ExperimentOutcome};
use crate::error::{Error, Result};
use crate::generators::{Family, GeneratorSpec};
use crate::metrics::Region;

/// Proposed-minus-Random-De mean AUC in each region, plus the graph's CC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffRow {
    pub network: String,
    pub cc: Option<f64>,
    pub auc_diff_all: Option<f64>,
    pub auc_diff_ou: Option<f64>,
    pub auc_diff_uu: Option<f64>,
}

impl DiffRow {
    fn from_outcome(out: &ExperimentOutcome) -> Self {
        let diff = |region| {
            Some(out.mean_auc(Method::Proposed, region)? - out.mean_auc(Method::RandomDe, region)?)
        };
        DiffRow {
            network: out.network.clone(),
            cc: out.mean_clustering(),
            auc_diff_all: diff(Region::AllL),
            auc_diff_ou: diff(Region::ObsUnobs),
            auc_diff_uu: diff(Region::UnobsUnobs),
        }
    }

    pub fn diff(&self, region: Region) -> Option<f64> {
        match region {
            Region::AllL => self.auc_diff_all,
            Region::ObsUnobs => self.auc_diff_ou,
            Region::UnobsUnobs => self.auc_diff_uu,
        }
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt_opt(self.cc),
            fmt_opt(self.auc_diff_all),
            fmt_opt(self.auc_diff_ou),
            fmt_opt(self.auc_diff_uu),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    #[serde(flatten)]
    pub diff: DiffRow,
}

/// AUC difference against the rewiring probability of Watts–Strogatz graphs.
pub fn ws_sweep(n: usize, k: usize, p_values: &[f64], settings: &RunSettings) -> Result<Vec<SweepRow>> {
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("rewiring probability {p} outside [0, 1]")));
    }
    p_values
        .par_iter()
        .map(|&p| {
            let spec = GeneratorSpec::new(Family::Ws { n, k, p });
            let cfg = settings.experiment(spec.label(), Source::Generator(spec));
            let out = run_experiment_detailed(&cfg)?;
            Ok(SweepRow {
                p,
                diff: DiffRow::from_outcome(&out),
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    simple_csv(
        &["p", "cc", "auc_diff_all", "auc_diff_ou", "auc_diff_uu"],
        rows.iter().map(|r| {
            let mut f = vec![format!("{}", r.p)];
            f.extend(r.diff.fields());
            f
        }),
    )
}

/// CC and AUC difference for each of several networks.
pub fn cc_scatter(networks: &[NamedSource], settings: &RunSettings) -> Result<Vec<DiffRow>> {
    if networks.len() < 2 {
        return Err(Error::InvalidParameter("a scatter needs at least two networks".into()));
    }
    networks
        .par_iter()
        .map(|net| {
            let cfg = settings.experiment(net.name.clone(), net.source.clone());
            Ok(DiffRow::from_outcome(&run_experiment_detailed(&cfg)?))
        })
        .collect()
}

pub fn scatter_csv(rows: &[DiffRow]) -> String {
    simple_csv(
        &["network", "cc", "auc_diff_all", "auc_diff_ou", "auc_diff_uu"],
        rows.iter().map(|r| {
            let mut f = vec![r.network.clone()];
            f.extend(r.fields());
            f
        }),
    )
}

/// Spearman rank correlation with mid-ranks for ties. `None` when either
/// input is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut s = 0;
        while s < idx.len() {
            let mut e = s + 1;
            while e < idx.len() && v[idx[e]] == v[idx[s]] {
                e += 1;
            }
            for &i in &idx[s..e] {
                r[i] = (s + e + 1) as f64 / 2.0;
            }
            s = e;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let m = (x.len() + 1) as f64 / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
    let vx: f64 = rx.iter().map(|a| (a - m) * (a - m)).sum();
    let vy: f64 = ry.iter().map(|b| (b - m) * (b - m)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}
