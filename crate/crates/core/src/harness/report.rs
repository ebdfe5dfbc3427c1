use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::metrics::Region;

pub const CSV_HEADER: &str = "network,method,region,auc_mean,auc_std,ap_mean,ap_std,repeats,seed";

/// What one CSV cell holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Cell {
    Value(f64),
    /// The method does not score this region.
    NotApplicable,
    Missing,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }

    fn render(self) -> String {
        match self {
            Cell::Value(v) => format!("{v:.6}"),
            Cell::NotApplicable => "n/a".into(),
            Cell::Missing => String::new(),
        }
    }
}

/// One aggregated line of an experiment's CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub network: String,
    pub method: String,
    pub region: Region,
    pub auc_mean: Cell,
    pub auc_std: Cell,
    pub ap_mean: Cell,
    pub ap_std: Cell,
    /// Repeats that produced a value.
    pub repeats: usize,
    pub seed: Option<u64>,
    /// Errors met along the way; not written to the CSV.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ResultRow {
    /// Fills the statistics from per-repeat values. The spread is the sample
    /// standard deviation and is left blank below two values.
    pub fn from_samples(
        network: &str,
        method: &str,
        region: Region,
        auc: &[f64],
        ap: &[f64],
        seed: u64,
    ) -> Self {
        let (auc_mean, auc_std) = summarize(auc);
        let (ap_mean, ap_std) = summarize(ap);
        ResultRow {
            network: network.to_string(),
            method: method.to_string(),
            region,
            auc_mean,
            auc_std,
            ap_mean,
            ap_std,
            repeats: auc.len(),
            seed: Some(seed),
            notes: Vec::new(),
        }
    }

    fn csv_line(&self) -> String {
        let field = |s: &str| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            field(&self.network),
            field(&self.method),
            self.region.name(),
            self.auc_mean.render(),
            self.auc_std.render(),
            self.ap_mean.render(),
            self.ap_std.render(),
            self.repeats,
            self.seed.map(|s| s.to_string()).unwrap_or_default()
        )
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn sample_std(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    (xs.len() >= 2).then(|| {
        let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
        (ss / (xs.len() - 1) as f64).sqrt()
    })
}

fn summarize(xs: &[f64]) -> (Cell, Cell) {
    let wrap = |v: Option<f64>| v.map_or(Cell::Missing, Cell::Value);
    (wrap(mean(xs)), wrap(sample_std(xs)))
}

/// Header plus one line per row, newline-terminated.
pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Writes a header and rows of already formatted fields.
pub fn simple_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Published AUCs for methods this crate does not implement, keyed by network.
/// Each entry: network key, method, region, mean, std.
const PUBLISHED: &[(&str, &str, Region, f64, f64)] = &[
    ("ba", "kronem", Region::AllL, 0.641, 0.006),
    ("ws", "kronem", Region::AllL, 0.804, 0.012),
    ("kron", "kronem", Region::AllL, 0.839, 0.004),
    ("ff", "kronem", Region::AllL, 0.621, 0.004),
    ("power", "g-gcn", Region::AllL, 0.8618, 0.007),
    ("power", "g-gcn", Region::ObsUnobs, 0.9239, 0.006),
    ("power", "g-gcn", Region::UnobsUnobs, 0.5518, 0.003),
    ("bio_s", "g-gcn", Region::AllL, 0.8323, 0.018),
    ("bio_s", "g-gcn", Region::ObsUnobs, 0.8883, 0.017),
    ("bio_s", "g-gcn", Region::UnobsUnobs, 0.5719, 0.033),
    ("bio_d", "g-gcn", Region::AllL, 0.8135, 0.010),
    ("bio_d", "g-gcn", Region::ObsUnobs, 0.8586, 0.010),
    ("bio_d", "g-gcn", Region::UnobsUnobs, 0.5707, 0.011),
    ("cora", "g-gcn", Region::AllL, 0.8602, 0.009),
    ("cora", "g-gcn", Region::ObsUnobs, 0.9207, 0.009),
    ("cora", "g-gcn", Region::UnobsUnobs, 0.5558, 0.023),
    ("co_author", "g-gcn", Region::AllL, 0.8582, 0.017),
    ("co_author", "g-gcn", Region::ObsUnobs, 0.9717, 0.011),
    ("co_author", "g-gcn", Region::UnobsUnobs, 0.5736, 0.070),
];

/// Published reference rows for `key` (a generator family such as `ws`, or a
/// dataset name such as `cora`). Methods carry a `(paper-reported)` tag and no
/// seed, so they cannot be mistaken for computed results.
pub fn paper_reference_rows(network: &str, key: &str) -> Vec<ResultRow> {
    let key = key.to_ascii_lowercase().replace('-', "_");
    PUBLISHED
        .iter()
        .filter(|e| e.0 == key)
        .map(|&(_, method, region, m, s)| ResultRow {
            network: network.to_string(),
            method: format!("{method} (paper-reported)"),
            region,
            auc_mean: Cell::Value(m),
            auc_std: Cell::Value(s),
            ap_mean: Cell::Missing,
            ap_std: Cell::Missing,
            repeats: 0,
            seed: None,
            notes: Vec::new(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_by_hand() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), Some(2.0));
        assert_eq!(sample_std(&[1.0, 2.0, 3.0]), Some(1.0));
        assert_eq!(sample_std(&[4.0]), None);
        assert_eq!(mean(&[]), None);
    }

    #[test]
    fn csv_layout() {
        let rows = vec![
            ResultRow::from_samples("ws", "proposed", Region::AllL, &[0.5, 0.7], &[0.25, 0.25], 3),
            ResultRow::from_samples("a,b", "pa", Region::UnobsUnobs, &[0.5], &[0.5], 3),
        ];
        let csv = to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "ws,proposed,all,0.600000,0.141421,0.250000,0.000000,2,3");
        assert_eq!(lines[2], "\"a,b\",pa,unobs_unobs,0.500000,,0.500000,,1,3");
    }

    #[test]
    fn reference_rows_are_tagged() {
        let rows = paper_reference_rows("ws_n256_k4_p0.1", "ws");
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].method, "kronem (paper-reported)");
        assert_eq!(rows[0].seed, None);
        assert_eq!(paper_reference_rows("x", "Co-Author").len(), 3);
        assert!(paper_reference_rows("x", "grid").is_empty());
    }
}
