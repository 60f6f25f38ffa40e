//! Aggregation of per-replicate results into per-cell summaries: mean,
//! standard deviation, and quartiles of AUC and RC_0.90 plus mean runtimes
//! for every (method, network, d, n) cell.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Result};

use crate::config::{Method, NetworkType};
use crate::experiment::{ResultRow, ResultsTable};

type CellKey = (&'static str, &'static str, usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub network: NetworkType,
    pub d: usize,
    pub n: usize,
    pub replicates: usize,
    pub auc_mean: f64,
    pub auc_sd: f64,
    pub auc_q25: f64,
    pub auc_median: f64,
    pub auc_q75: f64,
    pub rc090_mean: f64,
    pub rc090_sd: f64,
    pub rc090_q25: f64,
    pub rc090_median: f64,
    pub rc090_q75: f64,
    pub runtime_mean_seconds: f64,
    pub runtime_mi_mean_seconds: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Linearly interpolated quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Summarize a results table per (method, network, d, n) cell, in
/// deterministic key order. Rejects an empty table.
pub fn aggregate(table: &ResultsTable) -> Result<Vec<SummaryRow>> {
    if table.rows.is_empty() {
        bail!("no result rows to aggregate");
    }
    let mut groups: BTreeMap<CellKey, Vec<&ResultRow>> = BTreeMap::new();
    for row in &table.rows {
        groups
            .entry((row.method.name(), row.network.name(), row.d, row.n))
            .or_default()
            .push(row);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((method, network, d, n), rows) in groups {
        let mut aucs: Vec<f64> = rows.iter().map(|r| r.auc).collect();
        let mut rcs: Vec<f64> = rows.iter().map(|r| r.rc090).collect();
        let runtimes: Vec<f64> = rows.iter().map(|r| r.runtime_seconds).collect();
        let mi_runtimes: Vec<f64> = rows.iter().map(|r| r.runtime_mi_seconds).collect();
        let (auc_mean, auc_sd) = (mean(&aucs), sample_sd(&aucs));
        let (rc_mean, rc_sd) = (mean(&rcs), sample_sd(&rcs));
        aucs.sort_by(f64::total_cmp);
        rcs.sort_by(f64::total_cmp);
        out.push(SummaryRow {
            method: Method::parse(method)?,
            network: NetworkType::parse(network)?,
            d,
            n,
            replicates: rows.len(),
            auc_mean,
            auc_sd,
            auc_q25: quantile(&aucs, 0.25),
            auc_median: quantile(&aucs, 0.5),
            auc_q75: quantile(&aucs, 0.75),
            rc090_mean: rc_mean,
            rc090_sd: rc_sd,
            rc090_q25: quantile(&rcs, 0.25),
            rc090_median: quantile(&rcs, 0.5),
            rc090_q75: quantile(&rcs, 0.75),
            runtime_mean_seconds: mean(&runtimes),
            runtime_mi_mean_seconds: mean(&mi_runtimes),
        });
    }
    Ok(out)
}

pub fn to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "method,network,d,n,replicates,auc_mean,auc_sd,auc_q25,auc_median,auc_q75,\
         rc090_mean,rc090_sd,rc090_q25,rc090_median,rc090_q75,runtime_mean_seconds,runtime_mi_mean_seconds\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method.name(),
            r.network.name(),
            r.d,
            r.n,
            r.replicates,
            r.auc_mean,
            r.auc_sd,
            r.auc_q25,
            r.auc_median,
            r.auc_q75,
            r.rc090_mean,
            r.rc090_sd,
            r.rc090_q25,
            r.rc090_median,
            r.rc090_q75,
            r.runtime_mean_seconds,
            r.runtime_mi_mean_seconds
        );
    }
    out
}
