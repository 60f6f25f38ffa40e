//! Edge ranking and precision-recall evaluation.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{CoreError, Result};
use crate::model::Graph;
use crate::pairwise::ScoreMatrix;

/// All unordered pairs ranked by score, descending; ties broken by canonical
/// lexicographic edge order so the ranking is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRanking {
    d: usize,
    entries: Vec<((usize, usize), f64)>,
}

impl EdgeRanking {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[((usize, usize), f64)] {
        &self.entries
    }

    /// Ranked edge-list text: one `v w score` line per pair, 1-based,
    /// descending.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &((a, b), score) in &self.entries {
            let _ = writeln!(out, "{} {} {}", a + 1, b + 1, score);
        }
        out
    }
}

/// Rank all `d (d - 1) / 2` pairs of a score matrix.
pub fn rank_edges(scores: &ScoreMatrix) -> EdgeRanking {
    let mut entries: Vec<((usize, usize), f64)> = scores.pairs().collect();
    entries.sort_by(|(pa, sa), (pb, sb)| sb.total_cmp(sa).then_with(|| pa.cmp(pb)));
    EdgeRanking { d: scores.d(), entries }
}

/// Precision-recall curve over ranked prefixes, with trapezoidal AUC and the
/// maximum recall attainable at precision 0.90.
#[derive(Debug, Clone, PartialEq)]
pub struct PRCurve {
    points: Vec<(f64, f64)>,
    auc: f64,
    rc090: f64,
}

impl PRCurve {
    /// One `(recall, precision)` point per ranked prefix.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn auc(&self) -> f64 {
        self.auc
    }

    pub fn rc090(&self) -> f64 {
        self.rc090
    }

    /// Maximum recall over prefixes whose precision is at least `threshold`,
    /// or 0 when no prefix qualifies.
    pub fn rc_at(&self, threshold: f64) -> f64 {
        self.points
            .iter()
            .filter(|&&(_, precision)| precision >= threshold)
            .map(|&(recall, _)| recall)
            .fold(0.0, f64::max)
    }

    /// CSV with columns `prefix_k,recall,precision`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("prefix_k,recall,precision\n");
        for (k, &(recall, precision)) in self.points.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", k + 1, recall, precision);
        }
        out
    }
}

/// Walk a ranking against the true graph: after each prefix of `k` edges,
/// precision is `TP / k` and recall `TP / |E|`. The AUC is the trapezoidal
/// area after collapsing equal-recall runs to their maximum precision, with
/// the curve anchored at `(0, precision of the first prefix)`.
pub fn pr_curve(ranking: &EdgeRanking, truth: &Graph) -> Result<PRCurve> {
    if truth.d() != ranking.d() {
        return Err(CoreError::InvalidInput(format!(
            "ranking is over d={} but truth has d={}",
            ranking.d(),
            truth.d()
        )));
    }
    let expected_pairs = ranking.d() * (ranking.d() - 1) / 2;
    if ranking.entries().len() != expected_pairs {
        return Err(CoreError::InvalidInput(
            "ranking must cover every unordered pair".into(),
        ));
    }
    if truth.n_edges() == 0 {
        return Err(CoreError::InvalidInput("truth graph has no edges".into()));
    }
    let true_edges: HashSet<(usize, usize)> = truth.edges().iter().copied().collect();
    let n_true = truth.n_edges() as f64;
    let mut tp = 0usize;
    let mut points = Vec::with_capacity(ranking.entries().len());
    for (k, &(pair, _)) in ranking.entries().iter().enumerate() {
        if true_edges.contains(&pair) {
            tp += 1;
        }
        points.push((tp as f64 / n_true, tp as f64 / (k + 1) as f64));
    }

    // Collapse equal-recall runs; within a run precision is highest first.
    let mut collapsed: Vec<(f64, f64)> = Vec::new();
    for &(recall, precision) in &points {
        match collapsed.last_mut() {
            Some((r, p)) if *r == recall => *p = p.max(precision),
            _ => collapsed.push((recall, precision)),
        }
    }
    let anchor = (0.0, points[0].1);
    let mut auc = 0.0;
    let mut prev = anchor;
    for &(recall, precision) in &collapsed {
        auc += (recall - prev.0) * 0.5 * (precision + prev.1);
        prev = (recall, precision);
    }

    let rc090 = points
        .iter()
        .filter(|&&(_, precision)| precision >= 0.90)
        .map(|&(recall, _)| recall)
        .fold(0.0, f64::max);

    Ok(PRCurve { points, auc, rc090 })
}
