//! sRBM construction and block-Gibbs sampling.
//!
//! An Ising model over `d` binary variables is mapped to a sparse restricted
//! Boltzmann machine with one Gaussian hidden unit per edge. The hidden row
//! for edge `{v, w}` (v < w) carries `sqrt(|theta|)` at column `v` and
//! `sign(theta) * sqrt(|theta|)` at column `w`, so the off-diagonal of `W'W`
//! reproduces the interaction matrix and the visible marginal equals the
//! original model. Sampling alternates exact conditional updates of the two
//! layers; every random draw comes from a stream keyed by
//! `(seed, phase, sweep, variable)`, making output independent of how the
//! within-phase updates are scheduled.
//!
//! A brute-force enumeration of the joint distribution (d <= 20) serves as
//! the test oracle.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::model::IsingModel;
use crate::stream::stream_rng;

const KEY_INIT: u64 = 0x01;
const KEY_HIDDEN: u64 = 0x02;
const KEY_VISIBLE: u64 = 0x03;

/// Hidden-unit row of the sparse weight matrix: the two incident columns and
/// their weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRow {
    pub v: usize,
    pub w: usize,
    pub weight_v: f64,
    pub weight_w: f64,
}

/// Sparse sRBM weight matrix plus bias and cached `diag(W'W)`.
///
/// `rows[e]` stores the two non-zeros of hidden unit `e`; `incident[v]` lists
/// `(e, W[e, v])` for the opposite access pattern needed by the visible phase.
#[derive(Debug, Clone)]
pub struct SrbmMapping {
    d: usize,
    rows: Vec<EdgeRow>,
    bias: Vec<f64>,
    wtw_diag: Vec<f64>,
    incident: Vec<Vec<(usize, f64)>>,
}

impl SrbmMapping {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_edges(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[EdgeRow] {
        &self.rows
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn wtw_diag(&self) -> &[f64] {
        &self.wtw_diag
    }

    /// Entry `(a, b)` of `W'W`.
    pub fn wtw(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return self.wtw_diag[a];
        }
        self.rows
            .iter()
            .filter(|r| (r.v == a && r.w == b) || (r.v == b && r.w == a))
            .map(|r| r.weight_v * r.weight_w)
            .sum()
    }
}

/// Build the sRBM for an Ising model.
pub fn build_srbm(model: &IsingModel) -> SrbmMapping {
    let d = model.d();
    let mut rows = Vec::with_capacity(model.graph.n_edges());
    let mut wtw_diag = vec![0.0; d];
    let mut incident: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
    for (e, (&(v, w), &theta)) in model.graph.edges().iter().zip(&model.coupling).enumerate() {
        let root = theta.abs().sqrt();
        let row = EdgeRow {
            v,
            w,
            weight_v: root,
            weight_w: theta.signum() * root,
        };
        wtw_diag[v] += theta.abs();
        wtw_diag[w] += theta.abs();
        incident[v].push((e, row.weight_v));
        incident[w].push((e, row.weight_w));
        rows.push(row);
    }
    SrbmMapping {
        d,
        rows,
        bias: model.bias.clone(),
        wtw_diag,
        incident,
    }
}

/// Binary observation matrix, `n` rows by `d` columns, entries in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Array2<u8>,
}

impl Dataset {
    pub fn new(values: Array2<u8>) -> Result<Self> {
        if values.iter().any(|&x| x > 1) {
            return Err(CoreError::InvalidInput("dataset entries must be 0 or 1".into()));
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<u8> {
        &self.values
    }

    pub fn get(&self, i: usize, v: usize) -> u8 {
        self.values[[i, v]]
    }

    /// Keep only the first `n` rows.
    pub fn truncated(&self, n: usize) -> Dataset {
        Dataset {
            values: self.values.slice(ndarray::s![..n.min(self.n()), ..]).to_owned(),
        }
    }

    /// Headerless CSV, one observation per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.n() * (2 * self.d()));
        for row in self.values.rows() {
            let mut first = true;
            for &x in row {
                if !first {
                    out.push(',');
                }
                out.push(if x == 0 { '0' } else { '1' });
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<u8>> = line
                .split(',')
                .map(|tok| match tok.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(CoreError::Parse(format!("expected 0/1, got `{other}`"))),
                })
                .collect();
            rows.push(row?);
        }
        if rows.is_empty() {
            return Err(CoreError::Parse("empty dataset".into()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(CoreError::Parse("ragged dataset rows".into()));
        }
        let n = rows.len();
        let flat: Vec<u8> = rows.into_iter().flatten().collect();
        let values = Array2::from_shape_vec((n, d), flat)
            .map_err(|e| CoreError::Parse(format!("bad shape: {e}")))?;
        Dataset::new(values)
    }

    /// Compact binary format: magic `SRBM`, little-endian u32 `n` and `d`,
    /// then row-major packed bits (each row byte-aligned, LSB first).
    pub fn to_packed(&self) -> Vec<u8> {
        let (n, d) = (self.n(), self.d());
        let row_bytes = d.div_ceil(8);
        let mut out = Vec::with_capacity(12 + n * row_bytes);
        out.extend_from_slice(b"SRBM");
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&(d as u32).to_le_bytes());
        for row in self.values.rows() {
            let mut bytes = vec![0u8; row_bytes];
            for (j, &x) in row.iter().enumerate() {
                if x == 1 {
                    bytes[j / 8] |= 1 << (j % 8);
                }
            }
            out.extend_from_slice(&bytes);
        }
        out
    }

    pub fn from_packed(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != b"SRBM" {
            return Err(CoreError::Parse("missing SRBM magic".into()));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let row_bytes = d.div_ceil(8);
        if bytes.len() != 12 + n * row_bytes {
            return Err(CoreError::Parse(format!(
                "expected {} payload bytes, got {}",
                n * row_bytes,
                bytes.len() - 12
            )));
        }
        let mut values = Array2::zeros((n, d));
        for i in 0..n {
            let row = &bytes[12 + i * row_bytes..12 + (i + 1) * row_bytes];
            for j in 0..d {
                values[[i, j]] = (row[j / 8] >> (j % 8)) & 1;
            }
        }
        Dataset::new(values)
    }

    /// Mean of each column.
    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.d())
            .map(|v| self.values.column(v).iter().map(|&x| x as f64).sum::<f64>() / n)
            .collect()
    }
}

#[inline]
fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Draw hidden unit `e` at sweep `t`: `N(W_row . x, 1)`.
#[inline]
fn draw_hidden(seed: u64, sweep: u64, e: usize, row: &EdgeRow, x: &[u8]) -> f64 {
    let mean = row.weight_v * x[row.v] as f64 + row.weight_w * x[row.w] as f64;
    let mut rng = stream_rng(seed, &[KEY_HIDDEN, sweep, e as u64]);
    let z: f64 = rng.sample(StandardNormal);
    mean + z
}

/// Draw visible unit `v` at sweep `t`: Bernoulli with success probability
/// `sigma(bias_v - wtw_vv / 2 + y' W[:, v])`.
#[inline]
fn draw_visible(seed: u64, sweep: u64, v: usize, mapping: &SrbmMapping, y: &[f64]) -> u8 {
    let mut field = mapping.bias[v] - 0.5 * mapping.wtw_diag[v];
    for &(e, weight) in &mapping.incident[v] {
        field += y[e] * weight;
    }
    let p = sigmoid(field);
    let mut rng = stream_rng(seed, &[KEY_VISIBLE, sweep, v as u64]);
    if rng.random_range(0.0..1.0) < p {
        1
    } else {
        0
    }
}

/// Block-Gibbs sampler: alternates exact resampling of the hidden layer given
/// the visible layer and vice versa, discards `burn_in` sweeps, then records
/// every `thinning`-th visible configuration until `n` rows are collected.
///
/// The chain starts from i.i.d. fair-coin visible states. Output is a pure
/// function of `(mapping, n, burn_in, thinning, seed)`; `parallel` only
/// switches the within-phase scheduling.
pub fn gibbs_sample(
    mapping: &SrbmMapping,
    n: usize,
    burn_in: usize,
    thinning: usize,
    seed: u64,
    parallel: bool,
) -> Result<Dataset> {
    if n == 0 {
        return Err(CoreError::InvalidInput("sample count must be positive".into()));
    }
    if thinning == 0 {
        return Err(CoreError::InvalidInput("thinning must be positive".into()));
    }
    let d = mapping.d();
    let mut x: Vec<u8> = (0..d)
        .map(|v| {
            let mut rng = stream_rng(seed, &[KEY_INIT, v as u64]);
            u8::from(rng.random_range(0.0..1.0) < 0.5)
        })
        .collect();
    let mut y = vec![0.0f64; mapping.n_edges()];
    let mut values = Array2::zeros((n, d));

    let mut sweep: u64 = 0;
    let mut do_sweep = |x: &mut Vec<u8>, y: &mut Vec<f64>| {
        if parallel {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(e, ye)| *ye = draw_hidden(seed, sweep, e, &mapping.rows[e], x));
            let x_new: Vec<u8> = (0..d)
                .into_par_iter()
                .map(|v| draw_visible(seed, sweep, v, mapping, y))
                .collect();
            *x = x_new;
        } else {
            for (e, ye) in y.iter_mut().enumerate() {
                *ye = draw_hidden(seed, sweep, e, &mapping.rows[e], x);
            }
            for (v, xv) in x.iter_mut().enumerate() {
                *xv = draw_visible(seed, sweep, v, mapping, y);
            }
        }
        sweep += 1;
    };

    for _ in 0..burn_in {
        do_sweep(&mut x, &mut y);
    }
    for i in 0..n {
        for _ in 0..thinning {
            do_sweep(&mut x, &mut y);
        }
        for v in 0..d {
            values[[i, v]] = x[v];
        }
    }
    Dataset::new(values)
}

/// Exact joint distribution over all `2^d` binary outcomes. Outcome `k`
/// assigns variable `v` the bit `(k >> v) & 1`.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    d: usize,
    probs: Vec<f64>,
}

impl ExactDistribution {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, outcome: usize) -> f64 {
        self.probs[outcome]
    }

    /// Total-variation distance to another distribution on the same space.
    pub fn tv_distance(&self, other: &[f64]) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(other)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
    }

    /// Empirical outcome frequencies of a dataset on this space.
    pub fn empirical(data: &Dataset) -> Result<Vec<f64>> {
        if data.d() > 20 {
            return Err(CoreError::InvalidInput("empirical histogram limited to d <= 20".into()));
        }
        let mut freq = vec![0.0; 1usize << data.d()];
        for i in 0..data.n() {
            let mut k = 0usize;
            for v in 0..data.d() {
                k |= (data.get(i, v) as usize) << v;
            }
            freq[k] += 1.0;
        }
        let n = data.n() as f64;
        for f in &mut freq {
            *f /= n;
        }
        Ok(freq)
    }
}

/// Brute-force normalization of the model's unnormalized density (d <= 20).
pub fn enumerate_distribution(model: &IsingModel) -> Result<ExactDistribution> {
    let d = model.d();
    if d > 20 {
        return Err(CoreError::InvalidInput(format!(
            "enumeration limited to d <= 20, got d={d}"
        )));
    }
    let size = 1usize << d;
    let edges = model.graph.edges();
    let mut logw = vec![0.0f64; size];
    for (k, lw) in logw.iter_mut().enumerate() {
        let mut s = 0.0;
        for (v, &b) in model.bias.iter().enumerate() {
            if (k >> v) & 1 == 1 {
                s += b;
            }
        }
        for (&(v, w), &theta) in edges.iter().zip(&model.coupling) {
            if (k >> v) & 1 == 1 && (k >> w) & 1 == 1 {
                s += theta;
            }
        }
        *lw = s;
    }
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logw.iter().map(|&lw| (lw - max).exp()).collect();
    let z: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= z;
    }
    Ok(ExactDistribution { d, probs })
}

/// Marginalize an exact distribution onto the pair `(a, b)`; entry `[x_a][x_b]`.
pub fn exact_pair_marginal(dist: &ExactDistribution, a: usize, b: usize) -> Result<[[f64; 2]; 2]> {
    if a == b {
        return Err(CoreError::InvalidInput("pair marginal needs two distinct nodes".into()));
    }
    if a >= dist.d || b >= dist.d {
        return Err(CoreError::InvalidInput("node out of range".into()));
    }
    let mut table = [[0.0; 2]; 2];
    for (k, &p) in dist.probs.iter().enumerate() {
        let xa = (k >> a) & 1;
        let xb = (k >> b) & 1;
        table[xa][xb] += p;
    }
    Ok(table)
}
