//! Pairwise structure-learning methods: smoothed mutual information and the
//! three post-processing steps that try to separate direct from indirect
//! dependence (CLR background correction, ARACNE triplet filtering, network
//! deconvolution).

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::sampler::Dataset;

/// Symmetric `d x d` matrix of edge-interaction scores with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    scores: Array2<f64>,
}

impl ScoreMatrix {
    /// Wrap a square matrix, rejecting asymmetry beyond 1e-9 and zeroing the
    /// diagonal; tiny asymmetry from floating-point reassembly is averaged
    /// away.
    pub fn new(mut scores: Array2<f64>) -> Result<Self> {
        let d = scores.nrows();
        if scores.ncols() != d {
            return Err(CoreError::InvalidInput("score matrix must be square".into()));
        }
        for a in 0..d {
            for b in (a + 1)..d {
                let (x, y) = (scores[[a, b]], scores[[b, a]]);
                if (x - y).abs() > 1e-9 * (1.0 + x.abs().max(y.abs())) {
                    return Err(CoreError::InvalidInput(format!(
                        "asymmetric scores at ({a}, {b}): {x} vs {y}"
                    )));
                }
                let avg = 0.5 * (x + y);
                scores[[a, b]] = avg;
                scores[[b, a]] = avg;
            }
            scores[[a, a]] = 0.0;
        }
        Ok(Self { scores })
    }

    pub fn zeros(d: usize) -> Self {
        Self { scores: Array2::zeros((d, d)) }
    }

    pub fn d(&self) -> usize {
        self.scores.nrows()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.scores[[a, b]]
    }

    /// Set the symmetric pair `(a, b)`; the diagonal cannot be touched.
    pub fn set(&mut self, a: usize, b: usize, value: f64) {
        assert_ne!(a, b, "diagonal is structurally zero");
        self.scores[[a, b]] = value;
        self.scores[[b, a]] = value;
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.scores
    }

    /// All unordered pairs `(a, b)` with `a < b` and their scores.
    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        let d = self.d();
        (0..d).flat_map(move |a| ((a + 1)..d).map(move |b| ((a, b), self.scores[[a, b]])))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.scores.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f64>> = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| CoreError::Parse(format!("bad score `{tok}`: {e}")))
                })
                .collect();
            rows.push(row?);
        }
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(CoreError::Parse("score matrix must be square".into()));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Self::new(Array2::from_shape_vec((d, d), flat).expect("shape checked"))
    }
}

/// Per-column bit masks for fast pair counting.
fn column_bits(data: &Dataset) -> Vec<Vec<u64>> {
    let (n, d) = (data.n(), data.d());
    let words = n.div_ceil(64);
    let mut bits = vec![vec![0u64; words]; d];
    for i in 0..n {
        for (v, col) in bits.iter_mut().enumerate() {
            if data.get(i, v) == 1 {
                col[i / 64] |= 1 << (i % 64);
            }
        }
    }
    bits
}

fn count_ones(bits: &[u64]) -> usize {
    bits.iter().map(|w| w.count_ones() as usize).sum()
}

fn count_joint_ones(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

/// Smoothed mutual information of one pair from its joint counts
/// `(c00, c01, c10, c11)`: a pseudo-count of 1/4 is added to each cell and MI
/// is taken in natural log.
pub fn smoothed_mi_from_counts(counts: [usize; 4], n: usize) -> f64 {
    let total = n as f64 + 1.0;
    let joint: Vec<f64> = counts.iter().map(|&c| (c as f64 + 0.25) / total).collect();
    let pa = [joint[0] + joint[1], joint[2] + joint[3]];
    let pb = [joint[0] + joint[2], joint[1] + joint[3]];
    let mut mi = 0.0;
    for xa in 0..2 {
        for xb in 0..2 {
            let p = joint[2 * xa + xb];
            mi += p * (p / (pa[xa] * pb[xb])).ln();
        }
    }
    mi
}

/// Mutual information between every pair of columns, estimated with the
/// pseudo-count smoothing above.
pub fn mutual_information_matrix(data: &Dataset) -> Result<ScoreMatrix> {
    let (n, d) = (data.n(), data.d());
    if n == 0 {
        return Err(CoreError::InvalidInput("empty dataset".into()));
    }
    if d < 2 {
        return Err(CoreError::InvalidInput("need at least two variables".into()));
    }
    let bits = column_bits(data);
    let ones: Vec<usize> = bits.iter().map(|c| count_ones(c)).collect();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| ((a + 1)..d).map(move |b| (a, b))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let c11 = count_joint_ones(&bits[a], &bits[b]);
            let c10 = ones[a] - c11;
            let c01 = ones[b] - c11;
            let c00 = n - c11 - c10 - c01;
            smoothed_mi_from_counts([c00, c01, c10, c11], n)
        })
        .collect();
    let mut out = ScoreMatrix::zeros(d);
    for (&(a, b), &mi) in pairs.iter().zip(&values) {
        out.set(a, b, mi);
    }
    Ok(out)
}

/// CLR background correction: per-node z-scores of the MI values (negatives
/// clipped to zero), combined as `sqrt(z_a^2 + z_b^2)`.
///
/// The background of node `v` is the mean and sample standard deviation
/// (divisor d - 2) of the d - 1 off-diagonal MI values involving `v`; a
/// degenerate background (zero or undefined spread) contributes z = 0.
pub fn clr(mi: &ScoreMatrix) -> ScoreMatrix {
    let d = mi.d();
    let mut mean = vec![0.0; d];
    let mut sd = vec![0.0; d];
    for v in 0..d {
        let vals: Vec<f64> = (0..d).filter(|&w| w != v).map(|w| mi.get(v, w)).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        mean[v] = m;
        if vals.len() > 1 {
            let var = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
            sd[v] = var.sqrt();
        }
    }
    let z = |v: usize, w: usize| {
        if sd[v] > 0.0 {
            ((mi.get(v, w) - mean[v]) / sd[v]).max(0.0)
        } else {
            0.0
        }
    };
    let mut out = ScoreMatrix::zeros(d);
    for a in 0..d {
        for b in (a + 1)..d {
            let (za, zb) = (z(a, b), z(b, a));
            out.set(a, b, (za * za + zb * zb).sqrt());
        }
    }
    out
}

/// ARACNE triplet filter with an explicit triplet evaluation order.
///
/// Every triplet is judged against the original matrix and removals are
/// applied afterwards, so the order cannot change the result; it is exposed
/// so that tests can demonstrate exactly that.
pub fn aracne_ordered(
    mi: &ScoreMatrix,
    tolerance: f64,
    triplets: &[(usize, usize, usize)],
) -> ScoreMatrix {
    let mut removed: Vec<(usize, usize)> = Vec::new();
    for &(a, b, c) in triplets {
        let mut edges = [
            (mi.get(a, b), (a, b)),
            (mi.get(a, c), (a, c)),
            (mi.get(b, c), (b, c)),
        ];
        if edges.iter().any(|&(value, _)| value <= 0.0) {
            continue; // not mutually connected
        }
        edges.sort_by(|x, y| x.0.total_cmp(&y.0));
        if edges[0].0 + tolerance < edges[1].0 {
            removed.push(edges[0].1);
        }
    }
    let mut out = mi.clone();
    for (a, b) in removed {
        out.set(a, b, 0.0);
    }
    out
}

/// ARACNE: for every mutually connected triplet, the weakest of the three
/// edges is marked for removal when the middle value exceeds it by more than
/// `tolerance`; marked edges are zeroed in the output.
pub fn aracne(mi: &ScoreMatrix, tolerance: f64) -> ScoreMatrix {
    let d = mi.d();
    let triplets: Vec<(usize, usize, usize)> = (0..d)
        .flat_map(|a| {
            ((a + 1)..d).flat_map(move |b| ((b + 1)..d).map(move |c| (a, b, c)))
        })
        .collect();
    aracne_ordered(mi, tolerance, &triplets)
}

fn symmetric_eigen(m: &Array2<f64>) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    let d = m.nrows();
    let dm = nalgebra::DMatrix::from_fn(d, d, |i, j| m[[i, j]]);
    let eig = nalgebra::SymmetricEigen::new(dm);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn reassemble(eigvecs: &nalgebra::DMatrix<f64>, mapped: &[f64]) -> Array2<f64> {
    let d = mapped.len();
    let diag = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(mapped));
    let recomposed = eigvecs * diag * eigvecs.transpose();
    Array2::from_shape_fn((d, d), |(i, j)| recomposed[(i, j)])
}

fn check_symmetric(obs: &Array2<f64>) -> Result<()> {
    let d = obs.nrows();
    if obs.ncols() != d {
        return Err(CoreError::InvalidInput("matrix must be square".into()));
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let (x, y) = (obs[[i, j]], obs[[j, i]]);
            if (x - y).abs() > 1e-9 * (1.0 + x.abs().max(y.abs())) {
                return Err(CoreError::InvalidInput("matrix must be symmetric".into()));
            }
        }
    }
    Ok(())
}

/// Invert the geometric-series map on a symmetric matrix without rescaling:
/// each eigenvalue is sent through `lambda / (1 + lambda)`.
pub fn deconvolve_matrix(obs: &Array2<f64>) -> Result<Array2<f64>> {
    check_symmetric(obs)?;
    let (eigvals, eigvecs) = symmetric_eigen(obs);
    let mut mapped = Vec::with_capacity(eigvals.len());
    for &lambda in &eigvals {
        if (1.0 + lambda).abs() < 1e-12 {
            return Err(CoreError::InvalidInput(
                "eigenvalue at -1 cannot be deconvolved".into(),
            ));
        }
        mapped.push(lambda / (1.0 + lambda));
    }
    Ok(reassemble(&eigvecs, &mapped))
}

/// Deconvolve with the linear rescaling used in practice: the observation is
/// scaled by `gamma` so that the largest mapped magnitude
/// `|gamma lambda / (1 + gamma lambda)|` equals `beta`.
pub fn deconvolve_matrix_scaled(obs: &Array2<f64>, beta: f64) -> Result<Array2<f64>> {
    if !(0.0 < beta && beta < 1.0) {
        return Err(CoreError::InvalidInput(format!("beta must lie in (0, 1), got {beta}")));
    }
    check_symmetric(obs)?;
    let (eigvals, eigvecs) = symmetric_eigen(obs);
    let lam_pos = eigvals.iter().cloned().fold(0.0f64, f64::max);
    let lam_neg = -eigvals.iter().cloned().fold(0.0f64, f64::min);
    // Smallest admissible divisor: binding either the positive ceiling
    // beta = lam_pos / (m + lam_pos) or the negative one beta = lam_neg / (m - lam_neg).
    let m = (lam_pos * (1.0 - beta) / beta).max(lam_neg * (1.0 + beta) / beta);
    if m == 0.0 {
        return Ok(Array2::zeros((obs.nrows(), obs.ncols())));
    }
    let mapped: Vec<f64> = eigvals.iter().map(|&l| l / (m + l)).collect();
    Ok(reassemble(&eigvecs, &mapped))
}

/// Network deconvolution of a score matrix; the output diagonal is zeroed
/// since only off-diagonal scores rank edges.
pub fn network_deconvolution(obs: &ScoreMatrix, beta: f64) -> Result<ScoreMatrix> {
    let dir = deconvolve_matrix_scaled(obs.matrix(), beta)?;
    ScoreMatrix::new(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{draw_parameters, Graph, IsingModel};
    use crate::sampler::{enumerate_distribution, exact_pair_marginal, gibbs_sample, build_srbm};
    use crate::stream::stream_rng;
    use ndarray::Array2;
    use rand::Rng;

    fn dataset_from_rows(rows: &[&[u8]]) -> Dataset {
        let n = rows.len();
        let d = rows[0].len();
        let flat: Vec<u8> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Dataset::new(Array2::from_shape_vec((n, d), flat).unwrap()).unwrap()
    }

    #[test]
    fn mi_uniform_counts_is_zero() {
        let data = dataset_from_rows(&[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
        let mi = mutual_information_matrix(&data).unwrap();
        assert!(mi.get(0, 1).abs() < 1e-15);
    }

    #[test]
    fn mi_diagonal_counts_known_value() {
        // counts (2, 0, 0, 2) at n = 4: smoothed joint (0.45, 0.05, 0.05, 0.45)
        let data = dataset_from_rows(&[&[0, 0], &[0, 0], &[1, 1], &[1, 1]]);
        let mi = mutual_information_matrix(&data).unwrap();
        let expect = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        assert!((mi.get(0, 1) - expect).abs() < 1e-12);
    }

    /// Reference evaluation of the smoothed estimator from raw joint counts,
    /// written independently of the bitset counting path.
    fn direct_mi(data: &Dataset, a: usize, b: usize) -> f64 {
        let mut counts = [0.0f64; 4];
        for i in 0..data.n() {
            counts[2 * data.get(i, a) as usize + data.get(i, b) as usize] += 1.0;
        }
        let total = data.n() as f64 + 1.0;
        let p: Vec<f64> = counts.iter().map(|c| (c + 0.25) / total).collect();
        let pa = [p[0] + p[1], p[2] + p[3]];
        let pb = [p[0] + p[2], p[1] + p[3]];
        let mut mi = 0.0;
        for xa in 0..2 {
            for xb in 0..2 {
                let joint = p[2 * xa + xb];
                mi += joint * (joint / (pa[xa] * pb[xb])).ln();
            }
        }
        mi
    }

    #[test]
    fn mi_matches_direct_evaluation_on_random_data() {
        let mut rng = stream_rng(17, &[0]);
        for _ in 0..5 {
            let n = 64 + rng.random_range(0..64);
            let d = 4;
            let values = Array2::from_shape_fn((n, d), |_| rng.random_range(0..2u8));
            let data = Dataset::new(values).unwrap();
            let mi = mutual_information_matrix(&data).unwrap();
            for a in 0..d {
                for b in (a + 1)..d {
                    assert!((mi.get(a, b) - direct_mi(&data, a, b)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn mi_constant_column_positive_from_smoothing() {
        let data = dataset_from_rows(&[&[0, 1], &[0, 0], &[0, 1], &[0, 1]]);
        let mi = mutual_information_matrix(&data).unwrap();
        assert!((mi.get(0, 1) - direct_mi(&data, 0, 1)).abs() < 1e-14);
        assert!(mi.get(0, 1) > 0.0);
    }

    #[test]
    fn mi_invariant_under_label_flip() {
        let mut rng = stream_rng(23, &[1]);
        let values = Array2::from_shape_fn((50, 3), |_| rng.random_range(0..2u8));
        let data = Dataset::new(values.clone()).unwrap();
        let mut flipped = values;
        for x in flipped.column_mut(1).iter_mut() {
            *x = 1 - *x;
        }
        let data_flipped = Dataset::new(flipped).unwrap();
        let a = mutual_information_matrix(&data).unwrap();
        let b = mutual_information_matrix(&data_flipped).unwrap();
        for v in 0..3 {
            for w in (v + 1)..3 {
                assert!((a.get(v, w) - b.get(v, w)).abs() < 1e-12);
                assert!(a.get(v, w) >= 0.0);
            }
        }
    }

    #[test]
    fn clr_flat_background_is_zero() {
        let mut mi = ScoreMatrix::zeros(4);
        for a in 0..4 {
            for b in (a + 1)..4 {
                mi.set(a, b, 0.3);
            }
        }
        let f = clr(&mi);
        for a in 0..4 {
            for b in (a + 1)..4 {
                assert_eq!(f.get(a, b), 0.0);
            }
        }
    }

    #[test]
    fn clr_three_node_hand_evaluation() {
        let mut mi = ScoreMatrix::zeros(3);
        mi.set(0, 1, 0.4);
        mi.set(0, 2, 0.1);
        mi.set(1, 2, 0.1);
        // Node 0 background: mean 0.25, sample sd over {0.4, 0.1} = sqrt(0.045).
        let sd = 0.045f64.sqrt();
        let z0 = (0.4 - 0.25) / sd;
        // Node 1 background is identical by symmetry.
        let expect = (2.0 * z0 * z0).sqrt();
        let f = clr(&mi);
        assert!((f.get(0, 1) - expect).abs() < 1e-12, "got {}", f.get(0, 1));
        // Node 2 background {0.1, 0.1} has zero spread: z = 0 for its pairs.
        let z01 = ((0.1 - 0.25) / sd).max(0.0); // negative, clipped
        assert_eq!(z01, 0.0);
        assert_eq!(f.get(0, 2), 0.0);
    }

    #[test]
    fn clr_location_invariance_and_symmetry() {
        let mut rng = stream_rng(5, &[2]);
        let mut mi = ScoreMatrix::zeros(6);
        for a in 0..6 {
            for b in (a + 1)..6 {
                mi.set(a, b, rng.random_range(0.0..1.0));
            }
        }
        let mut shifted = mi.clone();
        for a in 0..6 {
            for b in (a + 1)..6 {
                shifted.set(a, b, mi.get(a, b) + 5.0);
            }
        }
        let f = clr(&mi);
        let g = clr(&shifted);
        for a in 0..6 {
            for b in (a + 1)..6 {
                assert!((f.get(a, b) - g.get(a, b)).abs() < 1e-9);
                assert!(f.get(a, b) >= 0.0);
                assert_eq!(f.get(a, b), f.get(b, a));
            }
        }
    }

    fn dpi_reference_instance() -> ScoreMatrix {
        let mut mi = ScoreMatrix::zeros(4);
        mi.set(0, 1, 5.0);
        mi.set(0, 2, 4.0);
        mi.set(1, 2, 3.0);
        mi.set(2, 3, 2.0);
        mi.set(1, 3, 1.0);
        // (0, 3) stays zero: not an edge.
        mi
    }

    #[test]
    fn aracne_reference_instance() {
        let out = aracne(&dpi_reference_instance(), 0.0);
        assert_eq!(out.get(1, 2), 0.0); // weaker than both 0-1 and 0-2
        assert_eq!(out.get(1, 3), 0.0); // weaker than both 1-2 and 2-3
        assert_eq!(out.get(0, 1), 5.0);
        assert_eq!(out.get(0, 2), 4.0);
        assert_eq!(out.get(2, 3), 2.0);
    }

    #[test]
    fn aracne_order_invariance() {
        let mi = dpi_reference_instance();
        let baseline = aracne(&mi, 0.0);
        let mut triplets: Vec<(usize, usize, usize)> = (0..4)
            .flat_map(|a| ((a + 1)..4).flat_map(move |b| ((b + 1)..4).map(move |c| (a, b, c))))
            .collect();
        let mut rng = stream_rng(31, &[7]);
        for _ in 0..20 {
            // Fisher-Yates shuffle.
            for i in (1..triplets.len()).rev() {
                let j = rng.random_range(0..=i);
                triplets.swap(i, j);
            }
            assert_eq!(aracne_ordered(&mi, 0.0, &triplets), baseline);
        }
    }

    #[test]
    fn aracne_triangle_loses_weakest_edge() {
        let mut mi = ScoreMatrix::zeros(3);
        mi.set(0, 1, 0.9);
        mi.set(0, 2, 0.5);
        mi.set(1, 2, 0.2);
        let out = aracne(&mi, 0.0);
        assert_eq!(out.get(1, 2), 0.0);
        assert_eq!(out.get(0, 1), 0.9);
        assert_eq!(out.get(0, 2), 0.5);
        // Exact ties keep the edge.
        let mut tie = ScoreMatrix::zeros(3);
        tie.set(0, 1, 0.9);
        tie.set(0, 2, 0.2);
        tie.set(1, 2, 0.2);
        let out = aracne(&tie, 0.0);
        assert_eq!(out.get(0, 2), 0.2);
        assert_eq!(out.get(1, 2), 0.2);
    }

    #[test]
    fn aracne_exact_mi_keeps_true_chain_edges() {
        // Exact MI of a 4-chain from enumeration: DPI holds on trees, so no
        // true edge may be removed.
        let graph = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let model = IsingModel::new(graph, vec![0.2, -0.1, 0.3, 0.0], vec![1.4, -1.2, 1.7]).unwrap();
        let dist = enumerate_distribution(&model).unwrap();
        let mut mi = ScoreMatrix::zeros(4);
        for a in 0..4 {
            for b in (a + 1)..4 {
                let t = exact_pair_marginal(&dist, a, b).unwrap();
                let pa = [t[0][0] + t[0][1], t[1][0] + t[1][1]];
                let pb = [t[0][0] + t[1][0], t[0][1] + t[1][1]];
                let mut value = 0.0;
                for xa in 0..2 {
                    for xb in 0..2 {
                        value += t[xa][xb] * (t[xa][xb] / (pa[xa] * pb[xb])).ln();
                    }
                }
                mi.set(a, b, value);
            }
        }
        let out = aracne(&mi, 0.0);
        for &(a, b) in model.graph.edges() {
            assert!(out.get(a, b) > 0.0, "true edge ({a}, {b}) removed");
        }
    }

    #[test]
    fn aracne_output_zeroes_subset_and_is_idempotent() {
        let mut rng = stream_rng(41, &[9]);
        for _ in 0..10 {
            let mut mi = ScoreMatrix::zeros(6);
            for a in 0..6 {
                for b in (a + 1)..6 {
                    mi.set(a, b, rng.random_range(0.0..1.0));
                }
            }
            let out = aracne(&mi, 0.0);
            for a in 0..6 {
                for b in (a + 1)..6 {
                    let v = out.get(a, b);
                    assert!(v == 0.0 || v == mi.get(a, b));
                }
            }
            // Triangles that survive with all three edges were tied, and
            // zeroed edges disconnect their triplets, so a second pass
            // changes nothing.
            assert_eq!(aracne(&out, 0.0), out);
        }
    }

    #[test]
    fn nd_zero_matrix_fixed_point() {
        let obs = ScoreMatrix::zeros(5);
        let out = network_deconvolution(&obs, 0.95).unwrap();
        assert_eq!(out, ScoreMatrix::zeros(5));
    }

    fn random_symmetric(d: usize, radius: f64, seed: u64) -> Array2<f64> {
        let mut rng = stream_rng(seed, &[3]);
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            for j in i..d {
                let x = rng.random_range(-1.0..1.0);
                m[[i, j]] = x;
                m[[j, i]] = x;
            }
        }
        let (eigvals, _) = symmetric_eigen(&m);
        let rho = eigvals.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
        m.mapv_inplace(|x| x * radius / rho);
        m
    }

    #[test]
    fn nd_inverts_truncated_geometric_series() {
        for seed in 0..3 {
            let dir = random_symmetric(8, 0.9, seed);
            // Independent forward map: sum dir^k for k = 1.. until negligible.
            let mut obs = dir.clone();
            let mut power = dir.clone();
            for _ in 0..600 {
                power = power.dot(&dir);
                obs += &power;
            }
            let rec = deconvolve_matrix(&obs).unwrap();
            let err = (&rec - &dir).iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            assert!(err < 1e-8, "seed {seed}: max error {err}");
        }
    }

    #[test]
    fn nd_eigen_path_agrees_with_direct_inverse() {
        let obs = random_symmetric(7, 0.8, 11);
        let rec = deconvolve_matrix(&obs).unwrap();
        let d = obs.nrows();
        let dm = nalgebra::DMatrix::from_fn(d, d, |i, j| obs[[i, j]]);
        let inv = (nalgebra::DMatrix::identity(d, d) + dm.clone())
            .try_inverse()
            .unwrap();
        let direct = dm * inv;
        for i in 0..d {
            for j in 0..d {
                assert!((rec[[i, j]] - direct[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn nd_scaled_output_symmetric_and_bounded() {
        let obs = random_symmetric(6, 3.0, 4);
        let beta = 0.95;
        let out = deconvolve_matrix_scaled(&obs, beta).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((out[[i, j]] - out[[j, i]]).abs() < 1e-10);
            }
        }
        let (eigvals, _) = symmetric_eigen(&out);
        let max_abs = eigvals.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        assert!((max_abs - beta).abs() < 1e-9, "binding eigenvalue {max_abs}");
        assert!(deconvolve_matrix_scaled(&obs, 1.5).is_err());
    }

    /// Exact pairwise MI of an enumerable model.
    fn exact_mi(dist: &crate::sampler::ExactDistribution, a: usize, b: usize) -> f64 {
        let t = exact_pair_marginal(dist, a, b).unwrap();
        let pa = [t[0][0] + t[0][1], t[1][0] + t[1][1]];
        let pb = [t[0][0] + t[1][0], t[0][1] + t[1][1]];
        let mut value = 0.0;
        for xa in 0..2 {
            for xb in 0..2 {
                value += t[xa][xb] * (t[xa][xb] / (pa[xa] * pb[xb])).ln();
            }
        }
        value
    }

    #[test]
    fn mi_consistency_toward_exact_value() {
        // Sample a 4-node model once; the total error across all pairs vs the
        // exact MI must shrink as the sample grows.
        let graph = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        let model = draw_parameters(&graph, &mut stream_rng(2, &[6]));
        let dist = enumerate_distribution(&model).unwrap();
        let data = gibbs_sample(&build_srbm(&model), 10_000, 500, 5, 21, false).unwrap();
        let mut errs = Vec::new();
        for n in [100, 1000, 10_000] {
            let mi = mutual_information_matrix(&data.truncated(n)).unwrap();
            let total: f64 = (0..4)
                .flat_map(|a| ((a + 1)..4).map(move |b| (a, b)))
                .map(|(a, b)| (mi.get(a, b) - exact_mi(&dist, a, b)).abs())
                .sum();
            errs.push(total);
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "errors {errs:?}");
    }

    #[test]
    fn score_matrix_csv_round_trip_and_validation() {
        let mi = dpi_reference_instance();
        let back = ScoreMatrix::from_csv(&mi.to_csv()).unwrap();
        assert_eq!(mi, back);
        let mut bad = Array2::zeros((2, 2));
        bad[[0, 1]] = 1.0;
        assert!(ScoreMatrix::new(bad).is_err());
    }
}
