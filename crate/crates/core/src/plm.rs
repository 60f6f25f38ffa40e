//! Asymmetric pseudo-likelihood methods.
//!
//! Each node is fit as an independent penalized logistic regression of that
//! variable on all others. The entry at the node's own index plays the role
//! of the bias; every other entry is an asymmetric coupling estimate.
//!
//! * `fit_node_l2` maximizes the L2-penalized node conditional likelihood
//!   with L-BFGS (plmDCA building block).
//! * `plml1_path` runs coordinate descent with exact soft-threshold zeros
//!   along a descending penalty grid, warm-started (plmL1 building block).
//!
//! Gradient tolerances are per observation: internally objectives are scaled
//! by `1/n` so convergence thresholds do not depend on the sample size.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::pairwise::ScoreMatrix;
use crate::sampler::Dataset;

/// Parameter vector of one node problem: entry `node` is the bias, entry
/// `w != node` the asymmetric coupling toward `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeParameters {
    pub node: usize,
    pub theta: Vec<f64>,
}

/// Edge-inclusion rule for combining the two asymmetric L1 estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRule {
    /// Edge present when either direction is non-zero (the default).
    Max,
    /// Edge present only when both directions are non-zero.
    Min,
}

/// Solutions along a descending L1 penalty grid.
#[derive(Debug, Clone)]
pub struct L1Path {
    /// Strictly descending penalty grid.
    pub lambdas: Vec<f64>,
    /// `[v][w]`: largest grid penalty at which the coupling of node `v`
    /// toward `w` first became non-zero; 0 when it never activated.
    pub first_activation: Array2<f64>,
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

#[inline]
fn log1pexp(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

fn design_matrix(data: &Dataset) -> Array2<f64> {
    Array2::from_shape_fn((data.n(), data.d()), |(i, j)| data.get(i, j) as f64)
}

/// Linear predictor per row: `theta_v + sum_{w != v} x_w theta_w`.
fn linear_predictor(x: &Array2<f64>, node: usize, theta: &[f64]) -> Array1<f64> {
    let theta_arr = Array1::from_vec(theta.to_vec());
    let mut eta = x.dot(&theta_arr);
    let bias = theta[node];
    for (e, &xv) in eta.iter_mut().zip(x.column(node)) {
        *e += bias * (1.0 - xv);
    }
    eta
}

/// Unpenalized node conditional log-likelihood:
/// `sum_i x_v eta_i - log(1 + exp(eta_i))`.
pub fn node_objective(params: &NodeParameters, data: &Dataset) -> f64 {
    let x = design_matrix(data);
    node_objective_inner(&x, params.node, &params.theta)
}

fn node_objective_inner(x: &Array2<f64>, node: usize, theta: &[f64]) -> f64 {
    let eta = linear_predictor(x, node, theta);
    x.column(node)
        .iter()
        .zip(&eta)
        .map(|(&xv, &e)| xv * e - log1pexp(e))
        .sum()
}

/// Gradient of `node_objective`; the bias entry uses coefficient 1.
pub fn node_gradient(params: &NodeParameters, data: &Dataset) -> Vec<f64> {
    let x = design_matrix(data);
    node_gradient_inner(&x, params.node, &params.theta)
}

fn node_gradient_inner(x: &Array2<f64>, node: usize, theta: &[f64]) -> Vec<f64> {
    let eta = linear_predictor(x, node, theta);
    let resid: Array1<f64> = x
        .column(node)
        .iter()
        .zip(&eta)
        .map(|(&xv, &e)| xv - sigmoid(e))
        .collect();
    let mut grad = x.t().dot(&resid).to_vec();
    grad[node] = resid.sum();
    grad
}

const LBFGS_MEMORY: usize = 10;
const LBFGS_MAX_ITER: usize = 500;
const GRAD_TOL_PER_OBS: f64 = 1e-6;

/// Objective evaluation returning the value and gradient.
type ValueGrad<'a> = &'a dyn Fn(&[f64]) -> (f64, Vec<f64>);

/// L-BFGS minimizer with Armijo backtracking. `f_grad` returns the value and
/// gradient; converges when the gradient max-norm falls below `tol`.
fn minimize_lbfgs(
    f_grad: ValueGrad<'_>,
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let mut x = x0;
    let (mut fx, mut grad) = f_grad(&x);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let inf_norm = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));

    for _ in 0..max_iter {
        if inf_norm(&grad) < tol {
            return Ok(x);
        }
        // Two-loop recursion.
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / y.iter().zip(s).map(|(a, b)| a * b).sum::<f64>();
            let alpha = rho * s.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= alpha * yi;
            }
            alphas.push((rho, alpha));
        }
        let gamma = if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
            let yy: f64 = y.iter().map(|a| a * a).sum();
            sy / yy
        } else {
            1.0
        };
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y), &(rho, alpha)) in s_hist.iter().zip(&y_hist).zip(alphas.iter().rev()) {
            let beta = rho * y.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (alpha - beta) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|&v| -v).collect();
        let mut slope: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // Curvature information went stale; fall back to steepest descent.
            dir = grad.iter().map(|&g| -g).collect();
            slope = -grad.iter().map(|g| g * g).sum::<f64>();
            s_hist.clear();
            y_hist.clear();
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = f_grad(&trial);
            if ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            // No representable improvement along the direction; accept the
            // current point only if the gradient is already essentially flat.
            if inf_norm(&grad) < tol * 10.0 {
                return Ok(x);
            }
            return Err(CoreError::NoConvergence(
                "line search stalled before reaching gradient tolerance".into(),
            ));
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 * s.iter().map(|v| v * v).sum::<f64>().sqrt() * y.iter().map(|v| v * v).sum::<f64>().sqrt() {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > LBFGS_MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        x = x_new;
        fx = f_new;
        grad = g_new;
    }
    if inf_norm(&grad) < tol {
        Ok(x)
    } else {
        Err(CoreError::NoConvergence(format!(
            "L-BFGS hit the {LBFGS_MAX_ITER}-iteration cap at gradient norm {:.3e}",
            inf_norm(&grad)
        )))
    }
}

/// Maximize the L2-penalized node conditional likelihood
/// `node_objective - lambda_bias theta_v^2 - lambda_couple sum theta_w^2`
/// from a caller-supplied starting point.
pub fn fit_node_l2_from(
    data: &Dataset,
    node: usize,
    lambda_bias: f64,
    lambda_couple: f64,
    init: &[f64],
) -> Result<NodeParameters> {
    let x = design_matrix(data);
    fit_node_l2_inner(&x, data.n(), node, lambda_bias, lambda_couple, init.to_vec())
}

/// Maximize the L2-penalized node conditional likelihood from zero.
pub fn fit_node_l2(
    data: &Dataset,
    node: usize,
    lambda_bias: f64,
    lambda_couple: f64,
) -> Result<NodeParameters> {
    fit_node_l2_from(data, node, lambda_bias, lambda_couple, &vec![0.0; data.d()])
}

fn fit_node_l2_inner(
    x: &Array2<f64>,
    n: usize,
    node: usize,
    lambda_bias: f64,
    lambda_couple: f64,
    init: Vec<f64>,
) -> Result<NodeParameters> {
    if n == 0 {
        return Err(CoreError::InvalidInput("empty dataset".into()));
    }
    let scale = 1.0 / n as f64;
    let f_grad = |theta: &[f64]| -> (f64, Vec<f64>) {
        let obj = node_objective_inner(x, node, theta);
        let mut grad = node_gradient_inner(x, node, theta);
        let mut penalty = 0.0;
        for (w, (g, &t)) in grad.iter_mut().zip(theta).enumerate() {
            let lambda = if w == node { lambda_bias } else { lambda_couple };
            penalty += lambda * t * t;
            *g -= 2.0 * lambda * t;
        }
        let f = -(obj - penalty) * scale;
        let g: Vec<f64> = grad.iter().map(|&v| -v * scale).collect();
        (f, g)
    };
    let theta = minimize_lbfgs(&f_grad, init, GRAD_TOL_PER_OBS, LBFGS_MAX_ITER)?;
    Ok(NodeParameters { node, theta })
}

/// Fit every node with the same penalties. Node problems are independent;
/// they are scheduled in parallel and the output order is by node index.
pub fn fit_all_nodes_l2(
    data: &Dataset,
    lambda_bias: f64,
    lambda_couple: f64,
) -> Result<Vec<NodeParameters>> {
    let x = design_matrix(data);
    let n = data.n();
    (0..data.d())
        .into_par_iter()
        .map(|v| fit_node_l2_inner(&x, n, v, lambda_bias, lambda_couple, vec![0.0; data.d()]))
        .collect()
}

/// Per-column lists of the rows where the column is 1, shared by the
/// coordinate-descent solvers.
fn ones_lists(data: &Dataset) -> Vec<Vec<u32>> {
    let mut ones = vec![Vec::new(); data.d()];
    for i in 0..data.n() {
        for (v, list) in ones.iter_mut().enumerate() {
            if data.get(i, v) == 1 {
                list.push(i as u32);
            }
        }
    }
    ones
}

/// Bias of the couplings-free fit: the logit of the column mean, with a
/// half-count adjustment so constant columns stay finite.
fn bias_only_estimate(ones_count: usize, n: usize) -> f64 {
    if ones_count == 0 || ones_count == n {
        let p = (ones_count as f64 + 0.5) / (n as f64 + 1.0);
        (p / (1.0 - p)).ln()
    } else {
        let p = ones_count as f64 / n as f64;
        (p / (1.0 - p)).ln()
    }
}

/// Smallest penalty forcing every coupling of every node to zero: the largest
/// magnitude of a coupling gradient entry at the bias-only solutions.
pub fn lambda_max(data: &Dataset) -> Result<f64> {
    let (n, d) = (data.n(), data.d());
    if n == 0 {
        return Err(CoreError::InvalidInput("empty dataset".into()));
    }
    let x = design_matrix(data);
    let cross = x.t().dot(&x); // cross[v][w] = sum_i x_iv x_iw
    let sums: Vec<f64> = (0..d).map(|v| cross[[v, v]]).collect();
    let mut max = 0.0f64;
    for v in 0..d {
        let p_bar = sums[v] / n as f64;
        for w in 0..d {
            if w == v {
                continue;
            }
            max = max.max((cross[[v, w]] - p_bar * sums[w]).abs());
        }
    }
    // Inflate by one part in 1e10 so the zero-coupling KKT condition holds
    // strictly even when gradient sums are accumulated in a different order.
    Ok(max * (1.0 + 1e-10))
}

/// Single coordinate moves are capped at this magnitude; quasi-separable data
/// can make an unguarded quadratic step overshoot wildly.
const CD_STEP_CAP: f64 = 10.0;

/// Coordinate-descent state for one node problem, solved by iteratively
/// reweighted least squares: the log-likelihood is replaced by its quadratic
/// expansion at the current point (weights `sigma (1 - sigma)` frozen), the
/// penalized quadratic is solved by cyclic soft-threshold updates over the
/// active set, and the exact KKT conditions are re-checked after each
/// reweighting.
struct CdNode<'a> {
    ones: &'a [Vec<u32>],
    resp: Vec<f64>,
    node: usize,
    n: usize,
    theta: Vec<f64>,
    eta: Vec<f64>,
    /// Frozen weights of the current quadratic model.
    w: Vec<f64>,
    /// Working residual `r_i - w_i (eta_i - eta_i^outer)`.
    rho: Vec<f64>,
    /// Per-coordinate curvature of the quadratic: `sum_{ones_j} w_i`.
    hq: Vec<f64>,
}

impl<'a> CdNode<'a> {
    fn new(data: &Dataset, ones: &'a [Vec<u32>], node: usize) -> Self {
        let (n, d) = (data.n(), data.d());
        let resp: Vec<f64> = (0..n).map(|i| data.get(i, node) as f64).collect();
        let bias = bias_only_estimate(ones[node].len(), n);
        let mut theta = vec![0.0; d];
        theta[node] = bias;
        let eta = vec![bias; n];
        CdNode {
            ones,
            resp,
            node,
            n,
            theta,
            eta,
            w: vec![0.0; n],
            rho: vec![0.0; n],
            hq: vec![0.0; d],
        }
    }

    /// Refresh the quadratic model at the current point.
    fn reweight(&mut self) {
        for i in 0..self.n {
            let s = sigmoid(self.eta[i]);
            self.w[i] = (s * (1.0 - s)).max(1e-9);
            self.rho[i] = self.resp[i] - s;
        }
        for (j, list) in self.ones.iter().enumerate() {
            self.hq[j] = list.iter().map(|&i| self.w[i as usize]).sum();
        }
        self.hq[self.node] = self.w.iter().sum();
    }

    /// One quadratic-model update of coordinate `j`. Returns the step scaled
    /// by the coordinate curvature (a gradient-scale progress measure).
    fn update(&mut self, j: usize, lambda: f64) -> f64 {
        let h = self.hq[j];
        if h <= 0.0 {
            return 0.0;
        }
        let grad: f64 = if j == self.node {
            self.rho.iter().sum()
        } else {
            self.ones[j].iter().map(|&i| self.rho[i as usize]).sum()
        };
        let mut delta = if j == self.node {
            grad / h
        } else {
            let z = self.theta[j] + grad / h;
            let thresh = lambda / h;
            let target = if z > thresh {
                z - thresh
            } else if z < -thresh {
                z + thresh
            } else {
                0.0
            };
            target - self.theta[j]
        };
        delta = delta.clamp(-CD_STEP_CAP, CD_STEP_CAP);
        if delta != 0.0 {
            self.theta[j] += delta;
            if j == self.node {
                for i in 0..self.n {
                    self.eta[i] += delta;
                    self.rho[i] -= self.w[i] * delta;
                }
            } else {
                for &i in &self.ones[j] {
                    let i = i as usize;
                    self.eta[i] += delta;
                    self.rho[i] -= self.w[i] * delta;
                }
            }
        }
        delta.abs() * h
    }

    /// Largest exact KKT violation across all coordinates.
    fn kkt_violation(&self, lambda: f64) -> f64 {
        let resid: Vec<f64> = (0..self.n)
            .map(|i| self.resp[i] - sigmoid(self.eta[i]))
            .collect();
        let mut viol = resid.iter().sum::<f64>().abs();
        for j in 0..self.theta.len() {
            if j == self.node {
                continue;
            }
            let g: f64 = self.ones[j].iter().map(|&i| resid[i as usize]).sum();
            let v = if self.theta[j] == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * self.theta[j].signum()).abs()
            };
            viol = viol.max(v);
        }
        viol
    }

    /// Exact penalized objective (bias unpenalized).
    fn penalized_objective(&self, lambda: f64) -> f64 {
        let loglik: f64 = self
            .resp
            .iter()
            .zip(&self.eta)
            .map(|(&r, &e)| r * e - log1pexp(e))
            .sum();
        let l1: f64 = self
            .theta
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != self.node)
            .map(|(_, t)| t.abs())
            .sum();
        loglik - lambda * l1
    }

    /// Solve at one penalty from the current (warm) state.
    ///
    /// Each outer step solves the frozen quadratic by cyclic coordinate
    /// descent and is then damped against the exact penalized objective:
    /// near-saturated sigmoids make the quadratic model unreliable, and an
    /// undamped step can cycle.
    fn solve(&mut self, lambda: f64) -> Result<()> {
        let d = self.theta.len();
        let tol = GRAD_TOL_PER_OBS * self.n as f64;
        let mut f_prev = self.penalized_objective(lambda);
        for _outer in 0..200 {
            let theta_snap = self.theta.clone();
            let eta_snap = self.eta.clone();
            self.reweight();
            // Full cycle over all coordinates on the fresh quadratic.
            self.update(self.node, 0.0);
            for j in 0..d {
                if j != self.node {
                    self.update(j, lambda);
                }
            }
            // Polish the active set on the frozen quadratic.
            for _inner in 0..2000 {
                let mut progress = self.update(self.node, 0.0);
                for j in 0..d {
                    if j != self.node && self.theta[j] != 0.0 {
                        progress = progress.max(self.update(j, lambda));
                    }
                }
                if progress < 0.1 * tol {
                    break;
                }
            }
            // Damp: shrink toward the previous point until the exact
            // objective stops getting worse. Eta is linear in theta, so both
            // interpolate from the snapshot.
            let mut f_new = self.penalized_objective(lambda);
            let mut damped = false;
            if f_new < f_prev - 1e-12 * (1.0 + f_prev.abs()) {
                damped = true;
                let theta_full = self.theta.clone();
                let eta_full = self.eta.clone();
                let mut step = 1.0;
                while f_new < f_prev - 1e-12 * (1.0 + f_prev.abs()) && step > 1e-12 {
                    step *= 0.5;
                    for j in 0..d {
                        self.theta[j] = theta_snap[j] + step * (theta_full[j] - theta_snap[j]);
                    }
                    for i in 0..self.n {
                        self.eta[i] = eta_snap[i] + step * (eta_full[i] - eta_snap[i]);
                    }
                    f_new = self.penalized_objective(lambda);
                }
            }
            f_prev = f_prev.max(f_new);
            // Interpolated steps can leave stragglers where a full update
            // produced an exact zero; terminate only after an undamped pass.
            if !damped && self.kkt_violation(lambda) < tol {
                return Ok(());
            }
        }
        Err(CoreError::NoConvergence(format!(
            "coordinate descent stalled at node {}, lambda {lambda:.6e}",
            self.node
        )))
    }
}

/// Grid of penalties `{ k / grid_size * lambda_max }` for `k = grid_size..1`.
fn lambda_grid(lam_max: f64, grid_size: usize) -> Vec<f64> {
    (1..=grid_size)
        .rev()
        .map(|k| k as f64 / grid_size as f64 * lam_max)
        .collect()
}

/// Solve the L1 path for every node along the shared descending grid, with
/// warm starts, recording where each coupling first activates.
pub fn plml1_path(data: &Dataset, grid_size: usize) -> Result<L1Path> {
    if grid_size == 0 {
        return Err(CoreError::InvalidInput("grid size must be positive".into()));
    }
    let d = data.d();
    let lam_max = lambda_max(data)?;
    let lambdas = lambda_grid(lam_max, grid_size);
    let ones = ones_lists(data);
    let rows: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|v| -> Result<Vec<f64>> {
            let mut cd = CdNode::new(data, &ones, v);
            let mut first = vec![0.0f64; d];
            for &lambda in &lambdas {
                cd.solve(lambda)?;
                for (w, slot) in first.iter_mut().enumerate() {
                    if w != v && *slot == 0.0 && cd.theta[w] != 0.0 {
                        *slot = lambda;
                    }
                }
            }
            Ok(first)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut first_activation = Array2::zeros((d, d));
    for (v, row) in rows.iter().enumerate() {
        for (w, &lam) in row.iter().enumerate() {
            first_activation[[v, w]] = lam;
        }
    }
    Ok(L1Path { lambdas, first_activation })
}

/// plmL1 edge scores under a chosen inclusion rule: the score of an edge is
/// the largest grid penalty at which it first appears, 0 when it never does.
pub fn plml1_scores_with(data: &Dataset, grid_size: usize, rule: EdgeRule) -> Result<ScoreMatrix> {
    let path = plml1_path(data, grid_size)?;
    let d = data.d();
    let mut out = ScoreMatrix::zeros(d);
    for a in 0..d {
        for b in (a + 1)..d {
            let (fa, fb) = (path.first_activation[[a, b]], path.first_activation[[b, a]]);
            let score = match rule {
                EdgeRule::Max => fa.max(fb),
                EdgeRule::Min => {
                    if fa > 0.0 && fb > 0.0 {
                        fa.min(fb)
                    } else {
                        0.0
                    }
                }
            };
            out.set(a, b, score);
        }
    }
    Ok(out)
}

/// plmL1 edge scores with the default (max) rule.
pub fn plml1_scores(data: &Dataset, grid_size: usize) -> Result<ScoreMatrix> {
    plml1_scores_with(data, grid_size, EdgeRule::Max)
}

/// Penalties recommended for plmDCA as a function of the sample size:
/// `(lambda_bias, lambda_couple)` with the coupling penalty halved.
pub fn plmdca_lambdas(n: usize) -> (f64, f64) {
    let nf = n as f64;
    let lambda = if n > 500 {
        0.01 * nf
    } else {
        (0.1 - 0.09 * nf / 500.0) * nf
    };
    (lambda, lambda / 2.0)
}

/// Zero-sum (Ising) gauge of a 2x2 coupling matrix: subtract row and column
/// means, add back the grand mean.
fn ising_gauge(k: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let row = [(k[0][0] + k[0][1]) / 2.0, (k[1][0] + k[1][1]) / 2.0];
    let col = [(k[0][0] + k[1][0]) / 2.0, (k[0][1] + k[1][1]) / 2.0];
    let grand = (k[0][0] + k[0][1] + k[1][0] + k[1][1]) / 4.0;
    let mut out = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            out[a][b] = k[a][b] - row[a] - col[b] + grand;
        }
    }
    out
}

fn frobenius(k: [[f64; 2]; 2]) -> f64 {
    k.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Pre-correction plmDCA scores from fitted node parameters: for each pair,
/// gauge the two asymmetric coupling matrices, average them, and take the
/// Frobenius norm.
pub fn plmdca_raw_scores(params: &[NodeParameters]) -> ScoreMatrix {
    let d = params.len();
    let mut out = ScoreMatrix::zeros(d);
    for a in 0..d {
        for b in (a + 1)..d {
            // Coupling matrix indexed (x_a, x_b); binary states put the whole
            // interaction at (1, 1). The matrix from regressing b is indexed
            // (x_b, x_a) and is transposed before averaging.
            let k_a = [[0.0, 0.0], [0.0, params[a].theta[b]]];
            let k_b = [[0.0, 0.0], [0.0, params[b].theta[a]]];
            let g_a = ising_gauge(k_a);
            let g_b = ising_gauge(k_b);
            let mut avg = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    avg[i][j] = 0.5 * (g_a[i][j] + g_b[j][i]);
                }
            }
            out.set(a, b, frobenius(avg));
        }
    }
    out
}

/// Average-product correction:
/// `S'(v,w) = S(v,w) - mean_row(v) * mean_row(w) / mean_all`, means taken
/// over off-diagonal entries. An all-zero matrix is returned unchanged.
pub fn apc(raw: &ScoreMatrix) -> ScoreMatrix {
    let d = raw.d();
    if d < 2 {
        return raw.clone();
    }
    let mut row_mean = vec![0.0; d];
    let mut grand = 0.0;
    for (v, slot) in row_mean.iter_mut().enumerate() {
        let sum: f64 = (0..d).filter(|&w| w != v).map(|w| raw.get(v, w)).sum();
        *slot = sum / (d - 1) as f64;
        grand += sum;
    }
    let grand_mean = grand / (d * (d - 1)) as f64;
    if grand_mean == 0.0 {
        return raw.clone();
    }
    let mut out = ScoreMatrix::zeros(d);
    for a in 0..d {
        for b in (a + 1)..d {
            out.set(a, b, raw.get(a, b) - row_mean[a] * row_mean[b] / grand_mean);
        }
    }
    out
}

/// plmDCA edge scores with explicit penalties: L2 fits, gauged Frobenius pair
/// scores, then average-product correction. Negative corrected scores are
/// kept.
pub fn plmdca_scores_with(
    data: &Dataset,
    lambda_bias: f64,
    lambda_couple: f64,
) -> Result<ScoreMatrix> {
    let params = fit_all_nodes_l2(data, lambda_bias, lambda_couple)?;
    Ok(apc(&plmdca_raw_scores(&params)))
}

/// plmDCA edge scores with the sample-size penalty rule.
pub fn plmdca_scores(data: &Dataset) -> Result<ScoreMatrix> {
    let (lambda_bias, lambda_couple) = plmdca_lambdas(data.n());
    plmdca_scores_with(data, lambda_bias, lambda_couple)
}
