//! 2D graph layout by Kullback-Leibler optimization of Cauchy-kernel
//! affinities (graph t-SNE).

mod quadtree;

use rayon::prelude::*;

use crate::affinity::SparseAffinity;
use crate::embedding::{Embedding, Metric};
use crate::error::{Error, Result};
use quadtree::QuadTree;

/// Optimizer hyperparameters for [`run_tsne`].
#[derive(Debug, Clone)]
pub struct TsneParams {
    pub total_iters: usize,
    pub exaggeration_iters: usize,
    pub exaggeration_factor: f64,
    /// `None` resolves to the node count `n`.
    pub learning_rate: Option<f64>,
    pub momentum_early: f64,
    pub momentum_late: f64,
    pub bh_theta: f64,
    /// Node counts at or below this use the exact O(n^2) gradient.
    pub exact_threshold: usize,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            total_iters: 750,
            exaggeration_iters: 250,
            exaggeration_factor: 12.0,
            learning_rate: None,
            momentum_early: 0.5,
            momentum_late: 0.8,
            bh_theta: 0.5,
            exact_threshold: 5000,
            seed: 0,
        }
    }
}

impl TsneParams {
    pub fn resolved_learning_rate(&self, n: usize) -> f64 {
        self.learning_rate.unwrap_or(n as f64)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.exaggeration_iters > self.total_iters {
            return Err(Error::InvalidInput(
                "exaggeration_iters must be <= total_iters".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.bh_theta) {
            return Err(Error::InvalidInput("bh_theta must lie in [0, 1]".into()));
        }
        if self.resolved_learning_rate(n) <= 0.0 {
            return Err(Error::InvalidInput("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// An `n x 2` gradient of the layout loss.
#[derive(Debug, Clone)]
pub struct Gradient2D {
    data: Vec<f64>,
}

impl Gradient2D {
    pub fn n(&self) -> usize {
        self.data.len() / 2
    }

    pub fn row(&self, i: usize) -> [f64; 2] {
        [self.data[2 * i], self.data[2 * i + 1]]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

fn check_shapes(p: &SparseAffinity, y: &Embedding) -> Result<()> {
    if p.n() != y.n() {
        return Err(Error::InvalidInput(format!(
            "affinity has {} nodes, embedding has {}",
            p.n(),
            y.n()
        )));
    }
    if y.d() != 2 {
        return Err(Error::InvalidInput("layout embedding must have d = 2".into()));
    }
    if y.metric() != Metric::Euclidean {
        return Err(Error::InvalidInput("layout embedding must be euclidean".into()));
    }
    Ok(())
}

/// Exact KL divergence between `P` and the Cauchy-kernel `Q` of the layout.
/// O(n^2); intended for diagnostics and small graphs.
pub fn kl_loss(p: &SparseAffinity, y: &Embedding) -> Result<f64> {
    check_shapes(p, y)?;
    let loss = kl_loss_raw(p.entries(), y.coords(), y.n());
    if !loss.is_finite() {
        return Err(Error::NonFinite("kl loss".into()));
    }
    Ok(loss)
}

fn kl_loss_raw(entries: &[(usize, usize, f64)], y: &[f64], n: usize) -> f64 {
    let z = exact_kernel_sums(y, n)
        .into_iter()
        .map(|(_, _, zi)| zi)
        .sum::<f64>();
    let ln_z = z.ln();
    2.0 * entries
        .iter()
        .map(|&(i, j, p)| {
            let dx = y[2 * i] - y[2 * j];
            let dy = y[2 * i + 1] - y[2 * j + 1];
            let ln_w = -(1.0 + dx * dx + dy * dy).ln();
            p * (p.ln() - ln_w + ln_z)
        })
        .sum::<f64>()
}

/// Per-node exact repulsive numerators and kernel sums, self excluded:
/// `(sum_j w^2 dx, sum_j w^2 dy, sum_j w)`.
fn exact_kernel_sums(y: &[f64], n: usize) -> Vec<(f64, f64, f64)> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let (xi, yi) = (y[2 * i], y[2 * i + 1]);
            let mut fx = 0.0;
            let mut fy = 0.0;
            let mut zi = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dx = xi - y[2 * j];
                let dy = yi - y[2 * j + 1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                zi += w;
                let ww = w * w;
                fx += ww * dx;
                fy += ww * dy;
            }
            (fx, fy, zi)
        })
        .collect()
}

fn attraction(rows: &[Vec<(usize, f64)>], y: &[f64]) -> Vec<(f64, f64)> {
    rows.par_iter()
        .enumerate()
        .map(|(i, row)| {
            let (xi, yi) = (y[2 * i], y[2 * i + 1]);
            let mut ax = 0.0;
            let mut ay = 0.0;
            for &(j, p) in row {
                let dx = xi - y[2 * j];
                let dy = yi - y[2 * j + 1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                ax += p * w * dx;
                ay += p * w * dy;
            }
            (ax, ay)
        })
        .collect()
}

fn gradient_raw(
    rows: &[Vec<(usize, f64)>],
    y: &[f64],
    n: usize,
    exaggeration: f64,
    theta: Option<f64>,
) -> Vec<f64> {
    let attr = attraction(rows, y);
    let (rep, z) = match theta {
        None => {
            let sums = exact_kernel_sums(y, n);
            let z = sums.iter().map(|s| s.2).sum::<f64>();
            let rep: Vec<(f64, f64)> = sums.into_iter().map(|(fx, fy, _)| (fx, fy)).collect();
            (rep, z)
        }
        Some(theta) => {
            let tree = QuadTree::build(y, n);
            let per_node: Vec<([f64; 2], f64)> = (0..n)
                .into_par_iter()
                .map(|i| tree.accumulate([y[2 * i], y[2 * i + 1]], theta))
                .collect();
            // traversal includes the query point itself with w = 1
            let z = per_node.iter().map(|(_, zi)| zi - 1.0).sum::<f64>();
            let rep = per_node.into_iter().map(|(f, _)| (f[0], f[1])).collect();
            (rep, z)
        }
    };
    let mut grad = vec![0.0; 2 * n];
    for i in 0..n {
        grad[2 * i] = 4.0 * (exaggeration * attr[i].0 - rep[i].0 / z);
        grad[2 * i + 1] = 4.0 * (exaggeration * attr[i].1 - rep[i].1 / z);
    }
    grad
}

/// Exact gradient of the KL loss: `4 sum_j (p_ij - q_ij) w_ij (y_i - y_j)`.
pub fn exact_gradient(p: &SparseAffinity, y: &Embedding) -> Result<Gradient2D> {
    check_shapes(p, y)?;
    let data = gradient_raw(&p.row_structure(), y.coords(), y.n(), 1.0, None);
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    Ok(Gradient2D { data })
}

/// Barnes-Hut gradient: exact attraction over the affinity support, quadtree
/// approximation of the repulsion. `theta = 0` reproduces [`exact_gradient`].
pub fn bh_gradient(p: &SparseAffinity, y: &Embedding, theta: f64) -> Result<Gradient2D> {
    check_shapes(p, y)?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidInput("theta must lie in [0, 1]".into()));
    }
    let data = gradient_raw(&p.row_structure(), y.coords(), y.n(), 1.0, Some(theta));
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    Ok(Gradient2D { data })
}

/// Momentum gradient descent on the KL loss with a two-phase early
/// exaggeration schedule. Uses the exact gradient for graphs up to
/// `exact_threshold` nodes and Barnes-Hut beyond.
pub fn run_tsne(p: &SparseAffinity, init: &Embedding, params: &TsneParams) -> Result<Embedding> {
    run_tsne_logged(p, init, params, 0, |_, _| {})
}

/// Like [`run_tsne`], reporting `kl_loss` to `log` every `log_every`
/// iterations (0 disables logging).
pub fn run_tsne_logged(
    p: &SparseAffinity,
    init: &Embedding,
    params: &TsneParams,
    log_every: usize,
    mut log: impl FnMut(usize, f64),
) -> Result<Embedding> {
    check_shapes(p, init)?;
    params.validate(init.n())?;
    let n = init.n();
    let lr = params.resolved_learning_rate(n);
    let rows = p.row_structure();
    let theta = if n <= params.exact_threshold {
        None
    } else {
        Some(params.bh_theta)
    };
    let mut y = init.coords().to_vec();
    let mut update = vec![0.0; 2 * n];
    for iter in 0..params.total_iters {
        let early = iter < params.exaggeration_iters;
        let exaggeration = if early { params.exaggeration_factor } else { 1.0 };
        let momentum = if early {
            params.momentum_early
        } else {
            params.momentum_late
        };
        let grad = gradient_raw(&rows, &y, n, exaggeration, theta);
        for c in 0..2 * n {
            update[c] = momentum * update[c] - lr * grad[c];
            y[c] += update[c];
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::TsneNan { iter });
        }
        if log_every > 0 && (iter % log_every == 0 || iter + 1 == params.total_iters) {
            log(iter, kl_loss_raw(p.entries(), &y, n));
        }
    }
    Embedding::new(n, 2, y, Metric::Euclidean)
}
