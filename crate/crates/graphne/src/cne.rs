//! High-dimensional node embeddings via the InfoNCE contrastive loss over
//! graph edges (graph CNE).
//!
//! Each mini-batch holds `b` positive pairs, hence `2b` points; every anchor
//! scores its positive against `m` negatives drawn from the other batch
//! slots. Coordinates are unconstrained; the cosine kernel normalizes inside
//! the loss, so consumers normalize on read.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::{Embedding, Metric};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Low-dimensional similarity kernel of the InfoNCE loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CneKernel {
    /// `w = exp(cos(y_i, y_j) / tau)`; the default for d = 128.
    CosineTemperature,
    /// `w = 1 / (1 + ||y_i - y_j||^2)`; the 2D variant.
    Cauchy,
}

/// Hyperparameters for [`run_cne`].
#[derive(Debug, Clone)]
pub struct CneParams {
    pub d: usize,
    pub kernel: CneKernel,
    pub tau: f64,
    /// Optimize `log tau` jointly with the coordinates, starting from 0.5.
    pub learnable_tau: bool,
    pub epochs: usize,
    /// `None` resolves to `min(8192, n/10)`, at least 2.
    pub batch_pairs: Option<usize>,
    /// `None` resolves to full-batch repulsion, `m = 2b - 2`.
    pub negatives: Option<usize>,
    pub adam_lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for CneParams {
    fn default() -> Self {
        CneParams {
            d: 128,
            kernel: CneKernel::CosineTemperature,
            tau: 0.05,
            learnable_tau: false,
            epochs: 100,
            batch_pairs: None,
            negatives: None,
            adam_lr: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl CneParams {
    pub fn resolved_batch_pairs(&self, n: usize) -> usize {
        self.batch_pairs.unwrap_or_else(|| (n / 10).min(8192)).max(2)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.tau <= 0.0 {
            return Err(Error::InvalidInput("tau must be positive".into()));
        }
        if self.d == 0 {
            return Err(Error::InvalidInput("d must be >= 1".into()));
        }
        let b = self.resolved_batch_pairs(n);
        if let Some(m) = self.negatives {
            if m < 1 || m > 2 * b - 2 {
                return Err(Error::InvalidInput(format!(
                    "negatives must satisfy 1 <= m <= 2b-2 = {}, got {m}",
                    2 * b - 2
                )));
            }
        }
        Ok(())
    }
}

/// One mini-batch of positive pairs; `nodes` flattens the pairs in order,
/// so slot `2t` is pair `t`'s anchor and slot `2t + 1` its partner.
#[derive(Debug, Clone)]
pub struct EdgeBatch {
    pairs: Vec<(usize, usize)>,
    nodes: Vec<usize>,
    ordinal: u64,
}

impl EdgeBatch {
    pub fn new(pairs: Vec<(usize, usize)>, ordinal: u64) -> EdgeBatch {
        let nodes = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
        EdgeBatch {
            pairs,
            nodes,
            ordinal,
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The `2b` participating node indices (a multiset when pairs share
    /// endpoints).
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn ordinal(&self) -> u64 {
        self.ordinal
    }
}

/// Non-normalized pair similarity under the chosen kernel.
pub fn pair_similarity(yi: &[f64], yj: &[f64], kernel: CneKernel, tau: f64) -> Result<f64> {
    match kernel {
        CneKernel::CosineTemperature => {
            if tau <= 0.0 {
                return Err(Error::InvalidInput("tau must be positive".into()));
            }
            let ri = norm(yi);
            let rj = norm(yj);
            if ri == 0.0 || rj == 0.0 {
                return Err(Error::InvalidInput(
                    "zero vector under the cosine kernel".into(),
                ));
            }
            Ok((dot(yi, yj) / (ri * rj) / tau).exp())
        }
        CneKernel::Cauchy => {
            let dsq: f64 = yi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok(1.0 / (1.0 + dsq))
        }
    }
}

/// Gradient rows for the nodes a batch touched.
#[derive(Debug, Clone)]
pub struct SparseRowGrad {
    nodes: Vec<usize>,
    d: usize,
    rows: Vec<f64>,
}

impl SparseRowGrad {
    /// Touched node indices, sorted ascending.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Gradient row for `nodes()[idx]`.
    pub fn row(&self, idx: usize) -> &[f64] {
        &self.rows[idx * self.d..(idx + 1) * self.d]
    }
}

/// Loss value, coordinate gradient, and `d loss / d log(tau)` for one batch.
#[derive(Debug, Clone)]
pub struct BatchLoss {
    pub loss: f64,
    pub grad: SparseRowGrad,
    pub grad_tau: f64,
}

/// InfoNCE loss and gradient for one batch at the similarity kernel and
/// temperature given in `params`.
pub fn infonce_batch_loss(y: &Embedding, batch: &EdgeBatch, params: &CneParams) -> Result<BatchLoss> {
    params.validate(y.n())?;
    compute_batch(y.coords(), y.n(), y.d(), batch, params)
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn axpy(out: &mut [f64], c: f64, v: &[f64]) {
    for (o, x) in out.iter_mut().zip(v) {
        *o += c * x;
    }
}

const GRAD_BLOCKS: usize = 4;

fn compute_batch(
    coords: &[f64],
    n: usize,
    d: usize,
    batch: &EdgeBatch,
    params: &CneParams,
) -> Result<BatchLoss> {
    let b = batch.pairs.len();
    if b == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    if let Some(&bad) = batch.nodes.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidInput(format!(
            "batch references node {bad}, embedding has {n}"
        )));
    }
    let slots = 2 * b;
    let m_full = slots - 2;
    let m = params.negatives.unwrap_or(m_full).min(m_full);
    if m == 0 {
        return Err(Error::InvalidInput(
            "batch provides no negative candidates (need at least 2 pairs)".into(),
        ));
    }
    let tau = params.tau;

    // gather slot coordinates; normalize for the cosine kernel
    let mut pts = vec![0.0; slots * d];
    for (s, &node) in batch.nodes.iter().enumerate() {
        pts[s * d..(s + 1) * d].copy_from_slice(&coords[node * d..(node + 1) * d]);
    }
    let (unit, norms) = match params.kernel {
        CneKernel::CosineTemperature => {
            let mut unit = pts.clone();
            let mut norms = vec![0.0; slots];
            for s in 0..slots {
                let r = norm(&pts[s * d..(s + 1) * d]);
                if r == 0.0 {
                    return Err(Error::InvalidInput(
                        "zero vector under the cosine kernel".into(),
                    ));
                }
                norms[s] = r;
                unit[s * d..(s + 1) * d].iter_mut().for_each(|v| *v /= r);
            }
            (unit, norms)
        }
        CneKernel::Cauchy => (Vec::new(), Vec::new()),
    };

    // negatives are sampled up front from a batch-derived stream so the
    // result does not depend on scheduling
    let sampled_negatives: Option<Vec<Vec<usize>>> = if m == m_full {
        None
    } else {
        let mut rng =
            ChaCha8Rng::seed_from_u64(params.seed ^ batch.ordinal.wrapping_mul(0x9E3779B97F4A7C15));
        Some(
            (0..b)
                .map(|t| {
                    let a = 2 * t;
                    let p = 2 * t + 1;
                    let mut cand: Vec<usize> = (0..slots).filter(|&s| s != a && s != p).collect();
                    // partial Fisher-Yates for m draws without replacement
                    for i in 0..m {
                        let j = rng.random_range(i..cand.len());
                        cand.swap(i, j);
                    }
                    cand.truncate(m);
                    cand
                })
                .collect(),
        )
    };

    let inv_b = 1.0 / b as f64;
    let chunk = b.div_ceil(GRAD_BLOCKS);
    let blocks: Vec<(f64, f64, Vec<f64>)> = (0..GRAD_BLOCKS)
        .into_par_iter()
        .map(|blk| {
            let lo = blk * chunk;
            let hi = ((blk + 1) * chunk).min(b);
            let mut scratch = vec![0.0; slots * d];
            let mut loss_sum = 0.0;
            let mut tau_sum = 0.0;
            let mut logit = vec![0.0; slots];
            let mut denom_slots: Vec<usize> = Vec::with_capacity(m + 1);
            for t in lo..hi {
                let a = 2 * t;
                let p = 2 * t + 1;
                denom_slots.clear();
                denom_slots.push(p);
                match &sampled_negatives {
                    None => denom_slots.extend((0..slots).filter(|&s| s != a && s != p)),
                    Some(lists) => denom_slots.extend_from_slice(&lists[t]),
                }
                // logits s_k for every slot in the denominator
                match params.kernel {
                    CneKernel::CosineTemperature => {
                        let ua = &unit[a * d..(a + 1) * d];
                        for &k in &denom_slots {
                            logit[k] = dot(ua, &unit[k * d..(k + 1) * d]) / tau;
                        }
                    }
                    CneKernel::Cauchy => {
                        let ya = &pts[a * d..(a + 1) * d];
                        for &k in &denom_slots {
                            let yk = &pts[k * d..(k + 1) * d];
                            let dsq: f64 =
                                ya.iter().zip(yk).map(|(x, z)| (x - z) * (x - z)).sum();
                            logit[k] = -dsq.ln_1p();
                        }
                    }
                }
                let max = denom_slots
                    .iter()
                    .map(|&k| logit[k])
                    .fold(f64::NEG_INFINITY, f64::max);
                let sum_exp: f64 = denom_slots.iter().map(|&k| (logit[k] - max).exp()).sum();
                let lse = max + sum_exp.ln();
                loss_sum += lse - logit[p];

                // softmax coefficients; d loss / d s_k = prob_k - [k == p]
                match params.kernel {
                    CneKernel::CosineTemperature => {
                        let ua: Vec<f64> = unit[a * d..(a + 1) * d].to_vec();
                        let inv_ra = 1.0 / norms[a];
                        let mut self_coeff = 0.0;
                        let mut row_a = vec![0.0; d];
                        for &k in &denom_slots {
                            let prob = (logit[k] - lse).exp();
                            let gs = (prob - if k == p { 1.0 } else { 0.0 }) * inv_b;
                            tau_sum -= gs * logit[k];
                            let gc = gs / tau;
                            let c = logit[k] * tau;
                            axpy(&mut row_a, gc * inv_ra, &unit[k * d..(k + 1) * d]);
                            self_coeff += gc * inv_ra * c;
                            let inv_rk = 1.0 / norms[k];
                            let srow = &mut scratch[k * d..(k + 1) * d];
                            axpy(srow, gc * inv_rk, &ua);
                            let uk = &unit[k * d..(k + 1) * d];
                            for (o, x) in srow.iter_mut().zip(uk) {
                                *o -= gc * inv_rk * c * x;
                            }
                        }
                        axpy(&mut row_a, -self_coeff, &ua);
                        axpy(&mut scratch[a * d..(a + 1) * d], 1.0, &row_a);
                    }
                    CneKernel::Cauchy => {
                        let ya: Vec<f64> = pts[a * d..(a + 1) * d].to_vec();
                        let mut row_a = vec![0.0; d];
                        for &k in &denom_slots {
                            let prob = (logit[k] - lse).exp();
                            let gs = (prob - if k == p { 1.0 } else { 0.0 }) * inv_b;
                            let w = logit[k].exp();
                            let yk = &pts[k * d..(k + 1) * d];
                            let coef = -2.0 * gs * w;
                            // d s / d y_a = -2 w (y_a - y_k); mirrored for y_k
                            for (idx, (o, z)) in row_a.iter_mut().zip(yk).enumerate() {
                                *o += coef * (ya[idx] - z);
                            }
                            let srow = &mut scratch[k * d..(k + 1) * d];
                            for (idx, (o, z)) in srow.iter_mut().zip(yk).enumerate() {
                                *o -= coef * (ya[idx] - z);
                            }
                        }
                        axpy(&mut scratch[a * d..(a + 1) * d], 1.0, &row_a);
                    }
                }
            }
            (loss_sum, tau_sum, scratch)
        })
        .collect();

    let mut loss = 0.0;
    let mut grad_tau = 0.0;
    let mut slot_grad = vec![0.0; slots * d];
    for (l, gt, scratch) in blocks {
        loss += l;
        grad_tau += gt;
        for (o, v) in slot_grad.iter_mut().zip(&scratch) {
            *o += v;
        }
    }
    loss *= inv_b;
    if !loss.is_finite() {
        return Err(Error::NonFinite("infonce loss".into()));
    }

    // aggregate slot gradients per node
    let mut touched: Vec<usize> = batch.nodes.clone();
    touched.sort_unstable();
    touched.dedup();
    let mut rows = vec![0.0; touched.len() * d];
    for (s, &node) in batch.nodes.iter().enumerate() {
        let idx = touched.binary_search(&node).unwrap();
        axpy(
            &mut rows[idx * d..(idx + 1) * d],
            1.0,
            &slot_grad[s * d..(s + 1) * d],
        );
    }
    Ok(BatchLoss {
        loss,
        grad: SparseRowGrad {
            nodes: touched,
            d,
            rows,
        },
        grad_tau,
    })
}

/// Shuffles the edge list with a stream derived from `(seed, epoch)`, cuts
/// it into batches of `b` pairs with random orientations, and keeps a final
/// short batch only if it still holds at least 2 pairs.
pub fn sample_epoch(g: &Graph, b: usize, seed: u64, epoch: usize) -> Result<Vec<EdgeBatch>> {
    if b < 2 {
        return Err(Error::InvalidInput("batch size must be >= 2".into()));
    }
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ epoch as u64);
    edges.shuffle(&mut rng);
    for e in edges.iter_mut() {
        if rng.random::<bool>() {
            *e = (e.1, e.0);
        }
    }
    Ok(edges
        .chunks(b)
        .enumerate()
        .filter(|(_, chunk)| chunk.len() >= 2)
        .map(|(idx, chunk)| EdgeBatch::new(chunk.to_vec(), ((epoch as u64) << 32) | idx as u64))
        .collect())
}

/// Mean loss and temperature at the end of each epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub tau: f64,
}

/// Optimizes node embeddings with Adam on the per-batch InfoNCE loss.
///
/// With `learnable_tau`, `log tau` starts at `log 0.5` and is optimized
/// jointly. The returned embedding is tagged cosine for the cosine kernel
/// (coordinates stored raw) and euclidean for the Cauchy kernel.
pub fn run_cne(
    g: &Graph,
    params: &CneParams,
    init: &Embedding,
) -> Result<(Embedding, Vec<EpochStats>)> {
    run_cne_observed(g, params, init, |_, _| {})
}

/// [`run_cne`] with a per-epoch observer receiving the current embedding.
pub fn run_cne_observed(
    g: &Graph,
    params: &CneParams,
    init: &Embedding,
    mut observer: impl FnMut(usize, &Embedding),
) -> Result<(Embedding, Vec<EpochStats>)> {
    params.validate(g.n())?;
    if init.n() != g.n() {
        return Err(Error::InvalidInput(format!(
            "init has {} rows, graph has {} nodes",
            init.n(),
            g.n()
        )));
    }
    if init.d() != params.d {
        return Err(Error::InvalidInput(format!(
            "init has d = {}, params request d = {}",
            init.d(),
            params.d
        )));
    }
    if g.num_edges() < 2 {
        return Err(Error::InvalidInput("graph needs at least 2 edges".into()));
    }
    let n = g.n();
    let d = params.d;
    let b = params.resolved_batch_pairs(n);

    let metric = match params.kernel {
        CneKernel::CosineTemperature => Metric::Cosine,
        CneKernel::Cauchy => Metric::Euclidean,
    };

    let mut coords = init.coords().to_vec();
    let mut log_tau = if params.learnable_tau {
        0.5f64.ln()
    } else {
        params.tau.ln()
    };

    let mut adam_m = vec![0.0; n * d];
    let mut adam_v = vec![0.0; n * d];
    let mut tau_m = 0.0;
    let mut tau_v = 0.0;
    let mut step = 0u64;
    let mut dense_grad = vec![0.0; n * d];
    let mut prev_touched: Vec<usize> = Vec::new();

    let mut stats = Vec::with_capacity(params.epochs);
    for epoch in 0..params.epochs {
        let batches = sample_epoch(g, b, params.seed, epoch)?;
        let mut loss_sum = 0.0;
        for (bi, batch) in batches.iter().enumerate() {
            let mut eff = params.clone();
            eff.tau = log_tau.exp();
            let out = compute_batch(&coords, n, d, batch, &eff)
                .map_err(|e| match e {
                    Error::NonFinite(_) => Error::CneNan { epoch, batch: bi },
                    other => other,
                })?;
            if !out.loss.is_finite() {
                return Err(Error::CneNan { epoch, batch: bi });
            }
            loss_sum += out.loss;

            for &node in &prev_touched {
                dense_grad[node * d..(node + 1) * d].fill(0.0);
            }
            for (idx, &node) in out.grad.nodes().iter().enumerate() {
                dense_grad[node * d..(node + 1) * d].copy_from_slice(out.grad.row(idx));
            }
            prev_touched = out.grad.nodes().to_vec();

            step += 1;
            let bc1 = 1.0 - params.adam_beta1.powi(step as i32);
            let bc2 = 1.0 - params.adam_beta2.powi(step as i32);
            let (b1, b2, lr, eps) = (
                params.adam_beta1,
                params.adam_beta2,
                params.adam_lr,
                params.adam_eps,
            );
            coords
                .par_chunks_mut(d)
                .zip(adam_m.par_chunks_mut(d))
                .zip(adam_v.par_chunks_mut(d))
                .zip(dense_grad.par_chunks(d))
                .for_each(|(((c, mm), vv), gg)| {
                    for k in 0..d {
                        let g = gg[k];
                        mm[k] = b1 * mm[k] + (1.0 - b1) * g;
                        vv[k] = b2 * vv[k] + (1.0 - b2) * g * g;
                        c[k] -= lr * (mm[k] / bc1) / ((vv[k] / bc2).sqrt() + eps);
                    }
                });
            if params.learnable_tau {
                let g = out.grad_tau;
                tau_m = b1 * tau_m + (1.0 - b1) * g;
                tau_v = b2 * tau_v + (1.0 - b2) * g * g;
                log_tau -= lr * (tau_m / bc1) / ((tau_v / bc2).sqrt() + eps);
            }
        }
        let mean_loss = loss_sum / batches.len().max(1) as f64;
        stats.push(EpochStats {
            epoch,
            mean_loss,
            tau: log_tau.exp(),
        });
        let snapshot = Embedding::new(n, d, coords.clone(), metric)?;
        observer(epoch, &snapshot);
    }
    Ok((Embedding::new(n, d, coords, metric)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embedding(rows: &[&[f64]]) -> Embedding {
        let d = rows[0].len();
        let coords: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Embedding::new(rows.len(), d, coords, Metric::Euclidean).unwrap()
    }

    fn seeded_coords(n: usize, d: usize, seed: u64) -> Embedding {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0 + 0.1).collect();
        Embedding::new(n, d, coords, Metric::Euclidean).unwrap()
    }

    #[test]
    fn pair_similarity_known_values() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        let w = pair_similarity(&e1, &e1, CneKernel::CosineTemperature, 0.5).unwrap();
        assert!((w - 2.0f64.exp()).abs() < 1e-12);
        let w = pair_similarity(&e1, &e2, CneKernel::CosineTemperature, 0.5).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
        let w = pair_similarity(&e1, &e1, CneKernel::Cauchy, 0.5).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        let w = pair_similarity(&[0.0, 0.0], &[1.0, 0.0], CneKernel::Cauchy, 0.5).unwrap();
        assert!((w - 0.5).abs() < 1e-15);
        assert!(pair_similarity(&[0.0, 0.0], &e1, CneKernel::CosineTemperature, 0.5).is_err());
        // cosine kernel ignores vector length
        let w = pair_similarity(&[3.0, 0.0], &[0.002, 0.0], CneKernel::CosineTemperature, 0.5)
            .unwrap();
        assert!((w - 2.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_single_negative_loss() {
        // every anchor sees cos(positive) = 1 and one negative with cos = 0,
        // so each term is -log(e^2 / (e^2 + 1)) at tau = 0.5
        let y = embedding(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]);
        let batch = EdgeBatch::new(vec![(0, 1), (2, 3)], 0);
        let mut params = CneParams {
            tau: 0.5,
            negatives: Some(1),
            d: 2,
            ..CneParams::default()
        };
        params.batch_pairs = Some(2);
        let out = infonce_batch_loss(&y, &batch, &params).unwrap();
        let expected = -((2.0f64.exp()) / (2.0f64.exp() + 1.0)).ln();
        assert!(
            (out.loss - expected).abs() < 1e-12,
            "{} vs {expected}",
            out.loss
        );
    }

    #[test]
    fn uniform_similarities_give_log_m_plus_one() {
        // all slots identical: every similarity equal, softmax uniform
        let y = embedding(&[&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5]]);
        let batch = EdgeBatch::new(vec![(0, 1), (2, 3), (4, 5)], 0);
        let params = CneParams {
            d: 2,
            tau: 0.3,
            ..CneParams::default()
        };
        let out = infonce_batch_loss(&y, &batch, &params).unwrap();
        let m = 2 * 3 - 2;
        assert!((out.loss - ((m + 1) as f64).ln()).abs() < 1e-12);
        // and for the cauchy kernel as well
        let params = CneParams {
            d: 2,
            kernel: CneKernel::Cauchy,
            ..CneParams::default()
        };
        let out = infonce_batch_loss(&y, &batch, &params).unwrap();
        assert!((out.loss - ((m + 1) as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_agrees_with_pair_similarity_route() {
        // independent reference: assemble the loss from pair_similarity calls
        let y = seeded_coords(8, 5, 77);
        let batch = EdgeBatch::new(vec![(0, 3), (1, 6), (7, 2), (4, 5)], 9);
        for kernel in [CneKernel::CosineTemperature, CneKernel::Cauchy] {
            let params = CneParams {
                d: 5,
                kernel,
                tau: 0.37,
                ..CneParams::default()
            };
            let out = infonce_batch_loss(&y, &batch, &params).unwrap();
            let mut expected = 0.0;
            for (t, &(i, j)) in batch.pairs().iter().enumerate() {
                let w_pos = pair_similarity(y.row(i), y.row(j), kernel, 0.37).unwrap();
                let mut denom = w_pos;
                for (s, &k) in batch.nodes().iter().enumerate() {
                    if s != 2 * t && s != 2 * t + 1 {
                        denom += pair_similarity(y.row(i), y.row(k), kernel, 0.37).unwrap();
                    }
                }
                expected += -(w_pos / denom).ln();
            }
            expected /= batch.pairs().len() as f64;
            assert!(
                (out.loss - expected).abs() < 1e-12,
                "{kernel:?}: {} vs {expected}",
                out.loss
            );
        }
    }

    #[test]
    fn loss_is_nonnegative_and_bounded_by_uniform() {
        let y = seeded_coords(12, 4, 5);
        let batch = EdgeBatch::new(vec![(0, 1), (2, 3), (4, 5), (6, 7), (8, 9), (10, 11)], 1);
        let params = CneParams {
            d: 4,
            tau: 0.1,
            ..CneParams::default()
        };
        let out = infonce_batch_loss(&y, &batch, &params).unwrap();
        assert!(out.loss >= 0.0);
    }

    fn fd_check(kernel: CneKernel, m: Option<usize>, seed: u64) {
        let d = 6;
        let n = 10;
        let y = seeded_coords(n, d, seed);
        let batch = EdgeBatch::new(vec![(0, 4), (2, 7), (9, 1), (5, 8)], seed);
        let params = CneParams {
            d,
            kernel,
            tau: 0.21,
            negatives: m,
            batch_pairs: Some(4),
            ..CneParams::default()
        };
        let out = infonce_batch_loss(&y, &batch, &params).unwrap();
        let loss_at = |coords: Vec<f64>| {
            let e = Embedding::new(n, d, coords, Metric::Euclidean).unwrap();
            infonce_batch_loss(&e, &batch, &params).unwrap().loss
        };
        let h = 1e-6;
        let mut fd = Vec::new();
        let mut an = Vec::new();
        for (idx, &node) in out.grad.nodes().iter().enumerate() {
            for k in 0..d {
                let mut plus = y.coords().to_vec();
                plus[node * d + k] += h;
                let mut minus = y.coords().to_vec();
                minus[node * d + k] -= h;
                fd.push((loss_at(plus) - loss_at(minus)) / (2.0 * h));
                an.push(out.grad.row(idx)[k]);
            }
        }
        let num: f64 = fd
            .iter()
            .zip(&an)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(
            num / den < 1e-5,
            "{kernel:?} m={m:?} seed {seed}: rel FD error {}",
            num / den
        );

        // every node outside the batch has no gradient row
        for node in 0..n {
            if !batch.nodes().contains(&node) {
                assert!(out.grad.nodes().binary_search(&node).is_err());
            }
        }

        if kernel == CneKernel::CosineTemperature {
            // d loss / d log tau against central differences
            let at_tau = |tau: f64| {
                let p = CneParams { tau, ..params.clone() };
                infonce_batch_loss(&y, &batch, &p).unwrap().loss
            };
            let l0 = params.tau.ln();
            let fd_tau = (at_tau((l0 + h).exp()) - at_tau((l0 - h).exp())) / (2.0 * h);
            assert!(
                (out.grad_tau - fd_tau).abs() / fd_tau.abs().max(1e-3) < 1e-5,
                "grad_tau {} vs fd {fd_tau}",
                out.grad_tau
            );
        } else {
            assert_eq!(out.grad_tau, 0.0);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10 {
            fd_check(CneKernel::CosineTemperature, None, seed);
            fd_check(CneKernel::Cauchy, None, seed + 50);
            fd_check(CneKernel::CosineTemperature, Some(3), seed + 100);
            fd_check(CneKernel::Cauchy, Some(2), seed + 150);
        }
    }

    #[test]
    fn cosine_loss_is_scale_invariant_and_gradient_tangent() {
        let d = 8;
        let y = seeded_coords(6, d, 13);
        let batch = EdgeBatch::new(vec![(0, 1), (2, 3), (4, 5)], 2);
        let params = CneParams {
            d,
            tau: 0.05,
            ..CneParams::default()
        };
        let base = infonce_batch_loss(&y, &batch, &params).unwrap();
        let mut scaled = y.coords().to_vec();
        for k in 0..d {
            scaled[2 * d + k] *= 37.5; // rescale node 2 only
        }
        let ys = Embedding::new(6, d, scaled, Metric::Euclidean).unwrap();
        let out = infonce_batch_loss(&ys, &batch, &params).unwrap();
        assert!((out.loss - base.loss).abs() < 1e-10);

        for (idx, &node) in base.grad.nodes().iter().enumerate() {
            let g = base.grad.row(idx);
            let yrow = y.row(node);
            let dot: f64 = g.iter().zip(yrow).map(|(a, b)| a * b).sum();
            let scale: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt()
                * yrow.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(dot.abs() <= 1e-8 * scale.max(1.0), "radial leak {dot}");
        }
    }

    #[test]
    fn epoch_batches_partition_the_edge_list() {
        // path with 10 edges, b = 4 -> batch sizes 4, 4, 2
        let edges: Vec<(usize, usize)> = (0..10).map(|i| (i, i + 1)).collect();
        let g = Graph::from_edges(11, &edges, None).unwrap();
        let batches = sample_epoch(&g, 4, 3, 0).unwrap();
        let sizes: Vec<usize> = batches.iter().map(|b| b.pairs().len()).collect();
        assert_eq!(sizes, vec![4, 4, 2]);

        let mut seen: Vec<(usize, usize)> = batches
            .iter()
            .flat_map(|b| b.pairs().iter().map(|&(i, j)| (i.min(j), i.max(j))))
            .collect();
        seen.sort_unstable();
        let mut expect = edges.clone();
        expect.sort_unstable();
        assert_eq!(seen, expect);

        let again = sample_epoch(&g, 4, 3, 0).unwrap();
        for (a, b) in batches.iter().zip(&again) {
            assert_eq!(a.pairs(), b.pairs());
        }
        let other_epoch = sample_epoch(&g, 4, 3, 1).unwrap();
        assert!(batches
            .iter()
            .zip(&other_epoch)
            .any(|(a, b)| a.pairs() != b.pairs()));
        assert!(sample_epoch(&g, 1, 0, 0).is_err());
    }

    #[test]
    fn short_final_batch_below_two_pairs_is_dropped() {
        let edges: Vec<(usize, usize)> = (0..9).map(|i| (i, i + 1)).collect();
        let g = Graph::from_edges(10, &edges, None).unwrap();
        let batches = sample_epoch(&g, 4, 0, 0).unwrap();
        let sizes: Vec<usize> = batches.iter().map(|b| b.pairs().len()).collect();
        assert_eq!(sizes, vec![4, 4]);
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let g = Graph::from_edges(
            6,
            &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)],
            None,
        )
        .unwrap();
        let params = CneParams {
            d: 4,
            epochs: 40,
            seed: 7,
            ..CneParams::default()
        };
        let init = crate::spectral::random_init(6, 4, 7).unwrap();
        let (emb, stats) = run_cne(&g, &params, &init).unwrap();
        assert_eq!(emb.metric(), Metric::Cosine);
        assert_eq!(stats.len(), 40);
        // epoch losses are noisy on a 7-edge graph; compare 5-epoch means
        let first: f64 = stats[..5].iter().map(|s| s.mean_loss).sum::<f64>() / 5.0;
        let last: f64 = stats[35..].iter().map(|s| s.mean_loss).sum::<f64>() / 5.0;
        assert!(last < first, "loss did not drop: {first} -> {last}");
        assert!(stats.iter().all(|s| (s.tau - 0.05).abs() < 1e-15));

        let (emb2, _) = run_cne(&g, &params, &init).unwrap();
        assert_eq!(emb.coords(), emb2.coords());

        let params_other = CneParams { seed: 8, ..params.clone() };
        let (emb3, _) = run_cne(&g, &params_other, &init).unwrap();
        assert_ne!(emb.coords(), emb3.coords());
    }

    #[test]
    fn learnable_tau_moves_and_is_recorded() {
        let g = crate::sbm::sbm_generate(&[20, 20], 0.5, 0.02, 3).unwrap().0;
        let params = CneParams {
            d: 8,
            epochs: 10,
            learnable_tau: true,
            batch_pairs: Some(8),
            seed: 1,
            ..CneParams::default()
        };
        let init = crate::spectral::random_init(g.n(), 8, 1).unwrap();
        let (_, stats) = run_cne(&g, &params, &init).unwrap();
        assert_eq!(stats.len(), 10);
        assert!(stats.iter().all(|s| s.tau.is_finite() && s.tau > 0.0));
        assert!((stats.last().unwrap().tau - 0.5).abs() > 1e-6);
    }

    #[test]
    fn cauchy_kernel_returns_euclidean_embedding() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)], None)
            .unwrap();
        let params = CneParams {
            d: 2,
            kernel: CneKernel::Cauchy,
            epochs: 3,
            ..CneParams::default()
        };
        let init = crate::spectral::random_init(6, 2, 0).unwrap();
        let (emb, _) = run_cne(&g, &params, &init).unwrap();
        assert_eq!(emb.metric(), Metric::Euclidean);
    }

    #[test]
    fn rejects_invalid_configurations() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)], None)
            .unwrap();
        let init = crate::spectral::random_init(6, 4, 0).unwrap();
        let bad_tau = CneParams { d: 4, tau: 0.0, ..CneParams::default() };
        assert!(run_cne(&g, &bad_tau, &init).is_err());
        let bad_m = CneParams { d: 4, negatives: Some(99), ..CneParams::default() };
        assert!(run_cne(&g, &bad_m, &init).is_err());
        let bad_d = CneParams { d: 3, ..CneParams::default() };
        assert!(run_cne(&g, &bad_d, &init).is_err());
        let y = seeded_coords(4, 2, 0);
        let batch = EdgeBatch::new(vec![(0, 9)], 0);
        let params = CneParams { d: 2, ..CneParams::default() };
        assert!(infonce_batch_loss(&y, &batch, &params).is_err());
    }
}
