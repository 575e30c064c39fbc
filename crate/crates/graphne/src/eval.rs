//! Evaluation metrics: neighbor recall, kNN classification accuracy, and
//! linear classification accuracy, with the 90/10 split convention.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::{Embedding, Metric};
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelSet};

/// A train/test node split.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Seeded uniform split with `round(train_fraction * n)` training nodes.
pub fn make_split(n: usize, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(0.0 < train_fraction && train_fraction < 1.0) {
        return Err(Error::InvalidInput(
            "train_fraction must lie strictly between 0 and 1".into(),
        ));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let train_count = (train_fraction * n as f64).round() as usize;
    let mut train = perm[..train_count].to_vec();
    let mut test = perm[train_count..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test, seed })
}

/// Coordinates prepared for the embedding's metric: cosine embeddings are
/// normalized once, with distance `1 - cos`.
struct PreparedPoints {
    coords: Vec<f64>,
    d: usize,
}

impl PreparedPoints {
    fn new(e: &Embedding) -> Result<PreparedPoints> {
        let d = e.d();
        let mut coords = e.coords().to_vec();
        if e.metric() == Metric::Cosine {
            for i in 0..e.n() {
                let row = &mut coords[i * d..(i + 1) * d];
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "zero vector at node {i} under the cosine metric"
                    )));
                }
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        Ok(PreparedPoints { coords, d })
    }

    fn dist(&self, i: usize, j: usize, metric: Metric) -> f64 {
        let a = &self.coords[i * self.d..(i + 1) * self.d];
        let b = &self.coords[j * self.d..(j + 1) * self.d];
        match metric {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>(),
            Metric::Cosine => 1.0 - a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>(),
        }
    }
}

fn tie_cmp(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
}

/// Average fraction of each node's graph neighbors recovered among its
/// `k_i = degree(i)` nearest embedding neighbors (self excluded, distance
/// ties broken by lower index).
pub fn neighbor_recall(g: &Graph, e: &Embedding) -> Result<f64> {
    if g.n() != e.n() {
        return Err(Error::InvalidInput(format!(
            "graph has {} nodes, embedding has {}",
            g.n(),
            e.n()
        )));
    }
    if let Some(node) = g.degrees().iter().position(|&d| d == 0) {
        return Err(Error::IsolatedNode { node });
    }
    let pts = PreparedPoints::new(e)?;
    let metric = e.metric();
    let n = g.n();
    let fractions: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let k = g.degree(i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (pts.dist(i, j, metric), j))
                .collect();
            cand.select_nth_unstable_by(k - 1, tie_cmp);
            let hits = cand[..k]
                .iter()
                .filter(|&&(_, j)| g.neighbors(i).binary_search(&j).is_ok())
                .count();
            hits as f64 / k as f64
        })
        .collect();
    Ok(fractions.iter().sum::<f64>() / n as f64)
}

/// Classifies each test node by majority label among its `k` nearest train
/// nodes; majority ties resolve to the class of the single nearest neighbor,
/// distance ties to the lower node index.
pub fn knn_accuracy(e: &Embedding, labels: &LabelSet, split: &Split, k: usize) -> Result<f64> {
    if labels.len() != e.n() {
        return Err(Error::InvalidInput(format!(
            "label count {} does not match embedding rows {}",
            labels.len(),
            e.n()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    if k > split.train.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds training set size {}",
            split.train.len()
        )));
    }
    if split.test.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    let pts = PreparedPoints::new(e)?;
    let metric = e.metric();
    let correct: usize = split
        .test
        .par_iter()
        .map(|&q| {
            let mut cand: Vec<(f64, usize)> = split
                .train
                .iter()
                .map(|&t| (pts.dist(q, t, metric), t))
                .collect();
            cand.select_nth_unstable_by(k - 1, tie_cmp);
            let mut top: Vec<(f64, usize)> = cand[..k].to_vec();
            top.sort_by(tie_cmp);
            let mut votes = vec![0usize; labels.class_count()];
            for &(_, t) in &top {
                votes[labels.label(t)] += 1;
            }
            let best = votes.iter().max().copied().unwrap_or(0);
            let tied = votes.iter().filter(|&&v| v == best).count();
            let predicted = if tied > 1 {
                labels.label(top[0].1)
            } else {
                votes.iter().position(|&v| v == best).unwrap()
            };
            usize::from(predicted == labels.label(q))
        })
        .sum();
    Ok(correct as f64 / split.test.len() as f64)
}

/// Multinomial logistic regression accuracy: features standardized with
/// train statistics, softmax cross-entropy minimized by full-batch gradient
/// descent (no penalty) until the gradient infinity norm drops below `1e-2`
/// or 10000 iterations.
pub fn linear_accuracy(e: &Embedding, labels: &LabelSet, split: &Split) -> Result<f64> {
    if labels.len() != e.n() {
        return Err(Error::InvalidInput(format!(
            "label count {} does not match embedding rows {}",
            labels.len(),
            e.n()
        )));
    }
    if split.test.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    let train_classes: std::collections::BTreeSet<usize> =
        split.train.iter().map(|&i| labels.label(i)).collect();
    if train_classes.len() < 2 {
        return Err(Error::InvalidInput(
            "training set holds fewer than 2 classes".into(),
        ));
    }
    let d = e.d();
    let classes = labels.class_count();

    // standardize with train mean/std; zero-std dimensions become zero
    let nt = split.train.len() as f64;
    let mut mean = vec![0.0; d];
    for &i in &split.train {
        for (m, v) in mean.iter_mut().zip(e.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nt);
    let mut std = vec![0.0; d];
    for &i in &split.train {
        for k in 0..d {
            let v = e.row(i)[k] - mean[k];
            std[k] += v * v;
        }
    }
    std.iter_mut().for_each(|s| *s = (*s / nt).sqrt());
    let features = |i: usize| -> Vec<f64> {
        let mut x = Vec::with_capacity(d + 1);
        for k in 0..d {
            x.push(if std[k] == 0.0 {
                0.0
            } else {
                (e.row(i)[k] - mean[k]) / std[k]
            });
        }
        x.push(1.0); // intercept
        x
    };
    let xt: Vec<Vec<f64>> = split.train.iter().map(|&i| features(i)).collect();
    let yt: Vec<usize> = split.train.iter().map(|&i| labels.label(i)).collect();
    let weights = fit_softmax(&xt, &yt, classes, 1e-2, 10_000);

    let correct = split
        .test
        .iter()
        .filter(|&&q| {
            let x = features(q);
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (c, w) in weights.iter().enumerate() {
                let score: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
                if score > best_score {
                    best_score = score;
                    best = c;
                }
            }
            best == labels.label(q)
        })
        .count();
    Ok(correct as f64 / split.test.len() as f64)
}

/// Full-batch gradient descent on the mean softmax cross-entropy with a
/// 1/L step from the Lipschitz bound `L = lambda_max(X^T X) / (2 N)`.
fn fit_softmax(
    x: &[Vec<f64>],
    y: &[usize],
    classes: usize,
    grad_tol: f64,
    max_iters: usize,
) -> Vec<Vec<f64>> {
    let rows = x.len();
    let dim = x[0].len();

    let mut gram = vec![0.0; dim * dim];
    for xi in x {
        for a in 0..dim {
            if xi[a] == 0.0 {
                continue;
            }
            for b in 0..dim {
                gram[a * dim + b] += xi[a] * xi[b];
            }
        }
    }
    let mut v = vec![1.0; dim];
    let mut lambda = 1.0;
    for _ in 0..100 {
        let mut nv = vec![0.0; dim];
        for a in 0..dim {
            let mut s = 0.0;
            for b in 0..dim {
                s += gram[a * dim + b] * v[b];
            }
            nv[a] = s;
        }
        lambda = nv.iter().map(|t| t * t).sum::<f64>().sqrt();
        if lambda == 0.0 {
            break;
        }
        nv.iter_mut().for_each(|t| *t /= lambda);
        v = nv;
    }
    let lipschitz = (0.5 * lambda / rows as f64).max(1e-12);
    let step = 1.0 / lipschitz;

    let mut w = vec![vec![0.0; dim]; classes];
    let mut probs = vec![0.0; rows * classes];
    for _iter in 0..max_iters {
        probs
            .par_chunks_mut(classes)
            .zip(x.par_iter())
            .for_each(|(p, xi)| {
                let mut max = f64::NEG_INFINITY;
                for (c, wc) in w.iter().enumerate() {
                    p[c] = wc.iter().zip(xi).map(|(a, b)| a * b).sum();
                    max = max.max(p[c]);
                }
                let mut sum = 0.0;
                for pc in p.iter_mut() {
                    *pc = (*pc - max).exp();
                    sum += *pc;
                }
                p.iter_mut().for_each(|pc| *pc /= sum);
            });
        let grad: Vec<Vec<f64>> = (0..classes)
            .into_par_iter()
            .map(|c| {
                let mut g = vec![0.0; dim];
                for (r, xi) in x.iter().enumerate() {
                    let coef = probs[r * classes + c] - f64::from(u8::from(y[r] == c));
                    for (gk, xk) in g.iter_mut().zip(xi) {
                        *gk += coef * xk;
                    }
                }
                g.iter_mut().for_each(|gk| *gk /= rows as f64);
                g
            })
            .collect();
        let inf_norm = grad
            .iter()
            .flat_map(|g| g.iter())
            .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        if inf_norm < grad_tol {
            break;
        }
        for (wc, gc) in w.iter_mut().zip(&grad) {
            for (wk, gk) in wc.iter_mut().zip(gc) {
                *wk -= step * gk;
            }
        }
    }
    w
}

/// The three metrics for one embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub recall: f64,
    pub knn_accuracy: f64,
    pub linear_accuracy: f64,
    pub metric_used: Metric,
    pub seed: u64,
}

impl EvalReport {
    /// One CSV row: `dataset,method,d,recall,knn_acc,linear_acc,seed`.
    pub fn csv_row(&self, dataset: &str, method: &str, d: usize) -> String {
        format!(
            "{dataset},{method},{d},{:.6},{:.6},{:.6},{}",
            self.recall, self.knn_accuracy, self.linear_accuracy, self.seed
        )
    }
}

/// Runs all three metrics with a fresh 90/10 split from `seed`. The kNN
/// classifier uses `k = 10`, capped at the training set size on tiny inputs.
pub fn evaluate(g: &Graph, e: &Embedding, labels: &LabelSet, seed: u64) -> Result<EvalReport> {
    let split = make_split(e.n(), 0.9, seed)?;
    let recall = neighbor_recall(g, e)?;
    let k = 10.min(split.train.len());
    let knn = knn_accuracy(e, labels, &split, k)?;
    let linear = linear_accuracy(e, labels, &split)?;
    Ok(EvalReport {
        recall,
        knn_accuracy: knn,
        linear_accuracy: linear,
        metric_used: e.metric(),
        seed,
    })
}
