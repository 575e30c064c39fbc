//! Laplacian Eigenmaps and random initializations.
//!
//! The spectral initialization solves the generalized eigenproblem
//! `L v = lambda D v` with `L = D - A`, equivalently the symmetric problem
//! `M u = lambda u` with `M = I - D^{-1/2} A D^{-1/2}` and `v = D^{-1/2} u`.
//! Graphs up to [`DENSE_THRESHOLD`] nodes use a dense symmetric eigensolver;
//! larger graphs use block LOBPCG with the constant vector deflated.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::embedding::{Embedding, Metric};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Standard deviation all initializations are rescaled to.
pub const DEFAULT_INIT_STD: f64 = 1e-4;

/// Largest node count solved with the dense eigensolver.
pub const DENSE_THRESHOLD: usize = 3000;

/// Relative residual `||L v - lambda D v|| / ||v||` required of every
/// returned eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-6;

const LOBPCG_MAX_ITERS: usize = 2000;

/// Seeded i.i.d. Gaussian initialization with mean 0 and std `1e-4`.
pub fn random_init(n: usize, d: usize, seed: u64) -> Result<Embedding> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("n and d must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, DEFAULT_INIT_STD).expect("valid std");
    let coords: Vec<f64> = (0..n * d).map(|_| normal.sample(&mut rng)).collect();
    Embedding::new(n, d, coords, Metric::Euclidean)
}

/// Rescales all coordinates by one scalar so the first column's population
/// std equals `target_std`.
pub fn rescale_init(e: &Embedding, target_std: f64) -> Result<Embedding> {
    let std0 = e.column_std(0);
    if std0 == 0.0 {
        return Err(Error::InvalidInput(
            "zero-variance first column cannot be rescaled".into(),
        ));
    }
    let scale = target_std / std0;
    let coords: Vec<f64> = e.coords().iter().map(|v| v * scale).collect();
    Embedding::new(e.n(), e.d(), coords, e.metric())
}

/// Laplacian Eigenmaps initialization: the `d` generalized eigenvectors of
/// `(L, D)` with smallest nonzero eigenvalues, sign-fixed and rescaled to
/// first-column std `1e-4`.
///
/// Graphs with `n <= d + 1` do not have enough nontrivial eigenvectors and
/// fall back to [`random_init`] with a warning. The seed is used only by the
/// iterative solver's random start (and the fallback).
pub fn laplacian_eigenmaps(g: &Graph, d: usize, seed: u64) -> Result<Embedding> {
    laplacian_eigenmaps_impl(g, d, seed, DENSE_THRESHOLD)
}

fn laplacian_eigenmaps_impl(
    g: &Graph,
    d: usize,
    seed: u64,
    dense_threshold: usize,
) -> Result<Embedding> {
    if d == 0 {
        return Err(Error::InvalidInput("d must be >= 1".into()));
    }
    let (_, components) = g.connected_components();
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    let n = g.n();
    if n <= d + 1 {
        eprintln!(
            "warning: graph has only {n} nodes, not enough nontrivial eigenvectors for d = {d}; \
             falling back to random initialization"
        );
        return random_init(n, d, seed);
    }
    let (values, vectors) = if n <= dense_threshold {
        solve_dense(g, d)?
    } else {
        solve_lobpcg(g, d, seed)?
    };

    // residual and ordering checks on the generalized problem
    let mut prev = 0.0;
    for (k, (&lambda, v)) in values.iter().zip(&vectors).enumerate() {
        if lambda <= 0.0 || lambda < prev {
            return Err(Error::InvalidInput(format!(
                "eigenvalues not ascending/positive at column {k}"
            )));
        }
        prev = lambda;
        let res = generalized_residual(g, v, lambda);
        if res > RESIDUAL_TOL {
            return Err(Error::EigenNonConvergence {
                residual: res,
                iters: 0,
                tol: RESIDUAL_TOL,
            });
        }
    }

    let mut coords = vec![0.0; n * d];
    for (k, v) in vectors.iter().enumerate() {
        // sign convention: largest-magnitude entry positive
        let mut best = 0;
        for (i, &x) in v.iter().enumerate() {
            if x.abs() > v[best].abs() {
                best = i;
            }
        }
        let sign = if v[best] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i * d + k] = sign * v[i];
        }
    }
    let raw = Embedding::new(n, d, coords, Metric::Euclidean)?;
    rescale_init(&raw, DEFAULT_INIT_STD)
}

/// `||L v - lambda D v|| / ||v||`.
fn generalized_residual(g: &Graph, v: &[f64], lambda: f64) -> f64 {
    let n = g.n();
    let mut num = 0.0;
    for i in 0..n {
        let deg = g.degree(i) as f64;
        let mut lv = deg * v[i];
        for &j in g.neighbors(i) {
            lv -= v[j];
        }
        let r = lv - lambda * deg * v[i];
        num += r * r;
    }
    let norm: f64 = v.iter().map(|x| x * x).sum();
    (num / norm).sqrt()
}

/// Dense route: full symmetric eigendecomposition of `M`.
fn solve_dense(g: &Graph, d: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = g.n();
    let inv_sqrt_deg: Vec<f64> = (0..n).map(|i| 1.0 / (g.degree(i) as f64).sqrt()).collect();
    let mut m = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for &j in g.neighbors(i) {
            m[(i, j)] = -inv_sqrt_deg[i] * inv_sqrt_deg[j];
        }
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    // skip the trivial zero eigenvalue of the connected graph
    let mut values = Vec::with_capacity(d);
    let mut vectors = Vec::with_capacity(d);
    for &idx in order.iter().skip(1).take(d) {
        values.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        vectors.push((0..n).map(|i| col[i] * inv_sqrt_deg[i]).collect());
    }
    Ok((values, vectors))
}

/// Iterative route: block LOBPCG on `M` with the exact null vector deflated.
fn solve_lobpcg(g: &Graph, d: usize, seed: u64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = g.n();
    let inv_sqrt_deg: Vec<f64> = (0..n).map(|i| 1.0 / (g.degree(i) as f64).sqrt()).collect();
    let sqrt_deg: Vec<f64> = (0..n).map(|i| (g.degree(i) as f64).sqrt()).collect();

    // M x = x - D^{-1/2} A D^{-1/2} x
    let matvec = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for &j in g.neighbors(i) {
                    s += inv_sqrt_deg[j] * x[j];
                }
                x[i] - inv_sqrt_deg[i] * s
            })
            .collect()
    };

    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    // exact null vector of M
    let mut u0 = sqrt_deg.clone();
    let u0n = norm(&u0);
    u0.iter_mut().for_each(|v| *v /= u0n);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x_block: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    orthonormalize(&mut x_block, &u0);

    let mut p_block: Vec<Vec<f64>> = Vec::new();
    let mut theta = vec![0.0; d];
    let mut last_max_residual = f64::INFINITY;

    for _iter in 0..LOBPCG_MAX_ITERS {
        let hx: Vec<Vec<f64>> = x_block.iter().map(|x| matvec(x)).collect();

        // Rayleigh-Ritz within span(X) keeps X aligned with Ritz vectors
        let t = small_gram(&x_block, &hx);
        let (tvals, tvecs) = small_sym_eig(&t);
        let xr = rotate(&x_block, &tvecs, d);
        let hxr = rotate(&hx, &tvecs, d);
        x_block = xr;
        theta.copy_from_slice(&tvals[..d]);

        // residuals in the generalized metric
        let mut residuals: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut max_res: f64 = 0.0;
        for k in 0..d {
            let r: Vec<f64> = (0..n).map(|i| hxr[k][i] - theta[k] * x_block[k][i]).collect();
            let v: Vec<f64> = (0..n).map(|i| x_block[k][i] * inv_sqrt_deg[i]).collect();
            let num: f64 = r
                .iter()
                .zip(&sqrt_deg)
                .map(|(ri, s)| (ri * s) * (ri * s))
                .sum::<f64>()
                .sqrt();
            max_res = max_res.max(num / norm(&v));
            residuals.push(r);
        }
        last_max_residual = max_res;
        if max_res <= RESIDUAL_TOL * 0.5 {
            let vectors: Vec<Vec<f64>> = x_block
                .iter()
                .map(|x| (0..n).map(|i| x[i] * inv_sqrt_deg[i]).collect())
                .collect();
            return Ok((theta.clone(), vectors));
        }

        // search space: X, residuals, previous directions
        let mut basis = x_block.clone();
        for mut r in residuals {
            let rn = norm(&r);
            if rn > 0.0 {
                r.iter_mut().for_each(|v| *v /= rn);
                basis.push(r);
            }
        }
        basis.extend(p_block.iter().cloned());
        orthonormalize(&mut basis, &u0);
        if basis.len() < d {
            break;
        }

        let hb: Vec<Vec<f64>> = basis.iter().map(|b| matvec(b)).collect();
        let t = small_gram(&basis, &hb);
        let (tvals, tvecs) = small_sym_eig(&t);
        let new_x = rotate(&basis, &tvecs, d);
        theta.copy_from_slice(&tvals[..d]);

        // next P: component of the new block outside the old X
        let mut new_p = Vec::with_capacity(d);
        for col in &new_x {
            let mut p = col.clone();
            for x in &x_block {
                let c = dot(&p, x);
                p.iter_mut().zip(x).for_each(|(pi, xi)| *pi -= c * xi);
            }
            let pn = norm(&p);
            if pn > 1e-12 {
                p.iter_mut().for_each(|v| *v /= pn);
                new_p.push(p);
            }
        }
        x_block = new_x;
        orthonormalize(&mut x_block, &u0);
        p_block = new_p;
    }
    Err(Error::EigenNonConvergence {
        residual: last_max_residual,
        iters: LOBPCG_MAX_ITERS,
        tol: RESIDUAL_TOL,
    })
}

/// Modified Gram-Schmidt (two passes) against `fixed` and the earlier
/// columns; near-dependent columns are dropped.
fn orthonormalize(cols: &mut Vec<Vec<f64>>, fixed: &[f64]) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for col in cols.drain(..) {
        let mut v = col;
        for _pass in 0..2 {
            let c = v.iter().zip(fixed).map(|(a, b)| a * b).sum::<f64>();
            v.iter_mut().zip(fixed).for_each(|(a, b)| *a -= c * b);
            for q in &out {
                let c = v.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nv > 1e-10 {
            v.iter_mut().for_each(|a| *a /= nv);
            out.push(v);
        }
    }
    *cols = out;
}

fn small_gram(basis: &[Vec<f64>], h_basis: &[Vec<f64>]) -> DMatrix<f64> {
    let k = basis.len();
    let mut t = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = basis[a].iter().zip(&h_basis[b]).map(|(x, y)| x * y).sum::<f64>();
            t[(a, b)] = v;
            t[(b, a)] = v;
        }
    }
    t
}

fn small_sym_eig(t: &DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = t.nrows();
    let eig = t.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (vals, vecs)
}

/// Linear combinations `basis * C` for the first `take` small eigenvectors.
fn rotate(basis: &[Vec<f64>], coeff_cols: &[Vec<f64>], take: usize) -> Vec<Vec<f64>> {
    let n = basis[0].len();
    (0..take)
        .map(|k| {
            let c = &coeff_cols[k];
            let mut col = vec![0.0; n];
            for (b, &w) in basis.iter().zip(c.iter()) {
                if w != 0.0 {
                    for i in 0..n {
                        col[i] += w * b[i];
                    }
                }
            }
            col
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_edge_list;

    fn cycle(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges, None).unwrap()
    }

    #[test]
    fn random_init_is_seeded_gaussian() {
        let a = random_init(10_000, 2, 3).unwrap();
        let b = random_init(10_000, 2, 3).unwrap();
        assert_eq!(a, b);
        let c = random_init(10_000, 2, 4).unwrap();
        assert_ne!(a, c);
        for col in 0..2 {
            let s = a.column_std(col);
            assert!((0.9e-4..=1.1e-4).contains(&s), "column std {s}");
        }
    }

    #[test]
    fn rescale_fixes_first_column_std() {
        let e = Embedding::new(4, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 9.0], Metric::Euclidean)
            .unwrap();
        let r = rescale_init(&e, 1e-4).unwrap();
        assert!((r.column_std(0) - 1e-4).abs() < 1e-18);
        // one global scalar: pairwise distance ratios preserved
        let ratio = (r.row(1)[1] - r.row(0)[1]) / (e.row(1)[1] - e.row(0)[1]);
        let ratio2 = (r.row(3)[0] - r.row(2)[0]) / (e.row(3)[0] - e.row(2)[0]);
        assert!((ratio - ratio2).abs() < 1e-18);
        // idempotent at the target
        let rr = rescale_init(&r, 1e-4).unwrap();
        for (a, b) in rr.coords().iter().zip(r.coords()) {
            assert!((a - b).abs() <= 1e-20);
        }
        let flat = Embedding::new(2, 2, vec![1.0, 0.0, 1.0, 5.0], Metric::Euclidean).unwrap();
        assert!(rescale_init(&flat, 1e-4).is_err());
    }

    #[test]
    fn cycle_embedding_is_an_ellipse() {
        let g = cycle(8);
        let e = laplacian_eigenmaps(&g, 2, 0).unwrap();
        // whiten the 2D point cloud, then radii must be equal and the angular
        // steps between consecutive ring nodes must all be +-pi/4
        let n = 8;
        let mean: Vec<f64> = (0..2)
            .map(|c| (0..n).map(|i| e.row(i)[c]).sum::<f64>() / n as f64)
            .collect();
        let mut cov = [0.0; 3];
        for i in 0..n {
            let x = e.row(i)[0] - mean[0];
            let y = e.row(i)[1] - mean[1];
            cov[0] += x * x;
            cov[1] += x * y;
            cov[2] += y * y;
        }
        // inverse square root of the 2x2 covariance via its eigensystem
        let m = DMatrix::from_row_slice(2, 2, &[cov[0], cov[1], cov[1], cov[2]]);
        let eig = m.symmetric_eigen();
        let whiten = |x: f64, y: f64| {
            let mut out = [0.0; 2];
            for k in 0..2 {
                let v = eig.eigenvectors.column(k);
                let proj = (x * v[0] + y * v[1]) / eig.eigenvalues[k].sqrt();
                out[k] = proj;
            }
            out
        };
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| whiten(e.row(i)[0] - mean[0], e.row(i)[1] - mean[1]))
            .collect();
        let radii: Vec<f64> = pts.iter().map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt()).collect();
        for r in &radii {
            assert!((r / radii[0] - 1.0).abs() < 1e-6, "radii differ: {radii:?}");
        }
        let angles: Vec<f64> = pts.iter().map(|p| p[1].atan2(p[0])).collect();
        let step0 = angle_diff(angles[1], angles[0]);
        assert!((step0.abs() - std::f64::consts::FRAC_PI_4).abs() < 1e-6);
        for i in 1..n {
            let step = angle_diff(angles[(i + 1) % n], angles[i]);
            assert!((step - step0).abs() < 1e-6, "nonuniform angular step");
        }
    }

    fn angle_diff(a: f64, b: f64) -> f64 {
        let mut d = a - b;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        d
    }

    #[test]
    fn path_eigenvector_is_monotone() {
        let g = parse_edge_list("0 1\n1 2\n2 3").unwrap();
        let e = laplacian_eigenmaps(&g, 1, 0).unwrap();
        let vals: Vec<f64> = (0..4).map(|i| e.row(i)[0]).collect();
        let increasing = vals.windows(2).all(|w| w[1] > w[0]);
        let decreasing = vals.windows(2).all(|w| w[1] < w[0]);
        assert!(increasing || decreasing, "not monotone: {vals:?}");
    }

    #[test]
    fn d_orthogonality_to_constant_vector() {
        let g = parse_edge_list("0 1\n1 2\n2 0\n2 3\n3 4\n4 1\n0 4").unwrap();
        let e = laplacian_eigenmaps(&g, 3, 0).unwrap();
        let n = g.n();
        let deg_sum: f64 = g.degrees().iter().map(|&d| d as f64).sum();
        for k in 0..3 {
            let s: f64 = (0..n).map(|i| g.degree(i) as f64 * e.row(i)[k]).sum();
            let vnorm: f64 = (0..n)
                .map(|i| g.degree(i) as f64 * e.row(i)[k] * e.row(i)[k])
                .sum::<f64>()
                .sqrt();
            assert!((s / (vnorm * deg_sum.sqrt())).abs() < 1e-8);
        }
    }

    #[test]
    fn disconnected_graph_rejected() {
        let g = parse_edge_list("0 1\n2 3").unwrap();
        assert!(matches!(
            laplacian_eigenmaps(&g, 1, 0),
            Err(Error::Disconnected { components: 2 })
        ));
    }

    #[test]
    fn tiny_graph_falls_back_to_random() {
        let g = parse_edge_list("0 1\n1 2\n2 0").unwrap();
        let e = laplacian_eigenmaps(&g, 8, 42).unwrap();
        let r = random_init(3, 8, 42).unwrap();
        assert_eq!(e, r);
    }

    #[test]
    fn lobpcg_agrees_with_dense_solver() {
        // irregular connected graph: ring of 240 plus chords
        let n = 240;
        let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        for i in 0..n / 3 {
            edges.push((3 * i, (7 * i + 11) % n));
        }
        let g = Graph::from_edges(n, &edges, None).unwrap();
        let d = 4;
        let (dense_vals, _) = solve_dense(&g, d).unwrap();
        let (lob_vals, lob_vecs) = solve_lobpcg(&g, d, 0).unwrap();
        for k in 0..d {
            assert!(
                (dense_vals[k] - lob_vals[k]).abs() < 1e-8,
                "eigenvalue {k}: dense {} vs lobpcg {}",
                dense_vals[k],
                lob_vals[k]
            );
            let res = generalized_residual(&g, &lob_vecs[k], lob_vals[k]);
            assert!(res <= RESIDUAL_TOL, "residual {res}");
        }
        // full pipeline through the iterative solver
        let e = laplacian_eigenmaps_impl(&g, d, 0, 16).unwrap();
        assert_eq!(e.n(), n);
        assert!((e.column_std(0) - DEFAULT_INIT_STD).abs() < 1e-18);
    }

    #[test]
    fn eigenvalues_ascending_and_residuals_small() {
        let g = parse_edge_list("0 1\n1 2\n2 3\n3 4\n4 0\n0 2\n1 3").unwrap();
        let (vals, vecs) = solve_dense(&g, 3).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert!(vals.iter().all(|&v| v > 0.0));
        for (v, &l) in vecs.iter().zip(&vals) {
            assert!(generalized_residual(&g, v, l) <= 1e-10);
        }
    }
}
