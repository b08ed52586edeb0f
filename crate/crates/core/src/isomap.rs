//! Isomap baseline: geodesic distances over a symmetrized kNN graph,
//! followed by classical scaling.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{connected_components, dijkstra_adj, dist, knn_graph, PointCloud, WeightedGraph};
use crate::metrics::pearson;

#[derive(Debug, Clone, PartialEq)]
pub struct IsomapResult {
    /// One row per kept point, `dims` columns ordered by decreasing eigenvalue.
    pub embedding: Vec<Vec<f64>>,
    /// Residual variance for 1..=dims embedding dimensions.
    pub residual_variances: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Input indices of the embedded points (the largest graph component).
    pub kept: Vec<usize>,
    pub dropped: usize,
}

/// Geodesic distance matrix (row-major) over the largest component of the
/// symmetrized kNN graph, with the input indices of that component.
pub fn geodesic_distances(cloud: &PointCloud, k: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k too small: the neighbor graph is empty".into()));
    }
    let g = knn_graph(cloud, k)?.symmetrized();
    let labels = connected_components(&g);
    let count = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; count];
    for &l in &labels {
        sizes[l] += 1;
    }
    let mut big = 0;
    for (l, &s) in sizes.iter().enumerate() {
        if s > sizes[big] {
            big = l;
        }
    }
    let kept: Vec<usize> = (0..cloud.n()).filter(|&i| labels[i] == big).collect();
    if kept.len() < 2 {
        return Err(Error::InvalidArgument("k too small: no connected neighborhood".into()));
    }
    let mut local = vec![usize::MAX; cloud.n()];
    for (i, &g) in kept.iter().enumerate() {
        local[g] = i;
    }
    let n = kept.len();
    let edges = g.edges.iter().filter(|e| labels[e.0] == big).map(|&(i, j, w)| (local[i], local[j], w)).collect();
    let adj = WeightedGraph::new(n, false, edges).adjacency();
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra_adj(&adj, s).expect("in range").dist).collect();
    Ok((rows.into_iter().flatten().collect(), kept))
}

/// Double-centered Gram matrix −½ J D² J.
fn centered_gram(d: &[f64], n: usize) -> Vec<f64> {
    let sq: Vec<f64> = d.iter().map(|x| x * x).collect();
    let row_mean: Vec<f64> = (0..n).map(|i| sq[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let total = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = vec![0.0; n * n];
    b.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in 0..n {
            row[j] = -0.5 * (sq[i * n + j] - row_mean[i] - row_mean[j] + total);
        }
    });
    b
}

fn matvec(b: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    b.par_chunks(n).map(|row| row.iter().zip(x).map(|(a, v)| a * v).sum()).collect()
}

/// Top `count` eigenpairs (largest algebraic) of a symmetric matrix.
fn top_eigen(b: &[f64], n: usize, count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let full = |b: &[f64]| {
        let m = DMatrix::from_row_slice(n, n, b);
        let e = SymmetricEigen::new(m);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| e.eigenvalues[j].total_cmp(&e.eigenvalues[i]).then(i.cmp(&j)));
        let vals = idx.iter().take(count).map(|&i| e.eigenvalues[i]).collect();
        let vecs = idx.iter().take(count).map(|&i| e.eigenvectors.column(i).iter().copied().collect()).collect();
        (vals, vecs)
    };
    if n <= 300 {
        return full(b);
    }
    // Lanczos with full reorthogonalization, grown until the wanted Ritz pairs converge.
    let mut steps = (4 * count + 40).min(n);
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(0x15_0a_a9);
        let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nq = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        q.iter_mut().for_each(|v| *v /= nq);
        let mut basis: Vec<Vec<f64>> = vec![q];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..steps {
            let mut w = matvec(b, n, &basis[j]);
            let a: f64 = w.iter().zip(&basis[j]).map(|(x, y)| x * y).sum();
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    let c: f64 = w.iter().zip(v).map(|(x, y)| x * y).sum();
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let nb = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if j + 1 == steps || nb < 1e-12 * a.abs().max(1.0) {
                break;
            }
            beta.push(nb);
            w.iter_mut().for_each(|v| *v /= nb);
            basis.push(w);
        }
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let e = SymmetricEigen::new(t);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&i, &j| e.eigenvalues[j].total_cmp(&e.eigenvalues[i]).then(i.cmp(&j)));
        let take = count.min(m);
        let mut vals = Vec::with_capacity(take);
        let mut vecs = Vec::with_capacity(take);
        let mut converged = true;
        for &i in idx.iter().take(take) {
            let s = e.eigenvectors.column(i);
            let mut y = vec![0.0; n];
            for (c, v) in s.iter().zip(&basis) {
                y.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
            }
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            y.iter_mut().for_each(|v| *v /= ny);
            let by = matvec(b, n, &y);
            let theta = e.eigenvalues[i];
            let res = by.iter().zip(&y).map(|(a, v)| (a - theta * v).powi(2)).sum::<f64>().sqrt();
            if res > 1e-8 * e.eigenvalues[idx[0]].abs().max(1e-300) {
                converged = false;
            }
            vals.push(theta);
            vecs.push(y);
        }
        if converged || steps >= n {
            return (vals, vecs);
        }
        steps = (steps * 2).min(n);
    }
}

fn canonical_sign(v: &mut [f64]) {
    let mut big = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[big].abs() + 1e-12 {
            big = i;
        }
    }
    if v[big] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// 1 − r² between geodesic distances and embedding distances in the first `e` columns.
pub fn residual_variance(geodesic: &[f64], embedding: &[Vec<f64>], e: usize) -> Result<f64> {
    let n = embedding.len();
    let mut g = Vec::with_capacity(n * (n - 1) / 2);
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            g.push(geodesic[i * n + j]);
            d.push(dist(&embedding[i][..e], &embedding[j][..e]));
        }
    }
    let r = pearson(&g, &d)?;
    Ok(1.0 - r * r)
}

pub fn isomap(cloud: &PointCloud, k: usize, dims: usize) -> Result<IsomapResult> {
    if dims == 0 || dims > cloud.d() {
        return Err(Error::InvalidArgument(format!("dims must be in 1..={}", cloud.d())));
    }
    let (geo, kept) = geodesic_distances(cloud, k)?;
    let n = kept.len();
    let gram = centered_gram(&geo, n);
    let (vals, mut vecs) = top_eigen(&gram, n, dims.min(n));
    for v in vecs.iter_mut() {
        canonical_sign(v);
    }
    let embedding: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..dims).map(|c| if c < vals.len() { vecs[c][i] * vals[c].max(0.0).sqrt() } else { 0.0 }).collect())
        .collect();
    let residual_variances = (1..=dims).map(|e| residual_variance(&geo, &embedding, e)).collect::<Result<Vec<_>>>()?;
    Ok(IsomapResult { embedding, residual_variances, eigenvalues: vals, dropped: cloud.n() - n, kept })
}
