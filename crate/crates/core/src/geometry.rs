//! Point clouds, the two-direction PCA frame, neighbor graphs and shortest paths.
//!
//! Neighbor searches are exact brute force. Row-parallel loops write into
//! per-row slots, so results do not depend on the thread count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// n points of dimension d stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    d: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn new(d: usize, data: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!("dimension must be at least 2, got {d}")));
        }
        if data.len() % d != 0 {
            return Err(Error::DimensionMismatch { expected: d, got: data.len() % d });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite coordinate in point {}", pos / d)));
        }
        Ok(Self { d, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(2);
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(d, data)
    }

    pub fn empty(d: usize) -> Result<Self> {
        Self::new(d, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn subset(&self, idx: &[usize]) -> PointCloud {
        let mut data = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            data.extend_from_slice(self.point(i));
        }
        PointCloud { d: self.d, data }
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.d];
        for p in self.points() {
            for (m, v) in mu.iter_mut().zip(p) {
                *m += v;
            }
        }
        let n = self.n().max(1) as f64;
        mu.iter_mut().for_each(|m| *m /= n);
        mu
    }

    /// Applies `f` to every point, producing a cloud of the same dimension.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<PointCloud> {
        let rows: Vec<Vec<f64>> = self.points().map(|p| f(p)).collect();
        if rows.is_empty() {
            return PointCloud::empty(self.d);
        }
        PointCloud::from_rows(&rows)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// How the spread sigma of a principal direction is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spread {
    /// max_j |(y_j - mu)ᵀ v|, so the slab sequence covers every point.
    #[default]
    HalfExtent,
    /// Square root of the covariance eigenvalue along v.
    StdDev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFrame {
    pub mu: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub sigma1: f64,
    pub sigma2: f64,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
}

impl ReferenceFrame {
    pub fn direction(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::First => &self.v1,
            Axis::Second => &self.v2,
        }
    }

    pub fn sigma(&self, axis: Axis) -> f64 {
        match axis {
            Axis::First => self.sigma1,
            Axis::Second => self.sigma2,
        }
    }

    /// Frame with user-chosen directions. `v2` is orthogonalized against `v1`.
    pub fn from_directions(cloud: &PointCloud, v1: &[f64], v2: &[f64], spread: Spread) -> Result<Self> {
        let d = cloud.d();
        if v1.len() != d || v2.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: if v1.len() != d { v1.len() } else { v2.len() } });
        }
        if cloud.n() < 3 {
            return Err(Error::TooFewPoints { need: 3, got: cloud.n() });
        }
        let n1 = norm(v1);
        if n1 == 0.0 {
            return Err(Error::NoPrincipalDirection);
        }
        let v1: Vec<f64> = v1.iter().map(|x| x / n1).collect();
        let c = dot(v2, &v1);
        let mut w: Vec<f64> = v2.iter().zip(&v1).map(|(a, b)| a - c * b).collect();
        let n2 = norm(&w);
        if n2 < 1e-12 {
            return Err(Error::SecondDirectionUndefined);
        }
        w.iter_mut().for_each(|x| *x /= n2);
        let mu = cloud.mean();
        let cov = covariance(cloud, &mu);
        let s1 = spread_along(cloud, &mu, &cov, &v1, spread);
        let s2 = spread_along(cloud, &mu, &cov, &w, spread);
        Ok(Self::assemble(mu, v1, w, s1, s2))
    }

    /// Frame spanned by two coordinate axes (0-based).
    pub fn from_coordinate_axes(cloud: &PointCloud, i: usize, j: usize, spread: Spread) -> Result<Self> {
        let d = cloud.d();
        if i >= d || j >= d || i == j {
            return Err(Error::InvalidArgument(format!("axes ({i},{j}) invalid for dimension {d}")));
        }
        let mut e1 = vec![0.0; d];
        let mut e2 = vec![0.0; d];
        e1[i] = 1.0;
        e2[j] = 1.0;
        Self::from_directions(cloud, &e1, &e2, spread)
    }

    fn assemble(mu: Vec<f64>, v1: Vec<f64>, v2: Vec<f64>, sigma1: f64, sigma2: f64) -> Self {
        let q1 = mu.iter().zip(&v1).map(|(m, v)| m + v * sigma1).collect();
        let q2 = mu.iter().zip(&v2).map(|(m, v)| m + v * sigma2).collect();
        Self { mu, v1, v2, sigma1, sigma2, q1, q2 }
    }
}

/// The two reference axes of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    First,
    Second,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::First => Axis::Second,
            Axis::Second => Axis::First,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Axis::First => 0,
            Axis::Second => 1,
        }
    }
}

fn covariance(cloud: &PointCloud, mu: &[f64]) -> DMatrix<f64> {
    let d = cloud.d();
    let mut c = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for p in cloud.points() {
        for k in 0..d {
            centered[k] = p[k] - mu[k];
        }
        for a in 0..d {
            for b in a..d {
                c[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    let denom = (cloud.n().max(2) - 1) as f64;
    for a in 0..d {
        for b in a..d {
            c[(a, b)] /= denom;
            c[(b, a)] = c[(a, b)];
        }
    }
    c
}

fn spread_along(cloud: &PointCloud, mu: &[f64], cov: &DMatrix<f64>, v: &[f64], spread: Spread) -> f64 {
    match spread {
        Spread::HalfExtent => cloud
            .points()
            .map(|p| p.iter().zip(mu).zip(v).map(|((a, m), w)| (a - m) * w).sum::<f64>().abs())
            .fold(0.0, f64::max),
        Spread::StdDev => {
            let vv = DVector::from_column_slice(v);
            (vv.transpose() * cov * &vv)[(0, 0)].max(0.0).sqrt()
        }
    }
}

fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Top two principal directions with half-extent spreads.
pub fn pca2(cloud: &PointCloud) -> Result<ReferenceFrame> {
    pca2_with(cloud, Spread::HalfExtent)
}

pub fn pca2_with(cloud: &PointCloud, spread: Spread) -> Result<ReferenceFrame> {
    let n = cloud.n();
    if n < 3 {
        return Err(Error::TooFewPoints { need: 3, got: n });
    }
    let d = cloud.d();
    let mu = cloud.mean();
    let cov = covariance(cloud, &mu);
    let eig = nalgebra::SymmetricEigen::new(cov.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let scale = cloud.points().map(|p| dot(p, p)).sum::<f64>() / n as f64 + 1.0;
    if vals[0] <= 1e-20 * scale {
        return Err(Error::NoPrincipalDirection);
    }
    if vals[1] <= 1e-12 * vals[0] {
        return Err(Error::SecondDirectionUndefined);
    }

    // Eigenvalues within a relative 1e-9 share an eigenspace; inside it pick the
    // lexicographically largest orthonormal basis so ties resolve deterministically.
    let tol = 1e-9 * vals[0];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(2);
    let mut start = 0;
    while basis.len() < 2 {
        let mut end = start + 1;
        while end < d && (vals[start] - vals[end]).abs() <= tol {
            end += 1;
        }
        let space: Vec<Vec<f64>> = order[start..end]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        if space.len() == 1 {
            basis.push(space.into_iter().next().unwrap());
        } else {
            let mut chosen: Vec<Vec<f64>> = Vec::new();
            for axis in 0..d {
                if chosen.len() == space.len() {
                    break;
                }
                let mut w = vec![0.0; d];
                for s in &space {
                    let c = s[axis];
                    w.iter_mut().zip(s).for_each(|(x, y)| *x += c * y);
                }
                for c in &chosen {
                    let k = dot(&w, c);
                    w.iter_mut().zip(c).for_each(|(x, y)| *x -= k * y);
                }
                let nw = norm(&w);
                if nw > 1e-8 {
                    w.iter_mut().for_each(|x| *x /= nw);
                    chosen.push(w);
                }
            }
            basis.extend(chosen);
        }
        start = end;
    }
    let mut v1 = basis[0].clone();
    let mut v2 = basis[1].clone();
    canonical_sign(&mut v1);
    canonical_sign(&mut v2);
    let s1 = spread_along(cloud, &mu, &cov, &v1, spread);
    let s2 = spread_along(cloud, &mu, &cov, &v2, spread);
    Ok(ReferenceFrame::assemble(mu, v1, v2, s1, s2))
}

/// Edge list with Euclidean weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub n: usize,
    pub directed: bool,
    pub edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(n: usize, directed: bool, edges: Vec<(usize, usize, f64)>) -> Self {
        Self { n, directed, edges }
    }

    /// Out-neighbor lists; an undirected edge appears in both lists.
    pub fn adjacency(&self) -> Adjacency {
        let mut deg = vec![0usize; self.n + 1];
        for &(i, j, _) in &self.edges {
            deg[i + 1] += 1;
            if !self.directed {
                deg[j + 1] += 1;
            }
        }
        for i in 0..self.n {
            deg[i + 1] += deg[i];
        }
        let mut fill = deg.clone();
        let mut targets = vec![(0usize, 0.0f64); deg[self.n]];
        for &(i, j, w) in &self.edges {
            targets[fill[i]] = (j, w);
            fill[i] += 1;
            if !self.directed {
                targets[fill[j]] = (i, w);
                fill[j] += 1;
            }
        }
        Adjacency { offsets: deg, targets }
    }

    /// Undirected copy with one edge per unordered pair (the smaller weight kept).
    pub fn symmetrized(&self) -> WeightedGraph {
        let mut e: Vec<(usize, usize, f64)> =
            self.edges.iter().map(|&(i, j, w)| if i < j { (i, j, w) } else { (j, i, w) }).collect();
        e.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)));
        e.dedup_by(|b, a| a.0 == b.0 && a.1 == b.1);
        WeightedGraph { n: self.n, directed: false, edges: e }
    }
}

/// Compressed neighbor lists.
#[derive(Debug, Clone)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<(usize, f64)>,
}

impl Adjacency {
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// Undirected graph joining every pair at distance in (0, radius].
pub fn range_graph(cloud: &PointCloud, radius: f64) -> WeightedGraph {
    let n = cloud.n();
    let r2 = radius * radius;
    let rows: Vec<Vec<(usize, usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = cloud.point(i);
            let mut out = Vec::new();
            for j in i + 1..n {
                let s = sq_dist(pi, cloud.point(j));
                if s > 0.0 && s <= r2 {
                    out.push((i, j, s.sqrt()));
                }
            }
            out
        })
        .collect();
    WeightedGraph::new(n, false, rows.into_iter().flatten().collect())
}

/// Indices and distances of the k nearest other points of every point,
/// ordered by (distance, index).
pub fn knn(cloud: &PointCloud, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = cloud.n();
    if k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let pi = cloud.point(i);
            let mut cand: Vec<(f64, usize)> =
                (0..n).filter(|&j| j != i).map(|j| (sq_dist(pi, cloud.point(j)), j)).collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, cmp);
                cand.truncate(k);
            }
            cand.sort_by(cmp);
            cand.into_iter().map(|(s, j)| (j, s.sqrt())).collect()
        })
        .collect())
}

/// Directed graph with exactly k out-edges per point.
pub fn knn_graph(cloud: &PointCloud, k: usize) -> Result<WeightedGraph> {
    let nb = knn(cloud, k)?;
    let edges = nb
        .into_iter()
        .enumerate()
        .flat_map(|(i, row)| row.into_iter().map(move |(j, w)| (i, j, w)))
        .collect();
    Ok(WeightedGraph::new(cloud.n(), true, edges))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pub pred: Vec<Option<usize>>,
}

impl ShortestPaths {
    /// Node sequence from the source to `target`, or None when unreachable.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = self.pred[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn dijkstra(graph: &WeightedGraph, source: usize) -> Result<ShortestPaths> {
    dijkstra_adj(&graph.adjacency(), source)
}

pub fn dijkstra_adj(adj: &Adjacency, source: usize) -> Result<ShortestPaths> {
    let n = adj.n();
    if source >= n {
        return Err(Error::SourceOutOfRange { source_node: source, n });
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem(0.0, source));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in adj.neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(HeapItem(nd, v));
            }
        }
    }
    Ok(ShortestPaths { dist, pred })
}

/// Component labels, numbered in order of each component's smallest node.
pub fn connected_components(graph: &WeightedGraph) -> Vec<usize> {
    let adj = graph.adjacency();
    // Directed edges still join their endpoints.
    let rev = if graph.directed {
        Some(WeightedGraph::new(graph.n, true, graph.edges.iter().map(|&(i, j, w)| (j, i, w)).collect()).adjacency())
    } else {
        None
    };
    let mut label = vec![usize::MAX; graph.n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..graph.n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        stack.push(s);
        while let Some(u) = stack.pop() {
            let fwd = adj.neighbors(u).iter();
            let back = rev.as_ref().map(|r| r.neighbors(u)).unwrap_or(&[]).iter();
            for &(v, _) in fwd.chain(back) {
                if label[v] == usize::MAX {
                    label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    label
}
