//! Principal manifold construction, embedding and inverse mapping.
//!
//! Building runs three stages. First, each reference axis slices the cloud
//! into slabs that split into connected sub-clusters. Next, the longest
//! geodesic of every sub-cluster is smoothed into a spline, giving two spline
//! families. Last, every cross-family pair contributes a grid node at the
//! midpoint of its closest approach, provided the splines come close enough.
//!
//! Grid coordinates are signed arc lengths. Coordinate 1 is measured along
//! family-2 splines, which run roughly along `v1`, from the family-1 axis
//! spline through the origin. It is carried across to family-2 splines that
//! miss the axis spline by holding it constant along family-1 splines.
//! Coordinate 2 is symmetric.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    connected_components, dijkstra_adj, dist, dot, pca2_with, range_graph, sq_dist, Axis, PointCloud, ReferenceFrame,
    Spread,
};
use crate::slicing::{slice_partition, split_subclusters, Cluster, SliceConfig};
use crate::spline::{fit_smoothing_spline_scaled, PenaltyScale, SmoothingSpline};

/// How the two slicing directions are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameSpec {
    /// Top two principal components.
    Pca,
    /// Two coordinate axes, 0-based.
    CoordinateAxes(usize, usize),
    /// Explicit directions; the second is orthogonalized against the first.
    Directions(Vec<f64>, Vec<f64>),
}

impl FrameSpec {
    pub fn resolve(&self, cloud: &PointCloud, spread: Spread) -> Result<ReferenceFrame> {
        match self {
            FrameSpec::Pca => pca2_with(cloud, spread),
            FrameSpec::CoordinateAxes(i, j) => ReferenceFrame::from_coordinate_axes(cloud, *i, *j, spread),
            FrameSpec::Directions(a, b) => ReferenceFrame::from_directions(cloud, a, b, spread),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginRule {
    /// Node nearest the data mean.
    Centroid,
    /// Uniformly random node.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub frame: FrameSpec,
    pub spread: Spread,
    /// Parameter samples per spline for the closest-approach mesh.
    pub samples: usize,
    /// Largest accepted closest-approach gap, in units of the mean slab width.
    pub gap_factor: f64,
    /// Absolute gap threshold; overrides `gap_factor` when set.
    pub gap_threshold: Option<f64>,
    /// Closest approaches at a spline end are kept only within this many mean slab widths.
    pub endpoint_gap_factor: f64,
    pub penalty: PenaltyScale,
    pub origin: OriginRule,
    /// Largest sub-cluster for which the longest geodesic is found exactly.
    pub exact_geodesic_limit: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            frame: FrameSpec::Pca,
            spread: Spread::HalfExtent,
            samples: 200,
            gap_factor: 3.0,
            gap_threshold: None,
            endpoint_gap_factor: 0.1,
            penalty: PenaltyScale::Length(1.0),
            origin: OriginRule::Centroid,
            exact_geodesic_limit: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldConfig {
    pub p: f64,
    pub slice: SliceConfig,
    pub build: BuildConfig,
}

/// Ordered path through a sub-cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Geodesic {
    pub indices: Vec<usize>,
    pub cumulative: Vec<f64>,
}

impl Geodesic {
    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }
}

/// The longest shortest path of the range graph over `points`. Exact
/// (all sources) up to `exact_limit` points, double sweep beyond.
pub fn longest_geodesic(points: &PointCloud, radius: f64, exact_limit: usize) -> Result<Geodesic> {
    let n = points.n();
    if n < 2 {
        return Err(Error::DegenerateGeodesic);
    }
    let g = range_graph(points, radius);
    if connected_components(&g).iter().any(|&l| l != 0) {
        return Err(Error::DisconnectedCluster);
    }
    let adj = g.adjacency();
    let (dst, sp) = if n <= exact_limit {
        let best: Vec<(f64, usize)> = (0..n)
            .into_par_iter()
            .map(|s| {
                let sp = dijkstra_adj(&adj, s).expect("source in range");
                let mut best = (f64::NEG_INFINITY, s);
                for (t, &d) in sp.dist.iter().enumerate() {
                    if d > best.0 {
                        best = (d, t);
                    }
                }
                best
            })
            .collect();
        let mut s = 0;
        for i in 1..n {
            if best[i].0 > best[s].0 {
                s = i;
            }
        }
        let sp = dijkstra_adj(&adj, s)?;
        (best[s].1, sp)
    } else {
        let first = dijkstra_adj(&adj, 0)?;
        let a = argmax(&first.dist);
        let sp = dijkstra_adj(&adj, a)?;
        let b = argmax(&sp.dist);
        (b, sp)
    };
    let indices = sp.path_to(dst).ok_or(Error::DisconnectedCluster)?;
    let cumulative = indices.iter().map(|&i| sp.dist[i]).collect();
    Ok(Geodesic { indices, cumulative })
}

fn argmax(v: &[f64]) -> usize {
    let mut b = 0;
    for i in 1..v.len() {
        if v[i] > v[b] {
            b = i;
        }
    }
    b
}

/// Closest approach between two splines.
#[derive(Debug, Clone, PartialEq)]
pub struct Approach {
    pub lambda1: f64,
    pub lambda2: f64,
    pub t: Vec<f64>,
    pub gap: f64,
}

impl Approach {
    pub fn at_endpoint(&self) -> bool {
        let end = |l: f64| l <= 1e-9 || l >= 1.0 - 1e-9;
        end(self.lambda1) || end(self.lambda2)
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let m = 0.5 * (a + b);
    // The bracket ends are candidates too, so minima on [0, 1]'s boundary are exact.
    [a, m, b].into_iter().fold(m, |best, x| if f(x) < f(best) { x } else { best })
}

/// Closest pair on a samples×samples parameter mesh, refined by alternating
/// one-dimensional searches within one mesh step.
pub fn closest_approach(s1: &SmoothingSpline, s2: &SmoothingSpline, samples: usize) -> Approach {
    let samples = samples.max(2);
    let grid: Vec<f64> = (0..samples).map(|i| i as f64 / (samples - 1) as f64).collect();
    let a: Vec<Vec<f64>> = grid.iter().map(|&t| s1.eval(t)).collect();
    let b: Vec<Vec<f64>> = grid.iter().map(|&t| s2.eval(t)).collect();
    let mut best = (f64::INFINITY, 0, 0);
    for (i, pa) in a.iter().enumerate() {
        for (j, pb) in b.iter().enumerate() {
            let d = sq_dist(pa, pb);
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    let step = 1.0 / (samples - 1) as f64;
    let (mut l1, mut l2) = (grid[best.1], grid[best.2]);
    let lo1 = (l1 - step).max(0.0);
    let hi1 = (l1 + step).min(1.0);
    let lo2 = (l2 - step).max(0.0);
    let hi2 = (l2 + step).min(1.0);
    let mut prev = best.0;
    for _ in 0..200 {
        let p2 = s2.eval(l2);
        l1 = golden_min(|x| sq_dist(&s1.eval(x), &p2), lo1, hi1);
        let p1 = s1.eval(l1);
        l2 = golden_min(|x| sq_dist(&p1, &s2.eval(x)), lo2, hi2);
        let cur = sq_dist(&p1, &s2.eval(l2));
        if prev - cur <= 1e-30 + 1e-15 * cur {
            break;
        }
        prev = cur;
    }
    let (p1, p2) = (s1.eval(l1), s2.eval(l2));
    let t = p1.iter().zip(&p2).map(|(x, y)| 0.5 * (x + y)).collect();
    Approach { lambda1: l1, lambda2: l2, t, gap: dist(&p1, &p2) }
}

/// The virtual intersection of two splines, absent when they stay farther
/// apart than `gap_threshold`.
pub fn intersect_splines(s1: &SmoothingSpline, s2: &SmoothingSpline, samples: usize, gap_threshold: f64) -> Option<Approach> {
    let a = closest_approach(s1, s2, samples);
    (a.gap <= gap_threshold).then_some(a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridNode {
    pub l: usize,
    pub m: usize,
    pub t: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap: f64,
    pub coord: [f64; 2],
}

/// Where a spline came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineSource {
    pub slab: usize,
    pub subcluster: usize,
    pub members: usize,
    pub geodesic_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifoldRepr {
    config: ManifoldConfig,
    frame: ReferenceFrame,
    splines1: Vec<SmoothingSpline>,
    splines2: Vec<SmoothingSpline>,
    sources1: Vec<SplineSource>,
    sources2: Vec<SplineSource>,
    nodes: Vec<GridNode>,
    origin: (usize, usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "ManifoldRepr", into = "ManifoldRepr")]
pub struct PrincipalManifold {
    pub config: ManifoldConfig,
    pub frame: ReferenceFrame,
    pub splines1: Vec<SmoothingSpline>,
    pub splines2: Vec<SmoothingSpline>,
    pub sources1: Vec<SplineSource>,
    pub sources2: Vec<SplineSource>,
    /// Sorted by (l, m).
    pub nodes: Vec<GridNode>,
    pub origin: (usize, usize),
    /// Unit tangents (of the family-2 spline, of the family-1 spline) per node.
    tangents: Vec<[Vec<f64>; 2]>,
    /// Node indices on each family-1 spline, then each family-2 spline, in parameter order.
    along1: Vec<Vec<usize>>,
    along2: Vec<Vec<usize>>,
}

impl PartialEq for PrincipalManifold {
    fn eq(&self, o: &Self) -> bool {
        self.config == o.config && self.frame == o.frame && self.splines1 == o.splines1 && self.splines2 == o.splines2
            && self.sources1 == o.sources1 && self.sources2 == o.sources2 && self.nodes == o.nodes && self.origin == o.origin
    }
}

impl From<ManifoldRepr> for PrincipalManifold {
    fn from(r: ManifoldRepr) -> Self {
        let mut m = PrincipalManifold {
            config: r.config,
            frame: r.frame,
            splines1: r.splines1,
            splines2: r.splines2,
            sources1: r.sources1,
            sources2: r.sources2,
            nodes: r.nodes,
            origin: r.origin,
            tangents: Vec::new(),
            along1: Vec::new(),
            along2: Vec::new(),
        };
        m.index();
        m
    }
}

impl From<PrincipalManifold> for ManifoldRepr {
    fn from(m: PrincipalManifold) -> Self {
        ManifoldRepr {
            config: m.config,
            frame: m.frame,
            splines1: m.splines1,
            splines2: m.splines2,
            sources1: m.sources1,
            sources2: m.sources2,
            nodes: m.nodes,
            origin: m.origin,
        }
    }
}

struct Family {
    splines: Vec<SmoothingSpline>,
    sources: Vec<SplineSource>,
    width: f64,
}

fn build_family(cloud: &PointCloud, frame: &ReferenceFrame, axis: Axis, p: f64, slice: &SliceConfig, build: &BuildConfig) -> Result<Family> {
    let slabs = slice_partition(cloud, frame, axis, slice);
    let width = slabs.first().map(|c| c.width).unwrap_or(0.0);
    let subs: Vec<Cluster> = slabs
        .par_iter()
        .map(|c| split_subclusters(c, cloud, slice))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    // Family-1 splines run across v1 slabs, so they are oriented along v2, and vice versa.
    let reference = frame.direction(axis.other()).to_vec();
    let fitted: Vec<Result<(SmoothingSpline, SplineSource)>> = subs
        .par_iter()
        .map(|c| {
            let pts = cloud.subset(&c.members);
            let geo = longest_geodesic(&pts, slice.subcluster_radius_scale * c.width, build.exact_geodesic_limit)?;
            let mut ordered: Vec<&[f64]> = geo.indices.iter().map(|&i| pts.point(i)).collect();
            let first = ordered[0];
            let last = ordered[ordered.len() - 1];
            let proj: f64 = last.iter().zip(first).zip(&reference).map(|((a, b), v)| (a - b) * v).sum();
            if proj < 0.0 {
                ordered.reverse();
            }
            let spline = fit_smoothing_spline_scaled(&ordered, p, build.penalty)?;
            Ok((
                spline,
                SplineSource { slab: c.slab_index, subcluster: c.subcluster_index, members: c.members.len(), geodesic_points: ordered.len() },
            ))
        })
        .collect();
    let mut splines = Vec::new();
    let mut sources = Vec::new();
    for f in fitted {
        match f {
            Ok((s, src)) => {
                splines.push(s);
                sources.push(src);
            }
            // A sub-cluster whose points all coincide yields no curve; skip it.
            Err(Error::DegenerateGeodesic) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Family { splines, sources, width })
}

/// Runs slicing, smoothing and grid construction.
pub fn build_manifold(cloud: &PointCloud, p: f64, slice: &SliceConfig, build: &BuildConfig) -> Result<PrincipalManifold> {
    if slice.n_c1 == 0 || slice.n_c2 == 0 {
        return Err(Error::InvalidArgument("cluster counts must be positive".into()));
    }
    let frame = build.frame.resolve(cloud, build.spread)?;
    let fam1 = build_family(cloud, &frame, Axis::First, p, slice, build)?;
    let fam2 = build_family(cloud, &frame, Axis::Second, p, slice, build)?;
    if fam1.splines.is_empty() || fam2.splines.is_empty() {
        return Err(Error::DegenerateGrid);
    }
    let mean_width = 0.5 * (fam1.width + fam2.width);
    let threshold = build.gap_threshold.unwrap_or(build.gap_factor * mean_width);
    let end_threshold = build.endpoint_gap_factor * mean_width;
    let pairs: Vec<(usize, usize)> =
        (0..fam1.splines.len()).flat_map(|l| (0..fam2.splines.len()).map(move |m| (l, m))).collect();
    let nodes: Vec<GridNode> = pairs
        .par_iter()
        .filter_map(|&(l, m)| {
            let a = closest_approach(&fam1.splines[l], &fam2.splines[m], build.samples);
            let keep = a.gap <= threshold && (!a.at_endpoint() || a.gap <= end_threshold);
            keep.then(|| GridNode { l, m, t: a.t, lambda1: a.lambda1, lambda2: a.lambda2, gap: a.gap, coord: [0.0; 2] })
        })
        .collect();
    if nodes.is_empty() {
        return Err(Error::DegenerateGrid);
    }
    let origin_idx = match build.origin {
        OriginRule::Centroid => {
            let mut best = 0;
            for (i, nd) in nodes.iter().enumerate() {
                if sq_dist(&nd.t, &frame.mu) < sq_dist(&nodes[best].t, &frame.mu) {
                    best = i;
                }
            }
            best
        }
        OriginRule::Random(seed) => ChaCha8Rng::seed_from_u64(seed).random_range(0..nodes.len()),
    };
    let origin = (nodes[origin_idx].l, nodes[origin_idx].m);
    let mut m = PrincipalManifold {
        config: ManifoldConfig { p, slice: slice.clone(), build: build.clone() },
        frame,
        splines1: fam1.splines,
        splines2: fam2.splines,
        sources1: fam1.sources,
        sources2: fam2.sources,
        nodes,
        origin,
        tangents: Vec::new(),
        along1: Vec::new(),
        along2: Vec::new(),
    };
    m.orient_family(0);
    m.orient_family(1);
    m.assign_coordinates()?;
    m.index();
    Ok(m)
}

impl PrincipalManifold {
    fn spline(&self, family: usize, i: usize) -> &SmoothingSpline {
        if family == 0 {
            &self.splines1[i]
        } else {
            &self.splines2[i]
        }
    }

    fn node_index(n: &GridNode, family: usize) -> usize {
        if family == 0 {
            n.l
        } else {
            n.m
        }
    }

    fn node_lambda(n: &GridNode, family: usize) -> f64 {
        if family == 0 {
            n.lambda1
        } else {
            n.lambda2
        }
    }

    fn flip(&mut self, family: usize, i: usize) {
        let r = self.spline(family, i).reversed();
        if family == 0 {
            self.splines1[i] = r;
        } else {
            self.splines2[i] = r;
        }
        for n in self.nodes.iter_mut() {
            if Self::node_index(n, family) == i {
                if family == 0 {
                    n.lambda1 = 1.0 - n.lambda1;
                } else {
                    n.lambda2 = 1.0 - n.lambda2;
                }
            }
        }
    }

    /// Makes splines of one family run the same way as their neighbors,
    /// starting from the axis spline. Two splines are neighbors when both
    /// cross a common spline of the other family; their tangents at those
    /// crossings must agree in sign.
    fn orient_family(&mut self, family: usize) {
        let count = if family == 0 { self.splines1.len() } else { self.splines2.len() };
        let axis = if family == 0 { self.origin.0 } else { self.origin.1 };
        let other = 1 - family;
        let mut done = vec![false; count];
        done[axis] = true;
        let mut queue = VecDeque::from([axis]);
        while let Some(a) = queue.pop_front() {
            let on_a: Vec<(usize, f64)> = self
                .nodes
                .iter()
                .filter(|n| Self::node_index(n, family) == a)
                .map(|n| (Self::node_index(n, other), Self::node_lambda(n, family)))
                .collect();
            for (o, la) in on_a {
                let ta = self.spline(family, a).eval_with_derivative(la).1;
                let partners: Vec<(usize, f64)> = self
                    .nodes
                    .iter()
                    .filter(|n| Self::node_index(n, other) == o && !done[Self::node_index(n, family)])
                    .map(|n| (Self::node_index(n, family), Self::node_lambda(n, family)))
                    .collect();
                for (b, lb) in partners {
                    if done[b] {
                        continue;
                    }
                    let tb = self.spline(family, b).eval_with_derivative(lb).1;
                    if dot(&ta, &tb) < 0.0 {
                        self.flip(family, b);
                    }
                    done[b] = true;
                    queue.push_back(b);
                }
            }
        }
    }

    /// Signed arc-length coordinates. Nodes unreachable from the axis
    /// splines through the grid are dropped.
    fn assign_coordinates(&mut self) -> Result<()> {
        let c1 = self.propagate(1);
        let c2 = self.propagate(0);
        let mut kept = Vec::with_capacity(self.nodes.len());
        for (i, mut n) in std::mem::take(&mut self.nodes).into_iter().enumerate() {
            if let (Some(a), Some(b)) = (c1[i], c2[i]) {
                n.coord = [a, b];
                kept.push(n);
            }
        }
        kept.sort_by(|a, b| (a.l, a.m).cmp(&(b.l, b.m)));
        if kept.is_empty() {
            return Err(Error::DegenerateGrid);
        }
        self.nodes = kept;
        Ok(())
    }

    /// Arc length along splines of `measure` family, zero on the axis spline
    /// of the other family and constant along other-family splines.
    fn propagate(&self, measure: usize) -> Vec<Option<f64>> {
        let hold = 1 - measure;
        let axis_hold = if hold == 0 { self.origin.0 } else { self.origin.1 };
        let mut on_measure: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        let mut on_hold: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (i, n) in self.nodes.iter().enumerate() {
            on_measure.entry(Self::node_index(n, measure)).or_default().push(i);
            on_hold.entry(Self::node_index(n, hold)).or_default().push(i);
        }
        let mut val: Vec<Option<f64>> = vec![None; self.nodes.len()];
        let count = if measure == 0 { self.splines1.len() } else { self.splines2.len() };
        let mut resolved = vec![false; count];
        let mut queue: VecDeque<(usize, usize, f64)> = VecDeque::new();
        for &k in on_hold.get(&axis_hold).map(|v| v.as_slice()).unwrap_or(&[]) {
            queue.push_back((Self::node_index(&self.nodes[k], measure), k, 0.0));
        }
        while let Some((line, anchor, base)) = queue.pop_front() {
            if resolved[line] {
                continue;
            }
            resolved[line] = true;
            let sp = self.spline(measure, line);
            let la = Self::node_lambda(&self.nodes[anchor], measure);
            let members = &on_measure[&line];
            for &k in members {
                val[k] = Some(base + sp.arc_length(la, Self::node_lambda(&self.nodes[k], measure)));
            }
            for &k in members {
                let h = Self::node_index(&self.nodes[k], hold);
                for &k2 in &on_hold[&h] {
                    let l2 = Self::node_index(&self.nodes[k2], measure);
                    if !resolved[l2] {
                        queue.push_back((l2, k2, val[k].unwrap()));
                    }
                }
            }
        }
        val
    }

    fn index(&mut self) {
        self.tangents = self
            .nodes
            .iter()
            .map(|n| [self.splines2[n.m].eval_tangent(n.lambda2).1, self.splines1[n.l].eval_tangent(n.lambda1).1])
            .collect();
        let mut along1 = vec![Vec::new(); self.splines1.len()];
        let mut along2 = vec![Vec::new(); self.splines2.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            along1[n.l].push(i);
            along2[n.m].push(i);
        }
        for v in along1.iter_mut() {
            v.sort_by(|&a, &b| self.nodes[a].lambda1.total_cmp(&self.nodes[b].lambda1).then(a.cmp(&b)));
        }
        for v in along2.iter_mut() {
            v.sort_by(|&a, &b| self.nodes[a].lambda2.total_cmp(&self.nodes[b].lambda2).then(a.cmp(&b)));
        }
        self.along1 = along1;
        self.along2 = along2;
    }

    pub fn origin_node(&self) -> &GridNode {
        self.nodes.iter().find(|n| (n.l, n.m) == self.origin).expect("origin node is kept")
    }

    pub fn dim(&self) -> usize {
        self.frame.mu.len()
    }

    /// Index of the node nearest `z`; ties go to the lower (l, m).
    pub fn nearest_node(&self, z: &[f64]) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = sq_dist(&n.t, z);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }

    /// Node coordinate plus the offset z - t projected on the local spline tangents.
    pub fn embed(&self, z: &[f64]) -> Result<[f64; 2]> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        let k = self.nearest_node(z);
        let n = &self.nodes[k];
        let off: Vec<f64> = z.iter().zip(&n.t).map(|(a, b)| a - b).collect();
        let [u1, u2] = &self.tangents[k];
        Ok([n.coord[0] + dot(&off, u1), n.coord[1] + dot(&off, u2)])
    }

    pub fn embed_cloud(&self, cloud: &PointCloud) -> Result<Vec<[f64; 2]>> {
        if cloud.d() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: cloud.d() });
        }
        (0..cloud.n()).into_par_iter().map(|i| self.embed(cloud.point(i))).collect()
    }

    /// Neighbor of node k along a spline, on the side of `target` in that
    /// spline's coordinate, or the other side at the grid border.
    fn frame_neighbor(&self, k: usize, family: usize, coord_axis: usize, target: f64) -> Option<usize> {
        let n = &self.nodes[k];
        let line = if family == 0 { &self.along1[n.l] } else { &self.along2[n.m] };
        let pos = line.iter().position(|&i| i == k)?;
        let c = n.coord[coord_axis];
        let cands: Vec<usize> = [pos.checked_sub(1).map(|p| line[p]), line.get(pos + 1).copied()]
            .into_iter()
            .flatten()
            .filter(|&i| self.nodes[i].coord[coord_axis] != c)
            .collect();
        let up = target >= c;
        cands.iter().copied().find(|&i| (self.nodes[i].coord[coord_axis] > c) == up).or(cands.first().copied())
    }

    /// Maps embedding coordinates back to the ambient space by bilinear
    /// extension of the nearest grid cell. Nodes lacking a neighbor on either
    /// spline are passed over for the next nearest.
    pub fn invert(&self, x: [f64; 2]) -> Result<Vec<f64>> {
        let mut order: Vec<(f64, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| ((n.coord[0] - x[0]).powi(2) + (n.coord[1] - x[1]).powi(2), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, k) in order {
            let n = &self.nodes[k];
            // Moving along a family-1 spline changes coordinate 2; along family 2, coordinate 1.
            let (Some(a), Some(b)) = (self.frame_neighbor(k, 0, 1, x[1]), self.frame_neighbor(k, 1, 0, x[0])) else {
                continue;
            };
            let (na, nb) = (&self.nodes[a], &self.nodes[b]);
            let alpha = (x[1] - n.coord[1]) / (na.coord[1] - n.coord[1]);
            let beta = (x[0] - n.coord[0]) / (nb.coord[0] - n.coord[0]);
            return Ok(n.t.iter().enumerate().map(|(i, t)| t + (na.t[i] - t) * alpha + (nb.t[i] - t) * beta).collect());
        }
        Err(Error::InverseFrameIncomplete)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: PrincipalManifold = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        let bad = |s: &SmoothingSpline| s.dim() != d;
        if self.splines1.iter().any(bad) || self.splines2.iter().any(bad) {
            return Err(Error::Format("spline dimension differs from frame".into()));
        }
        for n in &self.nodes {
            if n.l >= self.splines1.len() || n.m >= self.splines2.len() || n.t.len() != d {
                return Err(Error::Format(format!("node ({}, {}) is inconsistent", n.l, n.m)));
            }
        }
        if !self.nodes.iter().any(|n| (n.l, n.m) == self.origin) {
            return Err(Error::Format("origin node missing".into()));
        }
        Ok(())
    }
}
