//! Slab partition of a cloud along a reference axis, and the split of each
//! slab into connected sub-clusters.

use serde::{Deserialize, Serialize};

use crate::geometry::{connected_components, range_graph, Axis, PointCloud, ReferenceFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    pub n_c1: usize,
    pub n_c2: usize,
    pub min_subcluster_size: usize,
    pub subcluster_radius_scale: f64,
}

impl SliceConfig {
    pub fn new(n_c1: usize, n_c2: usize) -> Self {
        Self { n_c1, n_c2, ..Self::default() }
    }

    pub fn count(&self, axis: Axis) -> usize {
        match axis {
            Axis::First => self.n_c1,
            Axis::Second => self.n_c2,
        }
    }
}

impl Default for SliceConfig {
    fn default() -> Self {
        Self { n_c1: 10, n_c2: 10, min_subcluster_size: 4, subcluster_radius_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub axis: Axis,
    /// 1-based slab number.
    pub slab_index: usize,
    pub subcluster_index: usize,
    pub members: Vec<usize>,
    pub width: f64,
}

/// Points a_0..a_{n_c} dividing the segment mu ± v·sigma into n_c equal parts.
pub fn slab_boundaries(frame: &ReferenceFrame, axis: Axis, n_c: usize) -> Vec<Vec<f64>> {
    let v = frame.direction(axis);
    let s = frame.sigma(axis);
    (0..=n_c)
        .map(|j| {
            let t = s * (2.0 * j as f64 - n_c as f64) / n_c as f64;
            frame.mu.iter().zip(v).map(|(m, vi)| m + vi * t).collect()
        })
        .collect()
}

pub fn slab_width(frame: &ReferenceFrame, axis: Axis, n_c: usize) -> f64 {
    2.0 * frame.sigma(axis) / n_c as f64
}

/// 1-based slab of a point: s in (j-1, j] maps to j, clamped to [1, n_c].
pub fn slab_of(point: &[f64], frame: &ReferenceFrame, axis: Axis, n_c: usize) -> usize {
    let v = frame.direction(axis);
    let sigma = frame.sigma(axis);
    let width = slab_width(frame, axis, n_c);
    let proj: f64 = point.iter().zip(&frame.mu).zip(v).map(|((y, m), vi)| (y - m) * vi).sum();
    let s = (proj + sigma) / width;
    if !(s > 0.0) {
        return 1;
    }
    (s.ceil() as usize).clamp(1, n_c)
}

pub fn slice_partition(cloud: &PointCloud, frame: &ReferenceFrame, axis: Axis, config: &SliceConfig) -> Vec<Cluster> {
    let n_c = config.count(axis);
    let width = slab_width(frame, axis, n_c);
    let mut members = vec![Vec::new(); n_c];
    for (i, p) in cloud.points().enumerate() {
        members[slab_of(p, frame, axis, n_c) - 1].push(i);
    }
    members
        .into_iter()
        .enumerate()
        .map(|(j, m)| Cluster { axis, slab_index: j + 1, subcluster_index: 0, members: m, width })
        .collect()
}

/// Connected components of the slab's range graph at radius scale × width;
/// components below the minimum size are dropped as outliers.
pub fn split_subclusters(cluster: &Cluster, cloud: &PointCloud, config: &SliceConfig) -> Vec<Cluster> {
    if cluster.members.is_empty() {
        return Vec::new();
    }
    let sub = cloud.subset(&cluster.members);
    let g = range_graph(&sub, config.subcluster_radius_scale * cluster.width);
    let labels = connected_components(&g);
    let count = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); count];
    for (local, &l) in labels.iter().enumerate() {
        groups[l].push(cluster.members[local]);
    }
    // Labels follow the smallest local index; members are sorted, so this is
    // also the order of the smallest global index.
    groups
        .into_iter()
        .filter(|g| g.len() >= config.min_subcluster_size)
        .enumerate()
        .map(|(k, members)| Cluster {
            axis: cluster.axis,
            slab_index: cluster.slab_index,
            subcluster_index: k,
            members,
            width: cluster.width,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Spread;

    fn frame(mu: Vec<f64>, v: Vec<f64>, sigma: f64) -> ReferenceFrame {
        let w = vec![-v[1], v[0]];
        ReferenceFrame {
            q1: mu.iter().zip(&v).map(|(m, x)| m + x * sigma).collect(),
            q2: mu.iter().zip(&w).map(|(m, x)| m + x * sigma).collect(),
            mu,
            v1: v,
            v2: w,
            sigma1: sigma,
            sigma2: sigma,
        }
    }

    #[test]
    fn boundaries() {
        let f = frame(vec![0.0, 0.0], vec![1.0, 0.0], 1.0);
        assert_eq!(slab_boundaries(&f, Axis::First, 2), vec![vec![-1.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(slab_boundaries(&f, Axis::First, 1), vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        let g = frame(vec![1.0, 1.0], vec![0.0, 1.0], 3.0);
        let a = slab_boundaries(&g, Axis::First, 3);
        assert_eq!(a[1], vec![1.0, 0.0]);
        assert_eq!(a[2], vec![1.0, 2.0]);
    }

    #[test]
    fn partition_of_a_line() {
        let c = PointCloud::from_rows(&(0..10).map(|i| vec![i as f64, 0.0]).collect::<Vec<_>>()).unwrap();
        let f = frame(vec![4.5, 0.0], vec![1.0, 0.0], 4.5);
        let s = slice_partition(&c, &f, Axis::First, &SliceConfig::new(3, 3));
        let m: Vec<Vec<usize>> = s.iter().map(|c| c.members.clone()).collect();
        assert_eq!(m, vec![vec![0, 1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]);
        let one = slice_partition(&c, &f, Axis::First, &SliceConfig::new(1, 1));
        assert_eq!(one[0].members.len(), 10);
    }

    #[test]
    fn outside_points_clamp_to_end_slabs() {
        let c = PointCloud::from_rows(&[[-10.0, 0.0], [10.0, 0.0]]).unwrap();
        let f = frame(vec![0.0, 0.0], vec![1.0, 0.0], 1.0);
        let s = slice_partition(&c, &f, Axis::First, &SliceConfig::new(4, 4));
        assert_eq!(s[0].members, vec![0]);
        assert_eq!(s[3].members, vec![1]);
    }

    #[test]
    fn two_blobs_split() {
        let mut rows = Vec::new();
        for i in 0..6 {
            rows.push(vec![0.0, i as f64 * 0.1]);
            rows.push(vec![0.0, 5.0 + i as f64 * 0.1]);
        }
        rows.push(vec![0.0, 20.0]);
        let c = PointCloud::from_rows(&rows).unwrap();
        let cl = Cluster { axis: Axis::First, slab_index: 1, subcluster_index: 0, members: (0..13).collect(), width: 0.5 };
        let subs = split_subclusters(&cl, &c, &SliceConfig::default());
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].members, vec![0, 2, 4, 6, 8, 10]);
        assert_eq!(subs[1].subcluster_index, 1);
        let dense = Cluster { members: (0..12).step_by(2).collect(), ..cl };
        assert_eq!(split_subclusters(&dense, &c, &SliceConfig::default()).len(), 1);
    }

    #[test]
    fn partition_covers_every_point_once() {
        let c = crate::datasets::paraboloid(300, 0.05, 1);
        let f = crate::geometry::pca2_with(&c, Spread::HalfExtent).unwrap();
        for axis in [Axis::First, Axis::Second] {
            let s = slice_partition(&c, &f, axis, &SliceConfig::new(7, 5));
            let mut all: Vec<usize> = s.iter().flat_map(|c| c.members.clone()).collect();
            all.sort();
            assert_eq!(all, (0..300).collect::<Vec<_>>());
        }
    }
}
