//! Embedding quality: the adjacency-distance error Δ, correlation against a
//! ground-truth signal, and least-squares trend fits with R².

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::geometry::{knn, PointCloud};

/// Directed k-nearest-neighbor distances: row i lists (j, ‖y_i − y_j‖).
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyDistance {
    pub n: usize,
    pub k: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl AdjacencyDistance {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }
}

pub fn adjacency_distance(cloud: &PointCloud, k: usize) -> Result<AdjacencyDistance> {
    let mut rows = knn(cloud, k)?;
    for r in rows.iter_mut() {
        r.sort_by_key(|e| e.0);
    }
    Ok(AdjacencyDistance { n: cloud.n(), k, rows })
}

/// Δ = (1 / nk) Σ |Ã_ij − A_ij| over the union of both supports.
pub fn delta(a: &AdjacencyDistance, a_tilde: &AdjacencyDistance) -> Result<f64> {
    if a.n != a_tilde.n {
        return Err(Error::DimensionMismatch { expected: a.n, got: a_tilde.n });
    }
    if a.k != a_tilde.k {
        return Err(Error::InvalidArgument(format!("k differs: {} vs {}", a.k, a_tilde.k)));
    }
    let mut total = 0.0;
    for (ra, rb) in a.rows.iter().zip(&a_tilde.rows) {
        // Both rows are sorted by column: merge.
        let (mut i, mut j) = (0, 0);
        while i < ra.len() || j < rb.len() {
            match (ra.get(i), rb.get(j)) {
                (Some(x), Some(y)) if x.0 == y.0 => {
                    total += (x.1 - y.1).abs();
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x.0 < y.0 => {
                    total += x.1;
                    i += 1;
                }
                (Some(_), Some(y)) => {
                    total += y.1;
                    j += 1;
                }
                (Some(x), None) => {
                    total += x.1;
                    i += 1;
                }
                (None, Some(y)) => {
                    total += y.1;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
    }
    Ok(total / (a.n * a.k) as f64)
}

/// Δ between a cloud and its planar embedding.
pub fn delta_for_embedding(cloud: &PointCloud, embedding: &[[f64; 2]], k: usize) -> Result<f64> {
    let e = embedding_cloud(embedding)?;
    delta(&adjacency_distance(cloud, k)?, &adjacency_distance(&e, k)?)
}

pub fn embedding_cloud(embedding: &[[f64; 2]]) -> Result<PointCloud> {
    PointCloud::new(2, embedding.iter().flatten().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Sign-aligned Pearson correlation per component.
    pub r: [f64; 2],
    pub r_total: f64,
    /// Two-sided p-values of the per-component correlations.
    pub p_values: [f64; 2],
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if n < 2 {
        return Err(Error::TooFewPoints { need: 2, got: n });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let scale_x = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let scale_y = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if sxx <= 1e-28 * n as f64 * scale_x * scale_x || syy <= 1e-28 * n as f64 * scale_y * scale_y {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided p-value of a Pearson correlation over n samples.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    if df <= 0.0 {
        return 1.0;
    }
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Component-wise correlation of an embedding with a ground-truth track.
/// Embedding axes are only defined up to reflection, so each correlation is
/// taken with the sign that makes it nonnegative.
pub fn correlation_score(embedding: &[[f64; 2]], truth: &[[f64; 2]]) -> Result<CorrelationReport> {
    if embedding.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: embedding.len(), got: truth.len() });
    }
    if embedding.len() < 3 {
        return Err(Error::TooFewPoints { need: 3, got: embedding.len() });
    }
    let mut r = [0.0; 2];
    let mut p_values = [0.0; 2];
    for c in 0..2 {
        let x: Vec<f64> = embedding.iter().map(|e| e[c]).collect();
        let y: Vec<f64> = truth.iter().map(|e| e[c]).collect();
        r[c] = pearson(&x, &y)?.abs();
        p_values[c] = correlation_p_value(r[c], x.len());
    }
    Ok(CorrelationReport { r, r_total: r[0] + r[1], p_values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Linear,
    Quadratic,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub kind: CurveKind,
    /// Linear: [a, b] for a + b x. Quadratic: [a, b, c] for a + b x + c x².
    /// Exponential: [a, b] for a e^{b x}.
    pub params: Vec<f64>,
    pub r_squared: f64,
}

impl FitReport {
    pub fn predict(&self, x: f64) -> f64 {
        match self.kind {
            CurveKind::Linear => self.params[0] + self.params[1] * x,
            CurveKind::Quadratic => self.params[0] + x * (self.params[1] + x * self.params[2]),
            CurveKind::Exponential => self.params[0] * (self.params[1] * x).exp(),
        }
    }

    /// Coefficient of the highest-order term (slope, curvature, or rate).
    pub fn leading(&self) -> f64 {
        *self.params.last().unwrap()
    }
}

fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    let n = xs.len();
    let cols = degree + 1;
    let design = nalgebra::DMatrix::from_fn(n, cols, |i, j| xs[i].powi(j as i32));
    let rhs = nalgebra::DVector::from_column_slice(ys);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-12 * smax.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularDesign);
    }
    let sol = svd.solve(&rhs, 0.0).map_err(|_| Error::SingularDesign)?;
    Ok(sol.iter().copied().collect())
}

/// Least-squares trend fit; exponential models are fitted in log space.
/// R² = 1 − SS_res / SS_tot on the original scale.
pub fn fit_curve(xs: &[f64], ys: &[f64], kind: CurveKind) -> Result<FitReport> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    let need = match kind {
        CurveKind::Quadratic => 3,
        _ => 2,
    };
    if xs.len() < need {
        return Err(Error::TooFewPoints { need, got: xs.len() });
    }
    let params = match kind {
        CurveKind::Linear => polyfit(xs, ys, 1)?,
        CurveKind::Quadratic => polyfit(xs, ys, 2)?,
        CurveKind::Exponential => {
            if ys.iter().any(|&y| !(y > 0.0)) {
                return Err(Error::InvalidArgument("exponential fit needs positive values".into()));
            }
            let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
            let c = polyfit(xs, &logs, 1)?;
            vec![c[0].exp(), c[1]]
        }
    };
    let mut report = FitReport { kind, params, r_squared: 0.0 };
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - report.predict(*x)).powi(2)).sum();
    report.r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    Ok(report)
}
