//! Cubic smoothing splines in d dimensions, parameterized by normalized chord
//! length on [0, 1].
//!
//! Each coordinate minimizes
//! `p Σ (y_i - S(λ_i))² + (1 - p) κ ∫ S''(λ)² dλ` over natural cubic splines
//! with knots at the λ_i. The fit uses the Reinsch form: with α = κ(1-p)/p,
//! solve `(R + α QᵀQ) γ = Qᵀy` for the interior second derivatives and set
//! `g = y - α Q γ`. The system is pentadiagonal and factored once for all
//! coordinates.
//!
//! κ is 1 under [`PenaltyScale::Normalized`]. Under [`PenaltyScale::Length`]
//! the curvature penalty is measured against arc length in data units, which
//! gives κ = (ℓ / L)³ for a chord of total length L and unit ℓ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const P_MIN: f64 = 1e-6;

/// Units in which the curvature penalty is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "unit")]
pub enum PenaltyScale {
    /// Penalty on d²S/dλ² with λ in [0, 1].
    Normalized,
    /// Penalty on d²S/ds² with s the chord length divided by this unit.
    Length(f64),
}

impl Default for PenaltyScale {
    fn default() -> Self {
        PenaltyScale::Normalized
    }
}

impl PenaltyScale {
    fn kappa(self, total_chord: f64) -> f64 {
        match self {
            PenaltyScale::Normalized => 1.0,
            PenaltyScale::Length(unit) => (unit / total_chord).powi(3),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SplineRepr {
    p: f64,
    penalty: PenaltyScale,
    d: usize,
    knots: Vec<f64>,
    values: Vec<f64>,
    second_derivatives: Vec<f64>,
}

/// Piecewise cubic curve stored as knot values g and second derivatives γ.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "SplineRepr", into = "SplineRepr")]
pub struct SmoothingSpline {
    p: f64,
    penalty: PenaltyScale,
    d: usize,
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
    cum_arc: Vec<f64>,
}

impl PartialEq for SmoothingSpline {
    fn eq(&self, o: &Self) -> bool {
        self.p == o.p && self.penalty == o.penalty && self.d == o.d && self.knots == o.knots
            && self.values == o.values && self.second == o.second
    }
}

impl From<SplineRepr> for SmoothingSpline {
    fn from(r: SplineRepr) -> Self {
        Self::assemble(r.p, r.penalty, r.d, r.knots, r.values, r.second_derivatives)
    }
}

impl From<SmoothingSpline> for SplineRepr {
    fn from(s: SmoothingSpline) -> Self {
        SplineRepr { p: s.p, penalty: s.penalty, d: s.d, knots: s.knots, values: s.values, second_derivatives: s.second }
    }
}

/// Normalized cumulative chord length of an ordered point sequence.
pub fn chord_parameters<P: AsRef<[f64]>>(points: &[P]) -> Vec<f64> {
    let mut lam = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    lam.push(0.0);
    for w in points.windows(2) {
        acc += crate::geometry::dist(w[0].as_ref(), w[1].as_ref());
        lam.push(acc);
    }
    if acc > 0.0 {
        lam.iter_mut().for_each(|l| *l /= acc);
    }
    lam
}

/// Fit with the penalty on the normalized parameter.
pub fn fit_smoothing_spline<P: AsRef<[f64]>>(points: &[P], p: f64) -> Result<SmoothingSpline> {
    fit_smoothing_spline_scaled(points, p, PenaltyScale::Normalized)
}

pub fn fit_smoothing_spline_scaled<P: AsRef<[f64]>>(points: &[P], p: f64, penalty: PenaltyScale) -> Result<SmoothingSpline> {
    let d = points.first().map(|q| q.as_ref().len()).ok_or(Error::DegenerateGeodesic)?;
    if d == 0 {
        return Err(Error::DegenerateGeodesic);
    }
    if let Some(q) = points.iter().find(|q| q.as_ref().len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: q.as_ref().len() });
    }
    if !p.is_finite() {
        return Err(Error::InvalidArgument("smoothing weight must be finite".into()));
    }
    let p = p.clamp(P_MIN, 1.0);
    let lam = chord_parameters(points);
    let total: f64 = {
        let mut acc = 0.0;
        for w in points.windows(2) {
            acc += crate::geometry::dist(w[0].as_ref(), w[1].as_ref());
        }
        acc
    };
    if !(total > 0.0) {
        return Err(Error::DegenerateGeodesic);
    }

    // Merge runs sharing a chord position.
    let mut knots: Vec<f64> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < points.len() {
        let mut j = i + 1;
        while j < points.len() && lam[j] - lam[i] <= 1e-14 {
            j += 1;
        }
        let cnt = (j - i) as f64;
        let mut avg = vec![0.0; d];
        for q in &points[i..j] {
            avg.iter_mut().zip(q.as_ref()).for_each(|(a, v)| *a += v);
        }
        avg.iter_mut().for_each(|a| *a /= cnt);
        knots.push(if knots.is_empty() { 0.0 } else { lam[i] });
        y.extend(avg);
        i = j;
    }
    let n = knots.len();
    if n < 2 {
        return Err(Error::DegenerateGeodesic);
    }
    *knots.last_mut().unwrap() = 1.0;

    let mut second = vec![0.0; n * d];
    if n == 2 {
        return Ok(SmoothingSpline::assemble(p, penalty, d, knots, y, second));
    }
    let alpha = penalty.kappa(total) * (1.0 - p) / p;
    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let m = n - 2;
    // Column j of Q has entries (q0, q1, q2) in rows j, j+1, j+2.
    let q: Vec<[f64; 3]> = (0..m).map(|j| [1.0 / h[j], -1.0 / h[j] - 1.0 / h[j + 1], 1.0 / h[j + 1]]).collect();
    let mut band = vec![[0.0f64; 3]; m];
    for j in 0..m {
        band[j][0] = (h[j] + h[j + 1]) / 3.0 + alpha * (q[j][0] * q[j][0] + q[j][1] * q[j][1] + q[j][2] * q[j][2]);
        if j + 1 < m {
            band[j][1] = h[j + 1] / 6.0 + alpha * (q[j][1] * q[j + 1][0] + q[j][2] * q[j + 1][1]);
        }
        if j + 2 < m {
            band[j][2] = alpha * q[j][2] * q[j + 2][0];
        }
    }
    let fac = BandLdl::factor(&band);
    let mut values = y.clone();
    let mut rhs = vec![0.0; m];
    for k in 0..d {
        for j in 0..m {
            rhs[j] = q[j][0] * y[j * d + k] + q[j][1] * y[(j + 1) * d + k] + q[j][2] * y[(j + 2) * d + k];
        }
        let gam = fac.solve(&rhs);
        for j in 0..m {
            second[(j + 1) * d + k] = gam[j];
            for r in 0..3 {
                values[(j + r) * d + k] -= alpha * q[j][r] * gam[j];
            }
        }
    }
    Ok(SmoothingSpline::assemble(p, penalty, d, knots, values, second))
}

/// LDLᵀ factor of a symmetric pentadiagonal matrix given as rows of
/// (diagonal, first superdiagonal, second superdiagonal).
struct BandLdl {
    diag: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl BandLdl {
    fn factor(a: &[[f64; 3]]) -> Self {
        let m = a.len();
        let mut diag = vec![0.0; m];
        let mut l1 = vec![0.0; m];
        let mut l2 = vec![0.0; m];
        for i in 0..m {
            let mut di = a[i][0];
            if i >= 1 {
                di -= l1[i] * l1[i] * diag[i - 1];
            }
            if i >= 2 {
                di -= l2[i] * l2[i] * diag[i - 2];
            }
            diag[i] = di;
            if i + 1 < m {
                let mut v = a[i][1];
                if i >= 1 {
                    v -= l2[i + 1] * l1[i] * diag[i - 1];
                }
                l1[i + 1] = v / di;
            }
            if i + 2 < m {
                l2[i + 2] = a[i][2] / di;
            }
        }
        Self { diag, l1, l2 }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = b.len();
        let mut z = b.to_vec();
        for i in 0..m {
            if i >= 1 {
                z[i] -= self.l1[i] * z[i - 1];
            }
            if i >= 2 {
                z[i] -= self.l2[i] * z[i - 2];
            }
        }
        for i in 0..m {
            z[i] /= self.diag[i];
        }
        for i in (0..m).rev() {
            if i + 1 < m {
                z[i] -= self.l1[i + 1] * z[i + 1];
            }
            if i + 2 < m {
                z[i] -= self.l2[i + 2] * z[i + 2];
            }
        }
        z
    }
}

const GAUSS_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];
const MIN_ARC_SUBINTERVALS: usize = 512;

impl SmoothingSpline {
    fn assemble(p: f64, penalty: PenaltyScale, d: usize, knots: Vec<f64>, values: Vec<f64>, second: Vec<f64>) -> Self {
        let mut s = Self { p, penalty, d, knots, values, second, cum_arc: Vec::new() };
        let mut cum = vec![0.0; s.knots.len()];
        for i in 0..s.knots.len() - 1 {
            cum[i + 1] = cum[i] + s.piece_arc(i, s.knots[i + 1]);
        }
        s.cum_arc = cum;
        s
    }

    /// Straight segment from `a` to `b`.
    pub fn line(a: &[f64], b: &[f64]) -> Result<Self> {
        fit_smoothing_spline(&[a, b], 1.0)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn penalty(&self) -> PenaltyScale {
        self.penalty
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn knot_value(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn knot_second_derivative(&self, i: usize) -> &[f64] {
        &self.second[i * self.d..(i + 1) * self.d]
    }

    fn piece(&self, lam: f64) -> usize {
        let n = self.knots.len();
        match self.knots.partition_point(|&k| k <= lam) {
            0 => 0,
            i => (i - 1).min(n - 2),
        }
    }

    /// (g0, b, c, e) of piece i for coordinate k: g0 + b u + c u² + e u³.
    fn coeffs(&self, i: usize, k: usize) -> [f64; 4] {
        let d = self.d;
        let h = self.knots[i + 1] - self.knots[i];
        let (g0, g1) = (self.values[i * d + k], self.values[(i + 1) * d + k]);
        let (c0, c1) = (self.second[i * d + k], self.second[(i + 1) * d + k]);
        [g0, (g1 - g0) / h - h * (2.0 * c0 + c1) / 6.0, c0 / 2.0, (c1 - c0) / (6.0 * h)]
    }

    /// Per-interval polynomial coefficients (g0, b, c, e) for every coordinate.
    pub fn piece_coefficients(&self, i: usize) -> Vec<[f64; 4]> {
        (0..self.d).map(|k| self.coeffs(i, k)).collect()
    }

    fn eval_in(&self, i: usize, lam: f64, out: &mut [f64], deriv: &mut [f64]) {
        let u = lam - self.knots[i];
        for k in 0..self.d {
            let [a, b, c, e] = self.coeffs(i, k);
            out[k] = a + u * (b + u * (c + u * e));
            deriv[k] = b + u * (2.0 * c + 3.0 * u * e);
        }
    }

    /// Position and derivative dS/dλ; linear extrapolation outside [0, 1].
    pub fn eval_with_derivative(&self, lam: f64) -> (Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; self.d];
        let mut dx = vec![0.0; self.d];
        let last = *self.knots.last().unwrap();
        let first = self.knots[0];
        if lam < first || lam > last {
            let edge = if lam < first { first } else { last };
            self.eval_in(self.piece(edge), edge, &mut x, &mut dx);
            for k in 0..self.d {
                x[k] += dx[k] * (lam - edge);
            }
        } else {
            self.eval_in(self.piece(lam), lam, &mut x, &mut dx);
        }
        (x, dx)
    }

    pub fn eval(&self, lam: f64) -> Vec<f64> {
        self.eval_with_derivative(lam).0
    }

    /// Position and unit tangent. A vanishing derivative falls back to the
    /// chord direction of the owning interval.
    pub fn eval_tangent(&self, lam: f64) -> (Vec<f64>, Vec<f64>) {
        let (x, dx) = self.eval_with_derivative(lam);
        let nd = crate::geometry::norm(&dx);
        let scale = crate::geometry::dist(self.knot_value(0), self.knot_value(self.knots.len() - 1)).max(1.0);
        if nd > 1e-13 * scale {
            return (x, dx.iter().map(|v| v / nd).collect());
        }
        let i = self.piece(lam.clamp(0.0, 1.0));
        let mut chord: Vec<f64> = self.knot_value(i + 1).iter().zip(self.knot_value(i)).map(|(a, b)| a - b).collect();
        let mut nc = crate::geometry::norm(&chord);
        if nc == 0.0 {
            chord = self.knot_value(self.knots.len() - 1).iter().zip(self.knot_value(0)).map(|(a, b)| a - b).collect();
            nc = crate::geometry::norm(&chord);
        }
        if nc == 0.0 {
            let mut e = vec![0.0; self.d];
            e[0] = 1.0;
            return (x, e);
        }
        (x, chord.iter().map(|v| v / nc).collect())
    }

    fn speed(&self, i: usize, lam: f64) -> f64 {
        let u = lam - self.knots[i];
        let mut s = 0.0;
        for k in 0..self.d {
            let [_, b, c, e] = self.coeffs(i, k);
            let v = b + u * (2.0 * c + 3.0 * u * e);
            s += v * v;
        }
        s.sqrt()
    }

    /// Arc length of piece i from its left knot to `to`.
    fn piece_arc(&self, i: usize, to: f64) -> f64 {
        let n_pieces = self.knots.len() - 1;
        let sub = MIN_ARC_SUBINTERVALS.div_ceil(n_pieces).max(2);
        let a = self.knots[i];
        let step = (to - a) / sub as f64;
        if step == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for s in 0..sub {
            let lo = a + step * s as f64;
            let mid = lo + 0.5 * step;
            let mut part = 0.0;
            for (x, w) in GAUSS_X.iter().zip(GAUSS_W) {
                part += w * self.speed(i, mid + 0.5 * step * x);
            }
            acc += part * 0.5 * step;
        }
        acc
    }

    /// Arc length from λ = 0 to `lam`.
    pub fn arc_from_start(&self, lam: f64) -> f64 {
        let first = self.knots[0];
        let last = *self.knots.last().unwrap();
        if lam <= first {
            return (lam - first) * self.speed(0, first);
        }
        if lam >= last {
            let n = self.knots.len();
            return self.cum_arc[n - 1] + (lam - last) * self.speed(n - 2, last);
        }
        let i = self.piece(lam);
        self.cum_arc[i] + self.piece_arc(i, lam)
    }

    /// Signed arc length from `a` to `b`.
    pub fn arc_length(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        self.arc_from_start(b) - self.arc_from_start(a)
    }

    pub fn total_length(&self) -> f64 {
        *self.cum_arc.last().unwrap()
    }

    /// The same curve traversed in the opposite direction.
    pub fn reversed(&self) -> SmoothingSpline {
        let n = self.knots.len();
        let d = self.d;
        let knots: Vec<f64> = self.knots.iter().rev().map(|k| 1.0 - k).collect();
        let mut values = Vec::with_capacity(n * d);
        let mut second = Vec::with_capacity(n * d);
        for i in (0..n).rev() {
            values.extend_from_slice(self.knot_value(i));
            second.extend_from_slice(self.knot_second_derivative(i));
        }
        let mut knots = knots;
        knots[0] = 0.0;
        knots[n - 1] = 1.0;
        SmoothingSpline::assemble(self.p, self.penalty, d, knots, values, second)
    }

    /// ∫‖S''‖² dλ over [0, 1]; S'' is linear on each piece.
    pub fn roughness(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.knots.len() - 1 {
            let h = self.knots[i + 1] - self.knots[i];
            for k in 0..self.d {
                let (a, b) = (self.second[i * self.d + k], self.second[(i + 1) * self.d + k]);
                acc += h * (a * a + a * b + b * b) / 3.0;
            }
        }
        acc
    }
}
