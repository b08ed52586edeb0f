//! Parameter sweeps on the swiss roll: Δ against the smoothing parameter,
//! the noise amplitude, and the sample count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::noisy_swiss_roll;
use crate::error::{Error, Result};
use crate::manifold::{build_manifold, BuildConfig, FrameSpec};
use crate::metrics::{delta_for_embedding, fit_curve, CurveKind, FitReport};
use crate::slicing::SliceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    P,
    Noise,
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub values: Vec<f64>,
    /// Held fixed when not swept.
    pub n: usize,
    pub noise: f64,
    pub p: f64,
    pub slice: SliceConfig,
    pub build: BuildConfig,
    pub k: usize,
    pub seed: u64,
}

impl SweepConfig {
    /// Protocol defaults for `kind`, with an optional coarser step.
    pub fn protocol(kind: SweepKind, step: Option<f64>, seed: u64) -> Self {
        let (lo, hi, default_step, n, noise) = match kind {
            SweepKind::P => (0.0, 1.0, 0.01, 3000, 0.0),
            SweepKind::Noise => (0.0, 1.035, 0.015, 3000, 0.0),
            SweepKind::N => (500.0, 3500.0, 40.0, 3000, 0.2),
        };
        let values = grid(lo, hi, step.unwrap_or(default_step));
        let slice = SliceConfig { subcluster_radius_scale: 2.5, ..SliceConfig::new(15, 15) };
        let build = BuildConfig { frame: FrameSpec::CoordinateAxes(2, 0), ..BuildConfig::default() };
        Self { kind, values, n, noise, p: 0.9, slice, build, k: 10, seed }
    }

    /// Values at which the trend is fitted, and the curve used.
    pub fn fit_window(&self) -> (CurveKind, f64, f64) {
        match self.kind {
            SweepKind::P => (CurveKind::Linear, f64::NEG_INFINITY, 0.88),
            SweepKind::Noise => (CurveKind::Quadratic, f64::NEG_INFINITY, f64::INFINITY),
            SweepKind::N => (CurveKind::Exponential, f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// lo, lo + step, … up to hi (inclusive within rounding), built from integer
/// multiples so values do not accumulate error.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| lo + step * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// (sweep value, Δ); Δ is NaN where the pipeline failed.
    pub rows: Vec<[f64; 2]>,
    pub fit: FitReport,
}

fn delta_at(cfg: &SweepConfig, value: f64) -> Result<f64> {
    let (n, noise, p) = match cfg.kind {
        SweepKind::P => (cfg.n, cfg.noise, value),
        SweepKind::Noise => (cfg.n, value, cfg.p),
        SweepKind::N => (value.round() as usize, cfg.noise, cfg.p),
    };
    let roll = noisy_swiss_roll(n, noise, cfg.seed);
    let pm = build_manifold(&roll.cloud, p, &cfg.slice, &cfg.build)?;
    let emb = pm.embed_cloud(&roll.cloud)?;
    delta_for_embedding(&roll.cloud, &emb, cfg.k)
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.values.is_empty() {
        return Err(Error::InvalidArgument("empty sweep".into()));
    }
    let deltas: Vec<f64> = cfg.values.par_iter().map(|&v| delta_at(cfg, v).unwrap_or(f64::NAN)).collect();
    let rows: Vec<[f64; 2]> = cfg.values.iter().zip(&deltas).map(|(&v, &d)| [v, d]).collect();
    let (kind, lo, hi) = cfg.fit_window();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r[0] >= lo && r[0] <= hi + 1e-12 && r[1].is_finite()).map(|r| (r[0], r[1])).unzip();
    let fit = fit_curve(&xs, &ys, kind)?;
    Ok(SweepResult { rows, fit })
}
