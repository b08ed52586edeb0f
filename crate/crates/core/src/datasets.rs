//! Seeded synthetic datasets: a noisy paraboloid, a noisy swiss roll, and a
//! predator-mobbing swarm trajectory.
//!
//! Every generator draws from a ChaCha8 stream seeded with the given `u64`,
//! in a fixed per-point order, so output depends only on (parameters, seed).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::PointCloud;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// amp · U[-1, 1]. The draw happens even at zero amplitude so that runs
/// differing only in noise level share the same underlying samples.
fn symmetric(r: &mut ChaCha8Rng, amp: f64) -> f64 {
    let u: f64 = r.random_range(-1.0..=1.0);
    amp * u
}

/// y3 = y1² + y2² + ε with y1, y2 ~ U[-2, 2] and ε ~ U(-noise, noise).
pub fn paraboloid(n: usize, noise: f64, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let mut data = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let y1: f64 = r.random_range(-2.0..=2.0);
        let y2: f64 = r.random_range(-2.0..=2.0);
        let e = symmetric(&mut r, noise);
        data.extend([y1, y2, y1 * y1 + y2 * y2 + e]);
    }
    PointCloud::new(3, data).expect("finite paraboloid")
}

/// Swiss roll together with its generating (θ, φ).
#[derive(Debug, Clone)]
pub struct SwissRoll {
    pub cloud: PointCloud,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

/// θ ~ U[π/4, 5π/2], φ ~ U[-2, 2];
/// y = (θ^0.8 cos θ + ε, θ^0.8 sin θ + ε, φ + ε) with independent ε ~ U(-noise, noise).
pub fn noisy_swiss_roll(n: usize, noise: f64, seed: u64) -> SwissRoll {
    let mut r = rng(seed);
    let mut data = Vec::with_capacity(3 * n);
    let mut theta = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    for _ in 0..n {
        let t: f64 = r.random_range(0.25 * PI..=2.5 * PI);
        let f: f64 = r.random_range(-2.0..=2.0);
        let rad = t.powf(0.8);
        let e1 = symmetric(&mut r, noise);
        let e2 = symmetric(&mut r, noise);
        let e3 = symmetric(&mut r, noise);
        data.extend([rad * t.cos() + e1, rad * t.sin() + e2, f + e3]);
        theta.push(t);
        phi.push(f);
    }
    SwissRoll { cloud: PointCloud::new(3, data).expect("finite roll"), theta, phi }
}

/// Arc length of the noise-free spiral r = θ^0.8 from θ = π/4 to `theta`.
pub fn swiss_roll_arc(theta: f64) -> f64 {
    // r' = 0.8 θ^-0.2; integrate sqrt(r² + r'²) with composite Simpson.
    let a = 0.25 * PI;
    if theta <= a {
        return 0.0;
    }
    let m = 2000;
    let h = (theta - a) / m as f64;
    let f = |t: f64| (t.powf(1.6) + 0.64 * t.powf(-0.4)).sqrt();
    let mut s = f(a) + f(theta);
    for i in 1..m {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredatorParams {
    pub agents: usize,
    pub steps: usize,
    pub revolutions: f64,
    pub noise_sd: f64,
    pub radius: f64,
    pub velocity: [f64; 2],
}

impl Default for PredatorParams {
    fn default() -> Self {
        Self { agents: 20, steps: 2000, revolutions: 14.0, noise_sd: 0.01, radius: 3.0, velocity: [1.0 / 80.0, 1.0 / 80.0] }
    }
}

/// Swarm trajectory (one row per time step, columns x_1, y_1, …, x_N, y_N)
/// and the ground truth: the first agent's track rotated by π/4.
#[derive(Debug, Clone)]
pub struct PredatorMobbing {
    pub cloud: PointCloud,
    pub truth: Vec<[f64; 2]>,
}

/// Agent i (1-based) at step k sits at
/// s (cos(2πρk/n_k + πi/N), sin(…)) + k v_p + ε, ε ~ N(0, noise_sd²) per coordinate.
pub fn predator_mobbing(params: &PredatorParams, seed: u64) -> PredatorMobbing {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, params.noise_sd.max(0.0)).expect("finite deviation");
    let n_agents = params.agents;
    let mut data = Vec::with_capacity(2 * n_agents * params.steps);
    let mut truth = Vec::with_capacity(params.steps);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..params.steps {
        let kf = k as f64;
        let base = 2.0 * PI * params.revolutions * kf / params.steps as f64;
        for i in 1..=n_agents {
            let ph = base + PI * i as f64 / n_agents as f64;
            let mut x = params.radius * ph.cos() + kf * params.velocity[0];
            let mut y = params.radius * ph.sin() + kf * params.velocity[1];
            if params.noise_sd > 0.0 {
                x += normal.sample(&mut r);
                y += normal.sample(&mut r);
            }
            if i == 1 {
                truth.push([s * (x - y), s * (x + y)]);
            }
            data.push(x);
            data.push(y);
        }
    }
    PredatorMobbing { cloud: PointCloud::new(2 * n_agents, data).expect("finite swarm"), truth }
}

/// Points on the square [0, 1]² in the plane z = 0 of R³.
pub fn flat_patch(n: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    let mut data = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let x: f64 = r.random_range(0.0..=1.0);
        let y: f64 = r.random_range(0.0..=1.0);
        data.extend([x, y, 0.0]);
    }
    PointCloud::new(3, data).expect("finite patch")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paraboloid_surface_and_noise_bound() {
        let c = paraboloid(500, 0.0, 1);
        for p in c.points() {
            assert_eq!(p[2], p[0] * p[0] + p[1] * p[1]);
        }
        let c = paraboloid(2000, 0.05, 2);
        for p in c.points() {
            assert!((p[2] - p[0] * p[0] - p[1] * p[1]).abs() <= 0.05 + 1e-12);
            assert!(p[0].abs() <= 2.0 && p[1].abs() <= 2.0);
        }
        assert_eq!(paraboloid(100, 0.05, 9), paraboloid(100, 0.05, 9));
        assert_ne!(paraboloid(100, 0.05, 9), paraboloid(100, 0.05, 10));
    }

    #[test]
    fn swiss_roll_radius() {
        let r = noisy_swiss_roll(400, 0.0, 3);
        for (p, t) in r.cloud.points().zip(&r.theta) {
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - t.powf(0.8)).abs() < 1e-12);
            assert!(*t >= 0.25 * PI && *t <= 2.5 * PI);
        }
        let r = noisy_swiss_roll(2500, 0.4, 4);
        for (p, t) in r.cloud.points().zip(&r.theta) {
            let dev = ((p[0] * p[0] + p[1] * p[1]).sqrt() - t.powf(0.8)).abs();
            assert!(dev <= 0.4 * 2f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn swiss_roll_arc_is_monotone_and_matches_polyline() {
        let t1 = 2.5 * PI;
        let m = 200_000;
        let a = 0.25 * PI;
        let mut poly = 0.0;
        let pt = |t: f64| [t.powf(0.8) * t.cos(), t.powf(0.8) * t.sin()];
        let mut prev = pt(a);
        for i in 1..=m {
            let cur = pt(a + (t1 - a) * i as f64 / m as f64);
            poly += ((cur[0] - prev[0]).powi(2) + (cur[1] - prev[1]).powi(2)).sqrt();
            prev = cur;
        }
        assert!((swiss_roll_arc(t1) - poly).abs() < 1e-6 * poly);
        assert!(swiss_roll_arc(2.0) < swiss_roll_arc(3.0));
    }

    #[test]
    fn predator_noise_free_structure() {
        let params = PredatorParams { noise_sd: 0.0, ..Default::default() };
        let pm = predator_mobbing(&params, 0);
        assert_eq!(pm.cloud.d(), 40);
        assert_eq!(pm.cloud.n(), 2000);
        let row0 = pm.cloud.point(0);
        for i in 1..=20 {
            let ph = PI * i as f64 / 20.0;
            assert!((row0[2 * (i - 1)] - 3.0 * ph.cos()).abs() < 1e-12);
            assert!((row0[2 * (i - 1) + 1] - 3.0 * ph.sin()).abs() < 1e-12);
        }
        for k in [0usize, 17, 999, 1999] {
            let row = pm.cloud.point(k);
            for i in 0..20 {
                let dx = row[2 * i] - k as f64 / 80.0;
                let dy = row[2 * i + 1] - k as f64 / 80.0;
                assert!(((dx * dx + dy * dy).sqrt() - 3.0).abs() < 1e-12);
            }
            let t = pm.truth[k];
            assert!((t[1] - (row[1] + row[0]) / 2f64.sqrt()).abs() < 1e-12);
            assert!((t[0] - (row[0] - row[1]) / 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn predator_truth_oscillates_fourteen_times() {
        let params = PredatorParams { noise_sd: 0.0, ..Default::default() };
        let pm = predator_mobbing(&params, 0);
        // The first rotated component carries no drift: count its upward zero crossings.
        let xs: Vec<f64> = pm.truth.iter().map(|t| t[0]).collect();
        let ups = xs.windows(2).filter(|w| w[0] < 0.0 && w[1] >= 0.0).count();
        assert!((13..=15).contains(&ups), "{ups}");
    }

    #[test]
    fn predator_is_seeded() {
        let p = PredatorParams { steps: 50, ..Default::default() };
        assert_eq!(predator_mobbing(&p, 5).cloud, predator_mobbing(&p, 5).cloud);
        assert_ne!(predator_mobbing(&p, 5).cloud, predator_mobbing(&p, 6).cloud);
    }
}
