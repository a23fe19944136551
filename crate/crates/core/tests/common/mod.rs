//! Test-only oracles and fixtures.
//!
//! Nothing here calls into the geometry or estimation code it is used to
//! check; vectors are plain `Vec<f64>` and every formula is written out again.

#![allow(dead_code)]

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Deserialize;
use serde_json::Value;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn unit(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

/// Arc length from the clamped cosine.
pub fn angle(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

pub fn sqrt_unit(p: &[f64]) -> Vec<f64> {
    unit(&p.iter().map(|x| x.sqrt()).collect::<Vec<_>>())
}

fn tangent_log(x: &[f64], y: &[f64]) -> Vec<f64> {
    let c = dot(x, y);
    let w: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi - c * xi).collect();
    let s = norm(&w);
    if s == 0.0 {
        return vec![0.0; x.len()];
    }
    let theta = s.atan2(c);
    w.iter().map(|wi| theta * wi / s).collect()
}

fn tangent_exp(x: &[f64], v: &[f64]) -> Vec<f64> {
    let t = norm(v);
    if t == 0.0 {
        return x.to_vec();
    }
    let out: Vec<f64> = x
        .iter()
        .zip(v)
        .map(|(xi, vi)| t.cos() * xi + t.sin() * vi / t)
        .collect();
    unit(&out)
}

/// Mean squared arc distance from `mu` to `points`.
pub fn fm_objective(mu: &[f64], points: &[Vec<f64>]) -> f64 {
    points.iter().map(|p| angle(mu, p).powi(2)).sum::<f64>() / points.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonConvergence {
    pub steps: usize,
    pub grad_norm: f64,
}

impl fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no convergence after {} steps (|grad| = {:e})", self.steps, self.grad_norm)
    }
}

/// Minimizer of the mean squared arc distance by tangent-space gradient
/// descent with backtracking line search, started at the normalized
/// Euclidean mean.
pub fn oracle_frechet_mean(points: &[Vec<f64>]) -> Result<Vec<f64>, NonConvergence> {
    let dim = points[0].len();
    let mut sum = vec![0.0; dim];
    for p in points {
        sum.iter_mut().zip(p).for_each(|(s, x)| *s += x);
    }
    let mut mu = unit(&sum);
    let mut value = fm_objective(&mu, points);
    let n = points.len() as f64;
    let mut grad_norm = f64::INFINITY;
    for _ in 0..100_000 {
        // Riemannian gradient of the objective is -(2/n) sum log_mu(x).
        let mut dir = vec![0.0; dim];
        for p in points {
            let l = tangent_log(&mu, p);
            dir.iter_mut().zip(&l).for_each(|(d, li)| *d += 2.0 * li / n);
        }
        grad_norm = norm(&dir);
        if grad_norm < 1e-12 {
            return Ok(mu);
        }
        let mut step = 0.5;
        let mut moved = false;
        while step > 1e-20 {
            let v: Vec<f64> = dir.iter().map(|d| step * d).collect();
            let cand = tangent_exp(&mu, &v);
            let cv = fm_objective(&cand, points);
            if cv < value - 1e-4 * step * grad_norm * grad_norm {
                mu = cand;
                value = cv;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            // No representable decrease left: stationary to working precision.
            return Ok(mu);
        }
    }
    Err(NonConvergence {
        steps: 100_000,
        grad_norm,
    })
}

/// Central-difference gradient of `loss` at `at`, projected onto the tangent
/// space of the unit sphere at `at`.
pub fn oracle_fd_gradient(loss: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    assert!((1e-8..=1e-4).contains(&h), "step {h} outside [1e-8, 1e-4]");
    let mut probe = at.to_vec();
    let mut g = vec![0.0; at.len()];
    for i in 0..at.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = loss(&probe);
        probe[i] = orig - h;
        let down = loss(&probe);
        probe[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    let radial = dot(&g, at);
    g.iter().zip(at).map(|(gi, a)| gi - radial * a).collect()
}

/// Exact sum rounded once, via a non-overlapping floating-point expansion.
pub fn reference_sum(values: &[f64]) -> f64 {
    let mut parts: Vec<f64> = Vec::new();
    for &v in values {
        let mut x = v;
        let mut kept = Vec::with_capacity(parts.len() + 1);
        for &p in &parts {
            let s = x + p;
            let bp = s - x;
            let err = (x - (s - bp)) + (p - bp);
            if err != 0.0 {
                kept.push(err);
            }
            x = s;
        }
        kept.push(x);
        parts = kept;
    }
    parts.iter().rev().fold(0.0, |acc, p| acc + p)
}

pub fn counting_accuracy(predictions: &[usize], labels: &[usize]) -> f64 {
    let mut hits = 0usize;
    for k in 0..labels.len() {
        if predictions[k] == labels[k] {
            hits += 1;
        }
    }
    hits as f64 / labels.len() as f64
}

/// Minimizer of `loss((a, 1 - a))` over a uniform grid on [0, 1].
pub fn grid_search_two_weights(loss: impl Fn(&[f64]) -> f64, steps: usize) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY);
    for k in 0..=steps {
        let a = k as f64 / steps as f64;
        let v = loss(&[a, 1.0 - a]);
        if v < best.1 {
            best = (a, v);
        }
    }
    best
}

/// Principal angle between span(f) and span(g) from a QR basis of each and
/// the SVD of the cross product of the bases.
pub fn svd_subspace_angle(f: &[f64], g: &[f64]) -> f64 {
    let d = f.len();
    let qf = DMatrix::from_column_slice(d, 1, f).qr().q();
    let qg = DMatrix::from_column_slice(d, 1, g).qr().q();
    let cross = qf.transpose() * &qg;
    let sigma = cross.svd(false, false).singular_values[0];
    sigma.min(1.0).acos()
}

pub fn random_simplex(rng: &mut ChaCha8Rng, c: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).unwrap();
    let draws: Vec<f64> = (0..c).map(|_| gamma.sample(rng).max(1e-300)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

pub fn random_normal(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn random_positive_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    unit(&random_normal(rng, d).iter().map(|x: &f64| x.abs() + 1e-3).collect::<Vec<_>>())
}

/// Points scattered around a positive-quadrant center by tangent steps of
/// norm at most `spread`, kept in the positive quadrant.
pub fn concentrated_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize, spread: f64) -> Vec<Vec<f64>> {
    let center = unit(&vec![1.0; d].iter().zip(random_positive_unit(rng, d)).map(|(a, b)| a + b).collect::<Vec<_>>());
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let raw = random_normal(rng, d);
        let radial = dot(&raw, &center);
        let t: Vec<f64> = raw.iter().zip(&center).map(|(r, c)| r - radial * c).collect();
        let len = rng.random_range(0.0..spread);
        let v: Vec<f64> = unit(&t).iter().map(|x| x * len).collect();
        let p = tangent_exp(&center, &v);
        if p.iter().all(|&x| x > 0.0) {
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Deserialize)]
pub struct OracleFixture {
    pub name: String,
    pub description: String,
    pub inputs: Value,
    pub expected: Value,
    pub tolerance: f64,
}

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/oracles.json")
}

pub fn load_fixtures() -> Vec<OracleFixture> {
    let text = std::fs::read_to_string(fixture_path()).expect("fixture file");
    serde_json::from_str(&text).expect("fixture json")
}

pub fn fixture(name: &str) -> OracleFixture {
    load_fixtures()
        .into_iter()
        .find(|f| f.name == name)
        .unwrap_or_else(|| panic!("no fixture named {name}"))
}

pub fn vec_of(v: &Value) -> Vec<f64> {
    serde_json::from_value(v.clone()).expect("number array")
}

pub fn matrix_of(v: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(v.clone()).expect("nested number array")
}

/// Collects pass/fail lines for the acceptance report.
#[derive(Default)]
pub struct Report {
    failures: Vec<String>,
}

impl Report {
    pub fn check(&mut self, name: &str, ok: bool, detail: impl fmt::Display) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {detail}");
        if !ok {
            self.failures.push(name.to_string());
        }
    }

    pub fn finish(self) {
        assert!(self.failures.is_empty(), "failed criteria: {:?}", self.failures);
    }
}

pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
