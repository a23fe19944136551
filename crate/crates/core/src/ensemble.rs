//! Mixture-of-networks classifier and the learning of its mixture weights.
//!
//! For class `j` the ensemble score of a sample is `sum_i alpha_i p_ij(F_i)`,
//! where `p_ij` is the fitted density of network `i` for class `j` and `F_i` is
//! the sample's embedded output from network `i`. Weights live on the simplex
//! and are optimized through the lift `alpha_tilde = sqrt(alpha)` on
//! S^{m-1} with Riemannian gradient descent, while the densities stay fixed.
//!
//! Scores are carried in the log domain internally. The loss and the
//! prediction rule only depend on each sample's score vector up to a positive
//! factor, so per-sample rescaling is exact and avoids underflow when every
//! density is tiny.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{fit_gaussian, fit_kde, Density, DensityConfig, ModelKind};
use crate::error::{Error, Result};
use crate::linalg::{dot, CompensatedSum};
use crate::point::{Point, Space};
use crate::sphere::{exp_map, SpherePoint, TangentVector};
use crate::stats::SampleSet;

/// Simplex weights together with their unit-sphere lift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights", into = "RawWeights")]
pub struct MixtureWeights {
    alpha: Vec<f64>,
    alpha_tilde: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawWeights {
    alpha: Vec<f64>,
    alpha_tilde: Vec<f64>,
}

impl TryFrom<RawWeights> for MixtureWeights {
    type Error = Error;

    fn try_from(raw: RawWeights) -> Result<Self> {
        let ok = !raw.alpha.is_empty()
            && raw.alpha.len() == raw.alpha_tilde.len()
            && raw
                .alpha
                .iter()
                .zip(&raw.alpha_tilde)
                .all(|(a, t)| *t >= 0.0 && *a == t * t)
            && (raw.alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
        if !ok {
            return Err(Error::CorruptModel("mixture weights violate simplex invariants".into()));
        }
        Ok(Self {
            alpha: raw.alpha,
            alpha_tilde: raw.alpha_tilde,
        })
    }
}

impl From<MixtureWeights> for RawWeights {
    fn from(w: MixtureWeights) -> Self {
        Self {
            alpha: w.alpha,
            alpha_tilde: w.alpha_tilde,
        }
    }
}

impl MixtureWeights {
    /// `alpha_i = 1/m`.
    pub fn uniform(m: usize) -> Self {
        Self::from_lift(vec![1.0; m]).expect("m >= 1")
    }

    /// Builds weights from any nonzero vector on the sphere side: entries are
    /// made non-negative, normalized, and squared.
    pub fn from_lift(alpha_tilde: Vec<f64>) -> Result<Self> {
        let abs: Vec<f64> = alpha_tilde.iter().map(|t| t.abs()).collect();
        let lifted = SpherePoint::new(abs)?.into_coords();
        let alpha = lifted.iter().map(|t| t * t).collect();
        Ok(Self {
            alpha,
            alpha_tilde: lifted,
        })
    }

    /// Builds weights from simplex coordinates.
    pub fn from_alpha(alpha: &[f64]) -> Result<Self> {
        if let Some((index, &value)) = alpha.iter().enumerate().find(|(_, &a)| !(a >= 0.0)) {
            return Err(Error::NegativeProbability { index, value });
        }
        Self::from_lift(alpha.iter().map(|a| a.sqrt()).collect())
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_tilde(&self) -> &[f64] {
        &self.alpha_tilde
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradMode {
    #[default]
    Analytic,
    FiniteDifference,
}

impl std::str::FromStr for GradMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(GradMode::Analytic),
            "finite-difference" => Ok(GradMode::FiniteDifference),
            other => Err(Error::InvalidConfig(format!("unknown grad mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for GradMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GradMode::Analytic => "analytic",
            GradMode::FiniteDifference => "finite-difference",
        })
    }
}

/// Central-difference step on `alpha_tilde` for [`GradMode::FiniteDifference`].
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub eta: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub grad_mode: GradMode,
    /// Halve the step whenever it would increase the loss.
    pub backtracking: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            max_iters: 5000,
            tol: 1e-8,
            grad_mode: GradMode::Analytic,
            backtracking: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub eta: f64,
    pub iterations_run: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub converged: bool,
    pub grad_mode: GradMode,
    pub seed: u64,
    /// Wall-clock seconds spent in weight learning.
    pub weight_seconds: f64,
}

/// Densities for every (network, class) pair plus mixture weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub kind: ModelKind,
    pub space: Space,
    pub m: usize,
    pub c: usize,
    /// `densities[i][j]` is network `i`, class `j`.
    pub densities: Vec<Vec<Density>>,
    pub weights: MixtureWeights,
    pub fit_meta: FitMeta,
}

impl EnsembleModel {
    /// Checks grid completeness and dimensional consistency.
    pub fn validate(&self) -> Result<()> {
        for d in self.densities.iter().flatten() {
            d.check()?;
        }
        check_grid(&self.densities, self.c)?;
        if self.densities.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                found: self.densities.len(),
            });
        }
        if self.weights.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                found: self.weights.len(),
            });
        }
        for row in &self.densities {
            for d in row {
                if d.kind() != self.kind {
                    return Err(Error::CorruptModel(format!(
                        "model kind is {} but contains a {} density",
                        self.kind,
                        d.kind()
                    )));
                }
                let space = match d {
                    Density::Parametric(g) => g.mu.space(),
                    Density::Kde(k) => k.support[0].space(),
                };
                if space != self.space {
                    return Err(Error::SpaceMismatch);
                }
                if self.space == Space::Sphere && d.dim() != self.c {
                    return Err(Error::DimensionMismatch {
                        expected: self.c,
                        found: d.dim(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Expected point dimension for each network.
    pub fn network_dims(&self) -> Vec<usize> {
        self.densities.iter().map(|row| row[0].dim()).collect()
    }
}

fn check_grid(densities: &[Vec<Density>], c: usize) -> Result<()> {
    if densities.is_empty() {
        return Err(Error::InvalidConfig("ensemble needs at least one network".into()));
    }
    for row in densities {
        if row.len() != c {
            return Err(Error::DimensionMismatch {
                expected: c,
                found: row.len(),
            });
        }
        if let Some(first) = row.first() {
            let dim = first.dim();
            if let Some(bad) = row.iter().find(|d| d.dim() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: bad.dim(),
                });
            }
        }
    }
    Ok(())
}

/// Per-network embedded outputs for a set of samples, with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    /// `features[i][k]` is network `i`'s point for sample `k`.
    features: Vec<Vec<Point>>,
    labels: Vec<usize>,
    classes: usize,
}

impl LabeledBatch {
    pub fn new(features: Vec<Vec<Point>>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidConfig("batch needs at least one network".into()));
        }
        if labels.is_empty() {
            return Err(Error::EmptyBatch);
        }
        for (network, table) in features.iter().enumerate() {
            if table.len() != labels.len() {
                return Err(Error::RaggedEnsemble {
                    network,
                    expected: labels.len(),
                    found: table.len(),
                });
            }
        }
        if let Some((line, &label)) = labels.iter().enumerate().find(|(_, &y)| y >= classes) {
            return Err(Error::LabelOutOfRange {
                line: line + 1,
                label: label as i64,
                classes,
            });
        }
        Ok(Self {
            features,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn networks(&self) -> usize {
        self.features.len()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn network_points(&self, i: usize) -> &[Point] {
        &self.features[i]
    }

    /// One point per network for sample `k`.
    pub fn sample(&self, k: usize) -> Vec<Point> {
        self.features.iter().map(|t| t[k].clone()).collect()
    }

    /// Restricts the batch to a subset of networks.
    pub fn select_networks(&self, networks: &[usize]) -> Self {
        Self {
            features: networks.iter().map(|&i| self.features[i].clone()).collect(),
            labels: self.labels.clone(),
            classes: self.classes,
        }
    }
}

fn check_sample(densities: &[Vec<Density>], sample: &[Point]) -> Result<()> {
    if sample.len() != densities.len() {
        return Err(Error::DimensionMismatch {
            expected: densities.len(),
            found: sample.len(),
        });
    }
    Ok(())
}

/// Unnormalized ensemble scores `sum_i alpha_i p_ij(x_i)` for each class.
pub fn class_scores(model: &EnsembleModel, sample: &[Point]) -> Result<Vec<f64>> {
    check_sample(&model.densities, sample)?;
    let mut scores = vec![CompensatedSum::new(); model.c];
    for ((row, &alpha), x) in model.densities.iter().zip(model.weights.alpha()).zip(sample) {
        for (acc, density) in scores.iter_mut().zip(row) {
            let pdf = density.pdf(x)?;
            if alpha > 0.0 {
                acc.add(alpha * pdf);
            }
        }
    }
    Ok(scores.iter().map(|s| s.value()).collect())
}

/// Log densities `log p_ij(x_i)` for one sample, network-major.
fn log_pdf_row(densities: &[Vec<Density>], sample: &[Point]) -> Result<Vec<f64>> {
    check_sample(densities, sample)?;
    let mut out = Vec::with_capacity(densities.len() * densities[0].len());
    for (row, x) in densities.iter().zip(sample) {
        for d in row {
            out.push(d.log_pdf(x)?);
        }
    }
    Ok(out)
}

/// Scores rescaled so the largest possible term is 1; same ratios as
/// [`class_scores`].
fn scaled_scores(model: &EnsembleModel, sample: &[Point]) -> Result<Vec<f64>> {
    let logs = log_pdf_row(&model.densities, sample)?;
    let table = scale_row(&logs)?;
    Ok(mix(&table, model.weights.alpha(), model.c))
}

fn scale_row(logs: &[f64]) -> Result<Vec<f64>> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateScores { sum: 0.0 });
    }
    Ok(logs.iter().map(|l| (l - max).exp()).collect())
}

fn mix(table_row: &[f64], alpha: &[f64], c: usize) -> Vec<f64> {
    let mut scores = vec![0.0; c];
    for (i, &a) in alpha.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (s, &p) in scores.iter_mut().zip(&table_row[i * c..(i + 1) * c]) {
            *s += a * p;
        }
    }
    scores
}

/// Divides scores by their sum.
pub fn normalize_scores(scores: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = scores.iter().sum();
    if !(sum >= 1e-300) || !sum.is_finite() {
        return Err(Error::DegenerateScores { sum });
    }
    Ok(scores.iter().map(|s| s / sum).collect())
}

pub fn ensemble_probability(model: &EnsembleModel, sample: &[Point]) -> Result<Vec<f64>> {
    normalize_scores(&scaled_scores(model, sample)?)
}

/// Index of the largest score; ties go to the smallest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = j;
        }
    }
    best
}

pub fn predict(model: &EnsembleModel, sample: &[Point]) -> Result<usize> {
    let scores = scaled_scores(model, sample)?;
    normalize_scores(&scores)?;
    Ok(argmax(&scores))
}

/// Arc-length distance between the one-hot label `y` and the direction of `p`.
///
/// Equal to `arccos(p_y / |p|)`, computed as `atan2(|p without y|, p_y)`.
pub fn label_distance(y: usize, p: &[f64]) -> Result<f64> {
    if y >= p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: y + 1,
        });
    }
    let off = off_label_norm(y, p);
    if !(off > 0.0 || p[y] > 0.0) {
        return Err(Error::DegenerateScores { sum: 0.0 });
    }
    Ok(off.atan2(p[y].max(0.0)))
}

fn off_label_norm(y: usize, p: &[f64]) -> f64 {
    p.iter()
        .enumerate()
        .filter(|&(j, _)| j != y)
        .map(|(_, v)| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Mean squared label distance over the batch.
pub fn loss(model: &EnsembleModel, batch: &LabeledBatch) -> Result<f64> {
    let table = PdfTable::build(&model.densities, batch)?;
    table.loss(model.weights.alpha())
}

/// Density values for every (sample, network, class), rescaled per sample.
///
/// Densities are fixed during weight learning, so this is built once and the
/// loss and gradient become cheap weighted sums.
#[derive(Debug, Clone)]
pub struct PdfTable {
    n: usize,
    m: usize,
    c: usize,
    values: Vec<f64>,
    labels: Vec<usize>,
}

impl PdfTable {
    pub fn build(densities: &[Vec<Density>], batch: &LabeledBatch) -> Result<Self> {
        let m = densities.len();
        let c = densities.first().map_or(0, Vec::len);
        check_grid(densities, c)?;
        if batch.networks() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: batch.networks(),
            });
        }
        if batch.classes() != c {
            return Err(Error::DimensionMismatch {
                expected: c,
                found: batch.classes(),
            });
        }
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let rows = (0..batch.len())
            .into_par_iter()
            .map(|k| scale_row(&log_pdf_row(densities, &batch.sample(k))?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: batch.len(),
            m,
            c,
            values: rows.concat(),
            labels: batch.labels().to_vec(),
        })
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn networks(&self) -> usize {
        self.m
    }

    fn row(&self, k: usize) -> &[f64] {
        let w = self.m * self.c;
        &self.values[k * w..(k + 1) * w]
    }

    /// Loss at simplex weights `alpha` (any positive scaling of `alpha`
    /// gives the same value).
    pub fn loss(&self, alpha: &[f64]) -> Result<f64> {
        let terms = (0..self.n)
            .into_par_iter()
            .map(|k| {
                let scores = mix(self.row(k), alpha, self.c);
                let d = label_distance(self.labels[k], &scores)?;
                Ok(d * d)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut acc = CompensatedSum::new();
        terms.into_iter().for_each(|t| acc.add(t));
        Ok(acc.value() / self.n as f64)
    }

    /// Loss as a function of the lift, `L(alpha_tilde^2)`.
    pub fn loss_lifted(&self, alpha_tilde: &[f64]) -> Result<f64> {
        let alpha: Vec<f64> = alpha_tilde.iter().map(|t| t * t).collect();
        self.loss(&alpha)
    }

    /// Euclidean gradient of `L(alpha_tilde^2)` with respect to `alpha_tilde`.
    pub fn euclidean_gradient(&self, alpha_tilde: &[f64]) -> Result<Vec<f64>> {
        let alpha: Vec<f64> = alpha_tilde.iter().map(|t| t * t).collect();
        let (m, c) = (self.m, self.c);
        let grad_alpha = (0..self.n)
            .into_par_iter()
            .map(|k| {
                let row = self.row(k);
                let s = mix(row, &alpha, c);
                let ds = score_gradient(self.labels[k], &s)?;
                let mut g = vec![0.0; m];
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi = dot(&ds, &row[i * c..(i + 1) * c]);
                }
                Ok::<_, Error>(g)
            })
            .try_reduce(
                || vec![0.0; m],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )?;
        let n = self.n as f64;
        Ok(grad_alpha
            .iter()
            .zip(alpha_tilde)
            .map(|(g, t)| 2.0 * t * g / n)
            .collect())
    }
}

/// Gradient of `d(y, s)^2` with respect to the unnormalized scores `s`.
///
/// With `a = s_y`, `r = |s without y|` and `d = atan2(r, a)`:
/// `d(d^2)/ds_j = 2 (d/r) a s_j / (a^2 + r^2)` for `j != y`, and
/// `d(d^2)/ds_y = -2 d r / (a^2 + r^2)`. As `r -> 0`, `d/r -> 1/a`.
fn score_gradient(y: usize, s: &[f64]) -> Result<Vec<f64>> {
    let a = s[y];
    let r = off_label_norm(y, s);
    let denom = a * a + r * r;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::DegenerateScores { sum: denom.sqrt() });
    }
    let d = r.atan2(a);
    let ratio = if r > 0.0 { d / r } else { 1.0 / a };
    Ok(s.iter()
        .enumerate()
        .map(|(j, &sj)| {
            if j == y {
                -2.0 * d * r / denom
            } else {
                2.0 * ratio * a * sj / denom
            }
        })
        .collect())
}

/// Riemannian gradient of the loss on S^{m-1} at `alpha_tilde`.
pub fn riemannian_gradient(
    table: &PdfTable,
    alpha_tilde: &SpherePoint,
    mode: GradMode,
) -> Result<TangentVector> {
    let ambient = match mode {
        GradMode::Analytic => table.euclidean_gradient(alpha_tilde.coords())?,
        GradMode::FiniteDifference => {
            let mut probe = alpha_tilde.coords().to_vec();
            let mut g = vec![0.0; probe.len()];
            for i in 0..probe.len() {
                let orig = probe[i];
                probe[i] = orig + FD_STEP;
                let up = table.loss_lifted(&probe)?;
                probe[i] = orig - FD_STEP;
                let down = table.loss_lifted(&probe)?;
                probe[i] = orig;
                g[i] = (up - down) / (2.0 * FD_STEP);
            }
            g
        }
    };
    TangentVector::project(alpha_tilde.clone(), &ambient)
}

/// Learns mixture weights by Riemannian gradient descent on the lift of the
/// simplex to S^{m-1}, starting from `alpha_i = 1/m`.
///
/// Stops when `|L_prev - L| <= tol * max(1, L)` or after `max_iters` steps.
pub fn fit_weights(
    densities: &[Vec<Density>],
    batch: &LabeledBatch,
    config: &FitConfig,
) -> Result<(MixtureWeights, FitMeta)> {
    let table = PdfTable::build(densities, batch)?;
    fit_weights_on_table(&table, config)
}

pub fn fit_weights_on_table(
    table: &PdfTable,
    config: &FitConfig,
) -> Result<(MixtureWeights, FitMeta)> {
    config.validate()?;
    let start = Instant::now();
    let m = table.networks();
    let mut weights = MixtureWeights::uniform(m);
    let initial_loss = table.loss(weights.alpha())?;
    if !initial_loss.is_finite() {
        return Err(Error::NonFiniteLoss { iteration: 0 });
    }
    let mut current = initial_loss;
    let mut iterations = 0;
    let mut converged = m == 1;
    let mut eta = config.eta;

    while !converged && iterations < config.max_iters {
        let at = SpherePoint::new(weights.alpha_tilde().to_vec())?;
        let grad = riemannian_gradient(table, &at, config.grad_mode)?;
        if grad.norm() == 0.0 {
            converged = true;
            break;
        }
        let step = grad.scaled(-eta);
        if step.norm() >= PI {
            if config.backtracking {
                eta *= 0.5;
                continue;
            }
            return Err(Error::StepTooLarge { norm: step.norm() });
        }
        let candidate = MixtureWeights::from_lift(exp_map(&at, &step)?.into_coords())?;
        let next = table.loss(candidate.alpha())?;
        if !next.is_finite() {
            if config.backtracking && eta > config.eta * 1e-12 {
                eta *= 0.5;
                continue;
            }
            return Err(Error::NonFiniteLoss {
                iteration: iterations + 1,
            });
        }
        if config.backtracking && next > current {
            eta *= 0.5;
            if eta < config.eta * 1e-12 {
                converged = true;
            }
            continue;
        }
        iterations += 1;
        let delta = (current - next).abs();
        weights = candidate;
        current = next;
        if delta <= config.tol * current.max(1.0) {
            converged = true;
        }
    }

    let meta = FitMeta {
        eta: config.eta,
        iterations_run: iterations,
        initial_loss,
        final_loss: current,
        converged,
        grad_mode: config.grad_mode,
        seed: 0,
        weight_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((weights, meta))
}

/// Fits every (network, class) density from a labeled training batch.
pub fn fit_densities(
    train: &LabeledBatch,
    kind: ModelKind,
    config: &DensityConfig,
) -> Result<Vec<Vec<Density>>> {
    let (m, c) = (train.networks(), train.classes());
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..c).map(move |j| (i, j))).collect();
    let fitted = pairs
        .par_iter()
        .map(|&(i, j)| {
            let all = train.network_points(i);
            let class_points: Vec<Point> = all
                .iter()
                .zip(train.labels())
                .filter(|&(_, &y)| y == j)
                .map(|(p, _)| p.clone())
                .collect();
            let samples = SampleSet::new(class_points, i, j)?;
            Ok(match kind {
                ModelKind::Parametric => Density::Parametric(fit_gaussian(&samples, all, config)?),
                ModelKind::Kde => Density::Kde(fit_kde(&samples, all, config)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut it = fitted.into_iter();
    Ok((0..m).map(|_| it.by_ref().take(c).collect()).collect())
}

/// Fits densities, then weights, on the same training batch.
pub fn fit_model(
    train: &LabeledBatch,
    kind: ModelKind,
    density_config: &DensityConfig,
    fit_config: &FitConfig,
) -> Result<EnsembleModel> {
    fit_config.validate()?;
    let space = train.network_points(0)[0].space();
    let densities = fit_densities(train, kind, density_config)?;
    let (weights, mut fit_meta) = fit_weights(&densities, train, fit_config)?;
    fit_meta.seed = density_config.seed;
    let model = EnsembleModel {
        kind,
        space,
        m: train.networks(),
        c: train.classes(),
        densities,
        weights,
        fit_meta,
    };
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n: usize,
    pub accuracy: f64,
    /// `None` for classes absent from the batch.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub mean_loss: f64,
    pub predictions: Vec<usize>,
}

pub fn evaluate(model: &EnsembleModel, batch: &LabeledBatch) -> Result<Evaluation> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let table = PdfTable::build(&model.densities, batch)?;
    let predictions: Vec<usize> = (0..batch.len())
        .map(|k| argmax(&mix(table.row(k), model.weights.alpha(), model.c)))
        .collect();
    let mean_loss = table.loss(model.weights.alpha())?;
    Ok(tally(&predictions, batch.labels(), model.c, mean_loss))
}

fn tally(predictions: &[usize], labels: &[usize], c: usize, mean_loss: f64) -> Evaluation {
    let mut hits = vec![0usize; c];
    let mut totals = vec![0usize; c];
    for (&p, &y) in predictions.iter().zip(labels) {
        totals[y] += 1;
        if p == y {
            hits[y] += 1;
        }
    }
    let correct: usize = hits.iter().sum();
    Evaluation {
        n: labels.len(),
        accuracy: correct as f64 / labels.len() as f64,
        per_class_accuracy: hits
            .iter()
            .zip(&totals)
            .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
            .collect(),
        mean_loss,
        predictions: predictions.to_vec(),
    }
}

/// Fraction of samples whose argmax equals the label.
pub fn argmax_accuracy(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let hits = rows
        .iter()
        .zip(labels)
        .filter(|(r, &y)| argmax(r) == y)
        .count();
    hits as f64 / labels.len().max(1) as f64
}

/// Accuracy of network `i` used alone through its own densities.
pub fn density_classifier_accuracy(
    model: &EnsembleModel,
    batch: &LabeledBatch,
    network: usize,
) -> Result<f64> {
    let row = &model.densities[network];
    let points = batch.network_points(network);
    let mut hits = 0;
    for (x, &y) in points.iter().zip(batch.labels()) {
        let logs = row
            .iter()
            .map(|d| d.log_pdf(x))
            .collect::<Result<Vec<_>>>()?;
        if argmax(&logs) == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / batch.len() as f64)
}
