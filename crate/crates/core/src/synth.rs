//! Seeded synthetic weak classifiers.
//!
//! Probability mode: for a sample of class `j`, network `i` emits
//! `softmax(e_j / tau_i + tau_i z)` with `z ~ N(0, I)`. Small `tau` gives a
//! near-perfect classifier and large `tau` approaches chance, so `tau` tunes
//! each network's accuracy.
//!
//! Feature mode: network `i` has a random prototype direction per class in
//! `R^{d_i}` and emits `s (proto_ij + noise_i z)` for a random scale `s` of
//! either sign.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ensemble::LabeledBatch;
use crate::error::{Error, Result};
use crate::io::{file_error, write_labels, write_table};
use crate::point::Space;

/// One split: `tables[i][k]` is network `i`'s output row for sample `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub tables: Vec<Vec<Vec<f64>>>,
    pub labels: Vec<usize>,
}

impl Split {
    /// Embeds every table in `space` and pairs it with the labels.
    pub fn to_batch(&self, space: Space, classes: usize) -> Result<LabeledBatch> {
        let features = self
            .tables
            .iter()
            .map(|t| t.iter().map(|r| space.embed(r)).collect())
            .collect::<Result<Vec<_>>>()?;
        LabeledBatch::new(features, self.labels.clone(), classes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub train: Split,
    pub test: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Per-network noise level; its length is the network count.
    pub taus: Vec<f64>,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidConfig("need at least 2 classes".into()));
        }
        if self.taus.is_empty() {
            return Err(Error::InvalidConfig("need at least one network".into()));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig("split sizes must be positive".into()));
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {t}")));
        }
        Ok(())
    }
}

/// `m` noise levels evenly spaced over `[lo, hi]`.
pub fn spaced_taus(m: usize, lo: f64, hi: f64) -> Vec<f64> {
    if m == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..m)
        .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
        .collect()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn generate_probabilities(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut split = |n: usize| {
        let m = config.taus.len();
        let mut tables = vec![Vec::with_capacity(n); m];
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let y = rng.random_range(0..config.classes);
            labels.push(y);
            for (table, &tau) in tables.iter_mut().zip(&config.taus) {
                let logits: Vec<f64> = (0..config.classes)
                    .map(|k| {
                        let signal = if k == y { 1.0 / tau } else { 0.0 };
                        signal + tau * gaussian(&mut rng)
                    })
                    .collect();
                table.push(softmax(&logits));
            }
        }
        Split { tables, labels }
    };
    let train = split(config.n_train);
    let test = split(config.n_test);
    Ok(SynthData { train, test })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSynthConfig {
    pub seed: u64,
    pub classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Feature dimension of each network.
    pub dims: Vec<usize>,
    /// Noise level of each network, relative to the unit prototypes.
    pub noise: Vec<f64>,
}

impl FeatureSynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidConfig("need at least 2 classes".into()));
        }
        if self.dims.is_empty() || self.dims.len() != self.noise.len() {
            return Err(Error::InvalidConfig(
                "dims and noise must be non-empty and of equal length".into(),
            ));
        }
        if self.dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidConfig("feature dimensions must be >= 2".into()));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig("split sizes must be positive".into()));
        }
        if let Some(s) = self.noise.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig(format!("noise must be >= 0, got {s}")));
        }
        Ok(())
    }
}

pub fn generate_features(config: &FeatureSynthConfig) -> Result<SynthData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let prototypes: Vec<Vec<Vec<f64>>> = config
        .dims
        .iter()
        .map(|&d| {
            (0..config.classes)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.into_iter().map(|x| x / n).collect()
                })
                .collect()
        })
        .collect();

    let mut split = |n: usize| {
        let mut tables = vec![Vec::with_capacity(n); config.dims.len()];
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let y = rng.random_range(0..config.classes);
            labels.push(y);
            for (i, table) in tables.iter_mut().enumerate() {
                let magnitude = rng.random_range(0.5..2.0);
                let scale = if rng.random_bool(0.5) { magnitude } else { -magnitude };
                let row: Vec<f64> = prototypes[i][y]
                    .iter()
                    .map(|p| scale * (p + config.noise[i] * gaussian(&mut rng)))
                    .collect();
                table.push(row);
            }
        }
        Split { tables, labels }
    };
    let train = split(config.n_train);
    let test = split(config.n_test);
    Ok(SynthData { train, test })
}

/// File name of network `i`'s table within a split directory.
pub fn table_name(i: usize) -> String {
    format!("net{i:02}.csv")
}

pub const LABELS_NAME: &str = "labels.txt";

/// Writes `dir/train/` and `dir/test/`, each with one table per network and a
/// label file.
pub fn write_synth(dir: &Path, data: &SynthData) -> Result<()> {
    for (name, split) in [("train", &data.train), ("test", &data.test)] {
        let sub = dir.join(name);
        fs::create_dir_all(&sub).map_err(file_error(&sub))?;
        for (i, table) in split.tables.iter().enumerate() {
            write_table(&sub.join(table_name(i)), table)?;
        }
        write_labels(&sub.join(LABELS_NAME), &split.labels)?;
    }
    Ok(())
}
