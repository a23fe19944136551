//! Per-network, per-class densities on the manifold.
//!
//! Both families use the Gaussian kernel `exp(-d^2 / 2 s^2)` with the geodesic
//! distance `d`. The analytic normalizing constant on the sphere is not used;
//! each density instead carries an empirical normalizer computed so that the
//! density, summed over one network's training outputs, equals one.

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;
use crate::point::Point;
use crate::stats::{
    empirical_normalizer, incremental_frechet_mean, sample_sigma, SampleSet, DEFAULT_SIGMA_FLOOR,
};

/// Parametric model `normalizer * exp(-d^2(x, mu) / 2 sigma^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianDensity {
    pub mu: Point,
    pub sigma: f64,
    pub normalizer: f64,
}

/// Kernel density estimate over the retained training outputs of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDensity {
    pub support: Vec<Point>,
    pub bandwidth: f64,
    pub normalizer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Parametric,
    Kde,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Parametric => "parametric",
            ModelKind::Kde => "kde",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parametric" => Ok(ModelKind::Parametric),
            "kde" => Ok(ModelKind::Kde),
            other => Err(Error::InvalidConfig(format!("unknown model kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Density {
    Parametric(GaussianDensity),
    Kde(KernelDensity),
}

impl Density {
    pub fn pdf(&self, x: &Point) -> Result<f64> {
        match self {
            Density::Parametric(d) => gaussian_pdf(d, x),
            Density::Kde(d) => kde_pdf(d, x),
        }
    }

    /// Natural log of [`Density::pdf`], finite even where `pdf` underflows.
    pub fn log_pdf(&self, x: &Point) -> Result<f64> {
        match self {
            Density::Parametric(d) => {
                let dist = d.mu.distance(x)?;
                Ok(d.normalizer.ln() - dist * dist / (2.0 * d.sigma * d.sigma))
            }
            Density::Kde(d) => {
                let exponents = d
                    .support
                    .iter()
                    .map(|y| {
                        let dist = y.distance(x)?;
                        Ok(-dist * dist / (2.0 * d.bandwidth * d.bandwidth))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut acc = CompensatedSum::new();
                exponents.iter().for_each(|e| acc.add((e - max).exp()));
                Ok(d.normalizer.ln() + max + (acc.value() / d.support.len() as f64).ln())
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Density::Parametric(_) => ModelKind::Parametric,
            Density::Kde(_) => ModelKind::Kde,
        }
    }

    /// Parameter sanity: positive scale and normalizer, non-empty support of
    /// unit points sharing one dimension.
    pub fn check(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::CorruptModel(format!("invalid density: {what}")));
        let (scale, normalizer, points): (f64, f64, &[Point]) = match self {
            Density::Parametric(d) => (d.sigma, d.normalizer, std::slice::from_ref(&d.mu)),
            Density::Kde(d) => (d.bandwidth, d.normalizer, &d.support),
        };
        if !(scale > 0.0 && scale.is_finite()) {
            return bad("scale must be positive");
        }
        if !(normalizer > 0.0 && normalizer.is_finite()) {
            return bad("normalizer must be positive");
        }
        let Some(first) = points.first() else {
            return bad("empty support");
        };
        for p in points {
            if p.space() != first.space() || p.dim() != first.dim() {
                return bad("support points disagree on space or dimension");
            }
            let n = crate::linalg::norm(p.coords());
            if !((n - 1.0).abs() <= 1e-9) {
                return bad("point is not unit norm");
            }
        }
        Ok(())
    }

    /// Dimension of the points this density is defined over.
    pub fn dim(&self) -> usize {
        match self {
            Density::Parametric(d) => d.mu.dim(),
            Density::Kde(d) => d.support[0].dim(),
        }
    }
}

/// Settings shared by both density estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityConfig {
    pub sigma_floor: f64,
    /// Shuffle seed for the incremental Fréchet mean; `None` keeps input order.
    pub fm_order_seed: Option<u64>,
    /// Cap on retained KDE support points; `0` keeps all of them.
    pub kde_max_support: usize,
    /// Seed for KDE support subsampling.
    pub seed: u64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            fm_order_seed: None,
            kde_max_support: 0,
            seed: 42,
        }
    }
}

#[inline]
fn kernel(d: f64, scale: f64) -> f64 {
    (-d * d / (2.0 * scale * scale)).exp()
}

pub fn gaussian_pdf(d: &GaussianDensity, x: &Point) -> Result<f64> {
    let dist = d.mu.distance(x)?;
    Ok(d.normalizer * kernel(dist, d.sigma))
}

/// Silverman's rule of thumb, `(4 sigma^5 / 3n)^(1/5)`.
pub fn silverman_bandwidth(sigma_hat: f64, n: usize) -> f64 {
    (4.0 * sigma_hat.powi(5) / (3.0 * n.max(1) as f64)).powf(0.2)
}

/// Unnormalized kernel sum over the support, divided by its size.
fn kernel_mean(support: &[Point], bandwidth: f64, x: &Point) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for y in support {
        acc.add(kernel(y.distance(x)?, bandwidth));
    }
    Ok(acc.value() / support.len() as f64)
}

pub fn kde_pdf(d: &KernelDensity, x: &Point) -> Result<f64> {
    Ok(d.normalizer * kernel_mean(&d.support, d.bandwidth, x)?)
}

pub fn fit_gaussian(
    class_samples: &SampleSet,
    all_network_train: &[Point],
    config: &DensityConfig,
) -> Result<GaussianDensity> {
    let mu = incremental_frechet_mean(class_samples, config.fm_order_seed)?;
    let sigma = sample_sigma(class_samples, &mu, config.sigma_floor)?;
    let normalizer = empirical_normalizer(all_network_train, &mu, sigma)
        .map_err(|e| relabel_empty(e, class_samples))?;
    Ok(GaussianDensity {
        mu,
        sigma,
        normalizer,
    })
}

pub fn fit_kde(
    class_samples: &SampleSet,
    all_network_train: &[Point],
    config: &DensityConfig,
) -> Result<KernelDensity> {
    let mu = incremental_frechet_mean(class_samples, config.fm_order_seed)?;
    let sigma_hat = sample_sigma(class_samples, &mu, config.sigma_floor)?;

    let support: Vec<Point> =
        if config.kde_max_support > 0 && class_samples.len() > config.kde_max_support {
            let salt = (class_samples.network_id as u64) << 32 | class_samples.class_id as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ salt);
            let mut picked =
                sample_indices(&mut rng, class_samples.len(), config.kde_max_support).into_vec();
            picked.sort_unstable();
            picked
                .into_iter()
                .map(|k| class_samples.points[k].clone())
                .collect()
        } else {
            class_samples.points.clone()
        };

    let bandwidth = silverman_bandwidth(sigma_hat, support.len());
    if all_network_train.is_empty() {
        return Err(Error::EmptySampleSet {
            network: class_samples.network_id,
            class: class_samples.class_id,
        });
    }
    // Every training output contributes its full kernel mean, including the
    // self term when it is itself a support point.
    let mut total = CompensatedSum::new();
    for x in all_network_train {
        total.add(kernel_mean(&support, bandwidth, x)?);
    }
    let total = total.value();
    if !(total > 0.0) {
        return Err(Error::DegenerateScores { sum: total });
    }
    Ok(KernelDensity {
        support,
        bandwidth,
        normalizer: 1.0 / total,
    })
}

fn relabel_empty(e: Error, samples: &SampleSet) -> Error {
    match e {
        Error::EmptySampleSet { .. } => Error::EmptySampleSet {
            network: samples.network_id,
            class: samples.class_id,
        },
        other => other,
    }
}
