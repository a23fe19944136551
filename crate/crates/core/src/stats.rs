//! Location, dispersion and normalizer estimators for per-class densities.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grassmann::GrassmannPoint;
use crate::linalg::{compensated_sum, dot};
use crate::point::Point;
use crate::sphere::{geodesic, SpherePoint};

pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-3;

/// Outputs of one network restricted to the training samples of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Point>,
    pub network_id: usize,
    pub class_id: usize,
}

impl SampleSet {
    pub fn new(points: Vec<Point>, network_id: usize, class_id: usize) -> Result<Self> {
        let set = Self {
            points,
            network_id,
            class_id,
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        let first = self.points.first().ok_or(self.empty())?;
        for p in &self.points[1..] {
            if p.space() != first.space() {
                return Err(Error::SpaceMismatch);
            }
            if p.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: p.dim(),
                });
            }
        }
        Ok(())
    }

    fn empty(&self) -> Error {
        Error::EmptySampleSet {
            network: self.network_id,
            class: self.class_id,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Streaming Fréchet mean: `m_1 = x_1`, `m_{k+1} = geodesic(m_k, x_{k+1}, 1/(k+1))`.
///
/// The recursion is order dependent. Samples are consumed in stored order
/// unless `order_seed` is given, in which case they are shuffled first.
///
/// On the Grassmannian each incoming representative is flipped to lie in the
/// same hemisphere as the running mean before the sphere update.
pub fn incremental_frechet_mean(samples: &SampleSet, order_seed: Option<u64>) -> Result<Point> {
    samples.validate()?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    if let Some(seed) = order_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let grassmann = matches!(samples.points[0], Point::Grassmann(_));
    let as_sphere = |p: &Point| match p {
        Point::Sphere(s) => s.clone(),
        Point::Grassmann(g) => g.to_sphere(),
    };

    let mut mean = as_sphere(&samples.points[order[0]]);
    for (k, &idx) in order.iter().enumerate().skip(1) {
        let mut next = as_sphere(&samples.points[idx]);
        if grassmann && dot(mean.coords(), next.coords()) < 0.0 {
            next = SpherePoint::from_unit(next.coords().iter().map(|c| -c).collect());
        }
        mean = geodesic(&mean, &next, 1.0 / (k as f64 + 1.0))?;
    }
    Ok(if grassmann {
        Point::Grassmann(GrassmannPoint::from_sphere(mean))
    } else {
        Point::Sphere(mean)
    })
}

/// Root-mean-square geodesic distance to `mu`, floored at `sigma_floor`.
pub fn sample_sigma(samples: &SampleSet, mu: &Point, sigma_floor: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(samples.empty());
    }
    let sq = samples
        .points
        .iter()
        .map(|p| p.distance(mu).map(|d| d * d))
        .collect::<Result<Vec<_>>>()?;
    let sigma = (compensated_sum(sq) / samples.len() as f64).sqrt();
    Ok(sigma.max(sigma_floor))
}

/// Inverse of the unnormalized Gaussian kernel at `mu`, summed over every
/// training output of one network (all classes).
pub fn empirical_normalizer(all_train_points: &[Point], mu: &Point, sigma: f64) -> Result<f64> {
    if all_train_points.is_empty() {
        return Err(Error::EmptySampleSet {
            network: usize::MAX,
            class: usize::MAX,
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let terms = all_train_points
        .iter()
        .map(|p| p.distance(mu).map(|d| (-d * d * inv_two_var).exp()))
        .collect::<Result<Vec<_>>>()?;
    let total = compensated_sum(terms);
    if !(total > 0.0) {
        return Err(Error::DegenerateScores { sum: total });
    }
    Ok(1.0 / total)
}
