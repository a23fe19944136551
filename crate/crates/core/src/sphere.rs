//! Geometry of the unit hypersphere S^N embedded in R^{N+1}.
//!
//! Points are unit vectors; tangent vectors at `x` are vectors orthogonal to
//! `x`. The primitives here are the arc-length distance, the exponential map
//! `exp_x(v) = cos(|v|) x + sin(|v|) v/|v|`, its inverse
//! `log_x(y) = theta/sin(theta) (y - x cos(theta))`, and the geodesic
//! `gamma(t) = exp_x(t log_x(y))`.
//!
//! The injectivity radius of S^N is pi, so steps are accepted while `|v| < pi`.
//! Square-root embedded probability vectors live in the closed positive
//! quadrant, where every pairwise distance is at most pi/2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// Below this tangent norm `exp_map` returns the base point unchanged.
pub const EXP_ZERO_THRESHOLD: f64 = 1e-14;
/// Orthogonality tolerance enforced when a tangent vector is constructed.
pub const TANGENT_TOLERANCE: f64 = 1e-10;
/// Distance at which `log_map` refuses to pick a direction.
pub const ANTIPODAL_MARGIN: f64 = 1e-8;

/// A unit vector on S^N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpherePoint(Vec<f64>);

impl SpherePoint {
    /// Normalizes `coords` onto the sphere.
    pub fn new(mut coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroFeature);
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(Self(coords))
    }

    /// Wraps coordinates already known to be unit norm.
    pub(crate) fn from_unit(coords: Vec<f64>) -> Self {
        debug_assert!((norm(&coords) - 1.0).abs() < 1e-9);
        Self(coords)
    }

    /// The i-th standard basis vector of R^dim.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Ambient dimension N+1.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_positive_quadrant(&self) -> bool {
        self.0.iter().all(|&c| c >= 0.0)
    }
}

impl AsRef<[f64]> for SpherePoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A vector in the tangent space at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: SpherePoint,
    direction: Vec<f64>,
}

impl TangentVector {
    /// Checks orthogonality to `base` once; later arithmetic trusts it.
    pub fn new(base: SpherePoint, direction: Vec<f64>) -> Result<Self> {
        check_dim(base.dim(), direction.len())?;
        let inner = dot(base.coords(), &direction);
        if inner.abs() > TANGENT_TOLERANCE {
            return Err(Error::NotTangent { inner });
        }
        Ok(Self { base, direction })
    }

    /// Orthogonal projection of an ambient vector onto the tangent space at `base`.
    pub fn project(base: SpherePoint, ambient: &[f64]) -> Result<Self> {
        check_dim(base.dim(), ambient.len())?;
        let inner = dot(base.coords(), ambient);
        let direction = ambient
            .iter()
            .zip(base.coords())
            .map(|(a, b)| a - inner * b)
            .collect();
        Ok(Self { base, direction })
    }

    pub fn zero(base: SpherePoint) -> Self {
        let direction = vec![0.0; base.dim()];
        Self { base, direction }
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn norm(&self) -> f64 {
        norm(&self.direction)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            base: self.base.clone(),
            direction: self.direction.iter().map(|d| d * t).collect(),
        }
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Element-wise square root of a probability vector.
///
/// Entries in `[-1e-9, 0)` are treated as zero; a sum within `1e-6` of one is
/// renormalized.
pub fn sqrt_embed(p: &[f64]) -> Result<SpherePoint> {
    const NEGATIVE_TOLERANCE: f64 = 1e-9;
    const SUM_TOLERANCE: f64 = 1e-6;

    if p.is_empty() {
        return Err(Error::ZeroFeature);
    }
    if let Some((index, &value)) = p
        .iter()
        .enumerate()
        .find(|(_, &v)| v < -NEGATIVE_TOLERANCE || v.is_nan())
    {
        return Err(Error::NegativeProbability { index, value });
    }
    let sum: f64 = p.iter().map(|&v| v.max(0.0)).sum();
    if !((sum - 1.0).abs() <= SUM_TOLERANCE) {
        return Err(Error::NotNormalized { sum });
    }
    let coords = p.iter().map(|&v| (v.max(0.0) / sum).sqrt()).collect();
    SpherePoint::new(coords)
}

/// Great-circle distance in `[0, pi]`.
///
/// Evaluated as `2 atan2(|x - y|, |x + y|)`, which equals
/// `arccos(clamp(<x, y>, -1, 1))` but keeps full relative precision near 0
/// and pi, where `arccos` loses about half the significant digits.
pub fn arc_distance(x: &SpherePoint, y: &SpherePoint) -> f64 {
    debug_assert_eq!(x.dim(), y.dim());
    chord_angle(x.coords(), y.coords())
}

pub(crate) fn chord_angle(x: &[f64], y: &[f64]) -> f64 {
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

pub fn exp_map(x: &SpherePoint, v: &TangentVector) -> Result<SpherePoint> {
    check_dim(x.dim(), v.direction.len())?;
    let theta = v.norm();
    if theta >= std::f64::consts::PI {
        return Err(Error::StepTooLarge { norm: theta });
    }
    if theta < EXP_ZERO_THRESHOLD {
        return Ok(x.clone());
    }
    let (s, c) = theta.sin_cos();
    let coords: Vec<f64> = x
        .coords()
        .iter()
        .zip(&v.direction)
        .map(|(xi, vi)| c * xi + s * vi / theta)
        .collect();
    // Renormalize to absorb round-off accumulated over long iterations.
    SpherePoint::new(coords)
}

pub fn log_map(x: &SpherePoint, y: &SpherePoint) -> Result<TangentVector> {
    check_dim(x.dim(), y.dim())?;
    let theta = arc_distance(x, y);
    if theta >= std::f64::consts::PI - ANTIPODAL_MARGIN {
        return Err(Error::AntipodalPoints { distance: theta });
    }
    if theta == 0.0 {
        return Ok(TangentVector::zero(x.clone()));
    }
    let cos_theta = theta.cos();
    let scale = if theta < 1e-7 {
        // theta / sin(theta) = 1 + theta^2/6 + O(theta^4)
        1.0 + theta * theta / 6.0
    } else {
        theta / theta.sin()
    };
    let raw: Vec<f64> = y
        .coords()
        .iter()
        .zip(x.coords())
        .map(|(yi, xi)| scale * (yi - xi * cos_theta))
        .collect();
    // The closed form is tangent only up to round-off; project to restore it.
    let mut v = TangentVector::project(x.clone(), &raw)?;
    let n = v.norm();
    if n > 0.0 {
        let fix = theta / n;
        v.direction.iter_mut().for_each(|d| *d *= fix);
    }
    Ok(v)
}

/// Point at parameter `t` along the shortest geodesic from `x` to `y`.
///
/// `t` outside `[0, 1]` extrapolates along the same great circle.
pub fn geodesic(x: &SpherePoint, y: &SpherePoint, t: f64) -> Result<SpherePoint> {
    if t == 1.0 {
        check_dim(x.dim(), y.dim())?;
        return Ok(y.clone());
    }
    let v = log_map(x, y)?;
    exp_map(x, &v.scaled(t))
}
