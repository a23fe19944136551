//! Lines through the origin, Gr(1, d).
//!
//! A feature vector `f` is identified with the line it spans, which makes it
//! invariant to any nonzero rescaling `f -> lambda f` (including sign flips).
//! The stored representative is the unit vector whose first nonzero entry is
//! positive.
//!
//! For 1-dimensional subspaces the principal-angle distance
//! `|arccos(diag(S))|`, with `U S V^T = x^T y`, reduces to a single angle
//! `arccos(|<x, y>|)` because `x^T y` is a scalar whose only singular value is
//! its absolute value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::sphere::SpherePoint;

/// Features at or below this norm have no direction.
pub const ZERO_FEATURE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GrassmannPoint(Vec<f64>);

impl GrassmannPoint {
    pub fn rep(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// The representative viewed as a point on S^{d-1}.
    pub fn to_sphere(&self) -> SpherePoint {
        SpherePoint::from_unit(self.0.clone())
    }

    /// Canonicalizes a unit sphere point's sign.
    pub fn from_sphere(point: SpherePoint) -> Self {
        Self(canonical_sign(point.into_coords()))
    }
}

fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    if let Some(&first) = v.iter().find(|&&c| c != 0.0) {
        if first < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
    v
}

pub fn gr_embed(f: &[f64]) -> Result<GrassmannPoint> {
    let n = norm(f);
    if !(n > ZERO_FEATURE_NORM) || !n.is_finite() {
        return Err(Error::ZeroFeature);
    }
    let unit = f.iter().map(|c| c / n).collect();
    Ok(GrassmannPoint(canonical_sign(unit)))
}

pub fn gr_distance(x: &GrassmannPoint, y: &GrassmannPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let c = dot(x.rep(), y.rep()).abs();
    // Rounding in the embedding perturbs each entry by a few ulps, so lines
    // that coincide can show |<x, y>| slightly below 1. Within that band the
    // answer is zero.
    if c >= 1.0 - parallel_tolerance(x.dim()) {
        return Ok(0.0);
    }
    Ok(c.acos())
}

fn parallel_tolerance(dim: usize) -> f64 {
    2.0 * (dim as f64 + 2.0) * f64::EPSILON
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn embed_examples() {
        assert_eq!(gr_embed(&[3.0, 0.0, 0.0]).unwrap().rep(), &[1.0, 0.0, 0.0]);
        let p = gr_embed(&[-1.0, -1.0]).unwrap();
        assert!((p.rep()[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((p.rep()[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        let p = gr_embed(&[1.0, 2.0, 2.0]).unwrap();
        for (a, b) in p.rep().iter().zip([1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn embed_sign_uses_first_nonzero_entry() {
        let p = gr_embed(&[0.0, -2.0, 1.0]).unwrap();
        assert!(p.rep()[1] > 0.0);
    }

    #[test]
    fn zero_feature() {
        assert!(matches!(gr_embed(&[0.0, 1e-13]), Err(Error::ZeroFeature)));
    }

    #[test]
    fn distance_examples() {
        let e1 = gr_embed(&[1.0, 0.0, 0.0]).unwrap();
        let e2 = gr_embed(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(gr_distance(&e1, &e1).unwrap(), 0.0);
        assert!((gr_distance(&e1, &e2).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let diag = gr_embed(&[1.0, 1.0, 0.0]).unwrap();
        assert!((gr_distance(&diag, &e1).unwrap() - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let a = gr_embed(&[1.0, 0.0]).unwrap();
        let b = gr_embed(&[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            gr_distance(&a, &b),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    proptest! {
        #[test]
        fn projective_invariance(f in proptest::collection::vec(-10.0f64..10.0, 1..8),
                                 lambda in 1e-3f64..1e3) {
            prop_assume!(norm(&f) > 1e-6);
            let scaled: Vec<f64> = f.iter().map(|c| -lambda * c).collect();
            let a = gr_embed(&f).unwrap();
            let b = gr_embed(&scaled).unwrap();
            prop_assert_eq!(gr_distance(&a, &b).unwrap(), 0.0);
        }

        #[test]
        fn range(f in proptest::collection::vec(-1.0f64..1.0, 4),
                 g in proptest::collection::vec(-1.0f64..1.0, 4)) {
            prop_assume!(norm(&f) > 1e-6 && norm(&g) > 1e-6);
            let d = gr_distance(&gr_embed(&f).unwrap(), &gr_embed(&g).unwrap()).unwrap();
            prop_assert!((0.0..=FRAC_PI_2).contains(&d));
        }
    }
}
