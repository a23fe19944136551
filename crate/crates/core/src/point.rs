//! A point on either supported manifold, so densities and estimators can be
//! written once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{gr_distance, gr_embed, GrassmannPoint};
use crate::sphere::{arc_distance, sqrt_embed, SpherePoint};

/// Which manifold classifier outputs are embedded into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// Probability vectors under the square-root map, on S^{c-1}.
    Sphere,
    /// Raw feature vectors as lines through the origin, on Gr(1, d).
    Grassmann,
}

impl Space {
    /// Embeds one row of an output table.
    pub fn embed(self, row: &[f64]) -> Result<Point> {
        match self {
            Space::Sphere => sqrt_embed(row).map(Point::Sphere),
            Space::Grassmann => gr_embed(row).map(Point::Grassmann),
        }
    }
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Space::Sphere => "sphere",
            Space::Grassmann => "grassmann",
        })
    }
}

impl std::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Space::Sphere),
            "grassmann" => Ok(Space::Grassmann),
            other => Err(Error::InvalidConfig(format!("unknown space '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", content = "coords", rename_all = "lowercase")]
pub enum Point {
    Sphere(SpherePoint),
    Grassmann(GrassmannPoint),
}

impl Point {
    pub fn space(&self) -> Space {
        match self {
            Point::Sphere(_) => Space::Sphere,
            Point::Grassmann(_) => Space::Grassmann,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Point::Sphere(p) => p.dim(),
            Point::Grassmann(p) => p.dim(),
        }
    }

    pub fn coords(&self) -> &[f64] {
        match self {
            Point::Sphere(p) => p.coords(),
            Point::Grassmann(p) => p.rep(),
        }
    }

    /// Geodesic distance on the point's manifold.
    pub fn distance(&self, other: &Point) -> Result<f64> {
        match (self, other) {
            (Point::Sphere(a), Point::Sphere(b)) => {
                if a.dim() != b.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: a.dim(),
                        found: b.dim(),
                    });
                }
                Ok(arc_distance(a, b))
            }
            (Point::Grassmann(a), Point::Grassmann(b)) => gr_distance(a, b),
            _ => Err(Error::SpaceMismatch),
        }
    }
}

impl From<SpherePoint> for Point {
    fn from(p: SpherePoint) -> Self {
        Point::Sphere(p)
    }
}

impl From<GrassmannPoint> for Point {
    fn from(p: GrassmannPoint) -> Self {
        Point::Grassmann(p)
    }
}
