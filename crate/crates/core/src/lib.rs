//! Aggregation of pre-trained classifiers without retraining them.
//!
//! Each constituent classifier's outputs are embedded on a manifold: softmax
//! probabilities on the unit hypersphere through the element-wise square root,
//! or raw feature vectors on the Grassmannian of lines. Per-class densities
//! (a manifold Gaussian or a kernel density estimate) are fitted to each
//! classifier's training outputs, and the densities are mixed across
//! classifiers with simplex weights learned by Riemannian gradient descent on
//! the sphere.
//!
//! ```no_run
//! use geoboost::{fit_model, predict, DensityConfig, FitConfig, LabeledBatch, ModelKind, Space};
//!
//! # fn main() -> geoboost::Result<()> {
//! let outputs = vec![vec![vec![0.8, 0.2], vec![0.3, 0.7]]]; // one network, two samples
//! let features = outputs
//!     .iter()
//!     .map(|rows| rows.iter().map(|r| Space::Sphere.embed(r)).collect())
//!     .collect::<geoboost::Result<Vec<_>>>()?;
//! let train = LabeledBatch::new(features, vec![0, 1], 2)?;
//! let model = fit_model(&train, ModelKind::Parametric, &DensityConfig::default(), &FitConfig::default())?;
//! let class = predict(&model, &train.sample(0))?;
//! # Ok(()) }
//! ```

pub mod density;
pub mod ensemble;
pub mod error;
pub mod grassmann;
pub mod io;
pub mod linalg;
pub mod point;
pub mod sphere;
pub mod stats;
pub mod synth;

pub use density::{
    fit_gaussian, fit_kde, gaussian_pdf, kde_pdf, silverman_bandwidth, Density, DensityConfig,
    GaussianDensity, KernelDensity, ModelKind,
};
pub use ensemble::{
    class_scores, ensemble_probability, evaluate, fit_densities, fit_model, fit_weights,
    label_distance, loss, predict, riemannian_gradient, EnsembleModel, Evaluation, FitConfig,
    FitMeta, GradMode, LabeledBatch, MixtureWeights, PdfTable,
};
pub use error::{Error, ErrorFamily, Result};
pub use grassmann::{gr_distance, gr_embed, GrassmannPoint};
pub use point::{Point, Space};
pub use sphere::{arc_distance, exp_map, geodesic, log_map, sqrt_embed, SpherePoint, TangentVector};
pub use stats::{
    empirical_normalizer, incremental_frechet_mean, sample_sigma, SampleSet, DEFAULT_SIGMA_FLOOR,
};
