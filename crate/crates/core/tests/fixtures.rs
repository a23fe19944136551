mod common;

use common::{fixture, load_fixtures, matrix_of, vec_of};
use geoboost::ensemble::{class_scores, loss};
use geoboost::{
    arc_distance, exp_map, fit_gaussian, fit_kde, gaussian_pdf, gr_embed, incremental_frechet_mean,
    kde_pdf, label_distance, log_map, sample_sigma, silverman_bandwidth, sqrt_embed, Density,
    DensityConfig, EnsembleModel, FitMeta, GaussianDensity, GradMode, KernelDensity,
    LabeledBatch, MixtureWeights, ModelKind, Point, SampleSet, Space, SpherePoint, TangentVector,
    empirical_normalizer,
};

fn close(name: &str, got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len(), "{name}: length");
    for (k, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g - w).abs() <= tol, "{name}[{k}]: got {g:e}, want {w:e}, tol {tol:e}");
    }
}

fn sphere(p: &[f64]) -> Point {
    Point::Sphere(sqrt_embed(p).unwrap())
}

fn gaussian_grid(mu: &[Vec<Vec<f64>>], sigma: &[Vec<f64>], norm: &[Vec<f64>]) -> Vec<Vec<Density>> {
    mu.iter()
        .zip(sigma)
        .zip(norm)
        .map(|((mr, sr), nr)| {
            mr.iter()
                .zip(sr)
                .zip(nr)
                .map(|((m, &s), &n)| {
                    Density::Parametric(GaussianDensity {
                        mu: sphere(m),
                        sigma: s,
                        normalizer: n,
                    })
                })
                .collect()
        })
        .collect()
}

fn model(densities: Vec<Vec<Density>>, alpha: &[f64]) -> EnsembleModel {
    EnsembleModel {
        kind: ModelKind::Parametric,
        space: Space::Sphere,
        m: densities.len(),
        c: densities[0].len(),
        densities,
        weights: MixtureWeights::from_alpha(alpha).unwrap(),
        fit_meta: FitMeta {
            eta: 0.1,
            iterations_run: 0,
            initial_loss: 0.0,
            final_loss: 0.0,
            converged: true,
            grad_mode: GradMode::Analytic,
            seed: 0,
            weight_seconds: 0.0,
        },
    }
}

fn batch(tables: &[Vec<Vec<f64>>], labels: &[usize], classes: usize) -> LabeledBatch {
    let features = tables
        .iter()
        .map(|t| t.iter().map(|r| sphere(r)).collect())
        .collect();
    LabeledBatch::new(features, labels.to_vec(), classes).unwrap()
}

fn labels_of(v: &serde_json::Value) -> Vec<usize> {
    serde_json::from_value(v.clone()).unwrap()
}

#[test]
fn every_fixture_is_recognized() {
    let known = [
        "sqrt_embed",
        "exp_map",
        "log_map",
        "gr_embed",
        "gaussian_pdf",
        "silverman_bandwidth",
        "label_distance",
        "frechet_mean_grid",
        "sample_sigma",
        "empirical_normalizer",
        "kde_pdf",
        "fit_gaussian",
        "fit_kde",
        "class_scores",
        "loss",
    ];
    for f in load_fixtures() {
        assert!(known.contains(&f.name.as_str()), "unhandled fixture {}", f.name);
        assert!(f.tolerance > 0.0 && !f.description.is_empty());
    }
}

#[test]
fn sqrt_embed_fixture() {
    let f = fixture("sqrt_embed");
    let got = sqrt_embed(&vec_of(&f.inputs["p"])).unwrap();
    close(&f.name, got.coords(), &vec_of(&f.expected), f.tolerance);
}

#[test]
fn exp_map_fixture() {
    let f = fixture("exp_map");
    let x = SpherePoint::new(vec_of(&f.inputs["x"])).unwrap();
    let v = TangentVector::new(x.clone(), vec_of(&f.inputs["v"])).unwrap();
    let got = exp_map(&x, &v).unwrap();
    close(&f.name, got.coords(), &vec_of(&f.expected), f.tolerance);
}

#[test]
fn log_map_fixture() {
    let f = fixture("log_map");
    let x = SpherePoint::new(vec_of(&f.inputs["x"])).unwrap();
    let y = SpherePoint::new(vec_of(&f.inputs["y"])).unwrap();
    let v = log_map(&x, &y).unwrap();
    close(&f.name, v.direction(), &vec_of(&f.expected), f.tolerance);
    assert!((v.norm() - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    let back = exp_map(&x, &v).unwrap();
    assert!(arc_distance(&back, &y) < 1e-10);
}

#[test]
fn gr_embed_fixture() {
    let f = fixture("gr_embed");
    let got = gr_embed(&vec_of(&f.inputs["f"])).unwrap();
    close(&f.name, got.rep(), &vec_of(&f.expected), f.tolerance);
}

#[test]
fn gaussian_pdf_fixture() {
    let f = fixture("gaussian_pdf");
    let r = f.inputs["distance"].as_f64().unwrap();
    let d = GaussianDensity {
        mu: Point::Sphere(SpherePoint::new(vec![1.0, 0.0]).unwrap()),
        sigma: f.inputs["sigma"].as_f64().unwrap(),
        normalizer: f.inputs["normalizer"].as_f64().unwrap(),
    };
    let x = Point::Sphere(SpherePoint::new(vec![r.cos(), r.sin()]).unwrap());
    close(&f.name, &[gaussian_pdf(&d, &x).unwrap()], &vec_of(&f.expected), f.tolerance);
}

#[test]
fn silverman_fixture() {
    let f = fixture("silverman_bandwidth");
    let b = silverman_bandwidth(
        f.inputs["sigma_hat"].as_f64().unwrap(),
        f.inputs["n"].as_u64().unwrap() as usize,
    );
    close(&f.name, &[b], &vec_of(&f.expected), f.tolerance);
}

#[test]
fn label_distance_fixture() {
    let f = fixture("label_distance");
    let y = f.inputs["y"].as_u64().unwrap() as usize;
    let d = label_distance(y, &vec_of(&f.inputs["p"])).unwrap();
    close(&f.name, &[d], &vec_of(&f.expected), f.tolerance);
}

#[test]
fn frechet_mean_grid_fixture() {
    let f = fixture("frechet_mean_grid");
    let points: Vec<Point> = matrix_of(&f.inputs["p"]).iter().map(|p| sphere(p)).collect();
    let mean = incremental_frechet_mean(&SampleSet::new(points, 0, 0).unwrap(), None).unwrap();
    let oracle = Point::Sphere(SpherePoint::new(vec_of(&f.expected)).unwrap());
    let gap = mean.distance(&oracle).unwrap();
    assert!(gap <= f.tolerance, "incremental mean is {gap} rad from the grid minimizer");
}

#[test]
fn sample_sigma_fixture() {
    let f = fixture("sample_sigma");
    let points: Vec<Point> = matrix_of(&f.inputs["p"]).iter().map(|p| sphere(p)).collect();
    let mu = sphere(&vec_of(&f.inputs["mu"]));
    let floor = f.inputs["sigma_floor"].as_f64().unwrap();
    let s = sample_sigma(&SampleSet::new(points, 0, 0).unwrap(), &mu, floor).unwrap();
    close(&f.name, &[s], &vec_of(&f.expected), f.tolerance);
}

#[test]
fn empirical_normalizer_fixture() {
    let f = fixture("empirical_normalizer");
    let points: Vec<Point> = matrix_of(&f.inputs["p"]).iter().map(|p| sphere(p)).collect();
    let mu = sphere(&vec_of(&f.inputs["mu"]));
    let c = empirical_normalizer(&points, &mu, f.inputs["sigma"].as_f64().unwrap()).unwrap();
    close(&f.name, &[c], &vec_of(&f.expected), f.tolerance);
}

#[test]
fn kde_pdf_fixture() {
    let f = fixture("kde_pdf");
    let d = KernelDensity {
        support: matrix_of(&f.inputs["support"]).iter().map(|p| sphere(p)).collect(),
        bandwidth: f.inputs["bandwidth"].as_f64().unwrap(),
        normalizer: f.inputs["normalizer"].as_f64().unwrap(),
    };
    let x = sphere(&vec_of(&f.inputs["x"]));
    close(&f.name, &[kde_pdf(&d, &x).unwrap()], &vec_of(&f.expected), f.tolerance);
}

fn class_sets(tables: &[Vec<Vec<f64>>], labels: &[usize], i: usize, j: usize) -> (SampleSet, Vec<Point>) {
    let all: Vec<Point> = tables[i].iter().map(|r| sphere(r)).collect();
    let class: Vec<Point> = all
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == j)
        .map(|(p, _)| p.clone())
        .collect();
    (SampleSet::new(class, i, j).unwrap(), all)
}

#[test]
fn fit_gaussian_fixture() {
    let f = fixture("fit_gaussian");
    let tables: Vec<Vec<Vec<f64>>> = serde_json::from_value(f.inputs["tables"].clone()).unwrap();
    let labels = labels_of(&f.inputs["labels"]);
    for e in f.expected.as_array().unwrap() {
        let i = e["network"].as_u64().unwrap() as usize;
        let j = e["class"].as_u64().unwrap() as usize;
        let (set, all) = class_sets(&tables, &labels, i, j);
        let g = fit_gaussian(&set, &all, &DensityConfig::default()).unwrap();
        close("mu", g.mu.coords(), &vec_of(&e["mu"]), f.tolerance);
        close("sigma", &[g.sigma], &[e["sigma"].as_f64().unwrap()], f.tolerance);
        close("normalizer", &[g.normalizer], &[e["normalizer"].as_f64().unwrap()], f.tolerance);
    }
}

#[test]
fn fit_kde_fixture() {
    let f = fixture("fit_kde");
    let tables: Vec<Vec<Vec<f64>>> = serde_json::from_value(f.inputs["tables"].clone()).unwrap();
    let labels = labels_of(&f.inputs["labels"]);
    for e in f.expected.as_array().unwrap() {
        let i = e["network"].as_u64().unwrap() as usize;
        let j = e["class"].as_u64().unwrap() as usize;
        let (set, all) = class_sets(&tables, &labels, i, j);
        let k = fit_kde(&set, &all, &DensityConfig::default()).unwrap();
        close("bandwidth", &[k.bandwidth], &[e["bandwidth"].as_f64().unwrap()], f.tolerance);
        close("normalizer", &[k.normalizer], &[e["normalizer"].as_f64().unwrap()], f.tolerance);
    }
}

#[test]
fn class_scores_fixture() {
    let f = fixture("class_scores");
    let mu: Vec<Vec<Vec<f64>>> = serde_json::from_value(f.inputs["mu"].clone()).unwrap();
    let grid = gaussian_grid(&mu, &matrix_of(&f.inputs["sigma"]), &matrix_of(&f.inputs["normalizer"]));
    let m = model(grid, &vec_of(&f.inputs["alpha"]));
    let sample: Vec<Point> = matrix_of(&f.inputs["sample"]).iter().map(|p| sphere(p)).collect();
    close(&f.name, &class_scores(&m, &sample).unwrap(), &vec_of(&f.expected), f.tolerance);
}

#[test]
fn loss_fixture() {
    let f = fixture("loss");
    let mu: Vec<Vec<Vec<f64>>> = serde_json::from_value(f.inputs["mu"].clone()).unwrap();
    let grid = gaussian_grid(&mu, &matrix_of(&f.inputs["sigma"]), &matrix_of(&f.inputs["normalizer"]));
    let m = model(grid, &vec_of(&f.inputs["alpha"]));
    let tables: Vec<Vec<Vec<f64>>> = serde_json::from_value(f.inputs["tables"].clone()).unwrap();
    let b = batch(&tables, &labels_of(&f.inputs["labels"]), f.inputs["classes"].as_u64().unwrap() as usize);
    close(&f.name, &[loss(&m, &b).unwrap()], &vec_of(&f.expected), f.tolerance);
}
