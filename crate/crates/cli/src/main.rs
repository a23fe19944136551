use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use geoboost::ensemble::{argmax_accuracy, density_classifier_accuracy};
use geoboost::io::{
    batch_from_tables, load_labels, load_model_file, load_network_tables, save_model_file,
    OutputTable,
};
use geoboost::synth::{
    generate_features, generate_probabilities, spaced_taus, write_synth, FeatureSynthConfig,
    SynthConfig,
};
use geoboost::{
    ensemble_probability, evaluate, fit_model, DensityConfig, EnsembleModel, Error, FitConfig,
    GradMode, LabeledBatch, ModelKind, Result, Space,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "geoboost", version, about = "Boost pre-trained classifiers by mixing manifold densities of their outputs")]
struct Cli {
    /// Worker threads for loading and density fitting (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit densities and mixture weights on training outputs.
    Fit(FitArgs),
    /// Write the predicted class and ensemble probabilities for each sample.
    Predict(PredictArgs),
    /// Compare the ensemble with each constituent network on labeled data.
    Evaluate(EvaluateArgs),
    /// Generate seeded synthetic train/test outputs.
    Synth(SynthArgs),
    /// Print model metadata and mixture weights.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct Inputs {
    /// One output table per network, in network order.
    #[arg(long, required = true, num_args = 1..)]
    tables: Vec<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Label file, one class id per line.
    #[arg(long)]
    labels: PathBuf,
    /// Number of classes.
    #[arg(long)]
    classes: usize,
    /// Where to write the model.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value = "parametric")]
    model: ModelKind,
    #[arg(long, default_value = "sphere")]
    space: Space,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = geoboost::DEFAULT_SIGMA_FLOOR)]
    sigma_floor: f64,
    #[arg(long, default_value = "analytic")]
    grad_mode: GradMode,
    /// Cap on KDE support points per class; 0 keeps all.
    #[arg(long, default_value_t = 0)]
    kde_max_support: usize,
    /// Halve the step size whenever the loss rises or stops being finite.
    #[arg(long)]
    backtracking: bool,
    /// Also write the fit report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Fitted model file.
    #[arg(long)]
    model_file: PathBuf,
    #[command(flatten)]
    inputs: Inputs,
    /// Output CSV; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model_file: PathBuf,
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    labels: PathBuf,
    /// Also write the metrics as JSON.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory; `train/` and `test/` are created inside it.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 2000)]
    n_train: usize,
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Explicit noise level per network, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["networks", "dims"])]
    taus: Vec<f64>,
    /// Number of networks with noise levels spread over [tau-min, tau-max].
    #[arg(long)]
    networks: Option<usize>,
    #[arg(long, default_value_t = 0.705)]
    tau_min: f64,
    #[arg(long, default_value_t = 0.75)]
    tau_max: f64,
    /// Emit raw feature vectors of these dimensions instead of probabilities.
    #[arg(long, value_delimiter = ',', requires = "noise")]
    dims: Vec<usize>,
    /// Feature noise per network, comma separated (feature mode).
    #[arg(long, value_delimiter = ',')]
    noise: Vec<f64>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    model_file: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Synth(a) => synth(a),
        Command::Inspect(a) => inspect(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (e.g. `| head`) is not a failure.
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.family().exit_code() as u8)
        }
    }
}

fn load_split(tables: &[PathBuf], labels: Option<&Path>, space: Space, classes: usize) -> Result<(Vec<OutputTable>, LabeledBatch)> {
    let loaded = load_network_tables(tables, space.into())?;
    let labels = match labels {
        Some(path) => load_labels(path, classes)?,
        // Unlabeled input still goes through the batch checks; labels are ignored.
        None => vec![0; loaded.first().map_or(0, OutputTable::n)],
    };
    let batch = batch_from_tables(&loaded, labels, space, classes)?;
    Ok((loaded, batch))
}

/// Per-network accuracy on its own: argmax of its probabilities on the
/// sphere, its class densities on the Grassmannian.
fn standalone_accuracy(model: &EnsembleModel, tables: &[OutputTable], batch: &LabeledBatch) -> Result<Vec<f64>> {
    (0..model.m)
        .map(|i| match model.space {
            Space::Sphere => Ok(argmax_accuracy(tables[i].rows(), batch.labels())),
            Space::Grassmann => density_classifier_accuracy(model, batch, i),
        })
        .collect()
}

fn check_inputs(model: &EnsembleModel, batch: &LabeledBatch) -> Result<()> {
    if batch.networks() != model.m {
        return Err(Error::DimensionMismatch {
            expected: model.m,
            found: batch.networks(),
        });
    }
    for (i, dim) in model.network_dims().into_iter().enumerate() {
        let found = batch.network_points(i)[0].dim();
        if found != dim {
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    kind: ModelKind,
    space: Space,
    networks: usize,
    classes: usize,
    samples: usize,
    standalone_accuracy: Vec<f64>,
    alpha: Vec<f64>,
    initial_loss: f64,
    final_loss: f64,
    iterations: usize,
    converged: bool,
    weight_seconds: f64,
    total_seconds: f64,
}

fn fit(a: FitArgs) -> Result<()> {
    let start = Instant::now();
    let fit_config = FitConfig {
        eta: a.eta,
        max_iters: a.max_iters,
        tol: a.tol,
        grad_mode: a.grad_mode,
        backtracking: a.backtracking,
    };
    fit_config.validate()?;
    if !(a.sigma_floor > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma floor must be positive, got {}", a.sigma_floor)));
    }
    let density_config = DensityConfig {
        sigma_floor: a.sigma_floor,
        fm_order_seed: None,
        kde_max_support: a.kde_max_support,
        seed: a.seed,
    };
    let (tables, train) = load_split(&a.inputs.tables, Some(&a.labels), a.space, a.classes)?;
    log::info!("loaded {} networks x {} samples", train.networks(), train.len());
    let model = fit_model(&train, a.model, &density_config, &fit_config)?;
    save_model_file(&a.out, &model)?;

    let meta = &model.fit_meta;
    let report = FitReport {
        kind: model.kind,
        space: model.space,
        networks: model.m,
        classes: model.c,
        samples: train.len(),
        standalone_accuracy: standalone_accuracy(&model, &tables, &train)?,
        alpha: model.weights.alpha().to_vec(),
        initial_loss: meta.initial_loss,
        final_loss: meta.final_loss,
        iterations: meta.iterations_run,
        converged: meta.converged,
        weight_seconds: meta.weight_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    };

    let mut out = io::stdout().lock();
    writeln!(out, "model      {} on {}, {} networks, {} classes, {} samples", report.kind, report.space, report.networks, report.classes, report.samples)?;
    writeln!(out, "written to {}", a.out.display())?;
    writeln!(out, "network  standalone  alpha")?;
    let mut order: Vec<usize> = (0..model.m).collect();
    order.sort_by(|&x, &y| report.alpha[y].total_cmp(&report.alpha[x]));
    for i in order {
        writeln!(out, "{i:>7}  {:>9.2}%  {:.6}", 100.0 * report.standalone_accuracy[i], report.alpha[i])?;
    }
    writeln!(out, "loss       {:.6} -> {:.6}", report.initial_loss, report.final_loss)?;
    writeln!(
        out,
        "iterations {}{}",
        report.iterations,
        if report.converged { "" } else { " (max-iters reached)" }
    )?;
    writeln!(out, "weights    {:.3}s", report.weight_seconds)?;
    writeln!(out, "total      {:.3}s", report.total_seconds)?;
    if let Some(path) = a.report {
        write_json(&path, &report)?;
    }
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model_file(&a.model_file)?;
    if a.inputs.tables.len() != model.m {
        return Err(Error::DimensionMismatch {
            expected: model.m,
            found: a.inputs.tables.len(),
        });
    }
    let (_, batch) = load_split(&a.inputs.tables, None, model.space, model.c)?;
    check_inputs(&model, &batch)?;
    let sink: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(fs::File::create(path).map_err(|source| file_error(path, source))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);
    for k in 0..batch.len() {
        let p = ensemble_probability(&model, &batch.sample(k))?;
        let class = geoboost::ensemble::argmax(&p);
        let probs: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{class},{}", probs.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Metrics {
    n: usize,
    ensemble_accuracy: f64,
    standalone_accuracy: Vec<f64>,
    average_accuracy: f64,
    delta: f64,
    per_class_accuracy: Vec<Option<f64>>,
    mean_loss: f64,
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let model = load_model_file(&a.model_file)?;
    if a.inputs.tables.len() != model.m {
        return Err(Error::DimensionMismatch {
            expected: model.m,
            found: a.inputs.tables.len(),
        });
    }
    let (tables, batch) = load_split(&a.inputs.tables, Some(&a.labels), model.space, model.c)?;
    check_inputs(&model, &batch)?;
    let ev = evaluate(&model, &batch)?;
    let standalone = standalone_accuracy(&model, &tables, &batch)?;
    let average = standalone.iter().sum::<f64>() / standalone.len() as f64;
    let metrics = Metrics {
        n: ev.n,
        ensemble_accuracy: ev.accuracy,
        average_accuracy: average,
        delta: ev.accuracy - average,
        standalone_accuracy: standalone,
        per_class_accuracy: ev.per_class_accuracy,
        mean_loss: ev.mean_loss,
    };

    let mut out = io::stdout().lock();
    writeln!(out, "samples    {}", metrics.n)?;
    for (i, acc) in metrics.standalone_accuracy.iter().enumerate() {
        writeln!(out, "network {i:>2} {:.2}%", 100.0 * acc)?;
    }
    writeln!(out, "average    {:.2}%", 100.0 * metrics.average_accuracy)?;
    writeln!(out, "ensemble   {:.2}% ({})", 100.0 * metrics.ensemble_accuracy, model.kind)?;
    writeln!(out, "delta      {:+.2} points", 100.0 * metrics.delta)?;
    writeln!(out, "mean loss  {:.6}", metrics.mean_loss)?;
    if let Some(path) = a.metrics {
        write_json(&path, &metrics)?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let data = if !a.dims.is_empty() {
        if a.noise.len() != a.dims.len() {
            return Err(Error::InvalidConfig(format!(
                "{} feature dimensions but {} noise levels",
                a.dims.len(),
                a.noise.len()
            )));
        }
        generate_features(&FeatureSynthConfig {
            seed: a.seed,
            classes: a.classes,
            n_train: a.n_train,
            n_test: a.n_test,
            dims: a.dims.clone(),
            noise: a.noise.clone(),
        })?
    } else {
        let taus = match (a.taus.is_empty(), a.networks) {
            (false, _) => a.taus.clone(),
            (true, Some(m)) if m > 0 => spaced_taus(m, a.tau_min, a.tau_max),
            _ => return Err(Error::InvalidConfig("give --taus, --networks or --dims".into())),
        };
        generate_probabilities(&SynthConfig {
            seed: a.seed,
            classes: a.classes,
            n_train: a.n_train,
            n_test: a.n_test,
            taus,
        })?
    };
    write_synth(&a.out, &data)?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "wrote {} networks, {} train / {} test samples to {}",
        data.train.tables.len(),
        data.train.labels.len(),
        data.test.labels.len(),
        a.out.display()
    )?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    kind: ModelKind,
    space: Space,
    networks: usize,
    classes: usize,
    network_dims: Vec<usize>,
    alpha: &'a [f64],
    fit_meta: &'a geoboost::FitMeta,
}

fn inspect(a: InspectArgs) -> Result<()> {
    let model = load_model_file(&a.model_file)?;
    let summary = Summary {
        kind: model.kind,
        space: model.space,
        networks: model.m,
        classes: model.c,
        network_dims: model.network_dims(),
        alpha: model.weights.alpha(),
        fit_meta: &model.fit_meta,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    writeln!(io::stdout().lock(), "{text}")?;
    Ok(())
}

fn file_error(path: &Path, source: io::Error) -> Error {
    Error::File {
        path: path.display().to_string(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|source| file_error(path, source))?;
    Ok(())
}
