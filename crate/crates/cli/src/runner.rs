//! Experiment execution: data preparation, per-method jobs and CSV artifacts.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use gsi_core::baseline::gd_impute_with;
use gsi_core::data::{gen_bandlimited, gen_smooth, partial_metrics, pixel_graph};
use gsi_core::gan::{train_with, write_loss_history, EpochLosses, TrainerState};
use gsi_core::idx::load_idx;
use gsi_core::rng::{derive_seed, seeded, standard_normal_matrix};
use gsi_core::{
    decompose_graph, knn_graph, Dataset, Error, Graph, Normalization, QuadraticPrior, Regularizer,
    ShiftOperator, SpectralDecomposition,
};
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DataSource, ExperimentConfig, Method, MnistSpec, SignalSpec, SyntheticSpec};

const STREAM_POINTS: u64 = 10;
const STREAM_SIGNALS: u64 = 11;
const STREAM_TRAIN_MASKS: u64 = 12;
const STREAM_TEST_MASKS: u64 = 13;
const STREAM_TEST_NOISE: u64 = 14;
const STREAM_GAN: u64 = 15;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "GSI_THREADS";

/// Graph, spectral data and train/test splits for one run seed.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub graph: Graph,
    pub spectral: Option<SpectralDecomposition>,
    pub train: Dataset,
    pub test: Dataset,
}

impl PreparedData {
    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    fn spectral(&mut self) -> Result<&SpectralDecomposition> {
        if self.spectral.is_none() {
            self.spectral = Some(decompose_graph(&self.graph, ShiftOperator::Laplacian)?);
        }
        Ok(self.spectral.as_ref().expect("just set"))
    }

    pub fn prior(&mut self, reg: Regularizer) -> Result<QuadraticPrior> {
        let sd = match reg {
            Regularizer::TvL2 => None,
            Regularizer::BlEnergy { .. } => Some(self.spectral()?.clone()),
        };
        Ok(QuadraticPrior::new(reg, &self.graph, sd.as_ref())?)
    }
}

pub fn prepare_data(cfg: &ExperimentConfig, seed: u64) -> Result<PreparedData> {
    let p = cfg.mask_probability;
    match &cfg.data {
        DataSource::Synthetic(spec) => prepare_synthetic(spec, p, seed),
        DataSource::Mnist(spec) => prepare_mnist(spec, p, seed),
    }
}

/// Random points in the unit square for the synthetic k-NN graph.
pub fn synthetic_points(n: usize, seed: u64) -> Array2<f64> {
    use rand::Rng as _;
    let mut rng = seeded(derive_seed(seed, STREAM_POINTS));
    Array2::from_shape_simple_fn((n, 2), || rng.random::<f64>())
}

fn prepare_synthetic(spec: &SyntheticSpec, p: f64, seed: u64) -> Result<PreparedData> {
    let points = synthetic_points(spec.graph.n_nodes, seed);
    let graph = knn_graph(points.view(), spec.graph.k, spec.graph.weighting)?;
    let sd = decompose_graph(&graph, ShiftOperator::Laplacian)?;
    let total = spec.r_train + spec.r_test;
    let signal_seed = derive_seed(seed, STREAM_SIGNALS);
    let signals = match spec.signal {
        SignalSpec::Smooth { filter_decay } => gen_smooth(&sd, total, filter_decay, signal_seed)?,
        SignalSpec::Bandlimited { k } => gen_bandlimited(&sd, total, k, signal_seed)?,
    };
    let (train, test) = signals.view().split_at(Axis(0), spec.r_train);
    split_datasets(graph, Some(sd), train, test, p, seed)
}

fn prepare_mnist(spec: &MnistSpec, p: f64, seed: u64) -> Result<PreparedData> {
    let load = |path: &Path, limit: Option<usize>| -> Result<Array2<f64>> {
        let data = load_idx(path).with_context(|| format!("reading {}", path.display()))?;
        let images = data
            .image_matrix()
            .with_context(|| format!("{} holds labels, not images", path.display()))?;
        let take = limit.unwrap_or(images.nrows()).min(images.nrows());
        Ok(images.slice_move(ndarray::s![..take, ..]))
    };
    let train = load(&spec.train_images, spec.max_train)?;
    let test = load(&spec.test_images, spec.max_test)?;
    if train.ncols() != test.ncols() {
        anyhow::bail!(
            "train images have {} pixels but test images have {}",
            train.ncols(),
            test.ncols()
        );
    }
    let graph = pixel_graph(train.view(), spec.graph_subsample, spec.k, spec.weighting)?;
    split_datasets(graph, None, train.view(), test.view(), p, seed)
}

fn split_datasets(
    graph: Graph,
    spectral: Option<SpectralDecomposition>,
    train: ArrayView2<f64>,
    test: ArrayView2<f64>,
    p: f64,
    seed: u64,
) -> Result<PreparedData> {
    let train = Dataset::from_signals(
        train.to_owned(),
        None,
        p,
        derive_seed(seed, STREAM_TRAIN_MASKS),
    )?;
    let test = Dataset::from_signals(
        test.to_owned(),
        Some(train.normalization),
        p,
        derive_seed(seed, STREAM_TEST_MASKS),
    )?;
    Ok(PreparedData {
        graph,
        spectral,
        train,
        test,
    })
}

/// Mean per-signal errors in raw (denormalized) units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestError {
    pub rmse_missing: f64,
    pub rmse_observed: f64,
    pub rmse_all: f64,
}

/// Scores normalized-domain estimates against the raw test signals.
/// Signals without missing (or observed) nodes are left out of that mean.
pub fn evaluate(estimates: ArrayView2<f64>, test: &Dataset) -> Result<TestError> {
    let truth = test
        .signals
        .as_ref()
        .context("test set has no ground truth")?;
    let raw = test.normalization.invert_all(estimates);
    let mut acc = MeanAcc::default();
    for ((x_hat, x), obs) in raw
        .outer_iter()
        .zip(truth.outer_iter())
        .zip(&test.observations)
    {
        acc.push(&partial_metrics(x_hat, x, obs.mask())?);
    }
    Ok(acc.finish())
}

#[derive(Default)]
struct MeanAcc {
    missing: (f64, usize),
    observed: (f64, usize),
    all: (f64, usize),
}

impl MeanAcc {
    fn push(&mut self, m: &gsi_core::data::PartialMetrics) {
        let add = |slot: &mut (f64, usize), v: Option<f64>| {
            if let Some(v) = v {
                slot.0 += v;
                slot.1 += 1;
            }
        };
        add(&mut self.missing, m.rmse_missing);
        add(&mut self.observed, m.rmse_observed);
        add(&mut self.all, Some(m.rmse_all));
    }

    fn finish(&self) -> TestError {
        let mean = |(s, c): (f64, usize)| if c == 0 { f64::NAN } else { s / c as f64 };
        TestError {
            rmse_missing: mean(self.missing),
            rmse_observed: mean(self.observed),
            rmse_all: mean(self.all),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdTraceRow {
    pub iter: usize,
    /// Mean objective over the test set.
    pub loss: f64,
    pub rmse_missing: f64,
}

#[derive(Debug, Clone)]
pub enum MethodTrace {
    Gan {
        history: Vec<EpochLosses>,
        test_error: Vec<(usize, TestError)>,
        state: Box<TrainerState>,
    },
    Gd {
        trace: Vec<GdTraceRow>,
    },
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub seed: u64,
    pub method: Method,
    /// `None` when the method diverged.
    pub error: Option<TestError>,
    pub failure: Option<String>,
    pub trace: Option<MethodTrace>,
}

impl MethodOutcome {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub outcomes: Vec<MethodOutcome>,
}

impl RunReport {
    pub fn all_succeeded(&self) -> bool {
        self.outcomes.iter().all(MethodOutcome::succeeded)
    }

    pub fn outcome(&self, seed: u64, method: Method) -> Option<&MethodOutcome> {
        self.outcomes
            .iter()
            .find(|o| o.seed == seed && o.method == method)
    }

    pub fn rmse_missing(&self, seed: u64, method: Method) -> Option<f64> {
        self.outcome(seed, method)?.error.map(|e| e.rmse_missing)
    }
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

pub fn run_gan(
    method: Method,
    cfg: &ExperimentConfig,
    seed: u64,
    data: &mut PreparedData,
) -> Result<(TestError, MethodTrace)> {
    let gan = cfg.gan_for(method, derive_seed(seed, STREAM_GAN));
    let prior = data.prior(gan.regularizer)?;
    let test_noise = standard_normal_matrix(
        data.test.len(),
        data.n_nodes(),
        &mut seeded(derive_seed(seed, STREAM_TEST_NOISE)),
    );
    let mut curve = Vec::with_capacity(gan.epochs);
    let test = &data.test;
    let mut eval_failure = None;
    let state = train_with(&data.train.observations, &prior, &gan, |losses, state| {
        if eval_failure.is_none() {
            match state
                .impute_batch(&test.observations, test_noise.view())
                .map_err(anyhow::Error::from)
                .and_then(|x_hat| evaluate(x_hat.view(), test))
            {
                Ok(err) => curve.push((losses.epoch, err)),
                Err(e) => eval_failure = Some(e),
            }
        }
        Ok(())
    })?;
    if let Some(e) = eval_failure {
        return Err(e.context("evaluating on the test set"));
    }
    let final_error = curve.last().expect("epochs >= 1").1;
    Ok((
        final_error,
        MethodTrace::Gan {
            history: state.history.clone(),
            test_error: curve,
            state: Box::new(state),
        },
    ))
}

pub fn run_gd(cfg: &ExperimentConfig, data: &PreparedData) -> Result<(TestError, MethodTrace)> {
    let gd = cfg.gd;
    let test = &data.test;
    let truth = test
        .signals
        .as_ref()
        .context("test set has no ground truth")?;
    let norm = test.normalization;
    let mut loss_sum = vec![0.0; gd.max_iters];
    let mut rmse_acc: Vec<(f64, usize)> = vec![(0.0, 0); gd.max_iters];
    let mut finals = Array2::zeros((test.len(), data.n_nodes()));
    for (r, obs) in test.observations.iter().enumerate() {
        let x = truth.row(r);
        let mut iter_err = None;
        let (x_final, trace) =
            gd_impute_with(obs, &data.graph, &gd, |iter, x_hat| match raw_rmse_missing(
                x_hat,
                x,
                obs.mask(),
                &norm,
            ) {
                Ok(Some(v)) => {
                    rmse_acc[iter - 1].0 += v;
                    rmse_acc[iter - 1].1 += 1;
                }
                Ok(None) => {}
                Err(e) => iter_err = Some(e),
            })?;
        if let Some(e) = iter_err {
            return Err(e);
        }
        for (slot, j) in loss_sum.iter_mut().zip(&trace) {
            *slot += j;
        }
        finals.row_mut(r).assign(&x_final);
    }
    let n = test.len() as f64;
    let trace = loss_sum
        .iter()
        .zip(&rmse_acc)
        .enumerate()
        .map(|(i, (&l, &(s, c)))| GdTraceRow {
            iter: i + 1,
            loss: l / n,
            rmse_missing: if c == 0 { f64::NAN } else { s / c as f64 },
        })
        .collect();
    Ok((evaluate(finals.view(), test)?, MethodTrace::Gd { trace }))
}

fn raw_rmse_missing(
    x_hat: ArrayView1<f64>,
    x: ArrayView1<f64>,
    mask: &[bool],
    norm: &Normalization,
) -> Result<Option<f64>> {
    let raw = x_hat.mapv(|v| norm.invert(v));
    Ok(partial_metrics(raw.view(), x, mask)?.rmse_missing)
}

fn run_method(
    method: Method,
    cfg: &ExperimentConfig,
    seed: u64,
    data: &PreparedData,
) -> Result<MethodOutcome> {
    let started = Instant::now();
    let result = if method.is_gan() {
        run_gan(method, cfg, seed, &mut data.clone())
    } else {
        run_gd(cfg, data)
    };
    let outcome = match result {
        Ok((error, trace)) => MethodOutcome {
            seed,
            method,
            error: Some(error),
            failure: None,
            trace: Some(trace),
        },
        Err(e) => match e.downcast_ref::<Error>() {
            Some(Error::DivergedLoss { .. }) => MethodOutcome {
                seed,
                method,
                error: None,
                failure: Some(e.to_string()),
                trace: None,
            },
            _ => return Err(e.context(format!("seed {seed}, method {method}"))),
        },
    };
    eprintln!(
        "seed {seed} {method}: {} in {:.1}s",
        match (&outcome.error, &outcome.failure) {
            (Some(e), _) => format!("rmse_missing {:.4}", e.rmse_missing),
            (_, Some(f)) => format!("failed ({f})"),
            _ => unreachable!(),
        },
        started.elapsed().as_secs_f64()
    );
    Ok(outcome)
}

/// Worker count from [`THREADS_ENV`], defaulting to the available cores.
pub fn thread_cap() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
            anyhow::ensure!(n > 0, "{THREADS_ENV} must be a positive integer, got `{v}`");
            Ok(n)
        }
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs every (seed, method) job and writes all artifacts under
/// `cfg.output_dir`. Jobs are independent, so results do not depend on the
/// thread count.
pub fn run_experiment(cfg: &ExperimentConfig, defaulted: &[String]) -> Result<RunReport> {
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_json(
        &out.join("resolved_config.json"),
        &serde_json::json!({ "config": cfg, "defaulted": defaulted }),
    )?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap()?)
        .build()
        .context("building worker pool")?;
    let outcomes = pool.install(|| -> Result<Vec<MethodOutcome>> {
        let mut outcomes = Vec::new();
        for &seed in &cfg.seeds {
            let data = prepare_data(cfg, seed)?;
            let dir = seed_dir(&out, seed);
            fs::create_dir_all(&dir)?;
            write_method_configs(&dir, cfg, seed)?;
            let mut batch: Vec<MethodOutcome> = cfg
                .methods
                .par_iter()
                .map(|&m| run_method(m, cfg, seed, &data))
                .collect::<Result<_>>()?;
            for o in &batch {
                write_method_artifacts(&dir, o)?;
            }
            fs::write(dir.join("summary.csv"), summary_csv(&batch))?;
            outcomes.append(&mut batch);
        }
        Ok(outcomes)
    })?;

    let report = RunReport {
        output_dir: out,
        outcomes,
    };
    fs::write(
        report.output_dir.join("summary.csv"),
        summary_csv(&report.outcomes),
    )?;
    Ok(report)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_method_configs(dir: &Path, cfg: &ExperimentConfig, seed: u64) -> Result<()> {
    let mut methods = serde_json::Map::new();
    for &m in &cfg.methods {
        let value = if m.is_gan() {
            serde_json::to_value(cfg.gan_for(m, derive_seed(seed, STREAM_GAN)))?
        } else {
            serde_json::to_value(cfg.gd)?
        };
        methods.insert(m.name().to_string(), value);
    }
    write_json(
        &dir.join("resolved_config.json"),
        &serde_json::json!({ "seed": seed, "methods": methods }),
    )
}

fn write_method_artifacts(dir: &Path, o: &MethodOutcome) -> Result<()> {
    let name = o.method.name();
    match &o.trace {
        Some(MethodTrace::Gan {
            history,
            test_error,
            state,
        }) => {
            write_loss_history(
                BufWriter::new(File::create(dir.join(format!("{name}_loss.csv")))?),
                history,
            )?;
            fs::write(
                dir.join(format!("{name}_test_error.csv")),
                test_error_csv(test_error),
            )?;
            state
                .generator
                .write_checkpoint(BufWriter::new(File::create(
                    dir.join(format!("{name}_generator.gsnn")),
                )?))?;
            state
                .discriminator
                .write_checkpoint(BufWriter::new(File::create(
                    dir.join(format!("{name}_discriminator.gsnn")),
                )?))?;
        }
        Some(MethodTrace::Gd { trace }) => {
            fs::write(dir.join("gd_trace.csv"), gd_trace_csv(trace))?;
        }
        None => {}
    }
    Ok(())
}

pub const TEST_ERROR_HEADER: &str = "epoch,rmse_missing,rmse_observed,rmse_all";
pub const GD_TRACE_HEADER: &str = "iter,loss,rmse_missing";
pub const SUMMARY_HEADER: &str = "seed,method,rmse_missing,rmse_observed,rmse_all,status";

pub fn test_error_csv(rows: &[(usize, TestError)]) -> String {
    let mut s = format!("{TEST_ERROR_HEADER}\n");
    for (epoch, e) in rows {
        writeln!(
            s,
            "{epoch},{},{},{}",
            e.rmse_missing, e.rmse_observed, e.rmse_all
        )
        .unwrap();
    }
    s
}

pub fn gd_trace_csv(rows: &[GdTraceRow]) -> String {
    let mut s = format!("{GD_TRACE_HEADER}\n");
    for r in rows {
        writeln!(s, "{},{},{}", r.iter, r.loss, r.rmse_missing).unwrap();
    }
    s
}

pub fn summary_csv(outcomes: &[MethodOutcome]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for o in outcomes {
        match o.error {
            Some(e) => writeln!(
                s,
                "{},{},{},{},{},ok",
                o.seed, o.method, e.rmse_missing, e.rmse_observed, e.rmse_all
            ),
            None => writeln!(s, "{},{},,,,diverged", o.seed, o.method),
        }
        .unwrap();
    }
    s
}
