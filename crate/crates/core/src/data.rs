//! Synthetic graph signals, affine normalization, error metrics and the
//! ground-truth companion file format.
//!
//! Signal collections are `R × N` matrices with one realization per row.

use std::io::{Read, Write};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::graph::{knn_graph, Graph, KnnWeighting};
use crate::observe::{observe, parse_header, u32_len, Observation};
use crate::rng::seeded;
use crate::spectral::SpectralDecomposition;

pub const GSGT_MAGIC: &[u8; 5] = b"GSGT1";

/// Heat-kernel low-pass signals `V diag(e^{-decay·λ}) Vᵀ w`, `w ~ N(0, I)`,
/// each rescaled to unit max-abs.
pub fn gen_smooth(
    sd: &SpectralDecomposition,
    r: usize,
    filter_decay: f64,
    seed: u64,
) -> Result<Array2<f64>> {
    if !(filter_decay >= 0.0 && filter_decay.is_finite()) {
        return Err(Error::InvalidDecay(filter_decay));
    }
    let v = sd.eigenvectors();
    let response = sd.eigenvalues().mapv(|l| (-filter_decay * l).exp());
    // Row form: X = W V diag(h) Vᵀ.
    let mut filter = v * &response;
    filter = filter.dot(&v.t());
    let noise = gaussian_matrix(r, sd.n(), seed);
    let mut signals = noise.dot(&filter.t());
    for mut row in signals.rows_mut() {
        let peak = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            row /= peak;
        }
    }
    Ok(signals)
}

/// `Σ_{k≤K} c_k v_k` with i.i.d. standard normal coefficients.
pub fn gen_bandlimited(
    sd: &SpectralDecomposition,
    r: usize,
    k: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let n = sd.n();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let coeffs = gaussian_matrix(r, k, seed);
    let basis = sd.eigenvectors().slice(ndarray::s![.., ..k]);
    Ok(coeffs.dot(&basis.t()))
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = seeded(seed);
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(&mut rng))
}

/// Dataset-global affine map of `[min, max]` onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

impl Normalization {
    pub fn fit(signals: ArrayView2<f64>) -> Result<Self> {
        let (min, max) = signals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::DegenerateRange(f64::NAN));
        }
        if max <= min {
            return Err(Error::DegenerateRange(min));
        }
        Ok(Self { min, max })
    }

    pub fn apply(&self, v: f64) -> f64 {
        2.0 * (v - self.min) / (self.max - self.min) - 1.0
    }

    pub fn invert(&self, v: f64) -> f64 {
        (v + 1.0) * 0.5 * (self.max - self.min) + self.min
    }

    pub fn apply_all(&self, signals: ArrayView2<f64>) -> Array2<f64> {
        signals.mapv(|v| self.apply(v))
    }

    pub fn invert_all(&self, signals: ArrayView2<f64>) -> Array2<f64> {
        signals.mapv(|v| self.invert(v))
    }
}

pub fn normalize(signals: ArrayView2<f64>) -> Result<(Array2<f64>, Normalization)> {
    let norm = Normalization::fit(signals)?;
    Ok((norm.apply_all(signals), norm))
}

/// Root-mean-squared errors over the observed nodes, the missing nodes and
/// all nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub rmse_observed: f64,
    pub rmse_missing: f64,
    pub rmse_all: f64,
}

/// Like [`Metrics`], with `None` where the index set is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialMetrics {
    pub rmse_observed: Option<f64>,
    pub rmse_missing: Option<f64>,
    pub rmse_all: f64,
}

pub fn metrics(x_hat: ArrayView1<f64>, x: ArrayView1<f64>, mask: &[bool]) -> Result<Metrics> {
    let p = partial_metrics(x_hat, x, mask)?;
    Ok(Metrics {
        rmse_observed: p
            .rmse_observed
            .ok_or(Error::EmptyIndexSet("rmse_observed"))?,
        rmse_missing: p.rmse_missing.ok_or(Error::EmptyIndexSet("rmse_missing"))?,
        rmse_all: p.rmse_all,
    })
}

pub fn partial_metrics(
    x_hat: ArrayView1<f64>,
    x: ArrayView1<f64>,
    mask: &[bool],
) -> Result<PartialMetrics> {
    check_len("metrics", x.len(), x_hat.len())?;
    check_len("metrics", x.len(), mask.len())?;
    if x.is_empty() {
        return Err(Error::EmptyIndexSet("rmse_all"));
    }
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for ((&a, &b), &m) in x_hat.iter().zip(x.iter()).zip(mask) {
        let slot = usize::from(m);
        sums[slot] += (a - b) * (a - b);
        counts[slot] += 1;
    }
    let rmse = |s: f64, c: usize| (c > 0).then(|| (s / c as f64).sqrt());
    Ok(PartialMetrics {
        rmse_observed: rmse(sums[1], counts[1]),
        rmse_missing: rmse(sums[0], counts[0]),
        rmse_all: ((sums[0] + sums[1]) / x.len() as f64).sqrt(),
    })
}

/// Observes every row of `signals` through its own Bernoulli mask; row `r`
/// uses mask seed `base_seed + r`.
pub fn observe_signals(
    signals: ArrayView2<f64>,
    p_observe: f64,
    base_seed: u64,
) -> Result<Vec<Observation>> {
    let n = signals.ncols();
    signals
        .outer_iter()
        .enumerate()
        .map(|(r, x)| {
            let mask = crate::observe::sample_mask(n, p_observe, base_seed.wrapping_add(r as u64))?;
            observe(x, &mask)
        })
        .collect()
}

/// Ground truth (optional) and observations for `R` realizations.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Raw-unit signals, `R × N`.
    pub signals: Option<Array2<f64>>,
    pub observations: Vec<Observation>,
    pub normalization: Normalization,
}

impl Dataset {
    pub fn new(
        signals: Option<Array2<f64>>,
        observations: Vec<Observation>,
        normalization: Normalization,
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = observations[0].len();
        for obs in &observations {
            check_len("dataset observation", n, obs.len())?;
        }
        if let Some(s) = &signals {
            check_len("dataset realizations", observations.len(), s.nrows())?;
            check_len("dataset signal", n, s.ncols())?;
        }
        Ok(Self {
            signals,
            observations,
            normalization,
        })
    }

    /// Normalizes raw `signals` with `normalization` (fitted here when
    /// `None`), quantizes and masks them.
    pub fn from_signals(
        signals: Array2<f64>,
        normalization: Option<Normalization>,
        p_observe: f64,
        mask_seed: u64,
    ) -> Result<Self> {
        let norm = match normalization {
            Some(n) => n,
            None => Normalization::fit(signals.view())?,
        };
        let scaled = norm.apply_all(signals.view());
        let observations = observe_signals(scaled.view(), p_observe, mask_seed)?;
        Self::new(Some(signals), observations, norm)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.observations[0].len()
    }
}

/// Builds the pixel graph for image data: node `i` is pixel `i`, its feature
/// vector is that pixel's value across the first `subsample` images.
pub fn pixel_graph(
    images: ArrayView2<f64>,
    subsample: usize,
    k: usize,
    weighting: KnnWeighting,
) -> Result<Graph> {
    let take = subsample.min(images.nrows());
    if take == 0 {
        return Err(Error::EmptyDataset);
    }
    let features = images.slice(ndarray::s![..take, ..]).t().to_owned();
    knn_graph(features.view(), k, weighting)
}

/// Writes `GSGT1`, `N` and `R` (u32 little-endian), then `R × N` f64
/// little-endian values.
pub fn write_ground_truth<W: Write>(mut out: W, signals: ArrayView2<f64>) -> Result<()> {
    let (r, n) = signals.dim();
    let mut buf = Vec::with_capacity(13 + 8 * r * n);
    buf.extend_from_slice(GSGT_MAGIC);
    buf.extend_from_slice(&u32_len(n)?.to_le_bytes());
    buf.extend_from_slice(&u32_len(r)?.to_le_bytes());
    for row in signals.outer_iter() {
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_ground_truth<R: Read>(mut input: R) -> Result<Array2<f64>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let (n, r, payload) = parse_header(&bytes, GSGT_MAGIC, "GSGT1")?;
    let expected = 8 * n * r;
    if payload.len() < expected {
        return Err(Error::TruncatedFile {
            expected: 13 + expected,
            found: bytes.len(),
        });
    }
    let values: Vec<f64> = payload[..expected]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Array2::from_shape_vec((r, n), values).expect("length checked"))
}

/// Mean of a per-row statistic, e.g. `tv_l2` over a signal collection.
pub fn mean_over_rows(
    signals: ArrayView2<f64>,
    f: impl Fn(ArrayView1<f64>) -> Result<f64>,
) -> Result<f64> {
    if signals.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let total = signals.axis_iter(Axis(0)).map(&f).sum::<Result<f64>>()?;
    Ok(total / signals.nrows() as f64)
}
