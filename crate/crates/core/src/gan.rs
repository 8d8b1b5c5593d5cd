//! Graph-regularized generative adversarial imputation.
//!
//! The generator maps `[s̄ ; (1−m)⊙z]` (width `2N`) to an estimate
//! `x̂ ∈ (−1, 1)^N`. The discriminator sees `[q ; h]`, where `q` is the sign
//! pattern of `x̂` and `h` is the hint vector, and returns `N` probabilities
//! that each node was observed; only the hinted node's probability enters the
//! losses.
//!
//! Training alternates `d_steps_per_g_step` discriminator updates with one
//! generator update on the same mini-batch, drawing fresh noise and hint nodes
//! for every update. The discriminator always sees the hard sign. The
//! generator step replaces `sign(·)` by `tanh(·/τ)` so that gradients reach
//! `θ`, both in the discriminator input and in the sign-agreement loss.
//!
//! Generator objective per mini-batch (means over the batch):
//!
//! ```text
//! L_G = L_G1 + α·L_G2 + β·L_G3
//! L_G1 = −(1 − m_n) log p_n
//! L_G2 = Σ_i m_i (s̄_i − σ(x̂_i))²
//! L_G3 = x̂ᵀ P x̂          (P = L for TV, or the high-frequency projector)
//! ```
//!
//! Setting `β = 0` gives the ungraph-regularized (GAIN-style) ablation.

use std::io::Write;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::nn::{
    adam_step, init_params, Activation, AdamConfig, AdamState, DenseNet, Gradients, NetRole,
};
use crate::observe::Observation;
use crate::rng::{derive_seed, seeded, standard_normal_matrix, Rng};
use crate::signal::{QuadraticPrior, Regularizer};

/// Probabilities are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]` before `log`.
pub const PROB_CLAMP: f64 = 1e-7;

const STREAM_GENERATOR_INIT: u64 = 1;
const STREAM_DISCRIMINATOR_INIT: u64 = 2;
const STREAM_TRAINING: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GanConfig {
    pub alpha: f64,
    pub beta: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub d_steps_per_g_step: usize,
    /// Temperature of the `tanh(x/τ)` sign surrogate.
    pub tau: f64,
    pub lr_g: f64,
    pub lr_d: f64,
    pub seed: u64,
    pub regularizer: Regularizer,
    /// Hidden widths shared by both networks; the output width is always `N`.
    pub hidden: Vec<usize>,
    /// Overwrite observed entries of the discriminator input with `s̄`.
    pub combine_observed: bool,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            beta: 0.1,
            batch_size: 64,
            epochs: 200,
            d_steps_per_g_step: 1,
            tau: 0.5,
            lr_g: 1e-3,
            lr_d: 1e-3,
            seed: 0,
            regularizer: Regularizer::TvL2,
            hidden: vec![256, 128],
            combine_observed: false,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidConfig(what));
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!(
                    "{name} must be a finite non-negative number, got {v}"
                ));
            }
        }
        // Zero learning rates are accepted to freeze a network.
        for (name, v) in [("lr_g", self.lr_g), ("lr_d", self.lr_d)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!(
                    "{name} must be a finite non-negative number, got {v}"
                ));
            }
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.d_steps_per_g_step == 0 {
            return bad("d_steps_per_g_step must be positive".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        Ok(())
    }

    pub fn layer_dims(&self, n: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(2 * n);
        dims.extend_from_slice(&self.hidden);
        dims.push(n);
        dims
    }

    pub fn generator_activations(&self) -> Vec<Activation> {
        vec![Activation::Tanh; self.hidden.len() + 1]
    }

    pub fn discriminator_activations(&self) -> Vec<Activation> {
        let mut acts = vec![Activation::Tanh; self.hidden.len()];
        acts.push(Activation::Sigmoid);
        acts
    }
}

/// `[s̄ ; (1−m)⊙z]`.
pub fn make_generator_input(obs: &Observation, z: ArrayView1<f64>) -> Result<Array1<f64>> {
    let n = obs.len();
    check_len("generator noise", n, z.len())?;
    let mut input = Array1::zeros(2 * n);
    for i in 0..n {
        input[i] = f64::from(obs.signed()[i]);
        if !obs.mask()[i] {
            input[n + i] = z[i];
        }
    }
    Ok(input)
}

pub fn generate(gen: &DenseNet, input: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_len("generator input", gen.in_dim(), input.len())?;
    let out = gen.predict(input.insert_axis(Axis(0)))?;
    Ok(out.row(0).to_owned())
}

/// Hint vector: the mask with node `n` replaced by 0.5.
pub fn make_hint(mask: &[bool], n: usize) -> Result<Array1<f64>> {
    if n >= mask.len() {
        return Err(Error::IndexOutOfRange {
            index: n,
            len: mask.len(),
        });
    }
    let mut h: Array1<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    h[n] = 0.5;
    Ok(h)
}

/// `sign` with `sign(0) = +1`, matching the observation quantizer.
pub fn hard_sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

pub fn soft_sign(v: f64, tau: f64) -> f64 {
    (v / tau).tanh()
}

/// Per-node probabilities `D([q ; h])` with `q = sign(x̂)` when `hard`,
/// otherwise `q = tanh(x̂/τ)`.
pub fn discriminate(
    disc: &DenseNet,
    x_hat: ArrayView1<f64>,
    hint: ArrayView1<f64>,
    tau: f64,
    hard: bool,
) -> Result<Array1<f64>> {
    check_len("discriminator hint", x_hat.len(), hint.len())?;
    check_len("discriminator input", disc.in_dim(), 2 * x_hat.len())?;
    let n = x_hat.len();
    let mut input = Array1::zeros(2 * n);
    for i in 0..n {
        input[i] = if hard {
            hard_sign(x_hat[i])
        } else {
            soft_sign(x_hat[i], tau)
        };
        input[n + i] = hint[i];
    }
    let out = disc.predict(input.view().insert_axis(Axis(0)))?;
    Ok(out.row(0).to_owned())
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Cross-entropy of the discriminator at the hinted node.
pub fn loss_d(p_n: f64, m_n: bool) -> f64 {
    let p = clamp_prob(p_n);
    if m_n {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Adversarial generator loss `−(1 − m_n) log p_n`.
pub fn loss_g1(p_n: f64, m_n: bool) -> f64 {
    if m_n {
        0.0
    } else {
        -clamp_prob(p_n).ln()
    }
}

/// How `sign(x̂)` is evaluated in the sign-agreement loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignMode {
    Hard,
    Surrogate { tau: f64 },
}

impl SignMode {
    fn apply(self, v: f64) -> f64 {
        match self {
            SignMode::Hard => hard_sign(v),
            SignMode::Surrogate { tau } => soft_sign(v, tau),
        }
    }
}

/// `Σ_i m_i (s̄_i − σ(x̂_i))²`.
pub fn loss_g2(obs: &Observation, x_hat: ArrayView1<f64>, mode: SignMode) -> Result<f64> {
    check_len("loss_g2", obs.len(), x_hat.len())?;
    Ok(x_hat
        .iter()
        .zip(obs.mask())
        .zip(obs.signed())
        .filter(|((_, &m), _)| m)
        .map(|((&x, _), &s)| (f64::from(s) - mode.apply(x)).powi(2))
        .sum())
}

/// Graph regularizer on the generator output.
pub fn loss_g3(prior: &QuadraticPrior, x_hat: ArrayView1<f64>) -> Result<f64> {
    prior.value(x_hat)
}

pub fn loss_g3_gradient(prior: &QuadraticPrior, x_hat: ArrayView1<f64>) -> Result<Array1<f64>> {
    prior.gradient(x_hat)
}

/// A mini-batch with its noise draws and hint nodes.
#[derive(Debug, Clone)]
pub struct HintedBatch {
    /// `s̄`, `B × N`.
    pub signed: Array2<f64>,
    /// `m`, `B × N`.
    pub mask: Array2<f64>,
    /// `z`, `B × N`.
    pub noise: Array2<f64>,
    pub hint_nodes: Vec<usize>,
    /// `h`, `B × N`.
    pub hints: Array2<f64>,
}

impl HintedBatch {
    pub fn new(obs: &[&Observation], noise: Array2<f64>, hint_nodes: Vec<usize>) -> Result<Self> {
        let b = obs.len();
        if b == 0 {
            return Err(Error::EmptyDataset);
        }
        let n = obs[0].len();
        check_len("batch noise rows", b, noise.nrows())?;
        check_len("batch noise width", n, noise.ncols())?;
        check_len("batch hint nodes", b, hint_nodes.len())?;
        let mut signed = Array2::zeros((b, n));
        let mut mask = Array2::zeros((b, n));
        for (r, o) in obs.iter().enumerate() {
            check_len("batch observation", n, o.len())?;
            signed.row_mut(r).assign(&o.signed_f64());
            mask.row_mut(r).assign(&o.mask_f64());
        }
        let mut hints = mask.clone();
        for (r, &node) in hint_nodes.iter().enumerate() {
            if node >= n {
                return Err(Error::IndexOutOfRange {
                    index: node,
                    len: n,
                });
            }
            hints[[r, node]] = 0.5;
        }
        Ok(Self {
            signed,
            mask,
            noise,
            hint_nodes,
            hints,
        })
    }

    /// Draws standard-normal noise and uniform hint nodes.
    pub fn sample(obs: &[&Observation], rng: &mut Rng) -> Result<Self> {
        let n = obs.first().map(|o| o.len()).ok_or(Error::EmptyDataset)?;
        let noise = standard_normal_matrix(obs.len(), n, rng);
        let hint_nodes = (0..obs.len()).map(|_| rng.random_range(0..n)).collect();
        Self::new(obs, noise, hint_nodes)
    }

    pub fn len(&self) -> usize {
        self.signed.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_nodes(&self) -> usize {
        self.signed.ncols()
    }

    pub fn generator_input(&self) -> Array2<f64> {
        let (b, n) = self.signed.dim();
        let mut input = Array2::zeros((b, 2 * n));
        input.slice_mut(s![.., ..n]).assign(&self.signed);
        let mut masked_noise = input.slice_mut(s![.., n..]);
        Zip::from(&mut masked_noise)
            .and(&self.noise)
            .and(&self.mask)
            .for_each(|dst, &z, &m| *dst = (1.0 - m) * z);
        input
    }

    fn discriminator_input(&self, q: ArrayView2<f64>) -> Array2<f64> {
        let n = self.n_nodes();
        let mut input = Array2::zeros((self.len(), 2 * n));
        input.slice_mut(s![.., ..n]).assign(&q);
        input.slice_mut(s![.., n..]).assign(&self.hints);
        input
    }

    fn hinted_mask(&self, row: usize) -> bool {
        self.mask[[row, self.hint_nodes[row]]] == 1.0
    }
}

/// Batch-mean losses of one generator evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeneratorLosses {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub total: f64,
}

/// Replaces observed entries of `q` by `s̄` when `combine` is set.
fn combine_with_observed(q: &mut Array2<f64>, batch: &HintedBatch, combine: bool) {
    if combine {
        Zip::from(q)
            .and(&batch.signed)
            .and(&batch.mask)
            .for_each(|q, &s, &m| {
                if m == 1.0 {
                    *q = s;
                }
            });
    }
}

/// Mean discriminator cross-entropy over the batch's hinted nodes and its
/// gradient with respect to `ψ`. The generator is held fixed.
pub fn discriminator_loss_and_grad(
    gen: &DenseNet,
    disc: &DenseNet,
    batch: &HintedBatch,
    cfg: &GanConfig,
) -> Result<(f64, Gradients)> {
    let x_hat = gen.predict(batch.generator_input().view())?;
    let mut q = x_hat.mapv(hard_sign);
    combine_with_observed(&mut q, batch, cfg.combine_observed);
    let (p, tape) = disc.forward(batch.discriminator_input(q.view()).view())?;
    let b = batch.len() as f64;
    let mut loss = 0.0;
    let mut dp = Array2::zeros(p.raw_dim());
    for (row, &node) in batch.hint_nodes.iter().enumerate() {
        let pn = p[[row, node]];
        let m = batch.hinted_mask(row);
        loss += loss_d(pn, m);
        if pn > PROB_CLAMP && pn < 1.0 - PROB_CLAMP {
            dp[[row, node]] = if m { -1.0 / pn } else { 1.0 / (1.0 - pn) } / b;
        }
    }
    let (grads, _) = disc.backward(&tape, dp.view())?;
    Ok((loss / b, grads))
}

/// Mean generator objective `L_G1 + α L_G2 + β L_G3` (surrogate sign) over
/// the batch and its gradient with respect to `θ`. The discriminator is held
/// fixed.
pub fn generator_loss_and_grad(
    gen: &DenseNet,
    disc: &DenseNet,
    batch: &HintedBatch,
    prior: &QuadraticPrior,
    cfg: &GanConfig,
) -> Result<(GeneratorLosses, Gradients)> {
    check_len("regularizer", batch.n_nodes(), prior.n())?;
    let b = batch.len() as f64;
    let (x_hat, gen_tape) = gen.forward(batch.generator_input().view())?;
    let soft = x_hat.mapv(|v| soft_sign(v, cfg.tau));
    let mut q = soft.clone();
    combine_with_observed(&mut q, batch, cfg.combine_observed);
    let (p, disc_tape) = disc.forward(batch.discriminator_input(q.view()).view())?;

    // L_G1 through the discriminator.
    let mut g1 = 0.0;
    let mut dp = Array2::zeros(p.raw_dim());
    for (row, &node) in batch.hint_nodes.iter().enumerate() {
        let pn = p[[row, node]];
        let m = batch.hinted_mask(row);
        g1 += loss_g1(pn, m);
        if !m && pn > PROB_CLAMP && pn < 1.0 - PROB_CLAMP {
            dp[[row, node]] = -1.0 / (pn * b);
        }
    }
    let d_input = disc.backward_input(&disc_tape, dp.view())?;
    let n = batch.n_nodes();
    let mut d_soft = d_input.slice(s![.., ..n]).to_owned();
    if cfg.combine_observed {
        d_soft *= &batch.mask.mapv(|m| 1.0 - m);
    }

    // α·L_G2 on the soft signs.
    let mut g2 = 0.0;
    Zip::from(&mut d_soft)
        .and(&soft)
        .and(&batch.signed)
        .and(&batch.mask)
        .for_each(|d, &t, &s, &m| {
            let r = m * (s - t);
            g2 += r * r;
            *d += cfg.alpha * (-2.0 * r) / b;
        });

    // Chain through t = tanh(x̂/τ).
    let mut dx = d_soft;
    Zip::from(&mut dx)
        .and(&soft)
        .for_each(|d, &t| *d *= (1.0 - t * t) / cfg.tau);

    // β·L_G3 = β x̂ᵀPx̂, P symmetric.
    let px = x_hat.dot(prior.matrix());
    let g3 = Zip::from(&x_hat)
        .and(&px)
        .fold(0.0, |acc, &x, &y| acc + x * y);
    if cfg.beta != 0.0 {
        dx.scaled_add(2.0 * cfg.beta / b, &px);
    }

    let (grads, _) = gen.backward(&gen_tape, dx.view())?;
    let (g1, g2, g3) = (g1 / b, g2 / b, g3 / b);
    Ok((
        GeneratorLosses {
            g1,
            g2,
            g3,
            total: g1 + cfg.alpha * g2 + cfg.beta * g3,
        },
        grads,
    ))
}

/// Per-epoch means of the training losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLosses {
    pub epoch: usize,
    pub loss_d: f64,
    pub loss_g1: f64,
    pub loss_g2: f64,
    pub loss_g3: f64,
    pub loss_g_total: f64,
}

#[derive(Debug, Clone)]
pub struct TrainerState {
    pub generator: DenseNet,
    pub generator_opt: AdamState,
    pub discriminator: DenseNet,
    pub discriminator_opt: AdamState,
    pub epoch: usize,
    pub history: Vec<EpochLosses>,
}

impl TrainerState {
    pub fn new(n: usize, cfg: &GanConfig) -> Result<Self> {
        cfg.validate()?;
        if n == 0 {
            return Err(Error::InvalidArchitecture("graph has no nodes".into()));
        }
        let dims = cfg.layer_dims(n);
        let generator = init_params(
            &dims,
            &cfg.generator_activations(),
            NetRole::Generator,
            derive_seed(cfg.seed, STREAM_GENERATOR_INIT),
        )?;
        let discriminator = init_params(
            &dims,
            &cfg.discriminator_activations(),
            NetRole::Discriminator,
            derive_seed(cfg.seed, STREAM_DISCRIMINATOR_INIT),
        )?;
        let adam = |lr| AdamConfig {
            lr,
            ..AdamConfig::default()
        };
        Ok(Self {
            generator_opt: AdamState::new(&generator, adam(cfg.lr_g)),
            discriminator_opt: AdamState::new(&discriminator, adam(cfg.lr_d)),
            generator,
            discriminator,
            epoch: 0,
            history: Vec::new(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.generator.out_dim()
    }

    /// `x̂ = G([s̄ ; (1−m)⊙z])`; parameters are not touched.
    pub fn impute(&self, obs: &Observation, z: ArrayView1<f64>) -> Result<Array1<f64>> {
        generate(&self.generator, make_generator_input(obs, z)?.view())
    }

    /// Batched [`TrainerState::impute`]; row `r` of `noise` drives `obs[r]`.
    pub fn impute_batch(&self, obs: &[Observation], noise: ArrayView2<f64>) -> Result<Array2<f64>> {
        let refs: Vec<&Observation> = obs.iter().collect();
        let batch = HintedBatch::new(&refs, noise.to_owned(), vec![0; obs.len()])?;
        self.generator.predict(batch.generator_input().view())
    }
}

/// Drives [`TrainerState`] through epochs over a fixed training set.
pub struct Trainer<'a> {
    cfg: GanConfig,
    prior: &'a QuadraticPrior,
    state: TrainerState,
    rng: Rng,
    order: Vec<usize>,
}

impl<'a> Trainer<'a> {
    pub fn new(n: usize, prior: &'a QuadraticPrior, cfg: &GanConfig) -> Result<Self> {
        check_len("regularizer", n, prior.n())?;
        Ok(Self {
            state: TrainerState::new(n, cfg)?,
            rng: seeded(derive_seed(cfg.seed, STREAM_TRAINING)),
            cfg: cfg.clone(),
            prior,
            order: Vec::new(),
        })
    }

    pub fn state(&self) -> &TrainerState {
        &self.state
    }

    pub fn into_state(self) -> TrainerState {
        self.state
    }

    /// One pass over `data` in shuffled mini-batches.
    pub fn run_epoch(&mut self, data: &[Observation]) -> Result<EpochLosses> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = self.state.n_nodes();
        for obs in data {
            check_len("training observation", n, obs.len())?;
        }
        self.order.clear();
        self.order.extend(0..data.len());
        self.order.shuffle(&mut self.rng);

        let mut d_sum = 0.0;
        let mut d_count = 0usize;
        let mut g_sum = GeneratorLosses::default();
        let mut g_count = 0usize;
        let order = std::mem::take(&mut self.order);
        for chunk in order.chunks(self.cfg.batch_size) {
            let obs: Vec<&Observation> = chunk.iter().map(|&i| &data[i]).collect();
            for _ in 0..self.cfg.d_steps_per_g_step {
                let batch = HintedBatch::sample(&obs, &mut self.rng)?;
                let (loss, grads) = discriminator_loss_and_grad(
                    &self.state.generator,
                    &self.state.discriminator,
                    &batch,
                    &self.cfg,
                )?;
                adam_step(
                    &mut self.state.discriminator,
                    &mut self.state.discriminator_opt,
                    &grads,
                )?;
                d_sum += loss;
                d_count += 1;
            }
            let batch = HintedBatch::sample(&obs, &mut self.rng)?;
            let (losses, grads) = generator_loss_and_grad(
                &self.state.generator,
                &self.state.discriminator,
                &batch,
                self.prior,
                &self.cfg,
            )?;
            adam_step(
                &mut self.state.generator,
                &mut self.state.generator_opt,
                &grads,
            )?;
            g_sum.g1 += losses.g1;
            g_sum.g2 += losses.g2;
            g_sum.g3 += losses.g3;
            g_sum.total += losses.total;
            g_count += 1;
        }
        self.order = order;

        self.state.epoch += 1;
        let gc = g_count as f64;
        let record = EpochLosses {
            epoch: self.state.epoch,
            loss_d: d_sum / d_count as f64,
            loss_g1: g_sum.g1 / gc,
            loss_g2: g_sum.g2 / gc,
            loss_g3: g_sum.g3 / gc,
            loss_g_total: g_sum.total / gc,
        };
        for (what, value) in [
            ("loss_d", record.loss_d),
            ("loss_g1", record.loss_g1),
            ("loss_g2", record.loss_g2),
            ("loss_g3", record.loss_g3),
            ("loss_g_total", record.loss_g_total),
        ] {
            if !value.is_finite() {
                return Err(Error::DivergedLoss { what, value });
            }
        }
        self.state.history.push(record);
        Ok(record)
    }
}

/// Trains for `cfg.epochs` epochs, calling `on_epoch` after each one.
pub fn train_with(
    data: &[Observation],
    prior: &QuadraticPrior,
    cfg: &GanConfig,
    mut on_epoch: impl FnMut(&EpochLosses, &TrainerState) -> Result<()>,
) -> Result<TrainerState> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut trainer = Trainer::new(data[0].len(), prior, cfg)?;
    for _ in 0..cfg.epochs {
        let record = trainer.run_epoch(data)?;
        on_epoch(&record, trainer.state())?;
    }
    Ok(trainer.into_state())
}

pub fn train(
    data: &[Observation],
    prior: &QuadraticPrior,
    cfg: &GanConfig,
) -> Result<TrainerState> {
    train_with(data, prior, cfg, |_, _| Ok(()))
}

pub const LOSS_HISTORY_HEADER: &str = "epoch,loss_d,loss_g1,loss_g2,loss_g3,loss_g_total";

pub fn write_loss_history<W: Write>(mut out: W, history: &[EpochLosses]) -> Result<()> {
    let mut buf = String::from(LOSS_HISTORY_HEADER);
    buf.push('\n');
    for e in history {
        buf.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.epoch, e.loss_d, e.loss_g1, e.loss_g2, e.loss_g3, e.loss_g_total
        ));
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}
