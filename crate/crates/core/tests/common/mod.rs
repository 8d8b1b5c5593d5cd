//! Finite-difference oracles shared by the gradient tests and the acceptance
//! suite.
#![allow(dead_code)]

use gsi_core::baseline::{gd_gradient, gd_loss};
use gsi_core::gan::{
    discriminator_loss_and_grad, generator_loss_and_grad, loss_g3, loss_g3_gradient, GanConfig,
    HintedBatch,
};
use gsi_core::nn::{init_params, Activation, DenseNet, Gradients, NetRole};
use gsi_core::rng::{seeded, Rng};
use gsi_core::signal::{QuadraticPrior, Regularizer};
use gsi_core::spectral::{decompose_graph, ShiftOperator};
use gsi_core::{Graph, Observation};
use ndarray::{Array1, Array2};
use rand::Rng as _;

pub const FD_STEP: f64 = 1e-5;
/// Differences below this are treated as agreement regardless of scale.
pub const ABS_FLOOR: f64 = 1e-10;

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff.is_nan() {
        return f64::INFINITY;
    }
    if diff <= ABS_FLOOR {
        0.0
    } else {
        diff / analytic.abs().max(numeric.abs())
    }
}

pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| rel_error(a, n))
        .fold(0.0, f64::max)
}

pub fn central_difference(mut f: impl FnMut(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

pub fn flatten_grads(g: &Gradients) -> Vec<f64> {
    g.layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
        .collect()
}

/// Numerical gradient of `loss` with respect to every parameter of `net`, in
/// the same order as [`flatten_grads`].
pub fn numeric_param_grads(net: &DenseNet, loss: impl Fn(&DenseNet) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(net.n_params());
    let mut probe = net.clone();
    for l in 0..net.layers().len() {
        let (rows, cols) = net.layers()[l].weights().dim();
        for i in 0..rows {
            for j in 0..cols {
                out.push(central_difference(
                    |d| {
                        let orig = net.layers()[l].weights()[[i, j]];
                        probe.layers_mut()[l].weights_mut()[[i, j]] = orig + d;
                        let v = loss(&probe);
                        probe.layers_mut()[l].weights_mut()[[i, j]] = orig;
                        v
                    },
                    FD_STEP,
                ));
            }
        }
        for i in 0..rows {
            out.push(central_difference(
                |d| {
                    let orig = net.layers()[l].bias()[i];
                    probe.layers_mut()[l].bias_mut()[i] = orig + d;
                    let v = loss(&probe);
                    probe.layers_mut()[l].bias_mut()[i] = orig;
                    v
                },
                FD_STEP,
            ));
        }
    }
    out
}

fn gaussian(rng: &mut Rng) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    StandardNormal.sample(rng)
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || gaussian(rng))
}

#[derive(Debug, Clone, Copy)]
pub enum SmoothLoss {
    /// `½ Σ (y − t)²` with a tanh or identity output layer.
    SquaredError,
    /// Binary cross-entropy with a sigmoid output layer.
    CrossEntropy,
}

/// Worst relative error over all parameter and input gradients of a random
/// net of at most 3 layers and width at most 16.
pub fn net_gradient_error(seed: u64, kind: SmoothLoss) -> f64 {
    let mut rng = seeded(seed);
    let depth = rng.random_range(1..=3);
    let dims: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=16)).collect();
    let mut acts: Vec<Activation> = (0..depth)
        .map(|_| {
            if rng.random_bool(0.5) {
                Activation::Tanh
            } else {
                Activation::Identity
            }
        })
        .collect();
    if matches!(kind, SmoothLoss::CrossEntropy) {
        acts[depth - 1] = Activation::Sigmoid;
    }
    let net = init_params(&dims, &acts, NetRole::Generator, seed ^ 0x5eed).unwrap();
    let batch = rng.random_range(1..=4);
    let input = gaussian_matrix(batch, dims[0], &mut rng);
    let out_dim = dims[depth];
    let target = match kind {
        SmoothLoss::SquaredError => gaussian_matrix(batch, out_dim, &mut rng),
        SmoothLoss::CrossEntropy => {
            Array2::from_shape_simple_fn((batch, out_dim), || f64::from(rng.random_bool(0.5) as u8))
        }
    };
    let loss_of = |y: &Array2<f64>| -> f64 {
        match kind {
            SmoothLoss::SquaredError => 0.5 * (y - &target).mapv(|v| v * v).sum(),
            SmoothLoss::CrossEntropy => y
                .iter()
                .zip(target.iter())
                .map(|(&p, &t)| -(t * p.ln() + (1.0 - t) * (1.0 - p).ln()))
                .sum(),
        }
    };
    let (y, tape) = net.forward(input.view()).unwrap();
    let dy = match kind {
        SmoothLoss::SquaredError => &y - &target,
        SmoothLoss::CrossEntropy => ndarray::Zip::from(&y)
            .and(&target)
            .map_collect(|&p, &t| -t / p + (1.0 - t) / (1.0 - p)),
    };
    let (grads, input_grad) = net.backward(&tape, dy.view()).unwrap();
    let param_err = max_rel_error(
        &flatten_grads(&grads),
        &numeric_param_grads(&net, |n| loss_of(&n.predict(input.view()).unwrap())),
    );
    let mut numeric_input = Vec::new();
    for b in 0..batch {
        for i in 0..dims[0] {
            numeric_input.push(central_difference(
                |d| {
                    let mut probe = input.clone();
                    probe[[b, i]] += d;
                    loss_of(&net.predict(probe.view()).unwrap())
                },
                FD_STEP,
            ));
        }
    }
    let input_err = max_rel_error(
        &input_grad.iter().copied().collect::<Vec<_>>(),
        &numeric_input,
    );
    param_err.max(input_err)
}

/// Random weighted graph on `n` nodes with edge probability `density`.
pub fn random_graph(n: usize, density: f64, rng: &mut Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(density) {
                edges.push((i, j, rng.random_range(0.1..2.0)));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn path_graph(n: usize) -> Graph {
    let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    Graph::from_edges(n, &edges).unwrap()
}

pub fn random_observation(n: usize, rng: &mut Rng) -> Observation {
    let signed = (0..n).map(|_| rng.random_range(-1i8..=1)).collect();
    Observation::from_signed(signed).unwrap()
}

/// Gradient-descent objective gradient against central differences.
pub fn gd_gradient_error(seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let n = rng.random_range(2..=12);
    let g = random_graph(n, 0.4, &mut rng);
    let obs = random_observation(n, &mut rng);
    let beta = rng.random_range(0.0..2.0);
    let x: Array1<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
    let analytic = gd_gradient(x.view(), &obs, &g, beta).unwrap();
    let numeric: Vec<f64> = (0..n)
        .map(|i| {
            central_difference(
                |d| {
                    let mut p = x.clone();
                    p[i] += d;
                    gd_loss(p.view(), &obs, &g, beta).unwrap()
                },
                FD_STEP,
            )
        })
        .collect();
    max_rel_error(analytic.as_slice().unwrap(), &numeric)
}

/// Graph-regularizer loss gradient (TV or high-frequency energy) against central
/// differences.
pub fn prior_gradient_error(seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let n = rng.random_range(2..=12);
    let g = random_graph(n, 0.5, &mut rng);
    let reg = if rng.random_bool(0.5) {
        Regularizer::TvL2
    } else {
        Regularizer::BlEnergy {
            k: rng.random_range(1..=n),
        }
    };
    let sd = decompose_graph(&g, ShiftOperator::Laplacian).unwrap();
    let prior = QuadraticPrior::new(reg, &g, Some(&sd)).unwrap();
    let x: Array1<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
    let analytic = loss_g3_gradient(&prior, x.view()).unwrap();
    let numeric: Vec<f64> = (0..n)
        .map(|i| {
            central_difference(
                |d| {
                    let mut p = x.clone();
                    p[i] += d;
                    loss_g3(&prior, p.view()).unwrap()
                },
                FD_STEP,
            )
        })
        .collect();
    max_rel_error(analytic.as_slice().unwrap(), &numeric)
}

/// The small end-to-end instance: N = 6 path graph, hidden widths 8 and 6.
pub struct TinyGan {
    pub cfg: GanConfig,
    pub generator: DenseNet,
    pub discriminator: DenseNet,
    pub batch: HintedBatch,
    pub prior: QuadraticPrior,
}

pub const TINY_N: usize = 6;

/// One sample with fixed noise and hint node. When `hint_missing` is set the
/// hint falls on an unobserved node so the adversarial term is active.
pub fn tiny_gan(seed: u64, hint_missing: bool) -> TinyGan {
    let mut rng = seeded(seed);
    let cfg = GanConfig {
        hidden: vec![8, 6],
        seed,
        ..GanConfig::default()
    };
    let dims = cfg.layer_dims(TINY_N);
    let generator = init_params(
        &dims,
        &cfg.generator_activations(),
        NetRole::Generator,
        seed,
    )
    .unwrap();
    let discriminator = init_params(
        &dims,
        &cfg.discriminator_activations(),
        NetRole::Discriminator,
        seed + 1,
    )
    .unwrap();
    // Mixed mask with at least one observed and one missing node.
    let mut signed: Vec<i8> = (0..TINY_N)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    for (i, s) in signed.iter_mut().enumerate() {
        if i % 2 == 1 || rng.random_bool(0.2) {
            *s = 0;
        }
    }
    signed[0] = 1;
    let obs = Observation::from_signed(signed).unwrap();
    let candidates: Vec<usize> = (0..TINY_N)
        .filter(|&i| obs.mask()[i] != hint_missing)
        .collect();
    let hint = candidates[rng.random_range(0..candidates.len())];
    let noise = gaussian_matrix(1, TINY_N, &mut rng);
    let batch = HintedBatch::new(&[&obs], noise, vec![hint]).unwrap();
    let prior = QuadraticPrior::new(Regularizer::TvL2, &path_graph(TINY_N), None).unwrap();
    TinyGan {
        cfg,
        generator,
        discriminator,
        batch,
        prior,
    }
}

/// Full generator objective `G1 + α G2 + β G3` (surrogate sign) against
/// central differences over every generator parameter.
pub fn generator_objective_error(seed: u64, hint_missing: bool) -> f64 {
    let t = tiny_gan(seed, hint_missing);
    let (_, grads) =
        generator_loss_and_grad(&t.generator, &t.discriminator, &t.batch, &t.prior, &t.cfg)
            .unwrap();
    let numeric = numeric_param_grads(&t.generator, |g| {
        generator_loss_and_grad(g, &t.discriminator, &t.batch, &t.prior, &t.cfg)
            .unwrap()
            .0
            .total
    });
    max_rel_error(&flatten_grads(&grads), &numeric)
}

/// Discriminator cross-entropy against central differences over every
/// discriminator parameter.
pub fn discriminator_objective_error(seed: u64, hint_missing: bool) -> f64 {
    let t = tiny_gan(seed, hint_missing);
    let (_, grads) =
        discriminator_loss_and_grad(&t.generator, &t.discriminator, &t.batch, &t.cfg).unwrap();
    let numeric = numeric_param_grads(&t.discriminator, |d| {
        discriminator_loss_and_grad(&t.generator, d, &t.batch, &t.cfg)
            .unwrap()
            .0
    });
    max_rel_error(&flatten_grads(&grads), &numeric)
}
