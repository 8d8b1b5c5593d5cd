mod common;

use common::*;
use gsi_core::data::{gen_smooth, observe_signals};
use gsi_core::gan::{
    generator_loss_and_grad, loss_g2, loss_g3, train, GanConfig, HintedBatch, SignMode,
    TrainerState,
};
use gsi_core::rng::seeded;
use gsi_core::spectral::{decompose_graph, ShiftOperator};
use gsi_core::{Observation, QuadraticPrior, Regularizer};
use ndarray::Axis;

fn smooth_observations(n: usize, r: usize, seed: u64) -> (gsi_core::Graph, Vec<Observation>) {
    let mut edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    edges.push((0, n / 2, 1.0));
    let g = gsi_core::Graph::from_edges(n, &edges).unwrap();
    let sd = decompose_graph(&g, ShiftOperator::Laplacian).unwrap();
    let x = gen_smooth(&sd, r, 2.0, seed).unwrap();
    (g, observe_signals(x.view(), 0.5, seed + 1).unwrap())
}

fn small_cfg() -> GanConfig {
    GanConfig {
        hidden: vec![16, 16],
        batch_size: 16,
        epochs: 4,
        seed: 5,
        ..GanConfig::default()
    }
}

#[test]
fn same_seed_same_history() {
    let (g, obs) = smooth_observations(10, 80, 1);
    let prior = QuadraticPrior::new(Regularizer::TvL2, &g, None).unwrap();
    let a = train(&obs, &prior, &small_cfg()).unwrap();
    let b = train(&obs, &prior, &small_cfg()).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.generator, b.generator);
    assert_eq!(a.history.len(), 4);
    assert_eq!(a.epoch, 4);
    let c = train(
        &obs,
        &prior,
        &GanConfig {
            seed: 6,
            ..small_cfg()
        },
    )
    .unwrap();
    assert_ne!(a.history, c.history);
}

#[test]
fn batch_losses_are_means_of_single_samples() {
    let (g, obs) = smooth_observations(8, 12, 3);
    let prior = QuadraticPrior::new(Regularizer::TvL2, &g, None).unwrap();
    let cfg = small_cfg();
    let state = TrainerState::new(8, &cfg).unwrap();
    let refs: Vec<&Observation> = obs.iter().collect();
    let batch = HintedBatch::sample(&refs, &mut seeded(9)).unwrap();
    let (losses, _) =
        generator_loss_and_grad(&state.generator, &state.discriminator, &batch, &prior, &cfg)
            .unwrap();
    let x_hat = state
        .generator
        .predict(batch.generator_input().view())
        .unwrap();
    let mode = SignMode::Surrogate { tau: cfg.tau };
    let (mut g2, mut g3) = (0.0, 0.0);
    for (o, row) in obs.iter().zip(x_hat.axis_iter(Axis(0))) {
        g2 += loss_g2(o, row, mode).unwrap();
        g3 += loss_g3(&prior, row).unwrap();
    }
    let b = obs.len() as f64;
    assert!((losses.g2 - g2 / b).abs() <= 1e-12);
    assert!((losses.g3 - g3 / b).abs() <= 1e-12);
    assert!(
        (losses.total - (losses.g1 + cfg.alpha * losses.g2 + cfg.beta * losses.g3)).abs() <= 1e-12
    );
}

#[test]
fn single_sample_batches_use_the_hinted_node() {
    // Flip the hint between an observed and a missing node: G1 vanishes when
    // the hinted node was observed.
    let observed = tiny_gan(4, false);
    let (losses, _) = generator_loss_and_grad(
        &observed.generator,
        &observed.discriminator,
        &observed.batch,
        &observed.prior,
        &observed.cfg,
    )
    .unwrap();
    assert_eq!(losses.g1, 0.0);
    let missing = tiny_gan(4, true);
    let (losses, _) = generator_loss_and_grad(
        &missing.generator,
        &missing.discriminator,
        &missing.batch,
        &missing.prior,
        &missing.cfg,
    )
    .unwrap();
    assert!(losses.g1 > 0.0);
}

#[test]
fn training_reduces_generator_objective() {
    let (g, obs) = smooth_observations(12, 256, 7);
    let prior = QuadraticPrior::new(Regularizer::TvL2, &g, None).unwrap();
    let cfg = GanConfig {
        epochs: 30,
        ..small_cfg()
    };
    let state = train(&obs, &prior, &cfg).unwrap();
    let first = state.history.first().unwrap().loss_g_total;
    let last = state.history.last().unwrap().loss_g_total;
    assert!(last < first, "{first} -> {last}");
    assert!(state.generator.all_finite() && state.discriminator.all_finite());
}

#[test]
fn bandlimited_regularizer_trains() {
    let (g, obs) = smooth_observations(10, 64, 11);
    let sd = decompose_graph(&g, ShiftOperator::Laplacian).unwrap();
    let prior = QuadraticPrior::new(Regularizer::BlEnergy { k: 3 }, &g, Some(&sd)).unwrap();
    let cfg = GanConfig {
        regularizer: Regularizer::BlEnergy { k: 3 },
        ..small_cfg()
    };
    let state = train(&obs, &prior, &cfg).unwrap();
    assert!(state.history.iter().all(|e| e.loss_g3 >= 0.0));
}
