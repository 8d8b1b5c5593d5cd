//! Gradient-descent baseline on the smoothed one-bit loss
//! `J(x) = ‖s̄ − m ⊙ tanh(x)‖² + β xᵀ L x`, started from `x = 0`.

use ndarray::{Array1, Array2, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;
use crate::observe::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GdConfig {
    pub mu: f64,
    pub max_iters: usize,
    pub beta: f64,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            mu: 0.01,
            max_iters: 40,
            beta: 0.1,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta must be non-negative, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

pub fn gd_loss(x: ArrayView1<f64>, obs: &Observation, g: &Graph, beta: f64) -> Result<f64> {
    check_dims(x, obs, g)?;
    Ok(loss_with(x, obs, &g.laplacian(), beta))
}

pub fn gd_gradient(
    x: ArrayView1<f64>,
    obs: &Observation,
    g: &Graph,
    beta: f64,
) -> Result<Array1<f64>> {
    check_dims(x, obs, g)?;
    Ok(gradient_with(x, obs, &g.laplacian(), beta))
}

/// Runs exactly `cfg.max_iters` steps of `x ← x − μ∇J(x)` from zero and
/// returns the final iterate with `J` after each step.
pub fn gd_impute(obs: &Observation, g: &Graph, cfg: &GdConfig) -> Result<(Array1<f64>, Vec<f64>)> {
    gd_impute_with(obs, g, cfg, |_, _| {})
}

/// [`gd_impute`] with a callback receiving `(iteration, x)` after each step,
/// iterations counted from 1.
pub fn gd_impute_with(
    obs: &Observation,
    g: &Graph,
    cfg: &GdConfig,
    mut on_iter: impl FnMut(usize, ArrayView1<f64>),
) -> Result<(Array1<f64>, Vec<f64>)> {
    cfg.validate()?;
    check_len("gd_impute", g.n_nodes(), obs.len())?;
    let lap = g.laplacian();
    let mut x = Array1::zeros(obs.len());
    let mut trace = Vec::with_capacity(cfg.max_iters);
    for iter in 1..=cfg.max_iters {
        let grad = gradient_with(x.view(), obs, &lap, cfg.beta);
        x.scaled_add(-cfg.mu, &grad);
        let loss = loss_with(x.view(), obs, &lap, cfg.beta);
        if !loss.is_finite() {
            return Err(Error::DivergedLoss {
                what: "gradient-descent objective",
                value: loss,
            });
        }
        trace.push(loss);
        on_iter(iter, x.view());
    }
    Ok((x, trace))
}

fn check_dims(x: ArrayView1<f64>, obs: &Observation, g: &Graph) -> Result<()> {
    check_len("gd signal", g.n_nodes(), x.len())?;
    check_len("gd observation", g.n_nodes(), obs.len())
}

fn loss_with(x: ArrayView1<f64>, obs: &Observation, lap: &Array2<f64>, beta: f64) -> f64 {
    let fit: f64 = x
        .iter()
        .zip(obs.mask())
        .zip(obs.signed())
        .map(|((&xi, &m), &s)| {
            let r = if m { f64::from(s) - xi.tanh() } else { 0.0 };
            r * r
        })
        .sum();
    let smooth = if beta == 0.0 {
        0.0
    } else {
        x.dot(&lap.dot(&x))
    };
    fit + beta * smooth
}

fn gradient_with(
    x: ArrayView1<f64>,
    obs: &Observation,
    lap: &Array2<f64>,
    beta: f64,
) -> Array1<f64> {
    let mut grad = if beta == 0.0 {
        Array1::zeros(x.len())
    } else {
        lap.dot(&x) * (2.0 * beta)
    };
    Zip::from(&mut grad)
        .and(x)
        .and(obs.mask())
        .and(obs.signed())
        .for_each(|g, &xi, &m, &s| {
            if m {
                let t = xi.tanh();
                *g += -2.0 * (f64::from(s) - t) * (1.0 - t * t);
            }
        });
    grad
}
