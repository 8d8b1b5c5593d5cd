//! Graph-signal regularizers and the graph Fourier transform.
//!
//! Signals are plain `ndarray` vectors indexed by node. Every function checks
//! the signal length against the graph (or basis) it is evaluated on.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;
use crate::spectral::SpectralDecomposition;

/// Default tolerance for treating two node values as equal in [`tv_l0`].
pub const TV_L0_TOL: f64 = 1e-9;

/// Quadratic total variation `Σ_{(i,j)∈E} A_ij (x_i − x_j)² = xᵀ L x`.
///
/// Summed over edges, so constant signals give exactly zero.
pub fn tv_l2(g: &Graph, x: ArrayView1<f64>) -> Result<f64> {
    check_len("tv_l2", g.n_nodes(), x.len())?;
    Ok(g.edges().map(|(i, j, w)| w * (x[i] - x[j]).powi(2)).sum())
}

/// The quadratic-form evaluation `xᵀ L x` of [`tv_l2`].
pub fn tv_l2_quadratic(g: &Graph, x: ArrayView1<f64>) -> Result<f64> {
    check_len("tv_l2", g.n_nodes(), x.len())?;
    Ok(x.dot(&g.laplacian().dot(&x)))
}

/// Gradient of [`tv_l2`], `2 L x`.
pub fn tv_l2_gradient(g: &Graph, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_len("tv_l2", g.n_nodes(), x.len())?;
    Ok(g.laplacian().dot(&x) * 2.0)
}

/// Weighted count of edges whose endpoints differ by more than `tol`.
pub fn tv_l0(g: &Graph, x: ArrayView1<f64>, tol: f64) -> Result<f64> {
    check_len("tv_l0", g.n_nodes(), x.len())?;
    Ok(g.edges()
        .filter(|&(i, j, _)| (x[i] - x[j]).abs() > tol)
        .map(|(_, _, w)| w)
        .sum())
}

pub fn tv_l1(g: &Graph, x: ArrayView1<f64>) -> Result<f64> {
    check_len("tv_l1", g.n_nodes(), x.len())?;
    Ok(g.edges().map(|(i, j, w)| w * (x[i] - x[j]).abs()).sum())
}

/// A subgradient of [`tv_l1`]; uses `sign(0) = 0` on flat edges.
pub fn tv_l1_subgradient(g: &Graph, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_len("tv_l1", g.n_nodes(), x.len())?;
    let mut grad = Array1::zeros(x.len());
    for (i, j, w) in g.edges() {
        let d = x[i] - x[j];
        let s = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        grad[i] += w * s;
        grad[j] -= w * s;
    }
    Ok(grad)
}

/// Graph Fourier coefficients `Vᵀ x`.
pub fn gft(sd: &SpectralDecomposition, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_len("gft", sd.n(), x.len())?;
    Ok(sd.eigenvectors().t().dot(&x))
}

pub fn inverse_gft(sd: &SpectralDecomposition, coeffs: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_len("inverse_gft", sd.n(), coeffs.len())?;
    Ok(sd.eigenvectors().dot(&coeffs))
}

/// Energy of `x` above frequency index `k`: `Σ_{j>k} x̃_j²`.
pub fn bl_energy(sd: &SpectralDecomposition, x: ArrayView1<f64>, k: usize) -> Result<f64> {
    let n = sd.n();
    if k > n {
        return Err(Error::InvalidK { k, n });
    }
    let coeffs = gft(sd, x)?;
    Ok(coeffs.iter().skip(k).map(|c| c * c).sum())
}

/// Gradient of [`bl_energy`], `2 V_{>k} V_{>k}ᵀ x`.
pub fn bl_energy_gradient(
    sd: &SpectralDecomposition,
    x: ArrayView1<f64>,
    k: usize,
) -> Result<Array1<f64>> {
    check_len("bl_energy", sd.n(), x.len())?;
    Ok(sd.high_frequency_projector(k)?.dot(&x) * 2.0)
}

/// Graph regularizer plugged into the generator objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Regularizer {
    #[default]
    TvL2,
    BlEnergy {
        k: usize,
    },
}

/// Both supported regularizers are quadratic forms `xᵀ P x` with a fixed
/// symmetric PSD matrix `P` (`L`, or the high-frequency projector), so
/// trainers only need `P` to evaluate values and gradients in batch.
#[derive(Debug, Clone)]
pub struct QuadraticPrior {
    matrix: Array2<f64>,
}

impl QuadraticPrior {
    pub fn new(
        regularizer: Regularizer,
        graph: &Graph,
        sd: Option<&SpectralDecomposition>,
    ) -> Result<Self> {
        let matrix = match regularizer {
            Regularizer::TvL2 => graph.laplacian(),
            Regularizer::BlEnergy { k } => {
                let sd = sd.ok_or_else(|| {
                    Error::InvalidConfig(
                        "band-limit regularizer requires a spectral decomposition".into(),
                    )
                })?;
                check_len("bl_energy", graph.n_nodes(), sd.n())?;
                sd.high_frequency_projector(k)?
            }
        };
        Ok(Self { matrix })
    }

    pub fn from_matrix(matrix: Array2<f64>) -> Self {
        Self { matrix }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn value(&self, x: ArrayView1<f64>) -> Result<f64> {
        check_len("regularizer", self.n(), x.len())?;
        Ok(x.dot(&self.matrix.dot(&x)))
    }

    pub fn gradient(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len("regularizer", self.n(), x.len())?;
        Ok(self.matrix.dot(&x) * 2.0)
    }
}
