//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Each rotation annihilates one off-diagonal pair `(p, q)`; a sweep visits
//! every pair once. Rotations are accumulated into `V`, so on exit
//! `M = V diag(λ) Vᵀ` with `V` orthonormal. Cost is `O(N³)` per sweep, which
//! is fine for the few-hundred-node graphs this crate targets.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Input symmetry tolerance, `max |M - Mᵀ|`.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Sweeps stop once the off-diagonal Frobenius norm drops below this.
pub const OFF_DIAGONAL_TOL: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// Ascending.
    eigenvalues: Array1<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    eigenvectors: Array2<f64>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Orthogonal projector onto the span of `v_{K+1}, ..., v_N`, i.e.
    /// `V_{>K} V_{>K}ᵀ`. Its quadratic form is the band-limit energy.
    pub fn high_frequency_projector(&self, k: usize) -> Result<Array2<f64>> {
        let n = self.n();
        if k > n {
            return Err(Error::InvalidK { k, n });
        }
        let tail = self.eigenvectors.slice(ndarray::s![.., k..]);
        Ok(tail.dot(&tail.t()))
    }
}

/// Which graph matrix supplies the Fourier basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftOperator {
    #[default]
    Laplacian,
    Adjacency,
}

impl ShiftOperator {
    pub fn matrix(self, graph: &Graph) -> Array2<f64> {
        match self {
            ShiftOperator::Laplacian => graph.laplacian(),
            ShiftOperator::Adjacency => graph.adjacency().clone(),
        }
    }
}

pub fn decompose_graph(graph: &Graph, op: ShiftOperator) -> Result<SpectralDecomposition> {
    spectral_decompose(op.matrix(graph).view())
}

pub fn spectral_decompose(m: ArrayView2<f64>) -> Result<SpectralDecomposition> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::ShapeMismatch(format!(
            "eigendecomposition needs a square matrix, got {rows}x{cols}"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::ShapeMismatch("matrix has non-finite entries".into()));
    }
    let n = rows;
    let mut asym = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }

    // Row-major working copies; `a` is kept exactly symmetric.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[[i, j]] + m[[j, i]]);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a, n);
        if off < OFF_DIAGONAL_TOL {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].total_cmp(&a[y * n + y]).then(x.cmp(&y)));
    let eigenvalues = order.iter().map(|&k| a[k * n + k]).collect();
    let mut eigenvectors = Array2::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[[r, col]] = v[r * n + k];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += 2.0 * a[i * n + j] * a[i * n + j];
        }
    }
    s.sqrt()
}

fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    a[p * n + p] = app - t * apq;
    a[q * n + q] = aqq + t * apq;
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[r * n + p];
        let arq = a[r * n + q];
        let new_rp = c * arp - s * arq;
        let new_rq = s * arp + c * arq;
        a[r * n + p] = new_rp;
        a[p * n + r] = new_rp;
        a[r * n + q] = new_rq;
        a[q * n + r] = new_rq;
    }
    for r in 0..n {
        let vrp = v[r * n + p];
        let vrq = v[r * n + q];
        v[r * n + p] = c * vrp - s * vrq;
        v[r * n + q] = s * vrp + c * vrq;
    }
}
