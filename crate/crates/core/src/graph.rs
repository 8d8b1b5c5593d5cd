//! Undirected weighted graphs over `N` nodes, stored densely.
//!
//! A [`Graph`] owns its symmetric adjacency matrix. Degree and combinatorial
//! Laplacian (`L = D - A`) are derived on demand. Graphs can be built from an
//! explicit adjacency, from an edge list, or from node feature vectors with
//! [`knn_graph`].

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Array2<f64>,
}

impl Graph {
    /// Wraps an adjacency matrix after checking it is square, symmetric,
    /// non-negative, finite and free of self-loops.
    pub fn from_adjacency(adjacency: Array2<f64>) -> Result<Self> {
        let (rows, cols) = adjacency.dim();
        if rows != cols {
            return Err(Error::InvalidGraph(format!(
                "adjacency must be square, got {rows}x{cols}"
            )));
        }
        if rows == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        for i in 0..rows {
            if adjacency[[i, i]] != 0.0 {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            for j in (i + 1)..rows {
                let (a, b) = (adjacency[[i, j]], adjacency[[j, i]]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight A[{i},{j}] = {a} is not a finite non-negative number"
                    )));
                }
                if a != b {
                    return Err(Error::InvalidGraph(format!(
                        "A[{i},{j}] = {a} but A[{j},{i}] = {b}"
                    )));
                }
            }
        }
        Ok(Self { adjacency })
    }

    /// Builds a graph from undirected weighted edges `(i, j, w)`.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut a = Array2::zeros((n_nodes, n_nodes));
        for &(i, j, w) in edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    len: n_nodes,
                });
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            a[[i, j]] = w;
            a[[j, i]] = w;
        }
        Self::from_adjacency(a)
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    /// Weighted degrees `A·1`.
    pub fn degrees(&self) -> Array1<f64> {
        self.adjacency.sum_axis(ndarray::Axis(1))
    }

    /// Combinatorial Laplacian `L = D - A`.
    pub fn laplacian(&self) -> Array2<f64> {
        let mut l = self.adjacency.mapv(|w| -w);
        for (i, d) in self.degrees().iter().enumerate() {
            l[[i, i]] = *d;
        }
        l
    }

    /// Edges `(i, j, w)` with `i < j` and `w > 0`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_nodes();
        (0..n).flat_map(move |i| {
            ((i + 1)..n).filter_map(move |j| {
                let w = self.adjacency[[i, j]];
                (w > 0.0).then_some((i, j, w))
            })
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edges().count()
    }

    /// Component label per node, labels numbered from 0 in order of first
    /// appearance.
    pub fn component_labels(&self) -> Vec<usize> {
        let n = self.n_nodes();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for (v, &w) in self.adjacency.row(u).iter().enumerate() {
                    if w > 0.0 && label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn n_components(&self) -> usize {
        self.component_labels()
            .into_iter()
            .max()
            .map_or(0, |m| m + 1)
    }

    /// Writes the `N <n>` header followed by one `i j w` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = format!("N {}\n", self.n_nodes());
        for (i, j, w) in self.edges() {
            writeln!(buf, "{i} {j} {w}").expect("writing to a String cannot fail");
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            format: "edge list",
            reason,
        };
        let mut lines = input
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let (_, header) = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let header = header?;
        let n_nodes = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["N", n] => n
                .parse::<usize>()
                .map_err(|e| bad(format!("bad node count {n:?}: {e}")))?,
            _ => return Err(bad(format!("expected `N <n_nodes>`, got {header:?}"))),
        };
        let mut edges = Vec::new();
        for (lineno, line) in lines {
            let line = line?;
            let fields: Vec<_> = line.split_whitespace().collect();
            let [i, j, w] = fields.as_slice() else {
                return Err(bad(format!("line {}: expected `i j w`", lineno + 1)));
            };
            let parse_idx = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| bad(format!("line {}: bad index {s:?}: {e}", lineno + 1)))
            };
            let w = w
                .parse::<f64>()
                .map_err(|e| bad(format!("line {}: bad weight {w:?}: {e}", lineno + 1)))?;
            edges.push((parse_idx(i)?, parse_idx(j)?, w));
        }
        Self::from_edges(n_nodes, &edges)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeighting {
    #[default]
    Binary,
    InverseDistance,
}

/// Connects every node to its `k` nearest neighbours (Euclidean distance over
/// the rows of `points`), then symmetrizes with `A = max(A, Aᵀ)`.
///
/// Equal distances are ordered by ascending node index. With
/// [`KnnWeighting::InverseDistance`] two coincident nodes that become
/// neighbours are rejected, since their weight would be infinite.
pub fn knn_graph(points: ArrayView2<f64>, k: usize, weighting: KnnWeighting) -> Result<Graph> {
    let n = points.nrows();
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    if points.ncols() == 0 {
        return Err(Error::InvalidGraph("nodes have no features".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGraph("non-finite node feature".into()));
    }

    let mut a = Array2::<f64>::zeros((n, n));
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        for j in (0..n).filter(|&j| j != i) {
            order.push((squared_distance(points, i, j), j));
        }
        order.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for &(_, j) in &order[..k] {
            let w = match weighting {
                KnnWeighting::Binary => 1.0,
                KnnWeighting::InverseDistance => {
                    let d = squared_distance(points, i, j).sqrt();
                    if d == 0.0 {
                        return Err(Error::DuplicatePoints(i.min(j), i.max(j)));
                    }
                    1.0 / d
                }
            };
            a[[i, j]] = w;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let w = a[[i, j]].max(a[[j, i]]);
            a[[i, j]] = w;
            a[[j, i]] = w;
        }
    }
    Graph::from_adjacency(a)
}

fn squared_distance(points: ArrayView2<f64>, i: usize, j: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(points.row(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}
