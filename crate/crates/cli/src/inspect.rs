//! Human-readable summaries of the files the runner reads and writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Cursor;
use std::path::Path;

use anyhow::{Context, Result};
use gsi_core::data::{read_ground_truth, GSGT_MAGIC};
use gsi_core::idx::{parse_idx, IdxData};
use gsi_core::nn::GSNN_MAGIC;
use gsi_core::observe::{read_observations, GSOB_MAGIC};
use gsi_core::{decompose_graph, DenseNet, Graph, NetRole, ShiftOperator};

pub fn inspect_path(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut s = format!("{}\n", path.display());
    if bytes.starts_with(GSOB_MAGIC) {
        let (n, obs) = read_observations(Cursor::new(&bytes))?;
        let observed: usize = obs.iter().map(|o| o.n_observed()).sum();
        let total = (n * obs.len()).max(1);
        writeln!(s, "format: GSOB1 observations")?;
        writeln!(s, "nodes: {n}\nrealizations: {}", obs.len())?;
        writeln!(
            s,
            "observed fraction: {:.4}",
            observed as f64 / total as f64
        )?;
    } else if bytes.starts_with(GSGT_MAGIC) {
        let x = read_ground_truth(Cursor::new(&bytes))?;
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        writeln!(s, "format: GSGT1 ground truth")?;
        writeln!(s, "nodes: {}\nrealizations: {}", x.ncols(), x.nrows())?;
        writeln!(s, "value range: [{lo}, {hi}]")?;
    } else if bytes.starts_with(GSNN_MAGIC) {
        let net = DenseNet::read_checkpoint(Cursor::new(&bytes), NetRole::Generator)?;
        writeln!(s, "format: GSNN1 network checkpoint")?;
        writeln!(s, "parameters: {}", net.n_params())?;
        for (i, layer) in net.layers().iter().enumerate() {
            writeln!(
                s,
                "layer {i}: {} -> {} {:?}",
                layer.in_dim(),
                layer.out_dim(),
                layer.activation()
            )?;
        }
    } else if bytes.len() >= 4 && bytes[0] == 0 && bytes[1] == 0 {
        match parse_idx(&bytes)? {
            IdxData::Images {
                count,
                rows,
                cols,
                ref pixels,
            } => {
                let lo = pixels.iter().min().copied().unwrap_or(0);
                let hi = pixels.iter().max().copied().unwrap_or(0);
                writeln!(s, "format: IDX images")?;
                writeln!(
                    s,
                    "images: {count}\nsize: {rows}x{cols}\npixel range: [{lo}, {hi}]"
                )?;
            }
            IdxData::Labels(labels) => {
                writeln!(s, "format: IDX labels\nlabels: {}", labels.len())?;
            }
        }
    } else {
        let graph = Graph::read_edge_list(Cursor::new(&bytes))
            .with_context(|| format!("{} is not a recognized file", path.display()))?;
        s.push_str(&describe_graph(&graph)?);
    }
    Ok(s)
}

pub fn describe_graph(graph: &Graph) -> Result<String> {
    let mut s = String::new();
    let deg = graph.degrees();
    let (lo, hi) = deg
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    writeln!(s, "format: edge list")?;
    writeln!(s, "nodes: {}\nedges: {}", graph.n_nodes(), graph.n_edges())?;
    writeln!(
        s,
        "degree: min {lo}, max {hi}, mean {:.3}",
        deg.mean().unwrap_or(0.0)
    )?;
    writeln!(s, "connected components: {}", graph.n_components())?;
    let sd = decompose_graph(graph, ShiftOperator::Laplacian)?;
    let ev = sd.eigenvalues();
    if ev.len() > 1 {
        writeln!(
            s,
            "laplacian eigenvalues: lambda_2 {:.6}, lambda_max {:.6}",
            ev[1],
            ev[ev.len() - 1]
        )?;
    }
    Ok(s)
}
