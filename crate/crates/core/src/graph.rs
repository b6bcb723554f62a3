//! Window → order-preserving path graph.
//!
//! Node `i` is frame `i` of the window with features
//! `[dlc_norm, b1, …, b8]`; edges run `i → i+1` in log order.

use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ingest::Window;
use crate::nn::{SparseMatrix, Tensor};

pub const NODE_FEATURES: usize = 9;

/// Which payload representation feeds columns 1..8 of the node features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ByteMode {
    #[default]
    Binarized,
    Normalized,
}

impl FromStr for ByteMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binarized" | "binary" => Ok(ByteMode::Binarized),
            "normalized" => Ok(ByteMode::Normalized),
            other => Err(Error::Config(format!("unknown byte mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for ByteMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ByteMode::Binarized => "binarized",
            ByteMode::Normalized => "normalized",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowGraph {
    /// `W × 9`
    pub node_features: Tensor,
    pub edges: Vec<(usize, usize)>,
    pub label: u8,
    pub window_index: usize,
}

impl WindowGraph {
    pub fn new(
        node_features: Tensor,
        edges: Vec<(usize, usize)>,
        label: u8,
        window_index: usize,
    ) -> Result<Self> {
        let n = node_features.rows();
        if node_features.shape().len() != 2 {
            return Err(Error::invalid("node features must be a matrix"));
        }
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= n || b >= n) {
            return Err(Error::invalid(format!("edge ({a}, {b}) outside {n} nodes")));
        }
        Ok(Self {
            node_features,
            edges,
            label,
            window_index,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.node_features.rows()
    }

    /// Sparse form of [`normalized_adjacency`], used by the convolution kernel.
    pub fn propagation(&self) -> Arc<SparseMatrix> {
        Arc::new(propagation_matrix(self))
    }
}

pub fn build_graph(window: &Window, mode: ByteMode) -> Result<WindowGraph> {
    let w = window.frames.len();
    if w < 2 {
        return Err(Error::invalid(format!(
            "window {} has {w} frame(s); a path graph needs at least 2",
            window.index
        )));
    }
    let mut data = Vec::with_capacity(w * NODE_FEATURES);
    for f in &window.frames {
        data.push(f.dlc_norm);
        match mode {
            ByteMode::Binarized => data.extend(f.byte_bin.iter().map(|&b| f64::from(b))),
            ByteMode::Normalized => data.extend_from_slice(&f.byte_norm),
        }
    }
    let edges = (0..w - 1).map(|i| (i, i + 1)).collect();
    WindowGraph::new(
        Tensor::matrix(w, NODE_FEATURES, data)?,
        edges,
        window.label,
        window.index,
    )
}

pub fn build_graphs(windows: &[Window], mode: ByteMode) -> Result<Vec<WindowGraph>> {
    windows.iter().map(|w| build_graph(w, mode)).collect()
}

// Entries of Ã = A + Aᵀ + I and its row degrees.
fn augmented_entries(graph: &WindowGraph) -> (Vec<(usize, usize, f64)>, Vec<f64>) {
    let n = graph.num_nodes();
    let mut entries = Vec::with_capacity(2 * graph.edges.len() + n);
    for &(a, b) in &graph.edges {
        entries.push((a, b, 1.0));
        entries.push((b, a, 1.0));
    }
    entries.extend((0..n).map(|i| (i, i, 1.0)));
    let mut degree = vec![0.0; n];
    for &(i, _, v) in &entries {
        degree[i] += v;
    }
    (entries, degree)
}

/// `D̃^{-1/2} (A + Aᵀ + I) D̃^{-1/2}` as a dense `W × W` matrix.
pub fn normalized_adjacency(graph: &WindowGraph) -> Tensor {
    propagation_matrix(graph).to_dense()
}

pub fn propagation_matrix(graph: &WindowGraph) -> SparseMatrix {
    let (entries, degree) = augmented_entries(graph);
    let scaled = entries
        .into_iter()
        .map(|(i, j, v)| (i, j, v / (degree[i] * degree[j]).sqrt()))
        .collect();
    SparseMatrix::from_triplets(graph.num_nodes(), scaled).expect("edges validated on construction")
}

/// Writes a node table `(window_index, node_index, f0..f8)` and an edge
/// manifest `(window_index, src, dst)`.
pub fn write_graph_dump<N: Write, E: Write>(graphs: &[WindowGraph], nodes: N, edges: E) -> Result<()> {
    let mut nw = csv::Writer::from_writer(nodes);
    let mut header = vec!["window_index".to_string(), "node_index".to_string()];
    header.extend((0..NODE_FEATURES).map(|i| format!("f{i}")));
    nw.write_record(&header)?;
    let mut ew = csv::Writer::from_writer(edges);
    ew.write_record(["window_index", "src", "dst"])?;
    for g in graphs {
        for i in 0..g.num_nodes() {
            let mut row = vec![g.window_index.to_string(), i.to_string()];
            row.extend(g.node_features.row(i).iter().map(|v| v.to_string()));
            nw.write_record(&row)?;
        }
        for &(a, b) in &g.edges {
            ew.write_record([g.window_index.to_string(), a.to_string(), b.to_string()])?;
        }
    }
    nw.flush().map_err(|e| Error::io("<nodes>", e))?;
    ew.flush().map_err(|e| Error::io("<edges>", e))?;
    Ok(())
}
