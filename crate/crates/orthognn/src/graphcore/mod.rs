//! Graph construction and sparse linear algebra: undirected graphs,
//! CSR matrices, the symmetric propagation matrix P = D^{−1/2} A D^{−1/2},
//! and file ingestion (edge lists, feature/label CSVs, PGM images).

mod io;

pub use io::{load_dataset, read_pgm, write_pgm, GrayImage};

use crate::Mat;
use thiserror::Error;

/// Per-node signal matrix (n rows, one column per channel).
pub type GraphSignal = Mat;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("endpoint out of range: edge ({u}, {v}) with n={n}")]
    EndpointOutOfRange { u: usize, v: usize, n: usize },
    #[error("self-loop on node {node} rejected (pass the drop-self-loops flag to ignore)")]
    SelfLoop { node: usize },
    #[error("node {node} is isolated; add self-loops or connect it")]
    IsolatedNode { node: usize },
    #[error("signal has {got} rows, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}: row count mismatch: {got} rows for {expected} nodes")]
    CountMismatch { path: String, got: usize, expected: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("class {class} has no nodes")]
    EmptyClass { class: usize },
    #[error("image must be at least 2x2 pixels, got {height}x{width}")]
    ImageTooSmall { height: usize, width: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// What to do with self-loops present in raw edge input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelfLoopPolicy {
    Reject,
    Drop,
}

/// Undirected graph with optional node features and class labels.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    features: Option<Mat>,
    labels: Option<Vec<usize>>,
    num_classes: usize,
}

impl Graph {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Deduplicated edges with u < v.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> Option<&Mat> {
        self.features.as_ref()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.n];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    /// Attach an n×r feature matrix.
    pub fn with_features(mut self, features: Mat) -> Result<Self, GraphError> {
        if features.rows() != self.n {
            return Err(GraphError::DimensionMismatch {
                got: features.rows(),
                expected: self.n,
            });
        }
        self.features = Some(features);
        Ok(self)
    }

    /// Attach class labels; every class in [0, num_classes) must occur.
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self, GraphError> {
        if labels.len() != self.n {
            return Err(GraphError::DimensionMismatch {
                got: labels.len(),
                expected: self.n,
            });
        }
        let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; classes];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(GraphError::EmptyClass { class: missing });
        }
        self.labels = Some(labels);
        self.num_classes = classes;
        Ok(self)
    }
}

/// Builds a deduplicated, self-loop-free undirected graph from raw pairs.
pub fn build_graph(
    edge_list: &[(usize, usize)],
    n: usize,
    self_loops: SelfLoopPolicy,
) -> Result<Graph, GraphError> {
    let mut edges = Vec::with_capacity(edge_list.len());
    for &(u, v) in edge_list {
        if u >= n || v >= n {
            return Err(GraphError::EndpointOutOfRange { u, v, n });
        }
        if u == v {
            match self_loops {
                SelfLoopPolicy::Reject => return Err(GraphError::SelfLoop { node: u }),
                SelfLoopPolicy::Drop => continue,
            }
        }
        edges.push((u.min(v), u.max(v)));
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(Graph {
        n,
        edges,
        features: None,
        labels: None,
        num_classes: 0,
    })
}

/// Symmetric CSR matrix over 64-bit reals. Column indices are sorted
/// within each row, which fixes the spmv summation order.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets; duplicates are not allowed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        for pair in triplets.windows(2) {
            assert!(
                (pair[0].0, pair[0].1) != (pair[1].0, pair[1].1),
                "duplicate entry at ({}, {})",
                pair[0].0,
                pair[0].1
            );
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut row = 0usize;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet out of range");
            while row < r {
                row_offsets.push(col_indices.len());
                row += 1;
            }
            col_indices.push(c);
            values.push(v);
        }
        while row < n {
            row_offsets.push(col_indices.len());
            row += 1;
        }
        SparseMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Dense copy; used only by the eigendecomposition oracle.
    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                m[(r, self.col_indices[k])] = self.values[k];
            }
        }
        m
    }
}

/// P = D^{−1/2} A D^{−1/2}, optionally with self-loops added first
/// (GCN-style). Eigenvalues lie in [−1, 1]. Every node must end up with
/// degree ≥ 1.
pub fn propagation_matrix(g: &Graph, add_self_loops: bool) -> Result<SparseMatrix, GraphError> {
    let mut deg = g.degrees();
    if add_self_loops {
        for d in &mut deg {
            *d += 1;
        }
    }
    if let Some(node) = deg.iter().position(|&d| d == 0) {
        return Err(GraphError::IsolatedNode { node });
    }
    let mut triplets = Vec::with_capacity(2 * g.edges.len() + if add_self_loops { g.n } else { 0 });
    for &(u, v) in &g.edges {
        let w = 1.0 / ((deg[u] * deg[v]) as f64).sqrt();
        triplets.push((u, v, w));
        triplets.push((v, u, w));
    }
    if add_self_loops {
        for i in 0..g.n {
            triplets.push((i, i, 1.0 / deg[i] as f64));
        }
    }
    Ok(SparseMatrix::from_triplets(g.n, triplets))
}

/// CSR mat-vec per channel, summation in ascending column-index order.
pub fn spmv(m: &SparseMatrix, x: &GraphSignal) -> Result<GraphSignal, GraphError> {
    if x.rows() != m.n {
        return Err(GraphError::DimensionMismatch {
            got: x.rows(),
            expected: m.n,
        });
    }
    let mut out = Mat::zeros(x.rows(), x.cols());
    spmv_into(m, x, &mut out);
    Ok(out)
}

/// Unchecked spmv into a pre-allocated output (shapes asserted).
pub fn spmv_into(m: &SparseMatrix, x: &GraphSignal, out: &mut GraphSignal) {
    assert_eq!(x.rows(), m.n);
    assert_eq!(out.rows(), x.rows());
    assert_eq!(out.cols(), x.cols());
    let cols = x.cols();
    for r in 0..m.n {
        let out_row = out.row_mut(r);
        out_row.fill(0.0);
        for k in m.row_offsets[r]..m.row_offsets[r + 1] {
            let c = m.col_indices[k];
            let v = m.values[k];
            let x_row = x.row(c);
            for j in 0..cols {
                out_row[j] += v * x_row[j];
            }
        }
    }
}

/// Grid graph from a grayscale image: one node per pixel, 4-neighborhood
/// edges, signal = intensity / 255.
pub fn grid_graph_from_image(img: &GrayImage) -> Result<(Graph, GraphSignal), GraphError> {
    let (h, w) = (img.height, img.width);
    if h < 2 || w < 2 {
        return Err(GraphError::ImageTooSmall { height: h, width: w });
    }
    let n = h * w;
    let mut edges = Vec::with_capacity(h * (w - 1) + w * (h - 1));
    for y in 0..h {
        for x in 0..w {
            let id = y * w + x;
            if x + 1 < w {
                edges.push((id, id + 1));
            }
            if y + 1 < h {
                edges.push((id, id + w));
            }
        }
    }
    let graph = build_graph(&edges, n, SelfLoopPolicy::Reject)?;
    let signal = Mat::column(
        &img.pixels
            .iter()
            .map(|&p| f64::from(p) / 255.0)
            .collect::<Vec<_>>(),
    );
    Ok((graph, signal))
}

#[cfg(test)]
mod tests;
