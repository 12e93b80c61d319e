//! Communication graph machinery: weighted adjacency, graph Laplacian,
//! leader-augmented matrix `H = L + diag(K)`, connectivity, and the spectral
//! certificates used by the feasibility analysis.
//!
//! The graph is undirected with nonnegative edge weights and no self-loops.
//! `K` holds the leader link weights `k_i >= 0`; at least one entry must be
//! positive, otherwise no agent can hear the leader and tracking is
//! impossible. For a connected graph with such a `K`, `H` is symmetric
//! positive definite.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{symmetric_eigenvalues, EigenError};

/// Absolute tolerance for symmetry / row-sum checks on input matrices.
pub const INPUT_TOL: f64 = 1e-12;

/// Relative tolerance (fraction of the largest eigenvalue magnitude) below
/// which a Laplacian eigenvalue counts as zero.
pub const ZERO_EIG_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("leader weight vector has length {got}, expected {expected}")]
    LeaderWeightLength { got: usize, expected: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("adjacency not symmetric at ({i},{j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("negative weight {value} at ({i},{j})")]
    NegativeWeight { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal entry {value} at ({i},{i}); self-loops are not allowed")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("negative leader weight {value} for agent {i}")]
    NegativeLeaderWeight { i: usize, value: f64 },
    #[error("all leader weights are zero; at least one agent must be connected to the leader")]
    NoLeaderLink,
    #[error("laplacian row {i} sums to {sum}, expected 0")]
    RowSumNonzero { i: usize, sum: f64 },
    #[error("laplacian off-diagonal entry ({i},{j}) is positive: {value}")]
    PositiveOffDiagonal { i: usize, j: usize, value: f64 },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// How a graph matrix in a config file is to be interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GraphFormat {
    Adjacency,
    Laplacian,
}

/// An immutable communication topology. Construct with [`build_topology`] or
/// [`from_laplacian`]; share freely across simulation workers.
#[derive(Debug, Clone)]
pub struct Topology {
    n: usize,
    adjacency: DMatrix<f64>,
    laplacian: DMatrix<f64>,
    leader_weights: DVector<f64>,
    h_matrix: DMatrix<f64>,
}

/// Eigenvalue summary of `L` and `H` together with the flags from the two
/// spectral lemmas: a connected graph has exactly one zero Laplacian
/// eigenvalue, and `H` is positive definite when additionally some `k_i > 0`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralFacts {
    /// Eigenvalues of the Laplacian, ascending.
    pub laplacian_eigenvalues: Vec<f64>,
    /// Eigenvalues of `H = L + diag(K)`, ascending.
    pub h_eigenvalues: Vec<f64>,
    /// Number of Laplacian eigenvalues below the scale-invariant zero
    /// tolerance; equals the number of connected components.
    pub laplacian_zero_count: usize,
    /// Smallest eigenvalue of `H`.
    pub h_min_eigenvalue: f64,
    pub connected: bool,
    /// True iff `laplacian_zero_count == 1` exactly matches `connected`.
    pub zero_count_matches_connectivity: bool,
    /// True iff `H` is positive definite.
    pub h_positive_definite: bool,
}

/// Build a topology from a symmetric nonnegative adjacency matrix and leader
/// weights. The Laplacian is `l_ii = sum_j w_ij`, `l_ij = -w_ij`.
pub fn build_topology(
    adjacency: DMatrix<f64>,
    leader_weights: DVector<f64>,
) -> Result<Topology, TopologyError> {
    let n = check_square(&adjacency)?;
    if leader_weights.len() != n {
        return Err(TopologyError::LeaderWeightLength {
            got: leader_weights.len(),
            expected: n,
        });
    }
    for i in 0..n {
        let d = adjacency[(i, i)];
        if d != 0.0 {
            return Err(TopologyError::NonzeroDiagonal { i, value: d });
        }
        for j in (i + 1)..n {
            let (a, b) = (adjacency[(i, j)], adjacency[(j, i)]);
            if (a - b).abs() > INPUT_TOL {
                return Err(TopologyError::Asymmetric { i, j, a, b });
            }
        }
        for j in 0..n {
            let w = adjacency[(i, j)];
            if w < 0.0 {
                return Err(TopologyError::NegativeWeight { i, j, value: w });
            }
        }
    }
    let mut any_leader = false;
    for (i, &k) in leader_weights.iter().enumerate() {
        if k < 0.0 {
            return Err(TopologyError::NegativeLeaderWeight { i, value: k });
        }
        if k > 0.0 {
            any_leader = true;
        }
    }
    if !any_leader {
        return Err(TopologyError::NoLeaderLink);
    }

    let mut laplacian = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut degree = 0.0;
        for j in 0..n {
            if j != i {
                let w = adjacency[(i, j)];
                laplacian[(i, j)] = -w;
                degree += w;
            }
        }
        laplacian[(i, i)] = degree;
    }
    let mut h_matrix = laplacian.clone();
    for i in 0..n {
        h_matrix[(i, i)] += leader_weights[i];
    }
    Ok(Topology {
        n,
        adjacency,
        laplacian,
        leader_weights,
        h_matrix,
    })
}

/// Build a topology from a matrix supplied directly as a graph Laplacian.
/// Rows must sum to zero and off-diagonal entries must be nonpositive; the
/// adjacency is recovered as `w_ij = -l_ij`.
pub fn from_laplacian(
    laplacian: DMatrix<f64>,
    leader_weights: DVector<f64>,
) -> Result<Topology, TopologyError> {
    let n = check_square(&laplacian)?;
    for i in 0..n {
        let sum: f64 = laplacian.row(i).iter().sum();
        if sum.abs() > INPUT_TOL * scale_of(&laplacian) {
            return Err(TopologyError::RowSumNonzero { i, sum });
        }
        for j in 0..n {
            if j != i && laplacian[(i, j)] > 0.0 {
                return Err(TopologyError::PositiveOffDiagonal {
                    i,
                    j,
                    value: laplacian[(i, j)],
                });
            }
        }
    }
    let mut adjacency = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if j != i {
                adjacency[(i, j)] = -laplacian[(i, j)];
            }
        }
    }
    build_topology(adjacency, leader_weights)
}

/// Build from either format.
pub fn from_matrix(
    format: GraphFormat,
    matrix: DMatrix<f64>,
    leader_weights: DVector<f64>,
) -> Result<Topology, TopologyError> {
    match format {
        GraphFormat::Adjacency => build_topology(matrix, leader_weights),
        GraphFormat::Laplacian => from_laplacian(matrix, leader_weights),
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<usize, TopologyError> {
    if m.nrows() != m.ncols() {
        return Err(TopologyError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(TopologyError::Empty);
    }
    Ok(m.nrows())
}

fn scale_of(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(1.0f64, |acc, &v| acc.max(v.abs()))
}

impl Topology {
    pub fn n_followers(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn leader_weights(&self) -> &DVector<f64> {
        &self.leader_weights
    }

    /// `H = L + diag(K)`.
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h_matrix
    }

    pub fn leader_weight(&self, i: usize) -> f64 {
        self.leader_weights[i]
    }

    /// Whether agent `i` can read the leader state continuously (`k_i > 0`).
    pub fn has_leader_access(&self, i: usize) -> bool {
        self.leader_weights[i] > 0.0
    }

    pub fn edge_weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    /// Neighbor ids of agent `i` (indices `j` with `w_ij > 0`), ascending.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&j| j != i && self.adjacency[(i, j)] > 0.0)
            .collect()
    }

    /// Breadth-first reachability from vertex 0 over positive-weight edges.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::new();
        seen[0] = true;
        queue.push_back(0);
        while let Some(i) = queue.pop_front() {
            for j in 0..self.n {
                if !seen[j] && self.adjacency[(i, j)] > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Dense symmetric eigendecomposition of `L` and `H` with the lemma
    /// flags. The zero-eigenvalue threshold is `1e-9` of the largest
    /// Laplacian eigenvalue magnitude, so the test is scale invariant.
    pub fn spectral_certificate(&self) -> Result<SpectralFacts, TopologyError> {
        let laplacian_eigenvalues = symmetric_eigenvalues(&self.laplacian)?;
        let h_eigenvalues = symmetric_eigenvalues(&self.h_matrix)?;
        let connected = self.is_connected();
        let max_abs = laplacian_eigenvalues
            .iter()
            .fold(0.0f64, |m, &x| m.max(x.abs()));
        let laplacian_zero_count = if max_abs > 0.0 {
            let tol = ZERO_EIG_REL_TOL * max_abs;
            laplacian_eigenvalues
                .iter()
                .filter(|&&x| x.abs() < tol)
                .count()
        } else {
            // Zero Laplacian: every vertex is its own component.
            self.n
        };
        let h_min_eigenvalue = h_eigenvalues[0];
        Ok(SpectralFacts {
            zero_count_matches_connectivity: (laplacian_zero_count == 1) == connected,
            h_positive_definite: h_min_eigenvalue > 0.0,
            laplacian_eigenvalues,
            h_eigenvalues,
            laplacian_zero_count,
            h_min_eigenvalue,
            connected,
        })
    }
}
