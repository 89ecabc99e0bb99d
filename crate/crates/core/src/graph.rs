//! Undirected interaction graphs and their Laplacians.
//!
//! Vertices are 0-based internally. Configuration files use 1-based ids and
//! are converted at the boundary (see [`Graph::from_one_based`]).

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("a graph needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
}

/// Dense row-major square matrix. `N` is tens of agents, so nothing sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix rows must be square");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Induced max-norm: largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Fixed undirected simple graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from 0-based edges. Each unordered pair may appear once.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewVertices(n));
        }
        let mut seen = BTreeSet::new();
        let mut neighbors = vec![Vec::new(); n];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            for v in [i, j] {
                if v >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: v, n });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop(i, j));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(i, j));
            }
            normalized.push(key);
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: normalized,
            neighbors,
        })
    }

    /// Builds a graph from 1-based edges, as written in config files.
    pub fn from_one_based(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut zero = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            if i == 0 || j == 0 {
                return Err(GraphError::VertexOutOfRange { vertex: 0, n });
            }
            zero.push((i - 1, j - 1));
        }
        Self::new(n, &zero).map_err(|e| match e {
            GraphError::SelfLoop(i, j) => GraphError::SelfLoop(i + 1, j + 1),
            GraphError::DuplicateEdge(i, j) => GraphError::DuplicateEdge(i + 1, j + 1),
            GraphError::VertexOutOfRange { vertex, n } => GraphError::VertexOutOfRange {
                vertex: vertex + 1,
                n,
            },
            other => other,
        })
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::new(n, &edges)
    }

    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, &edges)
    }

    /// Six-agent network of the reference example: the cycle
    /// 1-2-4-6-5-3-1 plus the chord 1-6 (1-based ids).
    pub fn reference_six() -> Self {
        Self::from_one_based(6, &[(1, 2), (2, 4), (4, 6), (6, 5), (5, 3), (3, 1), (1, 6)])
            .expect("reference topology is well-formed")
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    /// Edges as sorted 0-based pairs, in insertion order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> Result<usize, GraphError> {
        self.neighbors
            .get(i)
            .map(Vec::len)
            .ok_or(GraphError::VertexOutOfRange {
                vertex: i,
                n: self.n,
            })
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Breadth-first traversal from vertex 0.
    pub fn is_connected(&self) -> bool {
        let mut visited = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        visited[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.neighbors[v] {
                if !visited[w] {
                    visited[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// L = D - A.
    pub fn laplacian(&self) -> Matrix {
        let mut l = Matrix::zeros(self.n);
        for &(i, j) in &self.edges {
            l[(i, j)] -= 1.0;
            l[(j, i)] -= 1.0;
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k2_laplacian() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(
            g.laplacian(),
            Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]])
        );
        assert!(g.is_connected());
        assert_eq!(g.degree(0).unwrap(), 1);
    }

    #[test]
    fn empty_edge_set_is_zero_and_disconnected() {
        let g = Graph::new(3, &[]).unwrap();
        assert_eq!(g.laplacian(), Matrix::zeros(3));
        assert!(!g.is_connected());
    }

    #[test]
    fn two_disjoint_edges_disconnected() {
        let g = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(!g.is_connected());
    }

    #[test]
    fn reference_topology_degrees() {
        let g = Graph::reference_six();
        assert_eq!(g.degrees(), vec![3, 2, 2, 2, 2, 3]);
        assert!(g.is_connected());
        // hubs 1 and 6 are adjacent
        assert!(g.neighbors(0).contains(&5));
        let l = g.laplacian();
        for i in 0..6 {
            assert_eq!(l[(i, i)], g.degree(i).unwrap() as f64);
            assert_eq!(l.row(i).iter().sum::<f64>(), 0.0);
        }
        assert!(l.is_symmetric(0.0));
    }

    #[test]
    fn malformed_graphs_rejected() {
        assert_eq!(Graph::new(1, &[]), Err(GraphError::TooFewVertices(1)));
        assert_eq!(Graph::new(3, &[(1, 1)]), Err(GraphError::SelfLoop(1, 1)));
        assert_eq!(
            Graph::new(3, &[(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(1, 0))
        );
        assert!(matches!(
            Graph::new(3, &[(0, 3)]),
            Err(GraphError::VertexOutOfRange { vertex: 3, n: 3 })
        ));
        assert!(matches!(
            Graph::from_one_based(3, &[(0, 1)]),
            Err(GraphError::VertexOutOfRange { .. })
        ));
        assert!(Graph::reference_six().degree(6).is_err());
    }
}
