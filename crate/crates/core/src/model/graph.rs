use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::ModelError;
use crate::linalg::{DenseSymmetric, Matrix};

/// Undirected neighbourhood graph for a Besag (intrinsic CAR) effect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds from per-node neighbour lists. Lists are symmetrized, sorted
    /// and deduplicated; self loops are rejected.
    pub fn from_neighbors(lists: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        let n = lists.len();
        let mut neighbors = vec![Vec::new(); n];
        for (i, list) in lists.iter().enumerate() {
            for &j in list {
                if j >= n {
                    return Err(ModelError::InvalidGraph { node: i, neighbor: j });
                }
                if j == i {
                    return Err(ModelError::InvalidGraph { node: i, neighbor: j });
                }
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { neighbors })
    }

    /// Builds from a symmetric 0/1 adjacency matrix with zero diagonal.
    pub fn from_adjacency(adj: &Matrix) -> Result<Self, ModelError> {
        let n = adj.rows();
        let mut lists = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if adj[(i, j)] != 0.0 {
                    if i == j {
                        return Err(ModelError::InvalidGraph { node: i, neighbor: j });
                    }
                    lists[i].push(j);
                }
            }
        }
        Self::from_neighbors(lists)
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn adjacency(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(n, n);
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                m[(i, j)] = 1.0;
            }
        }
        m
    }

    /// Besag structure matrix `R = diag(degree) − adjacency`.
    pub fn structure(&self) -> DenseSymmetric {
        let mut m = self.adjacency();
        m.scale(-1.0);
        for i in 0..self.n() {
            m[(i, i)] = self.degree(i) as f64;
        }
        m.symmetrized()
    }

    pub fn connected_components(&self) -> usize {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &self.neighbors[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_graph() {
        let g = Graph::from_neighbors(vec![vec![1], vec![]]).unwrap();
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.structure(), DenseSymmetric::new(2, vec![1.0, -1.0, -1.0, 1.0]).unwrap());
        assert_eq!(g.connected_components(), 1);
    }

    #[test]
    fn counts_components() {
        let g = Graph::from_neighbors(vec![vec![1], vec![0], vec![3], vec![], vec![]]).unwrap();
        assert_eq!(g.connected_components(), 3);
    }

    #[test]
    fn rejects_self_loop() {
        assert!(Graph::from_neighbors(vec![vec![0]]).is_err());
    }
}
