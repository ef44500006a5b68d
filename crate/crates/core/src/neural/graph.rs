//! Node neighbourhoods as seen by the graph layers.

use crate::error::{Error, Result};

/// Closed neighbourhoods `N(i) ∪ {i}` of an undirected graph, each sorted
/// ascending. Self-loops are always present, so no node is ever isolated
/// from the point of view of message passing.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::validation(format!(
                    "edge ({a},{b}) out of range for {n} nodes"
                )));
            }
            if a == b {
                continue;
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Adjacency { neighbors })
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Closed neighbourhood of `i`, including `i`.
    pub fn closed(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Number of stored (directed) entries including self-loops.
    pub fn entry_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut reached = 1;
        while let Some(i) = stack.pop() {
            for &j in self.closed(i) {
                if !seen[j] {
                    seen[j] = true;
                    reached += 1;
                    stack.push(j);
                }
            }
        }
        reached == n
    }

    /// Symmetric normalization weights `1 / sqrt(d̂_i d̂_j)` laid out parallel
    /// to [`Adjacency::closed`], where `d̂` counts the self-loop.
    pub fn symmetric_weights(&self) -> Vec<Vec<f64>> {
        let deg: Vec<f64> = self.neighbors.iter().map(|l| l.len() as f64).collect();
        self.neighbors
            .iter()
            .enumerate()
            .map(|(i, list)| list.iter().map(|&j| 1.0 / (deg[i] * deg[j]).sqrt()).collect())
            .collect()
    }
}
