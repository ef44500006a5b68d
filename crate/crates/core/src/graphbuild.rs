//! Region adjacency graph over superpixels with per-node feature matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::Slice;
use crate::neural::{Adjacency, Matrix};
use crate::superpixel::{region_stats, SuperpixelLabeling};

/// Undirected unit-weight graph over superpixels.
///
/// `edges` holds each unordered pair once as `(i, j)` with `i < j`, sorted.
/// `f_g` is `n x m` (mean intensity per modality) and `f_p` is `n x 2`
/// (centroid `x / (W - 1)`, `y / (H - 1)`, or 0 along a unit dimension).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    #[serde(rename = "F_g")]
    pub f_g: Vec<Vec<f64>>,
    #[serde(rename = "F_p")]
    pub f_p: Vec<[f64; 2]>,
}

impl RegionGraph {
    pub fn modality_count(&self) -> usize {
        self.f_g.first().map_or(0, Vec::len)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search(&key).is_ok()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == i || b == i).count()
    }

    pub fn adjacency(&self) -> Result<Adjacency> {
        Adjacency::from_edges(self.n, &self.edges)
    }

    pub fn gray_features(&self) -> Matrix {
        let m = self.modality_count();
        Matrix::from_fn(self.n, m, |i, k| self.f_g[i][k])
    }

    pub fn position_features(&self) -> Matrix {
        Matrix::from_fn(self.n, 2, |i, k| self.f_p[i][k])
    }

    /// Check internal consistency after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("graph has no nodes"));
        }
        if self.f_g.len() != self.n || self.f_p.len() != self.n {
            return Err(Error::validation(format!(
                "graph declares {} nodes but has {} F_g rows and {} F_p rows",
                self.n,
                self.f_g.len(),
                self.f_p.len()
            )));
        }
        let m = self.modality_count();
        if m == 0 || self.f_g.iter().any(|r| r.len() != m) {
            return Err(Error::validation("F_g rows must share one positive width"));
        }
        for w in self.edges.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::validation("edges must be sorted and unique"));
            }
        }
        if let Some(&(i, j)) = self.edges.iter().find(|&&(i, j)| i >= j || j >= self.n) {
            return Err(Error::validation(format!("invalid edge ({i}, {j})")));
        }
        let finite = self.f_g.iter().flatten().chain(self.f_p.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::validation("graph features must be finite"));
        }
        Ok(())
    }
}

/// Build the region adjacency graph of `labeling` with features from `slice`.
pub fn build_graph(labeling: &SuperpixelLabeling, slice: &Slice) -> Result<RegionGraph> {
    let stats = region_stats(labeling, slice)?;
    let (w, h) = (labeling.width(), labeling.height());
    let mut edges = Vec::new();
    let map = labeling.region_of();
    for y in 0..h {
        for x in 0..w {
            let a = map[y * w + x];
            if x + 1 < w {
                let b = map[y * w + x + 1];
                if a != b {
                    edges.push((a.min(b), a.max(b)));
                }
            }
            if y + 1 < h {
                let b = map[(y + 1) * w + x];
                if a != b {
                    edges.push((a.min(b), a.max(b)));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let sx = if w > 1 { (w - 1) as f64 } else { 0.0 };
    let sy = if h > 1 { (h - 1) as f64 } else { 0.0 };
    let scale = |v: f64, s: f64| if s > 0.0 { v / s } else { 0.0 };
    Ok(RegionGraph {
        n: stats.len(),
        edges,
        f_g: stats.iter().map(|s| s.mean.clone()).collect(),
        f_p: stats
            .iter()
            .map(|s| [scale(s.mean_x, sx), scale(s.mean_y, sy)])
            .collect(),
    })
}

/// Row-wise concatenation `[F_g | F_p]`, shape `n x (m + 2)`.
pub fn node_input_features(graph: &RegionGraph) -> Matrix {
    let m = graph.modality_count();
    Matrix::from_fn(graph.n, m + 2, |i, k| {
        if k < m {
            graph.f_g[i][k]
        } else {
            graph.f_p[i][k - m]
        }
    })
}
