//! Architecture configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::Activation;
use crate::superpixel::SnicParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GnnKind {
    #[default]
    Gat,
    Gcn,
}

impl std::str::FromStr for GnnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gat" => Ok(GnnKind::Gat),
            "gcn" => Ok(GnnKind::Gcn),
            other => Err(Error::validation(format!("unknown GNN kind {other:?} (expected gat or gcn)"))),
        }
    }
}

/// Per-pixel classifier over a 3x3 window of the `m + 1` input channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden: Vec<usize>,
    /// Keep the classifier parameters fixed during training.
    pub frozen: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            hidden: vec![64, 32],
            frozen: false,
        }
    }
}

/// Widths of every block of the structural model and the classifier.
///
/// Graph layer widths are the layer output widths. For attention layers the
/// last layer averages its heads, so its width is the per-head width; every
/// earlier layer concatenates its heads, so its width must be divisible by
/// `heads` and each head contributes `width / heads` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnnSegConfig {
    pub modalities: usize,
    pub gray_widths: Vec<usize>,
    pub position_widths: Vec<usize>,
    pub gnn_kind: GnnKind,
    pub gnn_widths: Vec<usize>,
    pub heads: usize,
    pub mutual_widths: [usize; 2],
    pub final_widths: Vec<usize>,
    pub hidden_activation: Activation,
    pub superpixel: SnicParams,
    pub classifier: ClassifierConfig,
}

impl Default for GnnSegConfig {
    fn default() -> Self {
        GnnSegConfig {
            modalities: 2,
            gray_widths: vec![20, 100],
            position_widths: vec![20, 100],
            gnn_kind: GnnKind::Gat,
            gnn_widths: vec![500, 10],
            heads: 5,
            mutual_widths: [200, 10],
            final_widths: vec![100, 100, 50, 1],
            hidden_activation: Activation::Elu,
            superpixel: SnicParams::default(),
            classifier: ClassifierConfig::default(),
        }
    }
}

impl GnnSegConfig {
    pub fn with_modalities(m: usize) -> Self {
        GnnSegConfig {
            modalities: m,
            ..Default::default()
        }
    }

    /// Every width divided by ten, for fast tests.
    pub fn tiny(m: usize) -> Self {
        GnnSegConfig {
            modalities: m,
            gray_widths: vec![2, 10],
            position_widths: vec![2, 10],
            gnn_kind: GnnKind::Gat,
            gnn_widths: vec![50, 1],
            heads: 5,
            mutual_widths: [20, 1],
            final_widths: vec![10, 10, 5, 1],
            hidden_activation: Activation::Elu,
            superpixel: SnicParams {
                target_regions: 16,
                ..Default::default()
            },
            classifier: ClassifierConfig {
                hidden: vec![8, 8],
                frozen: false,
            },
        }
    }

    /// Per-head output width of graph layer `k`.
    pub fn head_width(&self, k: usize) -> usize {
        let last = k + 1 == self.gnn_widths.len();
        match self.gnn_kind {
            GnnKind::Gat if !last => self.gnn_widths[k] / self.heads,
            _ => self.gnn_widths[k],
        }
    }

    pub fn stream_width(&self) -> usize {
        self.gray_widths.last().copied().unwrap_or(0) + self.position_widths.last().copied().unwrap_or(0)
    }

    pub fn gnn_output_width(&self) -> usize {
        self.gnn_widths.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, w: &[usize]| -> Result<()> {
            if w.is_empty() || w.contains(&0) {
                return Err(Error::validation(format!("{name} must be a nonempty list of positive widths")));
            }
            Ok(())
        };
        if self.modalities == 0 {
            return Err(Error::validation("modalities must be at least 1"));
        }
        positive("gray_widths", &self.gray_widths)?;
        positive("position_widths", &self.position_widths)?;
        positive("gnn_widths", &self.gnn_widths)?;
        positive("final_widths", &self.final_widths)?;
        positive("mutual_widths", &self.mutual_widths)?;
        positive("classifier.hidden", &self.classifier.hidden)?;
        if self.gnn_kind == GnnKind::Gat {
            if self.heads == 0 {
                return Err(Error::validation("heads must be at least 1"));
            }
            let concat = &self.gnn_widths[..self.gnn_widths.len() - 1];
            if let Some(w) = concat.iter().find(|&&w| w % self.heads != 0) {
                return Err(Error::validation(format!(
                    "attention layer width {w} is not divisible by {} heads",
                    self.heads
                )));
            }
        }
        if self.mutual_widths != [self.stream_width(), self.gnn_output_width()] {
            return Err(Error::validation(format!(
                "mutual_widths {:?} must equal the stream widths [{}, {}]",
                self.mutual_widths,
                self.stream_width(),
                self.gnn_output_width()
            )));
        }
        if self.final_widths.last() != Some(&1) {
            return Err(Error::validation("the final FCN must end in width 1"));
        }
        if self.hidden_activation == Activation::Identity {
            return Err(Error::validation("hidden_activation must be nonlinear"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        GnnSegConfig::default().validate().unwrap();
        GnnSegConfig::tiny(3).validate().unwrap();
        let c = GnnSegConfig::default();
        assert_eq!((c.head_width(0), c.head_width(1)), (100, 10));
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<GnnSegConfig>(&json).unwrap(), c);
        assert_eq!(serde_json::from_str::<GnnSegConfig>("{}").unwrap(), c);
    }

    #[test]
    fn rejects_bad_wiring() {
        let mut c = GnnSegConfig::default();
        c.mutual_widths = [100, 10];
        assert!(c.validate().is_err());
        let mut c = GnnSegConfig::default();
        c.gnn_widths = vec![501, 10];
        assert!(c.validate().is_err());
        c.gnn_kind = GnnKind::Gcn;
        c.validate().unwrap();
        assert_eq!("GCN".parse::<GnnKind>().unwrap(), GnnKind::Gcn);
    }
}
