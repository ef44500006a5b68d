//! The structural model, the pixel classifier and their combined forward pass.

use std::path::Path;
use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{GnnKind, GnnSegConfig};
use crate::error::{Error, Result};
use crate::graphbuild::{build_graph, node_input_features, RegionGraph};
use crate::imagecore::{normalize, LabelMask, Slice, CLASS_COUNT};
use crate::neural::checkpoint::{self, CheckpointHeader};
use crate::neural::{
    Activation, Adjacency, Fcn, GatLayer, GcnLayer, GraphLayer, HeadCombine, Matrix, MutualInteraction, ParamStore,
    SelfInteraction, Tape, Var,
};
use crate::superpixel::{snic_segment, SuperpixelLabeling};

/// Name prefixes that split the parameter store into its two parts.
pub const STRUCTURAL_PREFIX: &str = "structural.";
pub const CLASSIFIER_PREFIX: &str = "classifier.";

/// Exact trainable scalar counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCount {
    pub structural: usize,
    pub classifier: usize,
    pub total: usize,
}

/// Everything derived from one slice that the model consumes.
#[derive(Debug, Clone)]
pub struct PreparedSlice {
    /// The min-max normalized slice.
    pub slice: Slice,
    pub labeling: SuperpixelLabeling,
    pub graph: RegionGraph,
    pub adjacency: Rc<Adjacency>,
    pub node_inputs: Matrix,
    pub gray: Matrix,
    pub position: Matrix,
    /// `(W·H) x m` modality channels.
    pub pixels: Matrix,
    pub region_of: Rc<Vec<usize>>,
    pub targets: Option<Rc<Vec<usize>>>,
}

impl PreparedSlice {
    /// Normalize, segment into superpixels and build the region graph.
    pub fn new(slice: &Slice, mask: Option<&LabelMask>, config: &GnnSegConfig) -> Result<Self> {
        if slice.modality_count() != config.modalities {
            return Err(Error::validation(format!(
                "slice has {} modalities, model expects {}",
                slice.modality_count(),
                config.modalities
            )));
        }
        let normalized = normalize(slice).slice;
        let labeling = snic_segment(&normalized, &config.superpixel)?;
        let graph = build_graph(&labeling, &normalized)?;
        Self::from_parts(normalized, labeling, graph, mask)
    }

    /// Assemble from an already normalized slice, its labeling and graph.
    pub fn from_parts(
        slice: Slice,
        labeling: SuperpixelLabeling,
        graph: RegionGraph,
        mask: Option<&LabelMask>,
    ) -> Result<Self> {
        if (labeling.width(), labeling.height()) != (slice.width(), slice.height()) {
            return Err(Error::dims(
                format!("{}x{} (slice)", slice.width(), slice.height()),
                format!("{}x{} (labeling)", labeling.width(), labeling.height()),
            ));
        }
        if graph.n != labeling.region_count() || graph.modality_count() != slice.modality_count() {
            return Err(Error::validation(format!(
                "graph with {} nodes and {} modalities does not match a labeling with {} regions and a {}-modality slice",
                graph.n,
                graph.modality_count(),
                labeling.region_count(),
                slice.modality_count()
            )));
        }
        let targets = match mask {
            Some(mask) => {
                if !mask.same_dims(&slice) {
                    return Err(Error::dims(
                        format!("{}x{} (slice)", slice.width(), slice.height()),
                        format!("{}x{} (mask)", mask.width(), mask.height()),
                    ));
                }
                Some(Rc::new(mask.labels().iter().map(|&l| l as usize).collect()))
            }
            None => None,
        };
        let m = slice.modality_count();
        let pixels = Matrix::from_fn(slice.pixel_count(), m, |p, k| slice.modality(k)[p]);
        Ok(PreparedSlice {
            adjacency: Rc::new(graph.adjacency()?),
            node_inputs: node_input_features(&graph),
            gray: graph.gray_features(),
            position: graph.position_features(),
            region_of: Rc::new(labeling.region_of().to_vec()),
            pixels,
            targets,
            slice,
            labeling,
            graph,
        })
    }
}

/// Structural model plus pixel classifier, all parameters in one store.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnSegModel {
    pub config: GnnSegConfig,
    pub store: ParamStore,
    pub fcn_gray: Fcn,
    pub si_gray: SelfInteraction,
    pub fcn_position: Fcn,
    pub si_position: SelfInteraction,
    pub gnn: Vec<GraphLayer>,
    pub si_gnn: SelfInteraction,
    pub mutual: MutualInteraction,
    pub final_fcn: Fcn,
    pub classifier: Fcn,
}

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardVars {
    /// `n x 1` per-superpixel structural feature.
    pub node_values: Var,
    /// `(W·H) x 4` class logits.
    pub logits: Var,
}

impl GnnSegModel {
    /// Build a model with parameters drawn from a generator seeded by `seed`.
    pub fn new(config: GnnSegConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let act = config.hidden_activation;
        let s = STRUCTURAL_PREFIX;
        let m = config.modalities;

        let fcn_gray = Fcn::new(&mut store, &format!("{s}fcn_gray"), m, &config.gray_widths, act, act, &mut rng);
        let gray_out = *config.gray_widths.last().expect("validated");
        let si_gray = SelfInteraction::new(&mut store, &format!("{s}si_gray"), gray_out, act, &mut rng);
        let fcn_position = Fcn::new(
            &mut store,
            &format!("{s}fcn_position"),
            2,
            &config.position_widths,
            act,
            act,
            &mut rng,
        );
        let pos_out = *config.position_widths.last().expect("validated");
        let si_position = SelfInteraction::new(&mut store, &format!("{s}si_position"), pos_out, act, &mut rng);

        let mut gnn = Vec::with_capacity(config.gnn_widths.len());
        let mut fan_in = m + 2;
        let layers = config.gnn_widths.len();
        for (k, &width) in config.gnn_widths.iter().enumerate() {
            let name = format!("{s}gnn.{k}");
            let layer = match config.gnn_kind {
                GnnKind::Gat => {
                    let combine = if k + 1 == layers {
                        HeadCombine::Average
                    } else {
                        HeadCombine::Concat
                    };
                    GraphLayer::Gat(GatLayer::new(
                        &mut store,
                        &name,
                        fan_in,
                        config.head_width(k),
                        config.heads,
                        combine,
                        &mut rng,
                    ))
                }
                GnnKind::Gcn => {
                    GraphLayer::Gcn(GcnLayer::new(&mut store, &name, fan_in, width, Activation::Relu, &mut rng))
                }
            };
            fan_in = layer.output_width();
            gnn.push(layer);
        }
        let si_gnn = SelfInteraction::new(&mut store, &format!("{s}si_gnn"), fan_in, act, &mut rng);
        let [w1, w2] = config.mutual_widths;
        let mutual = MutualInteraction::new(&mut store, &format!("{s}mutual"), w1, w2, act, &mut rng);
        let final_fcn = Fcn::new(
            &mut store,
            &format!("{s}final"),
            w1 + w2,
            &config.final_widths,
            act,
            Activation::Identity,
            &mut rng,
        );

        let mut widths = config.classifier.hidden.clone();
        widths.push(CLASS_COUNT);
        let classifier = Fcn::new(
            &mut store,
            &format!("{CLASSIFIER_PREFIX}mlp"),
            9 * (m + 1),
            &widths,
            act,
            Activation::Identity,
            &mut rng,
        );

        Ok(GnnSegModel {
            config,
            store,
            fcn_gray,
            si_gray,
            fcn_position,
            si_position,
            gnn,
            si_gnn,
            mutual,
            final_fcn,
            classifier,
        })
    }

    pub fn count_parameters(&self) -> ParameterCount {
        let structural = self.store.scalar_count_with_prefix(STRUCTURAL_PREFIX);
        let classifier = self.store.scalar_count_with_prefix(CLASSIFIER_PREFIX);
        ParameterCount {
            structural,
            classifier,
            total: self.store.scalar_count(),
        }
    }

    /// Per-parameter trainable flags honouring the frozen-classifier setting.
    pub fn trainable_mask(&self) -> Vec<bool> {
        self.store
            .entries()
            .iter()
            .map(|e| !(self.config.classifier.frozen && e.name.starts_with(CLASSIFIER_PREFIX)))
            .collect()
    }

    /// Record the structural forward pass with parameters from `store`
    /// (normally `self.store`; gradient checks pass a perturbed copy).
    pub fn structural_on_tape(&self, tape: &mut Tape, store: &ParamStore, prep: &PreparedSlice) -> Result<Var> {
        tape.set_scope("gray stream");
        let g = tape.constant(prep.gray.clone());
        let a = self.fcn_gray.forward(tape, store, g)?;
        let a = self.si_gray.forward(tape, store, a)?;

        tape.set_scope("position stream");
        let p = tape.constant(prep.position.clone());
        let b = self.fcn_position.forward(tape, store, p)?;
        let b = self.si_position.forward(tape, store, b)?;

        let mut c = tape.constant(prep.node_inputs.clone());
        for (k, layer) in self.gnn.iter().enumerate() {
            tape.set_scope(&format!("graph layer {k}"));
            c = layer.forward(tape, store, c, &prep.adjacency)?;
        }
        tape.set_scope("graph self interaction");
        let c = self.si_gnn.forward(tape, store, c)?;

        tape.set_scope("mutual interaction");
        let ab = tape.hcat(&[a, b])?;
        let tau = self.mutual.forward(tape, store, ab, c)?;

        tape.set_scope("final fcn");
        self.final_fcn.forward(tape, store, tau)
    }

    /// Record the classifier on the channel stack `[modalities | I']`, where
    /// `I'` is the per-pixel feature before min-max scaling.
    pub fn classifier_on_tape(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        pixels: &Matrix,
        feature: Var,
        width: usize,
        height: usize,
    ) -> Result<Var> {
        tape.set_scope("classifier");
        let scaled = tape.min_max(feature);
        let channels = tape.constant(pixels.clone());
        let stack = tape.hcat(&[channels, scaled])?;
        let windows = tape.window3(stack, width, height)?;
        self.classifier.forward(tape, store, windows)
    }

    /// Full forward pass: structural feature, reconstruction, classifier.
    pub fn forward_on_tape(&self, tape: &mut Tape, store: &ParamStore, prep: &PreparedSlice) -> Result<ForwardVars> {
        let node_values = self.structural_on_tape(tape, store, prep)?;
        tape.set_scope("reconstruction");
        let feature = tape.gather(node_values, prep.region_of.clone())?;
        let logits = self.classifier_on_tape(
            tape,
            store,
            &prep.pixels,
            feature,
            prep.slice.width(),
            prep.slice.height(),
        )?;
        Ok(ForwardVars { node_values, logits })
    }

    /// Mean pixel cross-entropy of the full forward pass.
    pub fn loss_on_tape(&self, tape: &mut Tape, store: &ParamStore, prep: &PreparedSlice) -> Result<Var> {
        let targets = prep
            .targets
            .clone()
            .ok_or_else(|| Error::validation("training sample has no label mask"))?;
        let vars = self.forward_on_tape(tape, store, prep)?;
        tape.set_scope("loss");
        tape.cross_entropy(vars.logits, targets)
    }

    /// Per-superpixel structural feature (length `n`).
    pub fn structural_forward(&self, prep: &PreparedSlice) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let out = self.structural_on_tape(&mut tape, &self.store, prep)?;
        tape.check_finite()?;
        Ok(tape.value(out).as_slice().to_vec())
    }

    /// Classify every pixel of a normalized slice given the reconstructed
    /// feature `i_prime` (one value per pixel, row-major).
    pub fn classify_pixels(&self, slice: &Slice, i_prime: &[f64]) -> Result<LabelMask> {
        let logits = self.classifier_logits(slice, i_prime)?;
        labels_from_logits(&logits, slice.width(), slice.height())
    }

    pub fn classifier_logits(&self, slice: &Slice, i_prime: &[f64]) -> Result<Matrix> {
        if i_prime.len() != slice.pixel_count() {
            return Err(Error::dims(
                format!("{} feature values ({}x{})", slice.pixel_count(), slice.width(), slice.height()),
                format!("{} feature values", i_prime.len()),
            ));
        }
        if slice.modality_count() != self.config.modalities {
            return Err(Error::validation(format!(
                "slice has {} modalities, model expects {}",
                slice.modality_count(),
                self.config.modalities
            )));
        }
        let pixels = Matrix::from_fn(slice.pixel_count(), slice.modality_count(), |p, k| slice.modality(k)[p]);
        let mut tape = Tape::new();
        let feature = tape.constant(Matrix::column(i_prime));
        let logits = self.classifier_on_tape(&mut tape, &self.store, &pixels, feature, slice.width(), slice.height())?;
        tape.check_finite()?;
        Ok(tape.value(logits).clone())
    }

    /// Segment a prepared slice.
    pub fn infer(&self, prep: &PreparedSlice) -> Result<Inference> {
        let node_values = self.structural_forward(prep)?;
        let i_prime = reconstruct_slice(&prep.labeling, &node_values)?;
        let mask = self.classify_pixels(&prep.slice, &i_prime)?;
        Ok(Inference {
            node_values,
            i_prime,
            mask,
        })
    }

    pub fn checkpoint_header(&self, step: u64) -> Result<CheckpointHeader> {
        Ok(CheckpointHeader::describe(&self.store, serde_json::to_value(&self.config)?, step))
    }

    pub fn save(&self, path: &Path, step: u64) -> Result<()> {
        checkpoint::write(path, &self.checkpoint_header(step)?, &self.store)
    }

    pub fn to_checkpoint_bytes(&self, step: u64) -> Result<Vec<u8>> {
        checkpoint::encode(&self.checkpoint_header(step)?, &self.store)
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<(Self, u64)> {
        let (header, values) = checkpoint::decode(bytes)?;
        Self::from_header(header, &values)
    }

    /// Load a model and the optimizer step count it was saved at.
    pub fn load(path: &Path) -> Result<(Self, u64)> {
        let (header, values) = checkpoint::read(path)?;
        Self::from_header(header, &values)
    }

    fn from_header(header: CheckpointHeader, values: &[f64]) -> Result<(Self, u64)> {
        let config: GnnSegConfig = serde_json::from_value(header.architecture.clone())?;
        let mut model = Self::new(config, 0)?;
        header.matches(&model.store)?;
        model.store.load_flat(values)?;
        Ok((model, header.step))
    }
}

/// Result of segmenting one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub node_values: Vec<f64>,
    /// Reconstructed structural feature per pixel, before scaling.
    pub i_prime: Vec<f64>,
    pub mask: LabelMask,
}

/// Paint every pixel with the value of its superpixel.
pub fn reconstruct_slice(labeling: &SuperpixelLabeling, node_values: &[f64]) -> Result<Vec<f64>> {
    if node_values.len() != labeling.region_count() {
        return Err(Error::dims(
            format!("{} node values", labeling.region_count()),
            format!("{} node values", node_values.len()),
        ));
    }
    Ok(labeling.region_of().iter().map(|&r| node_values[r]).collect())
}

/// Row-wise argmax; ties go to the lower class id.
pub fn labels_from_logits(logits: &Matrix, width: usize, height: usize) -> Result<LabelMask> {
    let labels = (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = k;
                }
            }
            best as u8
        })
        .collect();
    LabelMask::new(width, height, labels)
}
