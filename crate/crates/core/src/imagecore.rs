//! Multi-modality slices, label masks and the synthetic ring phantom.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of label classes including background.
pub const CLASS_COUNT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum Tissue {
    Background = 0,
    Csf = 1,
    Gm = 2,
    Wm = 3,
}

impl Tissue {
    pub const ALL: [Tissue; 4] = [Tissue::Background, Tissue::Csf, Tissue::Gm, Tissue::Wm];
    /// The three target tissues scored by the metrics.
    pub const TARGETS: [Tissue; 3] = [Tissue::Csf, Tissue::Gm, Tissue::Wm];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Tissue> {
        Tissue::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Tissue::Background => "background",
            Tissue::Csf => "csf",
            Tissue::Gm => "gm",
            Tissue::Wm => "wm",
        }
    }
}

/// Affine link between stored samples and raw units: a stored value `v`
/// stands for `min + v * (max - min)` in the source data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    /// Stored samples are already in raw units.
    pub const IDENTITY: ValueRange = ValueRange { min: 0.0, max: 1.0 };

    pub fn to_raw(self, v: f64) -> f64 {
        self.min + v * (self.max - self.min)
    }
}

/// A 2-D slice with one or more co-registered scalar modalities, stored
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    width: usize,
    height: usize,
    modalities: Vec<Vec<f64>>,
    names: Vec<String>,
    ranges: Vec<ValueRange>,
}

impl Slice {
    pub fn new(
        width: usize,
        height: usize,
        modalities: Vec<Vec<f64>>,
        names: Vec<String>,
    ) -> Result<Self> {
        let ranges = vec![ValueRange::IDENTITY; modalities.len()];
        Self::with_ranges(width, height, modalities, names, ranges)
    }

    pub fn with_ranges(
        width: usize,
        height: usize,
        modalities: Vec<Vec<f64>>,
        names: Vec<String>,
        ranges: Vec<ValueRange>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("slice dimensions must be positive"));
        }
        if modalities.is_empty() {
            return Err(Error::validation("a slice needs at least one modality"));
        }
        if names.len() != modalities.len() || ranges.len() != modalities.len() {
            return Err(Error::validation(format!(
                "{} modalities with {} names and {} ranges",
                modalities.len(),
                names.len(),
                ranges.len()
            )));
        }
        for (k, m) in modalities.iter().enumerate() {
            if m.len() != width * height {
                return Err(Error::dims(
                    format!("{} samples ({width}x{height})", width * height),
                    format!("{} samples in modality {k}", m.len()),
                ));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("modality {k} has non-finite samples")));
            }
        }
        Ok(Slice {
            width,
            height,
            modalities,
            names,
            ranges,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn modality_count(&self) -> usize {
        self.modalities.len()
    }

    pub fn modality(&self, k: usize) -> &[f64] {
        &self.modalities[k]
    }

    pub fn modality_names(&self) -> &[String] {
        &self.names
    }

    pub fn ranges(&self) -> &[ValueRange] {
        &self.ranges
    }

    #[inline]
    pub fn get(&self, k: usize, x: usize, y: usize) -> f64 {
        self.modalities[k][y * self.width + x]
    }

    pub fn is_normalized(&self) -> bool {
        self.modalities
            .iter()
            .all(|m| m.iter().all(|v| (0.0..=1.0).contains(v)))
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Per-pixel class ids in `0..CLASS_COUNT`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("mask dimensions must be positive"));
        }
        if labels.len() != width * height {
            return Err(Error::dims(
                format!("{} labels ({width}x{height})", width * height),
                format!("{} labels", labels.len()),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= CLASS_COUNT) {
            return Err(Error::validation(format!(
                "class id {bad} outside 0..{CLASS_COUNT}"
            )));
        }
        Ok(LabelMask {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    /// Pixel count per class id.
    pub fn histogram(&self) -> [usize; CLASS_COUNT] {
        let mut h = [0; CLASS_COUNT];
        for &l in &self.labels {
            h[l as usize] += 1;
        }
        h
    }

    pub fn same_dims(&self, slice: &Slice) -> bool {
        self.width == slice.width() && self.height == slice.height()
    }
}

/// Parameters of the concentric-ring phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    /// Side length in pixels.
    pub size: usize,
    pub seed: u64,
    /// Standard deviation of the additive Gaussian noise, in intensity units.
    pub noise_sigma: f64,
    /// Outer radii of the WM, GM and CSF rings as fractions of half the side.
    pub ring_radii: [f64; 3],
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            size: 64,
            seed: 0,
            noise_sigma: 0.05,
            ring_radii: [0.3, 0.6, 0.9],
        }
    }
}

/// Base intensity per tissue (background, CSF, GM, WM) for each of the two
/// phantom modalities. The second modality inverts the tissue contrast.
pub const PHANTOM_BASE: [[f64; CLASS_COUNT]; 2] = [[0.0, 0.2, 0.55, 0.85], [0.0, 0.95, 0.6, 0.35]];
pub const PHANTOM_MODALITIES: [&str; 2] = ["t1", "t2"];

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::validation("phantom size must be positive"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::validation("noise_sigma must be finite and non-negative"));
        }
        let r = self.ring_radii;
        if !(r[0] > 0.0 && r[0] < r[1] && r[1] < r[2] && r[2] <= 1.0) {
            return Err(Error::validation(format!(
                "ring radii must be strictly increasing within (0, 1], got {r:?}"
            )));
        }
        Ok(())
    }

    /// Class of pixel `(x, y)` by distance of its centre from the image centre.
    pub fn class_at(&self, x: usize, y: usize) -> Tissue {
        let c = (self.size as f64 - 1.0) / 2.0;
        let half = self.size as f64 / 2.0;
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        let d = (dx * dx + dy * dy).sqrt() / half;
        let [wm, gm, csf] = self.ring_radii;
        if d <= wm {
            Tissue::Wm
        } else if d <= gm {
            Tissue::Gm
        } else if d <= csf {
            Tissue::Csf
        } else {
            Tissue::Background
        }
    }

    /// A copy with ring radii perturbed by up to ±8%, seeded by `seed`.
    /// Used to give a training set some geometric variety.
    pub fn jittered(&self, seed: u64) -> PhantomSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a09_e667_f3bc_c908);
        let mut radii = self.ring_radii;
        for r in &mut radii {
            *r *= rng.gen_range(0.92..1.08);
        }
        radii[2] = radii[2].min(1.0);
        radii[1] = radii[1].min(radii[2] - 1e-3);
        radii[0] = radii[0].min(radii[1] - 1e-3);
        PhantomSpec {
            seed,
            ring_radii: radii,
            ..self.clone()
        }
    }
}

/// Two-modality ring phantom and its exact label mask. Noisy samples are
/// clamped to `[0, 1]`.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<(Slice, LabelMask)> {
    spec.validate()?;
    let n = spec.size;
    let mut labels = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            labels.push(spec.class_at(x, y).id());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::validation(e.to_string()))?)
    } else {
        None
    };
    let modalities = PHANTOM_BASE
        .iter()
        .map(|base| {
            labels
                .iter()
                .map(|&l| {
                    let v = base[l as usize];
                    match &noise {
                        Some(d) => (v + d.sample(&mut rng)).clamp(0.0, 1.0),
                        None => v,
                    }
                })
                .collect()
        })
        .collect();
    let names = PHANTOM_MODALITIES.iter().map(|s| s.to_string()).collect();
    let ranges = vec![ValueRange::IDENTITY; 2];
    let slice = Slice::with_ranges(n, n, modalities, names, ranges)?;
    let mask = LabelMask::new(n, n, labels)?;
    Ok((slice, mask))
}

/// Result of [`normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub slice: Slice,
    /// Modalities that were constant and were mapped to all zeros.
    pub constant_modalities: Vec<usize>,
}

impl Normalized {
    pub fn has_warning(&self) -> bool {
        !self.constant_modalities.is_empty()
    }
}

/// Per-modality min-max scaling to `[0, 1]`.
pub fn normalize(slice: &Slice) -> Normalized {
    let mut constant = Vec::new();
    let mut ranges = Vec::with_capacity(slice.modality_count());
    let modalities = slice
        .modalities
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let (lo, hi) = min_max(m);
            // Express the range in the slice's original raw units.
            let src = slice.ranges[k];
            ranges.push(ValueRange {
                min: src.to_raw(lo),
                max: src.to_raw(hi),
            });
            if hi > lo {
                let span = hi - lo;
                m.iter().map(|v| (v - lo) / span).collect()
            } else {
                constant.push(k);
                vec![0.0; m.len()]
            }
        })
        .collect();
    let slice = Slice {
        width: slice.width,
        height: slice.height,
        modalities,
        names: slice.names.clone(),
        ranges,
    };
    Normalized {
        slice,
        constant_modalities: constant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_modality(values: Vec<f64>, w: usize, h: usize) -> Slice {
        Slice::new(w, h, vec![values], vec!["m".into()]).unwrap()
    }

    #[test]
    fn zero_noise_is_exact_base() {
        let spec = PhantomSpec {
            size: 64,
            seed: 7,
            noise_sigma: 0.0,
            ..Default::default()
        };
        let (slice, mask) = generate_phantom(&spec).unwrap();
        for (p, &l) in mask.labels().iter().enumerate() {
            for k in 0..2 {
                assert_eq!(slice.modality(k)[p], PHANTOM_BASE[k][l as usize]);
            }
        }
    }

    #[test]
    fn phantom_is_deterministic() {
        let spec = PhantomSpec {
            size: 64,
            seed: 7,
            noise_sigma: 0.05,
            ..Default::default()
        };
        assert_eq!(generate_phantom(&spec).unwrap(), generate_phantom(&spec).unwrap());
        let other = PhantomSpec { seed: 8, ..spec };
        assert_ne!(generate_phantom(&other).unwrap().0, generate_phantom(&PhantomSpec { seed: 7, ..other.clone() }).unwrap().0);
    }

    #[test]
    fn histogram_matches_rasterization_oracle() {
        let spec = PhantomSpec {
            size: 64,
            seed: 7,
            ring_radii: [0.3, 0.6, 0.9],
            ..Default::default()
        };
        let (_, mask) = generate_phantom(&spec).unwrap();
        // Independent rasterization: squared distances against squared radii
        // in pixel units (half-size 32, centre 31.5).
        let mut expected = [0usize; 4];
        for y in 0..64 {
            for x in 0..64 {
                let d2 = (x as f64 - 31.5).powi(2) + (y as f64 - 31.5).powi(2);
                let class = if d2 <= (0.3f64 * 32.0).powi(2) {
                    3
                } else if d2 <= (0.6f64 * 32.0).powi(2) {
                    2
                } else if d2 <= (0.9f64 * 32.0).powi(2) {
                    1
                } else {
                    0
                };
                expected[class] += 1;
            }
        }
        assert_eq!(mask.histogram(), expected);
        // Frozen from the oracle above.
        assert_eq!(expected, [1488, 1448, 876, 284]);
        // Disk areas: π·9.6² ≈ 289.5, annuli ≈ 868.6 and 1447.6.
        let area = |r: f64| std::f64::consts::PI * (r * 32.0).powi(2);
        assert!((expected[3] as f64 - area(0.3)).abs() < 20.0);
        assert!((expected[2] as f64 - (area(0.6) - area(0.3))).abs() < 30.0);
        assert!((expected[1] as f64 - (area(0.9) - area(0.6))).abs() < 40.0);
    }

    #[test]
    fn invalid_radii_rejected() {
        for radii in [[0.6, 0.3, 0.9], [0.3, 0.3, 0.9], [0.0, 0.5, 0.9], [0.3, 0.6, 1.2]] {
            let spec = PhantomSpec {
                ring_radii: radii,
                ..Default::default()
            };
            assert!(matches!(generate_phantom(&spec), Err(Error::Validation(_))), "{radii:?}");
        }
    }

    #[test]
    fn jitter_keeps_valid_radii() {
        let base = PhantomSpec::default();
        for s in 0..50 {
            let j = base.jittered(s);
            j.validate().unwrap();
            assert_eq!(j.seed, s);
        }
    }

    #[test]
    fn normalize_affine() {
        let n = normalize(&one_modality(vec![2.0, 4.0, 6.0], 3, 1));
        assert_eq!(n.slice.modality(0), &[0.0, 0.5, 1.0]);
        assert!(!n.has_warning());
        assert_eq!(n.slice.ranges()[0], ValueRange { min: 2.0, max: 6.0 });
    }

    #[test]
    fn normalize_idempotent() {
        let spec = PhantomSpec::default();
        let (slice, _) = generate_phantom(&spec).unwrap();
        let once = normalize(&slice).slice;
        let twice = normalize(&once).slice;
        for k in 0..2 {
            for (a, b) in once.modality(k).iter().zip(twice.modality(k)) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn normalize_constant_warns() {
        let n = normalize(&one_modality(vec![5.0, 5.0], 2, 1));
        assert_eq!(n.slice.modality(0), &[0.0, 0.0]);
        assert_eq!(n.constant_modalities, vec![0]);
    }

    #[test]
    fn mask_validation() {
        assert!(LabelMask::new(2, 1, vec![0, 4]).is_err());
        assert!(LabelMask::new(2, 2, vec![0, 1]).is_err());
        assert!(Slice::new(2, 2, vec![vec![0.0; 4], vec![0.0; 3]], vec!["a".into(), "b".into()]).is_err());
    }
}
