//! SNIC superpixels: grid-seeded, priority-queue region growing on a joint
//! intensity and position distance.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::Slice;

/// Intensities in `[0, 1]` are scaled by this factor before distances are
/// measured, so that `compactness` has its customary magnitude.
pub const INTENSITY_SCALE: f64 = 255.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnicParams {
    pub target_regions: usize,
    pub compactness: f64,
    pub modality_index: usize,
}

impl Default for SnicParams {
    fn default() -> Self {
        SnicParams {
            target_regions: 200,
            compactness: 10.0,
            modality_index: 0,
        }
    }
}

impl SnicParams {
    pub fn validate(&self, slice: &Slice) -> Result<()> {
        if self.target_regions == 0 {
            return Err(Error::validation("target_regions must be at least 1"));
        }
        if self.target_regions > slice.pixel_count() {
            return Err(Error::validation(format!(
                "target_regions {} exceeds the pixel count {}",
                self.target_regions,
                slice.pixel_count()
            )));
        }
        if !(self.compactness >= 0.0) || !self.compactness.is_finite() {
            return Err(Error::validation(format!(
                "compactness must be finite and nonnegative, got {}",
                self.compactness
            )));
        }
        if self.modality_index >= slice.modality_count() {
            return Err(Error::validation(format!(
                "modality_index {} out of range for {} modalities",
                self.modality_index,
                slice.modality_count()
            )));
        }
        Ok(())
    }
}

/// A partition of the pixel grid into labeled regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelLabeling {
    width: usize,
    height: usize,
    region_of: Vec<usize>,
    /// `(x, y)` coordinates per region in row-major order.
    pixels_of: Vec<Vec<(usize, usize)>>,
}

impl SuperpixelLabeling {
    /// Build from a per-pixel region map. Indices must be contiguous
    /// `0..n` with no empty region. Connectivity is not checked here; see
    /// [`SuperpixelLabeling::is_connected`].
    pub fn from_region_map(width: usize, height: usize, region_of: Vec<usize>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("labeling dimensions must be positive"));
        }
        if region_of.len() != width * height {
            return Err(Error::dims(
                format!("{} labels for {width}x{height}", width * height),
                format!("{} labels", region_of.len()),
            ));
        }
        let n = region_of.iter().max().map_or(0, |&m| m + 1);
        let mut pixels_of = vec![Vec::new(); n];
        for (p, &r) in region_of.iter().enumerate() {
            pixels_of[r].push((p % width, p / width));
        }
        if let Some(empty) = pixels_of.iter().position(Vec::is_empty) {
            return Err(Error::validation(format!(
                "region indices must be contiguous; region {empty} of {n} is empty"
            )));
        }
        Ok(SuperpixelLabeling {
            width,
            height,
            region_of,
            pixels_of,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn region_count(&self) -> usize {
        self.pixels_of.len()
    }

    pub fn region_of(&self) -> &[usize] {
        &self.region_of
    }

    pub fn region_at(&self, x: usize, y: usize) -> usize {
        self.region_of[y * self.width + x]
    }

    pub fn pixels_of(&self, region: usize) -> &[(usize, usize)] {
        &self.pixels_of[region]
    }

    /// True when every region is 4-connected.
    pub fn is_connected(&self) -> bool {
        let (w, h) = (self.width, self.height);
        let mut seen = vec![false; w * h];
        let mut queue = VecDeque::new();
        for (r, pixels) in self.pixels_of.iter().enumerate() {
            let (x0, y0) = pixels[0];
            seen[y0 * w + x0] = true;
            queue.push_back((x0, y0));
            let mut reached = 0;
            while let Some((x, y)) = queue.pop_front() {
                reached += 1;
                for (nx, ny) in neighbours4(x, y, w, h) {
                    let q = ny * w + nx;
                    if !seen[q] && self.region_of[q] == r {
                        seen[q] = true;
                        queue.push_back((nx, ny));
                    }
                }
            }
            if reached != pixels.len() {
                return false;
            }
        }
        true
    }

    /// Relabel regions so that old region `r` becomes `perm[r]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.region_count();
        let mut hit = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut hit[p], true)) {
            return Err(Error::validation(format!("not a permutation of 0..{n}")));
        }
        Self::from_region_map(
            self.width,
            self.height,
            self.region_of.iter().map(|&r| perm[r]).collect(),
        )
    }
}

/// In-bounds 4-neighbours of `(x, y)`.
pub(crate) fn neighbours4(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    let left = (x > 0).then(|| (x - 1, y));
    let right = (x + 1 < w).then(|| (x + 1, y));
    let up = (y > 0).then(|| (x, y - 1));
    let down = (y + 1 < h).then(|| (x, y + 1));
    [left, right, up, down].into_iter().flatten()
}

/// A grid seed: the continuous cell centre and the pixel it starts from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub cx: f64,
    pub cy: f64,
    pub x: usize,
    pub y: usize,
}

/// Regular seed grid for `target` regions. Returns the seeds in row-major
/// cell order together with the grid shape `(nx, ny)`.
pub fn seed_grid(width: usize, height: usize, target: usize) -> (Vec<Seed>, usize, usize) {
    let target = target.max(1);
    let ny = ((target as f64 * height as f64 / width as f64).sqrt().round() as usize).clamp(1, height);
    let nx = ((target as f64 / ny as f64).round() as usize).clamp(1, width);
    let mut seeds = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let (y0, y1) = (j * height / ny, (j + 1) * height / ny);
        for i in 0..nx {
            let (x0, x1) = (i * width / nx, (i + 1) * width / nx);
            seeds.push(Seed {
                cx: (x0 + x1 - 1) as f64 / 2.0,
                cy: (y0 + y1 - 1) as f64 / 2.0,
                x: (x0 + x1 - 1) / 2,
                y: (y0 + y1 - 1) / 2,
            });
        }
    }
    (seeds, nx, ny)
}

struct QueueEntry {
    priority: f64,
    seq: u64,
    pixel: usize,
    region: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    // Reversed so that `BinaryHeap` pops the smallest priority, and among
    // equal priorities the earliest insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Segment modality `params.modality_index` of `slice` into superpixels.
///
/// The region count equals the number of grid seeds, which approximates
/// `params.target_regions`. Each pixel is labeled exactly once, when it is
/// first popped from the queue. The priority of a candidate pixel for a
/// region is `sqrt(d_int^2 + (compactness / s)^2 * d_sp^2)`, where `d_int`
/// is the scaled intensity difference to the region's running mean, `d_sp`
/// the Euclidean distance to the region's seed centre and
/// `s = sqrt(HW / seeds)`.
pub fn snic_segment(slice: &Slice, params: &SnicParams) -> Result<SuperpixelLabeling> {
    params.validate(slice)?;
    let (w, h) = (slice.width(), slice.height());
    let values = slice.modality(params.modality_index);
    let (seeds, _, _) = seed_grid(w, h, params.target_regions);
    let n = seeds.len();
    let s = ((w * h) as f64 / n as f64).sqrt();
    let spatial_weight = (params.compactness / s).powi(2);

    const UNLABELED: usize = usize::MAX;
    let mut region_of = vec![UNLABELED; w * h];
    let mut sum = vec![0.0f64; n];
    let mut count = vec![0usize; n];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    for (k, seed) in seeds.iter().enumerate() {
        heap.push(QueueEntry {
            priority: 0.0,
            seq,
            pixel: seed.y * w + seed.x,
            region: k,
        });
        seq += 1;
    }

    while let Some(entry) = heap.pop() {
        let p = entry.pixel;
        if region_of[p] != UNLABELED {
            continue;
        }
        let k = entry.region;
        region_of[p] = k;
        sum[k] += values[p] * INTENSITY_SCALE;
        count[k] += 1;
        let mean = sum[k] / count[k] as f64;
        let seed = seeds[k];
        for (nx, ny) in neighbours4(p % w, p / w, w, h) {
            let q = ny * w + nx;
            if region_of[q] != UNLABELED {
                continue;
            }
            let d_int = values[q] * INTENSITY_SCALE - mean;
            let dx = nx as f64 - seed.cx;
            let dy = ny as f64 - seed.cy;
            let priority = (d_int * d_int + spatial_weight * (dx * dx + dy * dy)).sqrt();
            heap.push(QueueEntry {
                priority,
                seq,
                pixel: q,
                region: k,
            });
            seq += 1;
        }
    }
    SuperpixelLabeling::from_region_map(w, h, region_of)
}

/// Per-region summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    /// Mean intensity per modality.
    pub mean: Vec<f64>,
    pub mean_x: f64,
    pub mean_y: f64,
    pub count: usize,
}

/// Means are accumulated in row-major pixel order and divided once.
pub fn region_stats(labeling: &SuperpixelLabeling, slice: &Slice) -> Result<Vec<RegionStats>> {
    if (labeling.width(), labeling.height()) != (slice.width(), slice.height()) {
        return Err(Error::dims(
            format!("{}x{} (labeling)", labeling.width(), labeling.height()),
            format!("{}x{} (slice)", slice.width(), slice.height()),
        ));
    }
    let m = slice.modality_count();
    let n = labeling.region_count();
    let mut sums = vec![vec![0.0f64; m]; n];
    let mut sx = vec![0.0f64; n];
    let mut sy = vec![0.0f64; n];
    let mut count = vec![0usize; n];
    let w = slice.width();
    for (p, &r) in labeling.region_of().iter().enumerate() {
        for (k, s) in sums[r].iter_mut().enumerate() {
            *s += slice.modality(k)[p];
        }
        sx[r] += (p % w) as f64;
        sy[r] += (p / w) as f64;
        count[r] += 1;
    }
    Ok((0..n)
        .map(|r| {
            let c = count[r] as f64;
            RegionStats {
                mean: sums[r].iter().map(|s| s / c).collect(),
                mean_x: sx[r] / c,
                mean_y: sy[r] / c,
                count: count[r],
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray(w: usize, h: usize, v: Vec<f64>) -> Slice {
        Slice::new(w, h, vec![v], vec!["g".into()]).unwrap()
    }

    /// Nearest-seed-centre assignment, first seed wins ties.
    fn voronoi_oracle(w: usize, h: usize, seeds: &[Seed]) -> Vec<usize> {
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let mut best = (f64::INFINITY, 0);
                for (k, s) in seeds.iter().enumerate() {
                    let d = (x as f64 - s.cx).powi(2) + (y as f64 - s.cy).powi(2);
                    if d < best.0 {
                        best = (d, k);
                    }
                }
                out.push(best.1);
            }
        }
        out
    }

    #[test]
    fn constant_image_four_blocks() {
        let slice = gray(8, 8, vec![0.4; 64]);
        let params = SnicParams { target_regions: 4, compactness: 10.0, modality_index: 0 };
        let lab = snic_segment(&slice, &params).unwrap();
        assert_eq!(lab.region_count(), 4);
        for r in 0..4 {
            assert_eq!(lab.pixels_of(r).len(), 16);
        }
        let (seeds, nx, ny) = seed_grid(8, 8, 4);
        assert_eq!((nx, ny), (2, 2));
        assert_eq!(lab.region_of(), &voronoi_oracle(8, 8, &seeds)[..]);
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(lab.region_at(x, y), (y / 4) * 2 + x / 4);
            }
        }
    }

    #[test]
    fn single_region() {
        let v: Vec<f64> = (0..35).map(|i| ((i * 7) % 11) as f64 / 10.0).collect();
        let lab = snic_segment(&gray(7, 5, v), &SnicParams { target_regions: 1, ..Default::default() }).unwrap();
        assert_eq!(lab.region_count(), 1);
        assert!(lab.region_of().iter().all(|&r| r == 0));
    }

    #[test]
    fn two_tone_follows_edge() {
        let v: Vec<f64> = (0..64).map(|p| if p % 8 < 4 { 0.0 } else { 1.0 }).collect();
        let slice = gray(8, 8, v.clone());
        let lab = snic_segment(&slice, &SnicParams { target_regions: 2, compactness: 0.0, modality_index: 0 }).unwrap();
        assert_eq!(lab.region_count(), 2);
        for r in 0..2 {
            let vals: Vec<f64> = lab.pixels_of(r).iter().map(|&(x, y)| v[y * 8 + x]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
            assert_eq!(var, 0.0);
        }
    }

    #[test]
    fn too_many_regions() {
        let slice = gray(2, 2, vec![0.0; 4]);
        let err = snic_segment(&slice, &SnicParams { target_regions: 5, ..Default::default() });
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn stats_fixtures() {
        let slice = gray(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let lab = SuperpixelLabeling::from_region_map(2, 2, vec![0; 4]).unwrap();
        let st = region_stats(&lab, &slice).unwrap();
        assert_eq!(st[0].mean, vec![2.5]);
        assert_eq!((st[0].mean_x, st[0].mean_y, st[0].count), (0.5, 0.5, 4));

        let slice = gray(8, 8, vec![0.375; 64]);
        let lab = snic_segment(&slice, &SnicParams { target_regions: 4, ..Default::default() }).unwrap();
        for s in region_stats(&lab, &slice).unwrap() {
            assert_eq!(s.mean, vec![0.375]);
        }
    }

    #[test]
    fn stats_match_accumulation_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..256).map(|_| rng.gen::<f64>()).collect();
        let slice = gray(16, 16, v.clone());
        let lab = snic_segment(&slice, &SnicParams { target_regions: 9, ..Default::default() }).unwrap();
        assert_eq!(lab.region_count(), 9);
        let st = region_stats(&lab, &slice).unwrap();
        let mut total = 0.0;
        for r in 0..9 {
            let mut acc = 0.0;
            let mut n = 0;
            for y in 0..16 {
                for x in 0..16 {
                    if lab.region_at(x, y) == r {
                        acc += v[y * 16 + x];
                        n += 1;
                    }
                }
            }
            assert_eq!(st[r].mean[0], acc / n as f64);
            total += st[r].mean[0] * st[r].count as f64;
        }
        let global: f64 = v.iter().sum();
        assert!(((total - global) / global).abs() < 1e-9);
    }

    #[test]
    fn large_compactness_matches_block_layout() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let v: Vec<f64> = (0..144).map(|_| rng.gen::<f64>()).collect();
        let noisy = snic_segment(&gray(12, 12, v), &SnicParams { target_regions: 9, compactness: 1e9, modality_index: 0 }).unwrap();
        let flat = snic_segment(&gray(12, 12, vec![0.0; 144]), &SnicParams { target_regions: 9, compactness: 1e9, modality_index: 0 }).unwrap();
        assert_eq!(noisy, flat);
    }

    #[test]
    fn region_map_validation() {
        assert!(SuperpixelLabeling::from_region_map(2, 1, vec![0, 2]).is_err());
        assert!(SuperpixelLabeling::from_region_map(2, 1, vec![0]).is_err());
        let lab = SuperpixelLabeling::from_region_map(3, 1, vec![0, 1, 0]).unwrap();
        assert!(!lab.is_connected());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn partition_properties(
            w in 1usize..20,
            h in 1usize..20,
            target in 1usize..40,
            compactness in 0.0f64..40.0,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let target = target.min(w * h);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..w * h).map(|_| rng.gen::<f64>()).collect();
            let slice = gray(w, h, v);
            let params = SnicParams { target_regions: target, compactness, modality_index: 0 };
            let lab = snic_segment(&slice, &params).unwrap();
            let (seeds, _, _) = seed_grid(w, h, target);
            prop_assert_eq!(lab.region_count(), seeds.len());
            let total: usize = (0..lab.region_count()).map(|r| lab.pixels_of(r).len()).sum();
            prop_assert_eq!(total, w * h);
            for r in 0..lab.region_count() {
                for &(x, y) in lab.pixels_of(r) {
                    prop_assert_eq!(lab.region_at(x, y), r);
                }
            }
            prop_assert!(lab.is_connected());
            prop_assert_eq!(snic_segment(&slice, &params).unwrap(), lab);
        }
    }
}
