//! Overlap and boundary-distance metrics for per-class segmentation masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{LabelMask, Tissue};

/// Membership mask of one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    member: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, member: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("mask dimensions must be positive"));
        }
        if member.len() != width * height {
            return Err(Error::dims(
                format!("{} pixels", width * height),
                format!("{} pixels", member.len()),
            ));
        }
        Ok(BinaryMask { width, height, member })
    }

    /// Mask of the pixels in `labels` carrying class `class`.
    pub fn from_labels(labels: &LabelMask, class: Tissue) -> Self {
        BinaryMask {
            width: labels.width(),
            height: labels.height(),
            member: labels.labels().iter().map(|&l| l == class.id()).collect(),
        }
    }

    /// Mask from a list of `(x, y)` members.
    pub fn from_points(width: usize, height: usize, points: &[(usize, usize)]) -> Result<Self> {
        let mut member = vec![false; width * height];
        for &(x, y) in points {
            if x >= width || y >= height {
                return Err(Error::validation(format!("point ({x}, {y}) outside {width}x{height}")));
            }
            member[y * width + x] = true;
        }
        Self::new(width, height, member)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.member[y * self.width + x]
    }

    pub fn members(&self) -> &[bool] {
        &self.member
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.member.iter().any(|&m| m)
    }

    fn check_dims(&self, other: &BinaryMask) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::dims(
                format!("{}x{}", other.width, other.height),
                format!("{}x{}", self.width, self.height),
            ));
        }
        Ok(())
    }

    fn intersection(&self, other: &BinaryMask) -> usize {
        self.member.iter().zip(&other.member).filter(|(&a, &b)| a && b).count()
    }
}

/// Boundary pixels `(x, y)` of a mask in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySet {
    pub points: Vec<(usize, usize)>,
}

impl BoundarySet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `|P ∩ T| / |T|`.
pub fn tp_rate(p: &BinaryMask, t: &BinaryMask) -> Result<f64> {
    p.check_dims(t)?;
    let tc = t.count();
    if tc == 0 {
        return Err(Error::UndefinedMetric("TP rate with an empty reference mask".into()));
    }
    Ok(p.intersection(t) as f64 / tc as f64)
}

/// `|P ∩ T| / ((|T| + |P|) / 2)`.
pub fn dice(p: &BinaryMask, t: &BinaryMask) -> Result<f64> {
    p.check_dims(t)?;
    let total = p.count() + t.count();
    if total == 0 {
        return Err(Error::UndefinedMetric("Dice with both masks empty".into()));
    }
    Ok(p.intersection(t) as f64 / (total as f64 / 2.0))
}

/// Members that touch a non-member 4-neighbour or the image border.
pub fn extract_boundary(m: &BinaryMask) -> Result<BoundarySet> {
    if m.is_empty() {
        return Err(Error::UndefinedMetric("boundary of an empty mask".into()));
    }
    let (w, h) = (m.width, m.height);
    let mut points = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !m.get(x, y) {
                continue;
            }
            let border = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
            if border
                || !m.get(x - 1, y)
                || !m.get(x + 1, y)
                || !m.get(x, y - 1)
                || !m.get(x, y + 1)
            {
                points.push((x, y));
            }
        }
    }
    Ok(BoundarySet { points })
}

/// Mean over the prediction boundary of the Euclidean distance to the
/// nearest reference boundary pixel, in pixels.
pub fn apd(pred: &BoundarySet, truth: &BoundarySet) -> Result<f64> {
    if pred.is_empty() || truth.is_empty() {
        return Err(Error::UndefinedMetric("APD with an empty boundary".into()));
    }
    let mut sum = 0.0;
    for &(px, py) in &pred.points {
        let mut best = f64::INFINITY;
        for &(tx, ty) in &truth.points {
            let dx = px as f64 - tx as f64;
            let dy = py as f64 - ty as f64;
            let d = (dx * dx + dy * dy).sqrt();
            if d < best {
                best = d;
            }
        }
        sum += best;
    }
    Ok(sum / pred.len() as f64)
}

/// Scores for one tissue class. `None` marks a metric that is not
/// applicable, with the reason listed in `flags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: Tissue,
    pub dice: Option<f64>,
    pub tp: Option<f64>,
    pub apd: Option<f64>,
    pub pred_pixels: usize,
    pub truth_pixels: usize,
    pub pred_boundary: usize,
    pub truth_boundary: usize,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Unit of the `apd` values.
    pub apd_unit: String,
    pub classes: Vec<ClassMetrics>,
}

pub const FLAG_ABSENT: &str = "absent_in_both";
pub const FLAG_EMPTY_PRED: &str = "empty_prediction";
pub const FLAG_EMPTY_TRUTH: &str = "empty_reference";

/// Score CSF, GM and WM of `pred` against `truth`.
pub fn evaluate(pred: &LabelMask, truth: &LabelMask) -> Result<MetricsReport> {
    if (pred.width(), pred.height()) != (truth.width(), truth.height()) {
        return Err(Error::dims(
            format!("{}x{} (reference)", truth.width(), truth.height()),
            format!("{}x{} (prediction)", pred.width(), pred.height()),
        ));
    }
    let mut classes = Vec::new();
    for class in Tissue::TARGETS {
        let p = BinaryMask::from_labels(pred, class);
        let t = BinaryMask::from_labels(truth, class);
        let (pc, tc) = (p.count(), t.count());
        let mut flags = Vec::new();
        if pc == 0 && tc == 0 {
            flags.push(FLAG_ABSENT.to_string());
        } else {
            if pc == 0 {
                flags.push(FLAG_EMPTY_PRED.to_string());
            }
            if tc == 0 {
                flags.push(FLAG_EMPTY_TRUTH.to_string());
            }
        }
        let pb = (pc > 0).then(|| extract_boundary(&p)).transpose()?;
        let tb = (tc > 0).then(|| extract_boundary(&t)).transpose()?;
        let apd_value = match (&pb, &tb) {
            (Some(a), Some(b)) => Some(apd(a, b)?),
            _ => None,
        };
        classes.push(ClassMetrics {
            class,
            dice: (pc + tc > 0).then(|| dice(&p, &t)).transpose()?,
            tp: (tc > 0).then(|| tp_rate(&p, &t)).transpose()?,
            apd: apd_value,
            pred_pixels: pc,
            truth_pixels: tc,
            pred_boundary: pb.as_ref().map_or(0, BoundarySet::len),
            truth_boundary: tb.as_ref().map_or(0, BoundarySet::len),
            flags,
        });
    }
    Ok(MetricsReport {
        apd_unit: "pixels".into(),
        classes,
    })
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "class,dice,tp,apd,flags";

    pub fn class(&self, class: Tissue) -> Option<&ClassMetrics> {
        self.classes.iter().find(|c| c.class == class)
    }

    /// CSV rows without the header. Not-applicable values are written as `NA`
    /// and flags are joined with `;`.
    pub fn csv_rows(&self) -> Vec<String> {
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x}"));
        self.classes
            .iter()
            .map(|c| {
                format!(
                    "{},{},{},{},{}",
                    c.class.name(),
                    fmt(c.dice),
                    fmt(c.tp),
                    fmt(c.apd),
                    c.flags.join(";")
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in self.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(w: usize, h: usize, p: &[(usize, usize)]) -> BinaryMask {
        BinaryMask::from_points(w, h, p).unwrap()
    }

    #[test]
    fn hand_fixtures() {
        let p = pts(2, 2, &[(0, 0), (0, 1)]);
        let t = pts(2, 2, &[(0, 1), (1, 1)]);
        assert_eq!(tp_rate(&p, &t).unwrap(), 0.5);
        assert_eq!(dice(&p, &t).unwrap(), 0.5);
        assert_eq!(tp_rate(&p, &p).unwrap(), 1.0);
        assert_eq!(dice(&p, &p).unwrap(), 1.0);
        let q = pts(2, 2, &[(1, 0)]);
        assert_eq!(tp_rate(&q, &t).unwrap(), 0.0);
        assert_eq!(dice(&q, &t).unwrap(), 0.0);

        let a = BoundarySet { points: vec![(0, 0)] };
        let b = BoundarySet { points: vec![(3, 4)] };
        assert_eq!(apd(&a, &b).unwrap(), 5.0);
        assert_eq!(apd(&b, &b).unwrap(), 0.0);
    }

    #[test]
    fn undefined_cases() {
        let e = pts(2, 2, &[]);
        let p = pts(2, 2, &[(0, 0)]);
        assert!(matches!(tp_rate(&p, &e), Err(Error::UndefinedMetric(_))));
        assert!(matches!(dice(&e, &e), Err(Error::UndefinedMetric(_))));
        assert!(extract_boundary(&e).is_err());
        assert!(apd(&BoundarySet { points: vec![] }, &BoundarySet { points: vec![(0, 0)] }).is_err());
        assert!(matches!(dice(&p, &pts(3, 2, &[])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn asymmetry_of_tp() {
        let p = pts(3, 1, &[(0, 0)]);
        let t = pts(3, 1, &[(0, 0), (1, 0)]);
        assert_ne!(tp_rate(&p, &t).unwrap(), tp_rate(&t, &p).unwrap());
        assert_eq!(dice(&p, &t).unwrap(), dice(&t, &p).unwrap());
    }

    #[test]
    fn boundaries() {
        assert_eq!(extract_boundary(&pts(1, 1, &[(0, 0)])).unwrap().points, vec![(0, 0)]);
        let full = BinaryMask::new(3, 3, vec![true; 9]).unwrap();
        let b = extract_boundary(&full).unwrap();
        assert_eq!(b.len(), 8);
        assert!(!b.points.contains(&(1, 1)));
        let row = BinaryMask::new(5, 1, vec![true; 5]).unwrap();
        assert_eq!(extract_boundary(&row).unwrap().len(), 5);
        // Interior pixel of a 5x5 square inside a 7x7 image.
        let mut m = vec![false; 49];
        for y in 1..6 {
            for x in 1..6 {
                m[y * 7 + x] = true;
            }
        }
        let b = extract_boundary(&BinaryMask::new(7, 7, m).unwrap()).unwrap();
        assert_eq!(b.len(), 16);
    }

    #[test]
    fn evaluate_identity_and_missing() {
        let labels: Vec<u8> = (0..16).map(|p| (p % 4) as u8).collect();
        let truth = LabelMask::new(4, 4, labels).unwrap();
        let r = evaluate(&truth, &truth).unwrap();
        for c in &r.classes {
            assert_eq!((c.dice, c.tp, c.apd), (Some(1.0), Some(1.0), Some(0.0)));
        }
        let pred = LabelMask::new(4, 4, vec![0; 16]).unwrap();
        let r = evaluate(&pred, &truth).unwrap();
        for c in &r.classes {
            assert_eq!((c.dice, c.tp, c.apd), (Some(0.0), Some(0.0), None));
            assert_eq!(c.flags, vec![FLAG_EMPTY_PRED.to_string()]);
        }
        let r = evaluate(&pred, &pred).unwrap();
        assert!(r.classes.iter().all(|c| c.dice.is_none() && c.flags == vec![FLAG_ABSENT.to_string()]));
        assert!(evaluate(&pred, &LabelMask::new(2, 2, vec![0; 4]).unwrap()).is_err());
    }

    /// Truth: left half CSF, right half GM. Prediction: the top-left quadrant
    /// relabeled WM.
    #[test]
    fn mislabeled_quadrant() {
        let truth: Vec<u8> = (0..64).map(|p| if p % 8 < 4 { 1 } else { 2 }).collect();
        let pred: Vec<u8> = (0..64)
            .map(|p| match (p % 8 < 4, p / 8 < 4) {
                (true, true) => 3,
                (true, false) => 1,
                _ => 2,
            })
            .collect();
        let r = evaluate(&LabelMask::new(8, 8, pred).unwrap(), &LabelMask::new(8, 8, truth).unwrap()).unwrap();
        let csf = r.class(Tissue::Csf).unwrap();
        // |P| = 16, |T| = 32, |P ∩ T| = 16.
        assert_eq!(csf.tp, Some(0.5));
        assert_eq!(csf.dice, Some(16.0 / 24.0));
        // 12 prediction boundary pixels; only (1,4) and (2,4) are off the
        // reference boundary, each at distance 1.
        assert_eq!((csf.pred_boundary, csf.truth_boundary), (12, 20));
        assert_eq!(csf.apd, Some(1.0 / 6.0));
        let gm = r.class(Tissue::Gm).unwrap();
        assert_eq!((gm.dice, gm.tp, gm.apd), (Some(1.0), Some(1.0), Some(0.0)));
        let wm = r.class(Tissue::Wm).unwrap();
        assert_eq!((wm.dice, wm.tp, wm.apd), (Some(0.0), None, None));
        assert_eq!(wm.flags, vec![FLAG_EMPTY_TRUTH.to_string()]);

        let csv = r.to_csv();
        assert!(csv.starts_with("class,dice,tp,apd,flags\ncsf,"));
        assert!(csv.contains("wm,0,NA,NA,empty_reference"));
    }
}
