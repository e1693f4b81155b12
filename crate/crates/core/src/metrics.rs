//! ROC and proposal-recall curves over an evaluation dataset.
//!
//! ROC curves sweep the score threshold over every distinct detection score,
//! from the highest down. At each threshold the detections scoring at least
//! that much are re-matched per image from scratch, and the per-image tallies
//! are summed in image-id order, so results do not depend on how the
//! per-image work is scheduled.
//!
//! Before matching, each image's detections are put in a canonical order
//! (score descending, then box coordinates ascending). Index-based tie
//! breaks in the matchers therefore never depend on input order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Rect, DEFAULT_ELLIPSE_VERTICES};
use crate::matching::{
    assign_by_iou, assign_greedy, assign_optimal, check_threshold, check_vertices, iou_matrix,
    Detection, GroundTruth, MatchOutcome, Matcher,
};

/// Proposal budgets compared by default.
pub const DEFAULT_TOP_N: [usize; 4] = [100, 300, 500, 1000];

/// Detection/ground-truth IoU a match must exceed.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XSemantics {
    FpCount,
    FpPerImage,
    IouThreshold,
    ProposalCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YSemantics {
    TprDiscrete,
    TprContinuous,
    DetectionRate,
}

impl XSemantics {
    pub fn as_str(self) -> &'static str {
        match self {
            XSemantics::FpCount => "fp_count",
            XSemantics::FpPerImage => "fp_per_image",
            XSemantics::IouThreshold => "iou_threshold",
            XSemantics::ProposalCount => "proposal_count",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            XSemantics::FpCount,
            XSemantics::FpPerImage,
            XSemantics::IouThreshold,
            XSemantics::ProposalCount,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
    }

    fn is_roc(self) -> bool {
        matches!(self, XSemantics::FpCount | XSemantics::FpPerImage)
    }
}

impl YSemantics {
    pub fn as_str(self) -> &'static str {
        match self {
            YSemantics::TprDiscrete => "tpr_discrete",
            YSemantics::TprContinuous => "tpr_continuous",
            YSemantics::DetectionRate => "detection_rate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            YSemantics::TprDiscrete,
            YSemantics::TprContinuous,
            YSemantics::DetectionRate,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
    }
}

impl fmt::Display for XSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for YSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    pub x_semantics: XSemantics,
    pub y_semantics: YSemantics,
}

impl Curve {
    pub fn new(x_semantics: XSemantics, y_semantics: YSemantics) -> Self {
        Self {
            points: Vec::new(),
            x_semantics,
            y_semantics,
        }
    }

    /// Checks ordering and range invariants: x ascending, y in [0, 1], and for
    /// ROC curves thresholds non-increasing along x.
    pub fn validate(&self) -> Result<(), String> {
        for (i, p) in self.points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.threshold.is_finite()) {
                return Err(format!("point {i} is not finite: {p:?}"));
            }
            if !(0.0..=1.0).contains(&p.y) {
                return Err(format!("point {i} has y = {} outside [0, 1]", p.y));
            }
        }
        for (i, w) in self.points.windows(2).enumerate() {
            if w[1].x < w[0].x {
                return Err(format!("x decreases between points {i} and {}", i + 1));
            }
            if self.x_semantics.is_roc() && w[1].threshold > w[0].threshold {
                return Err(format!(
                    "threshold increases between points {i} and {}",
                    i + 1
                ));
            }
        }
        Ok(())
    }
}

/// Step-function lookup: the y of the last point whose x does not exceed
/// `x`, or the first point's y when `x` lies before the curve. `None` for an
/// empty curve.
pub fn curve_query(c: &Curve, x: f64) -> Option<f64> {
    let first = c.points.first()?;
    let idx = c.points.partition_point(|p| p.x <= x);
    Some(if idx == 0 {
        first.y
    } else {
        c.points[idx - 1].y
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImageData {
    pub detections: Vec<Detection>,
    pub ground_truths: Vec<GroundTruth>,
}

/// Detections and ground truths keyed by image id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalDataset {
    images: BTreeMap<String, ImageData>,
    total_gt_count: usize,
}

impl EvalDataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one image. Every detection and ground truth must carry `image_id`.
    pub fn add_image(
        &mut self,
        image_id: impl Into<String>,
        detections: Vec<Detection>,
        ground_truths: Vec<GroundTruth>,
    ) -> Result<()> {
        let image_id = image_id.into();
        if self.images.contains_key(&image_id) {
            return Err(Error::DuplicateImage(image_id));
        }
        let stray = detections
            .iter()
            .map(|d| &d.image_id)
            .chain(ground_truths.iter().map(|g| &g.image_id))
            .find(|id| **id != image_id);
        if let Some(other) = stray {
            return Err(Error::MixedImageIds {
                first: image_id,
                second: other.clone(),
            });
        }
        self.total_gt_count += ground_truths.len();
        self.images.insert(
            image_id,
            ImageData {
                detections,
                ground_truths,
            },
        );
        Ok(())
    }

    pub fn images(&self) -> &BTreeMap<String, ImageData> {
        &self.images
    }

    pub fn num_images(&self) -> usize {
        self.images.len()
    }

    pub fn total_gt_count(&self) -> usize {
        self.total_gt_count
    }

    pub fn num_detections(&self) -> usize {
        self.images.values().map(|i| i.detections.len()).sum()
    }

    /// Keeps only the listed images (e.g. one fold); every id must exist.
    pub fn restrict_to<S: AsRef<str>>(&self, ids: &[S]) -> Result<EvalDataset> {
        let mut out = EvalDataset::new();
        for id in ids {
            let id = id.as_ref();
            let image = self
                .images
                .get(id)
                .ok_or_else(|| Error::UnknownImage(id.to_string()))?;
            out.add_image(id, image.detections.clone(), image.ground_truths.clone())?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub matcher: Matcher,
    pub iou_threshold: f64,
    pub ellipse_vertices: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            matcher: Matcher::Greedy,
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            ellipse_vertices: DEFAULT_ELLIPSE_VERTICES,
        }
    }
}

impl EvalOptions {
    fn validate(&self) -> Result<()> {
        check_threshold(self.iou_threshold)?;
        check_vertices(self.ellipse_vertices)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RocKind {
    /// Each match counts 1; x is the total false-positive count.
    Discrete,
    /// Each match counts its IoU; x is the total false-positive count.
    Continuous,
    /// Each match counts 1; x is false positives per image.
    Normalized,
}

impl RocKind {
    pub fn semantics(self) -> (XSemantics, YSemantics) {
        match self {
            RocKind::Discrete => (XSemantics::FpCount, YSemantics::TprDiscrete),
            RocKind::Continuous => (XSemantics::FpCount, YSemantics::TprContinuous),
            RocKind::Normalized => (XSemantics::FpPerImage, YSemantics::TprDiscrete),
        }
    }
}

fn rect_key(r: &Rect) -> [f64; 4] {
    [r.x_min(), r.y_min(), r.x_max(), r.y_max()]
}

/// Canonical detection order: score descending, then coordinates ascending.
pub fn canonical_order(a: &Detection, b: &Detection) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| {
        rect_key(&a.region)
            .iter()
            .zip(rect_key(&b.region).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn canonicalized(dets: &[Detection]) -> Vec<Detection> {
    let mut v = dets.to_vec();
    v.sort_by(canonical_order);
    v
}

/// Per-image counts at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Tally {
    tp: usize,
    fp: usize,
    iou_sum: f64,
}

/// Tallies of one image for each of its own distinct scores, descending.
fn image_tallies(image: &ImageData, opts: &EvalOptions) -> Result<Vec<(f64, Tally)>> {
    let dets = canonicalized(&image.detections);
    let ious = iou_matrix(&dets, &image.ground_truths, opts.ellipse_vertices)?;
    let scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
    let n_gts = image.ground_truths.len();

    let mut out: Vec<(f64, Tally)> = Vec::new();
    let mut k = 0;
    while k < dets.len() {
        let s = scores[k];
        while k < dets.len() && scores[k] >= s {
            k += 1;
        }
        let outcome: MatchOutcome = match opts.matcher {
            Matcher::Greedy => assign_greedy(&ious[..k], &scores[..k], n_gts, opts.iou_threshold),
            Matcher::Optimal => assign_optimal(&ious[..k], n_gts, opts.iou_threshold),
        };
        let tp = outcome.true_positives();
        out.push((
            s,
            Tally {
                tp,
                fp: k - tp,
                iou_sum: outcome.total_iou(),
            },
        ));
    }
    Ok(out)
}

fn distinct_scores_desc(ds: &EvalDataset) -> Vec<f64> {
    let mut scores: Vec<f64> = ds
        .images
        .values()
        .flat_map(|i| i.detections.iter().map(|d| d.score))
        .collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    scores.dedup_by(|a, b| a == b);
    scores
}

/// ROC curve of the requested kind.
pub fn roc_curve(ds: &EvalDataset, kind: RocKind, opts: &EvalOptions) -> Result<Curve> {
    opts.validate()?;
    if ds.total_gt_count == 0 {
        return Err(Error::NoGroundTruth);
    }
    let per_image: Vec<Vec<(f64, Tally)>> = ds
        .images
        .par_iter()
        .map(|(_, image)| image_tallies(image, opts))
        .collect::<Result<_>>()?;

    let (x_sem, y_sem) = kind.semantics();
    let mut curve = Curve::new(x_sem, y_sem);
    let total = ds.total_gt_count as f64;
    let n_images = ds.num_images() as f64;
    let mut cursors = vec![0usize; per_image.len()];

    for t in distinct_scores_desc(ds) {
        let (mut tp, mut fp, mut iou_sum) = (0usize, 0usize, 0.0f64);
        for (tallies, cursor) in per_image.iter().zip(cursors.iter_mut()) {
            while *cursor < tallies.len() && tallies[*cursor].0 >= t {
                *cursor += 1;
            }
            if *cursor > 0 {
                let tally = tallies[*cursor - 1].1;
                tp += tally.tp;
                fp += tally.fp;
                iou_sum += tally.iou_sum;
            }
        }
        let (x, y) = match kind {
            RocKind::Discrete => (fp as f64, tp as f64 / total),
            RocKind::Continuous => (fp as f64, iou_sum / total),
            RocKind::Normalized => (fp as f64 / n_images, tp as f64 / total),
        };
        curve.points.push(CurvePoint { x, y, threshold: t });
    }
    Ok(curve)
}

/// True positive rate against total false positives, each match counting 1.
pub fn discrete_roc(ds: &EvalDataset, opts: &EvalOptions) -> Result<Curve> {
    roc_curve(ds, RocKind::Discrete, opts)
}

/// As [`discrete_roc`] with every match weighted by its IoU.
pub fn continuous_roc(ds: &EvalDataset, opts: &EvalOptions) -> Result<Curve> {
    roc_curve(ds, RocKind::Continuous, opts)
}

/// As [`discrete_roc`] with false positives divided by the number of images.
pub fn normalized_fp_roc(ds: &EvalDataset, opts: &EvalOptions) -> Result<Curve> {
    roc_curve(ds, RocKind::Normalized, opts)
}

/// Detection-rate curve for one proposal budget.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallCurve {
    pub top_n: usize,
    pub curve: Curve,
}

/// For each budget `N`, the fraction of all ground truths recovered by the
/// top-`N` proposals of each image as a function of the IoU threshold.
/// Proposals and ground truths are paired one-to-one greedily by descending
/// IoU; a pair counts when its IoU exceeds the threshold.
pub fn proposal_recall(
    ds: &EvalDataset,
    n_values: &[usize],
    iou_thresholds: &[f64],
    ellipse_vertices: usize,
) -> Result<Vec<RecallCurve>> {
    check_vertices(ellipse_vertices)?;
    if n_values.is_empty() {
        return Err(Error::InvalidArgument("no proposal budgets given".into()));
    }
    if iou_thresholds.is_empty() {
        return Err(Error::InvalidArgument("no IoU thresholds given".into()));
    }
    if let Some(t) = iou_thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "recall IoU thresholds must lie in (0, 1], got {t}"
        )));
    }
    if ds.total_gt_count == 0 {
        return Err(Error::NoGroundTruth);
    }
    let mut thresholds = iou_thresholds.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let max_n = n_values.iter().copied().max().unwrap_or(0);

    // matched[image][budget][threshold]
    let matched: Vec<Vec<Vec<usize>>> = ds
        .images
        .par_iter()
        .map(|(_, image)| -> Result<Vec<Vec<usize>>> {
            let mut props = canonicalized(&image.detections);
            props.truncate(max_n);
            let ious = iou_matrix(&props, &image.ground_truths, ellipse_vertices)?;
            let n_gts = image.ground_truths.len();
            Ok(n_values
                .iter()
                .map(|&n| {
                    let rows = &ious[..n.min(ious.len())];
                    thresholds
                        .iter()
                        .map(|&t| assign_by_iou(rows, n_gts, t).true_positives())
                        .collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let total = ds.total_gt_count as f64;
    Ok(n_values
        .iter()
        .enumerate()
        .map(|(bi, &n)| {
            let mut curve = Curve::new(XSemantics::IouThreshold, YSemantics::DetectionRate);
            for (ti, &t) in thresholds.iter().enumerate() {
                let hits: usize = matched.iter().map(|m| m[bi][ti]).sum();
                curve.points.push(CurvePoint {
                    x: t,
                    y: hits as f64 / total,
                    threshold: t,
                });
            }
            RecallCurve { top_n: n, curve }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Ellipse;

    fn rect(a: f64, b: f64, c: f64, d: f64) -> Rect {
        Rect::new(a, b, c, d).unwrap()
    }

    /// gt g1 = (0,0,10,10), g2 = (100,0,110,10). Detection boxes are
    /// vertical slabs whose IoU with the gt is their height over 10.
    fn fixture() -> EvalDataset {
        let g1 = rect(0.0, 0.0, 10.0, 10.0);
        let g2 = rect(100.0, 0.0, 110.0, 10.0);
        let d1 = rect(0.0, 0.0, 10.0, 8.0); // 0.8 → g1
        let d2 = rect(100.0, 0.0, 110.0, 3.0); // 0.3 → g2
        let d3 = rect(100.0, 0.0, 110.0, 6.0); // 0.6 → g2
        let mut ds = EvalDataset::new();
        ds.add_image(
            "img",
            vec![
                Detection::new(d2, 0.8, "img").unwrap(),
                Detection::new(d1, 0.9, "img").unwrap(),
                Detection::new(d3, 0.7, "img").unwrap(),
            ],
            vec![GroundTruth::new(g1, "img"), GroundTruth::new(g2, "img")],
        )
        .unwrap();
        ds
    }

    fn xy(c: &Curve) -> Vec<(f64, f64, f64)> {
        c.points.iter().map(|p| (p.x, p.y, p.threshold)).collect()
    }

    #[test]
    fn discrete_example() {
        let c = discrete_roc(&fixture(), &EvalOptions::default()).unwrap();
        assert_eq!(
            xy(&c),
            vec![(0.0, 0.5, 0.9), (1.0, 0.5, 0.8), (1.0, 1.0, 0.7)]
        );
        assert!(c.validate().is_ok());
    }

    #[test]
    fn continuous_example() {
        let c = continuous_roc(&fixture(), &EvalOptions::default()).unwrap();
        let last = c.points.last().unwrap();
        assert!((last.y - 0.7).abs() < 1e-12);
        assert_eq!(c.points.len(), 3);
        let d = discrete_roc(&fixture(), &EvalOptions::default()).unwrap();
        for (p, q) in c.points.iter().zip(&d.points) {
            assert!(p.y <= q.y);
        }
    }

    #[test]
    fn normalized_single_image_matches_discrete() {
        let ds = fixture();
        let n = normalized_fp_roc(&ds, &EvalOptions::default()).unwrap();
        let d = discrete_roc(&ds, &EvalOptions::default()).unwrap();
        assert_eq!(xy(&n), xy(&d));
        assert_eq!(n.x_semantics, XSemantics::FpPerImage);
    }

    #[test]
    fn normalized_divides_by_image_count() {
        let mut ds = EvalDataset::new();
        let gt = rect(0.0, 0.0, 10.0, 10.0);
        for i in 0..10 {
            let id = format!("img{i}");
            let dets = if i < 5 {
                vec![Detection::new(rect(50.0, 50.0, 60.0, 60.0), 0.5, &id).unwrap()]
            } else {
                vec![]
            };
            ds.add_image(&id, dets, vec![GroundTruth::new(gt, &id)])
                .unwrap();
        }
        let c = normalized_fp_roc(&ds, &EvalOptions::default()).unwrap();
        assert_eq!(xy(&c), vec![(0.5, 0.0, 0.5)]);
    }

    #[test]
    fn perfect_detector_single_point() {
        let mut ds = EvalDataset::new();
        let g = rect(0.0, 0.0, 10.0, 10.0);
        ds.add_image(
            "a",
            vec![Detection::new(g, 1.0, "a").unwrap()],
            vec![GroundTruth::new(g, "a")],
        )
        .unwrap();
        for kind in [RocKind::Discrete, RocKind::Continuous, RocKind::Normalized] {
            let c = roc_curve(&ds, kind, &EvalOptions::default()).unwrap();
            assert_eq!(xy(&c), vec![(0.0, 1.0, 1.0)]);
        }
    }

    #[test]
    fn poor_localization_scores_zero() {
        let mut ds = EvalDataset::new();
        let g = rect(0.0, 0.0, 10.0, 10.0);
        ds.add_image(
            "a",
            vec![
                Detection::new(rect(0.0, 0.0, 10.0, 4.0), 0.9, "a").unwrap(),
                Detection::new(rect(0.0, 0.0, 10.0, 5.0), 0.4, "a").unwrap(),
            ],
            vec![GroundTruth::new(g, "a")],
        )
        .unwrap();
        let c = discrete_roc(&ds, &EvalOptions::default()).unwrap();
        assert!(c.points.iter().all(|p| p.y == 0.0));
        assert_eq!(c.points.last().unwrap().x, 2.0);
    }

    #[test]
    fn optimal_matcher_curve() {
        let opts = EvalOptions {
            matcher: Matcher::Optimal,
            ..EvalOptions::default()
        };
        let c = discrete_roc(&fixture(), &opts).unwrap();
        assert_eq!(
            xy(&c),
            vec![(0.0, 0.5, 0.9), (1.0, 0.5, 0.8), (1.0, 1.0, 0.7)]
        );
    }

    #[test]
    fn rejects_empty_ground_truth() {
        let mut ds = EvalDataset::new();
        assert_eq!(
            discrete_roc(&ds, &EvalOptions::default()),
            Err(Error::NoGroundTruth)
        );
        ds.add_image("a", vec![], vec![]).unwrap();
        assert!(proposal_recall(&ds, &[10], &[0.5], 1024).is_err());
    }

    #[test]
    fn dataset_rejects_inconsistent_ids() {
        let mut ds = EvalDataset::new();
        let g = rect(0.0, 0.0, 1.0, 1.0);
        assert!(ds
            .add_image("a", vec![], vec![GroundTruth::new(g, "b")])
            .is_err());
        ds.add_image("a", vec![], vec![GroundTruth::new(g, "a")])
            .unwrap();
        assert!(matches!(
            ds.add_image("a", vec![], vec![]),
            Err(Error::DuplicateImage(_))
        ));
        assert_eq!(ds.total_gt_count(), 1);
        assert!(ds.restrict_to(&["zzz"]).is_err());
        assert_eq!(ds.restrict_to(&["a"]).unwrap(), ds);
    }

    #[test]
    fn curve_query_examples() {
        let mut c = Curve::new(XSemantics::FpCount, YSemantics::TprDiscrete);
        assert_eq!(curve_query(&c, 1.0), None);
        c.points = vec![
            CurvePoint {
                x: 100.0,
                y: 0.9,
                threshold: 0.9,
            },
            CurvePoint {
                x: 500.0,
                y: 0.952,
                threshold: 0.5,
            },
            CurvePoint {
                x: 900.0,
                y: 0.96,
                threshold: 0.1,
            },
        ];
        assert_eq!(curve_query(&c, 500.0), Some(0.952));
        assert_eq!(curve_query(&c, 50.0), Some(0.9));
        assert_eq!(curve_query(&c, 1e9), Some(0.96));

        c.points = vec![CurvePoint {
            x: 0.0,
            y: 1.0,
            threshold: 1.0,
        }];
        assert_eq!(curve_query(&c, 0.0), Some(1.0));
        assert_eq!(curve_query(&c, 42.0), Some(1.0));

        c.points = vec![
            CurvePoint {
                x: 1.0,
                y: 0.5,
                threshold: 0.8,
            },
            CurvePoint {
                x: 3.0,
                y: 0.9,
                threshold: 0.2,
            },
        ];
        assert_eq!(curve_query(&c, 2.0), Some(0.5));
    }

    #[test]
    fn curve_query_takes_last_of_equal_x() {
        let c = discrete_roc(&fixture(), &EvalOptions::default()).unwrap();
        assert_eq!(curve_query(&c, 1.0), Some(1.0));
        assert_eq!(curve_query(&c, 0.5), Some(0.5));
    }

    #[test]
    fn recall_identical_proposals() {
        let mut ds = EvalDataset::new();
        let gts = [rect(0.0, 0.0, 10.0, 10.0), rect(20.0, 20.0, 45.0, 40.0)];
        ds.add_image(
            "a",
            gts.iter()
                .map(|g| Detection::new(*g, 0.5, "a").unwrap())
                .collect(),
            gts.iter().map(|g| GroundTruth::new(*g, "a")).collect(),
        )
        .unwrap();
        let ts = [0.1, 0.5, 0.9, 0.999, 1.0];
        let curves = proposal_recall(&ds, &DEFAULT_TOP_N, &ts, 1024).unwrap();
        assert_eq!(curves.len(), 4);
        for rc in &curves {
            let ys: Vec<f64> = rc.curve.points.iter().map(|p| p.y).collect();
            assert_eq!(ys, vec![1.0, 1.0, 1.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn recall_single_proposal_half_rate() {
        let mut ds = EvalDataset::new();
        let g1 = rect(0.0, 0.0, 10.0, 10.0);
        let g2 = rect(100.0, 100.0, 110.0, 110.0);
        let p = rect(0.0, 0.0, 10.0, 7.0); // IoU 0.7 with g1
        ds.add_image(
            "a",
            vec![Detection::new(p, 0.3, "a").unwrap()],
            vec![GroundTruth::new(g1, "a"), GroundTruth::new(g2, "a")],
        )
        .unwrap();
        let ts = [0.5, 0.69, 0.7, 0.8];
        let rc = &proposal_recall(&ds, &[1], &ts, 1024).unwrap()[0];
        let ys: Vec<f64> = rc.curve.points.iter().map(|p| p.y).collect();
        assert_eq!(ys, vec![0.5, 0.5, 0.0, 0.0]);
        assert_eq!(rc.top_n, 1);
    }

    #[test]
    fn recall_respects_budget() {
        let mut ds = EvalDataset::new();
        let g = rect(0.0, 0.0, 10.0, 10.0);
        ds.add_image(
            "a",
            vec![
                Detection::new(rect(50.0, 50.0, 60.0, 60.0), 0.9, "a").unwrap(),
                Detection::new(g, 0.1, "a").unwrap(),
            ],
            vec![GroundTruth::new(g, "a")],
        )
        .unwrap();
        let curves = proposal_recall(&ds, &[1, 2], &[0.5], 1024).unwrap();
        assert_eq!(curves[0].curve.points[0].y, 0.0);
        assert_eq!(curves[1].curve.points[0].y, 1.0);
    }

    #[test]
    fn recall_validates_arguments() {
        let ds = fixture();
        assert!(proposal_recall(&ds, &[], &[0.5], 1024).is_err());
        assert!(proposal_recall(&ds, &[10], &[], 1024).is_err());
        assert!(proposal_recall(&ds, &[10], &[0.0], 1024).is_err());
        assert!(proposal_recall(&ds, &[10], &[1.1], 1024).is_err());
        assert!(proposal_recall(&ds, &[10], &[0.5], 4).is_err());
    }

    #[test]
    fn elliptical_ground_truth_roc() {
        let mut ds = EvalDataset::new();
        let e = Ellipse::circle(5.0, 5.0, 5.0).unwrap();
        ds.add_image(
            "a",
            vec![Detection::new(rect(0.0, 0.0, 10.0, 10.0), 0.8, "a").unwrap()],
            vec![GroundTruth::new(e, "a")],
        )
        .unwrap();
        let d = discrete_roc(&ds, &EvalOptions::default()).unwrap();
        assert_eq!(xy(&d), vec![(0.0, 1.0, 0.8)]);
        let c = continuous_roc(&ds, &EvalOptions::default()).unwrap();
        assert!((c.points[0].y - std::f64::consts::FRAC_PI_4).abs() < 1e-3);
    }

    #[test]
    fn validate_catches_bad_curves() {
        let mut c = Curve::new(XSemantics::FpCount, YSemantics::TprDiscrete);
        c.points = vec![
            CurvePoint {
                x: 2.0,
                y: 0.5,
                threshold: 0.5,
            },
            CurvePoint {
                x: 1.0,
                y: 0.6,
                threshold: 0.4,
            },
        ];
        assert!(c.validate().is_err());
        c.points = vec![CurvePoint {
            x: 0.0,
            y: 1.5,
            threshold: 0.5,
        }];
        assert!(c.validate().is_err());
        c.points = vec![
            CurvePoint {
                x: 0.0,
                y: 0.5,
                threshold: 0.4,
            },
            CurvePoint {
                x: 1.0,
                y: 0.6,
                threshold: 0.5,
            },
        ];
        assert!(c.validate().is_err());
    }
}
