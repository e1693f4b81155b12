//! One-to-one assignment of detections to ground-truth regions within an image.
//!
//! A detection/ground-truth pair is admissible when its IoU is strictly
//! greater than the matching threshold (see [`qualifies`]). Two matchers are
//! provided: greedy by detection score, and a globally optimal assignment
//! maximizing the summed IoU of admissible pairs.

mod assignment;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Ellipse, Rect, DEFAULT_ELLIPSE_VERTICES, MIN_ELLIPSE_VERTICES};

/// Totals closer than this are treated as equal when the optimal matcher
/// breaks ties.
const OPTIMAL_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    Rect(Rect),
    Ellipse(Ellipse),
}

impl Region {
    /// IoU against a rectangle; ellipses are polygonized with `ellipse_vertices`.
    pub fn iou_with_rect(&self, r: &Rect, ellipse_vertices: usize) -> Result<f64> {
        match self {
            Region::Rect(g) => Ok(geometry::iou_rect(g, r)),
            Region::Ellipse(e) => geometry::iou_ellipse_rect(e, r, ellipse_vertices),
        }
    }
}

impl From<Rect> for Region {
    fn from(r: Rect) -> Self {
        Region::Rect(r)
    }
}

impl From<Ellipse> for Region {
    fn from(e: Ellipse) -> Self {
        Region::Ellipse(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub region: Region,
    pub image_id: String,
}

impl GroundTruth {
    pub fn new(region: impl Into<Region>, image_id: impl Into<String>) -> Self {
        Self {
            region: region.into(),
            image_id: image_id.into(),
        }
    }
}

/// Scored rectangle; higher scores are more confident.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub region: Rect,
    pub score: f64,
    pub image_id: String,
}

impl Detection {
    pub fn new(region: Rect, score: f64, image_id: impl Into<String>) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "detection score must be finite, got {score}"
            )));
        }
        Ok(Self {
            region,
            score,
            image_id: image_id.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub detection: usize,
    pub ground_truth: usize,
    pub iou: f64,
}

/// Result of a one-to-one matching. `pairs` is ordered by ground-truth index;
/// the unmatched index lists are ascending.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub pairs: Vec<MatchPair>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_ground_truths: Vec<usize>,
}

impl MatchOutcome {
    fn from_assignment(det_to_gt: &[Option<usize>], ious: &[Vec<f64>], n_gts: usize) -> Self {
        let mut gt_to_det = vec![None; n_gts];
        let mut unmatched_detections = Vec::new();
        for (d, g) in det_to_gt.iter().enumerate() {
            match g {
                Some(g) => gt_to_det[*g] = Some(d),
                None => unmatched_detections.push(d),
            }
        }
        let mut pairs = Vec::new();
        let mut unmatched_ground_truths = Vec::new();
        for (g, d) in gt_to_det.into_iter().enumerate() {
            match d {
                Some(d) => pairs.push(MatchPair {
                    detection: d,
                    ground_truth: g,
                    iou: ious[d][g],
                }),
                None => unmatched_ground_truths.push(g),
            }
        }
        Self {
            pairs,
            unmatched_detections,
            unmatched_ground_truths,
        }
    }

    pub fn true_positives(&self) -> usize {
        self.pairs.len()
    }

    /// Sum of matched IoUs, accumulated in ground-truth order.
    pub fn total_iou(&self) -> f64 {
        self.pairs.iter().map(|p| p.iou).sum()
    }

    /// Checks the one-to-one and partition invariants against the index
    /// space sizes and the threshold used.
    pub fn check_invariants(
        &self,
        n_dets: usize,
        n_gts: usize,
        iou_threshold: f64,
    ) -> Result<(), String> {
        let mut det_seen = vec![false; n_dets];
        let mut gt_seen = vec![false; n_gts];
        let mark = |seen: &mut Vec<bool>, i: usize, what: &str| -> Result<(), String> {
            match seen.get_mut(i) {
                None => Err(format!("{what} index {i} out of range")),
                Some(true) => Err(format!("{what} index {i} used twice")),
                Some(s) => {
                    *s = true;
                    Ok(())
                }
            }
        };
        for p in &self.pairs {
            mark(&mut det_seen, p.detection, "detection")?;
            mark(&mut gt_seen, p.ground_truth, "ground-truth")?;
            if !qualifies(p.iou, iou_threshold) {
                return Err(format!(
                    "pair ({}, {}) has IoU {} not above threshold {iou_threshold}",
                    p.detection, p.ground_truth, p.iou
                ));
            }
        }
        for &d in &self.unmatched_detections {
            mark(&mut det_seen, d, "detection")?;
        }
        for &g in &self.unmatched_ground_truths {
            mark(&mut gt_seen, g, "ground-truth")?;
        }
        if det_seen.iter().chain(&gt_seen).any(|s| !s) {
            return Err("pairs and unmatched sets do not cover every index".into());
        }
        Ok(())
    }
}

/// Whether a pair with this IoU may be matched. The comparison is strict, so
/// a detection at exactly the threshold is not a match and zero-overlap pairs
/// never qualify.
pub fn qualifies(iou: f64, iou_threshold: f64) -> bool {
    iou > iou_threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    #[default]
    Greedy,
    Optimal,
}

impl fmt::Display for Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Matcher::Greedy => "greedy",
            Matcher::Optimal => "optimal",
        })
    }
}

impl FromStr for Matcher {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Matcher::Greedy),
            "optimal" => Ok(Matcher::Optimal),
            other => Err(Error::InvalidArgument(format!("unknown matcher {other:?}"))),
        }
    }
}

pub(crate) fn check_threshold(iou_threshold: f64) -> Result<()> {
    if (0.0..=1.0).contains(&iou_threshold) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "IoU threshold must lie in [0, 1], got {iou_threshold}"
        )))
    }
}

pub(crate) fn check_vertices(ellipse_vertices: usize) -> Result<()> {
    if ellipse_vertices < MIN_ELLIPSE_VERTICES {
        return Err(Error::TooFewVertices {
            min: MIN_ELLIPSE_VERTICES,
            got: ellipse_vertices,
        });
    }
    Ok(())
}

fn check_single_image(dets: &[Detection], gts: &[GroundTruth]) -> Result<()> {
    let mut ids = dets
        .iter()
        .map(|d| d.image_id.as_str())
        .chain(gts.iter().map(|g| g.image_id.as_str()));
    if let Some(first) = ids.next() {
        if let Some(other) = ids.find(|id| *id != first) {
            return Err(Error::MixedImageIds {
                first: first.to_string(),
                second: other.to_string(),
            });
        }
    }
    Ok(())
}

/// `ious[d][g]` for every detection/ground-truth pair.
pub fn iou_matrix(
    dets: &[Detection],
    gts: &[GroundTruth],
    ellipse_vertices: usize,
) -> Result<Vec<Vec<f64>>> {
    check_vertices(ellipse_vertices)?;
    dets.iter()
        .map(|d| {
            gts.iter()
                .map(|g| g.region.iou_with_rect(&d.region, ellipse_vertices))
                .collect()
        })
        .collect()
}

/// Greedy matching on a precomputed IoU matrix. Detections are visited by
/// descending score, ties by index; each takes the free admissible ground
/// truth of highest IoU, ties by lower ground-truth index.
pub fn assign_greedy(
    ious: &[Vec<f64>],
    scores: &[f64],
    n_gts: usize,
    iou_threshold: f64,
) -> MatchOutcome {
    debug_assert_eq!(ious.len(), scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));

    let mut claimed = vec![false; n_gts];
    let mut det_to_gt = vec![None; scores.len()];
    for d in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, &iou) in ious[d].iter().enumerate() {
            if claimed[g] || !qualifies(iou, iou_threshold) {
                continue;
            }
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if let Some((g, _)) = best {
            claimed[g] = true;
            det_to_gt[d] = Some(g);
        }
    }
    MatchOutcome::from_assignment(&det_to_gt, ious, n_gts)
}

/// Greedy matching by IoU alone: admissible pairs are taken in descending IoU
/// order (ties by detection, then ground-truth index) whenever both ends are
/// still free.
pub fn assign_by_iou(ious: &[Vec<f64>], n_gts: usize, iou_threshold: f64) -> MatchOutcome {
    let mut candidates: Vec<(usize, usize, f64)> = ious
        .iter()
        .enumerate()
        .flat_map(|(d, row)| row.iter().enumerate().map(move |(g, &iou)| (d, g, iou)))
        .filter(|&(_, _, iou)| qualifies(iou, iou_threshold))
        .collect();
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut det_to_gt = vec![None; ious.len()];
    let mut claimed = vec![false; n_gts];
    for (d, g, _) in candidates {
        if det_to_gt[d].is_none() && !claimed[g] {
            det_to_gt[d] = Some(g);
            claimed[g] = true;
        }
    }
    MatchOutcome::from_assignment(&det_to_gt, ious, n_gts)
}

/// Optimal matching on a precomputed IoU matrix: maximizes the summed IoU of
/// admissible pairs. Among optimal pair sets, the one whose pair list sorted
/// by (detection, ground truth) is lexicographically smallest wins.
pub fn assign_optimal(ious: &[Vec<f64>], n_gts: usize, iou_threshold: f64) -> MatchOutcome {
    let n_dets = ious.len();
    let weight = |d: usize, g: usize| {
        let iou = ious[d][g];
        if qualifies(iou, iou_threshold) {
            iou
        } else {
            0.0
        }
    };

    // Independent connected components of the admissible-pair graph can be
    // solved separately; the lexicographic order also decomposes.
    let mut parent: Vec<usize> = (0..n_dets + n_gts).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut has_edge = vec![false; n_dets + n_gts];
    for d in 0..n_dets {
        for g in 0..n_gts {
            if weight(d, g) > 0.0 {
                has_edge[d] = true;
                has_edge[n_dets + g] = true;
                let (a, b) = (find(&mut parent, d), find(&mut parent, n_dets + g));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }

    let mut det_to_gt = vec![None; n_dets];
    let mut done = vec![false; n_dets + n_gts];
    for root in 0..n_dets {
        if !has_edge[root] || done[find(&mut parent, root)] {
            continue;
        }
        let comp = find(&mut parent, root);
        done[comp] = true;
        let rows: Vec<usize> = (0..n_dets)
            .filter(|&d| has_edge[d] && find(&mut parent, d) == comp)
            .collect();
        let cols: Vec<usize> = (0..n_gts)
            .filter(|&g| has_edge[n_dets + g] && find(&mut parent, n_dets + g) == comp)
            .collect();
        let w: Vec<Vec<f64>> = rows
            .iter()
            .map(|&d| cols.iter().map(|&g| weight(d, g)).collect())
            .collect();
        for (r, c) in lexicographic_optimum(&w) {
            det_to_gt[rows[r]] = Some(cols[c]);
        }
    }
    MatchOutcome::from_assignment(&det_to_gt, ious, n_gts)
}

/// Optimal assignment with the lexicographically smallest pair list among
/// ties. Rows are fixed one at a time to the smallest column that still
/// admits an optimal completion.
fn lexicographic_optimum(w: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    let (best, _) = assignment::max_weight_assignment(w);

    let completion = |from_row: usize, used: &[bool]| -> f64 {
        let free: Vec<usize> = (0..cols).filter(|&c| !used[c]).collect();
        let sub: Vec<Vec<f64>> = (from_row..rows)
            .map(|r| free.iter().map(|&c| w[r][c]).collect())
            .collect();
        assignment::max_weight_assignment(&sub).0
    };

    let mut used = vec![false; cols];
    let mut fixed = 0.0;
    let mut pairs = Vec::new();
    for (r, row) in w.iter().enumerate() {
        for (c, &weight) in row.iter().enumerate() {
            if used[c] || weight <= 0.0 {
                continue;
            }
            used[c] = true;
            let total = fixed + weight + completion(r + 1, &used);
            if total >= best - OPTIMAL_TIE_TOLERANCE * (1.0 + best) {
                fixed += weight;
                pairs.push((r, c));
                break;
            }
            used[c] = false;
        }
    }
    pairs
}

fn match_with(
    dets: &[Detection],
    gts: &[GroundTruth],
    matcher: Matcher,
    iou_threshold: f64,
    ellipse_vertices: usize,
) -> Result<MatchOutcome> {
    check_threshold(iou_threshold)?;
    check_single_image(dets, gts)?;
    let ious = iou_matrix(dets, gts, ellipse_vertices)?;
    Ok(match matcher {
        Matcher::Greedy => {
            let scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
            assign_greedy(&ious, &scores, gts.len(), iou_threshold)
        }
        Matcher::Optimal => assign_optimal(&ious, gts.len(), iou_threshold),
    })
}

/// Greedy-by-score matching of one image's detections.
pub fn match_greedy(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_threshold: f64,
) -> Result<MatchOutcome> {
    match_with(
        dets,
        gts,
        Matcher::Greedy,
        iou_threshold,
        DEFAULT_ELLIPSE_VERTICES,
    )
}

/// Summed-IoU-maximizing matching of one image's detections.
pub fn match_optimal(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_threshold: f64,
) -> Result<MatchOutcome> {
    match_with(
        dets,
        gts,
        Matcher::Optimal,
        iou_threshold,
        DEFAULT_ELLIPSE_VERTICES,
    )
}

/// Matching with an explicit matcher and ellipse polygonization.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruth],
    matcher: Matcher,
    iou_threshold: f64,
    ellipse_vertices: usize,
) -> Result<MatchOutcome> {
    match_with(dets, gts, matcher, iou_threshold, ellipse_vertices)
}
