//! Independent oracles and random instance generators shared by the
//! integration suites. Nothing here calls the matching or curve code under
//! test; IoU values come from the geometry module, which has its own oracle.

#![allow(dead_code)]

use facemetrics::geometry::{Ellipse, Rect};
use facemetrics::matching::{Detection, GroundTruth, Region};
use facemetrics::metrics::{EvalDataset, RocKind};
use facemetrics::Matcher;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TIE_TOLERANCE: f64 = 1e-9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Membership test for a rectangle, with its corners copied out.
fn rect_test(r: &Rect) -> impl Fn(f64, f64) -> bool {
    let [x0, y0, x1, y1] = [r.x_min(), r.y_min(), r.x_max(), r.y_max()];
    move |x, y| x >= x0 && x < x1 && y >= y0 && y < y1
}

/// Membership test for an ellipse, with the rotation precomputed.
pub fn ellipse_test(e: &Ellipse) -> impl Fn(f64, f64) -> bool {
    let (cx, cy) = (e.center_x(), e.center_y());
    let (s, c) = e.angle().sin_cos();
    let (ia, ib) = (1.0 / e.semi_major(), 1.0 / e.semi_minor());
    move |x, y| {
        let (dx, dy) = (x - cx, y - cy);
        let u = (dx * c + dy * s) * ia;
        let v = (dy * c - dx * s) * ib;
        u * u + v * v <= 1.0
    }
}

/// Monte Carlo IoU of two regions given by membership tests, sampling
/// uniformly inside `[x0, x1) x [y0, y1)`, which must cover both.
pub fn mc_iou(
    a: impl Fn(f64, f64) -> bool,
    b: impl Fn(f64, f64) -> bool,
    bounds: [f64; 4],
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    const CHUNK: usize = 4096;
    const SCALE: f64 = 1.0 / 4_294_967_296.0;
    let [x0, y0, x1, y1] = bounds;
    let (w, h) = (x1 - x0, y1 - y0);
    let (mut inter, mut union) = (0u64, 0u64);
    let mut buf = [0u64; CHUNK];
    let mut left = samples;
    while left > 0 {
        let n = left.min(CHUNK);
        rng.fill(&mut buf[..n]);
        // One draw gives both coordinates, 32 bits each.
        for &bits in &buf[..n] {
            let x = x0 + (bits >> 32) as f64 * SCALE * w;
            let y = y0 + (bits & 0xffff_ffff) as f64 * SCALE * h;
            let (ia, ib) = (a(x, y), b(x, y));
            inter += (ia & ib) as u64;
            union += (ia | ib) as u64;
        }
        left -= n;
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn mc_rect_iou(a: &Rect, b: &Rect, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let bounds = [
        a.x_min().min(b.x_min()),
        a.y_min().min(b.y_min()),
        a.x_max().max(b.x_max()),
        a.y_max().max(b.y_max()),
    ];
    mc_iou(rect_test(a), rect_test(b), bounds, samples, rng)
}

pub fn mc_ellipse_rect_iou(e: &Ellipse, r: &Rect, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let a = e.semi_major();
    let bounds = [
        (e.center_x() - a).min(r.x_min()),
        (e.center_y() - a).min(r.y_min()),
        (e.center_x() + a).max(r.x_max()),
        (e.center_y() + a).max(r.y_max()),
    ];
    mc_iou(ellipse_test(e), rect_test(r), bounds, samples, rng)
}

/// Rectangle with corners in `[0, extent)` and sides at least `min_side`.
pub fn random_rect(rng: &mut ChaCha8Rng, extent: f64, min_side: f64) -> Rect {
    let x = rng.gen_range(0.0..extent);
    let y = rng.gen_range(0.0..extent);
    let w = rng.gen_range(min_side..extent);
    let h = rng.gen_range(min_side..extent);
    Rect::from_xywh(x, y, w, h).unwrap()
}

/// Rectangle near `base`: each edge moved by up to `jitter` times the side.
pub fn jittered_rect(rng: &mut ChaCha8Rng, base: &Rect, jitter: f64) -> Rect {
    let (w, h) = (base.width(), base.height());
    let x0 = base.x_min() + rng.gen_range(-jitter..jitter) * w;
    let y0 = base.y_min() + rng.gen_range(-jitter..jitter) * h;
    let x1 = (base.x_max() + rng.gen_range(-jitter..jitter) * w).max(x0 + 0.05 * w);
    let y1 = (base.y_max() + rng.gen_range(-jitter..jitter) * h).max(y0 + 0.05 * h);
    Rect::new(x0, y0, x1, y1).unwrap()
}

pub fn random_ellipse(rng: &mut ChaCha8Rng, extent: f64) -> Ellipse {
    let a = rng.gen_range(1.0..extent / 2.0);
    let b = rng.gen_range(0.2..=1.0) * a;
    let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    Ellipse::new(
        rng.gen_range(0.0..extent),
        rng.gen_range(0.0..extent),
        a,
        b,
        angle,
    )
    .unwrap()
}

/// Random IoU-like matrix: zeros, exact repeats and continuous values mixed
/// so that ties and inadmissible entries both occur.
pub fn random_iou_matrix(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    coarse: bool,
) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| match rng.gen_range(0..4) {
                    0 => 0.0,
                    _ if coarse => rng.gen_range(0..=10) as f64 / 10.0,
                    _ => rng.gen_range(0.0..1.0),
                })
                .collect()
        })
        .collect()
}

/// Optimal one-to-one assignment by exhaustive enumeration: maximal summed
/// admissible IoU, ties (within the tolerance) resolved to the
/// lexicographically smallest (detection, ground truth) pair list.
/// Receives each complete assignment with its summed IoU.
type Visitor<'a> = dyn FnMut(f64, &[(usize, usize)]) + 'a;

pub fn enumerate_optimal(ious: &[Vec<f64>], n_gts: usize, thr: f64) -> Vec<(usize, usize)> {
    fn walk(
        d: usize,
        ious: &[Vec<f64>],
        thr: f64,
        used: &mut Vec<bool>,
        current: &mut Vec<(usize, usize)>,
        total: f64,
        visit: &mut Visitor,
    ) {
        if d == ious.len() {
            visit(total, current);
            return;
        }
        for g in 0..used.len() {
            if !used[g] && ious[d][g] > thr {
                used[g] = true;
                current.push((d, g));
                walk(d + 1, ious, thr, used, current, total + ious[d][g], visit);
                current.pop();
                used[g] = false;
            }
        }
        walk(d + 1, ious, thr, used, current, total, visit);
    }
    let mut best = f64::NEG_INFINITY;
    walk(
        0,
        ious,
        thr,
        &mut vec![false; n_gts],
        &mut Vec::new(),
        0.0,
        &mut |t, _| best = best.max(t),
    );
    let floor = best - TIE_TOLERANCE * (1.0 + best);
    let mut chosen: Option<Vec<(usize, usize)>> = None;
    walk(
        0,
        ious,
        thr,
        &mut vec![false; n_gts],
        &mut Vec::new(),
        0.0,
        &mut |t, pairs| {
            if t >= floor && chosen.as_deref().is_none_or(|c| pairs < c) {
                chosen = Some(pairs.to_vec());
            }
        },
    );
    chosen.unwrap()
}

/// Greedy matching: detections in the given order, each taking the free
/// ground truth of highest admissible IoU (lowest index among equals).
pub fn greedy_in_order(
    ious: &[Vec<f64>],
    order: &[usize],
    n_gts: usize,
    thr: f64,
) -> Vec<(usize, usize)> {
    let mut used = vec![false; n_gts];
    let mut pairs = Vec::new();
    for &d in order {
        let mut best: Option<usize> = None;
        for g in 0..n_gts {
            if used[g] || ious[d][g] <= thr {
                continue;
            }
            if best.is_none_or(|b| ious[d][g] > ious[d][b]) {
                best = Some(g);
            }
        }
        if let Some(g) = best {
            used[g] = true;
            pairs.push((d, g));
        }
    }
    pairs.sort();
    pairs
}

fn total(ious: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(d, g)| ious[d][g]).sum()
}

pub fn pair_total(ious: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    total(ious, pairs)
}

/// Descending score, then corner coordinates ascending.
fn oracle_order(dets: &[Detection]) -> Vec<usize> {
    let key = |d: &Detection| {
        let r = &d.region;
        [r.x_min(), r.y_min(), r.x_max(), r.y_max()]
    };
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (&dets[i], &dets[j]);
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| key(a).partial_cmp(&key(b)).unwrap())
    });
    idx
}

/// Curve points `(x, y, threshold)` recomputed from scratch at every
/// distinct score: the detections scoring at least the threshold are
/// re-matched per image and the counts pooled.
pub fn roc_oracle(
    ds: &EvalDataset,
    kind: RocKind,
    matcher: Matcher,
    thr: f64,
    vertices: usize,
) -> Vec<(f64, f64, f64)> {
    let mut scores: Vec<f64> = ds
        .images()
        .values()
        .flat_map(|i| i.detections.iter().map(|d| d.score))
        .collect();
    scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
    scores.dedup();
    let total_gts = ds.total_gt_count() as f64;
    let n_images = ds.num_images() as f64;

    let mut points = Vec::new();
    for t in scores {
        let (mut tp, mut fp, mut iou_sum) = (0usize, 0usize, 0.0f64);
        for image in ds.images().values() {
            let order = oracle_order(&image.detections);
            let kept: Vec<&Detection> = order
                .iter()
                .map(|&i| &image.detections[i])
                .filter(|d| d.score >= t)
                .collect();
            if kept.is_empty() {
                continue;
            }
            let ious: Vec<Vec<f64>> = kept
                .iter()
                .map(|d| {
                    image
                        .ground_truths
                        .iter()
                        .map(|g| g.region.iou_with_rect(&d.region, vertices).unwrap())
                        .collect()
                })
                .collect();
            let n_gts = image.ground_truths.len();
            let seq: Vec<usize> = (0..kept.len()).collect();
            let mut pairs = match matcher {
                Matcher::Greedy => greedy_in_order(&ious, &seq, n_gts, thr),
                Matcher::Optimal => enumerate_optimal(&ious, n_gts, thr),
            };
            pairs.sort_by_key(|&(d, g)| (g, d));
            tp += pairs.len();
            fp += kept.len() - pairs.len();
            iou_sum += total(&ious, &pairs);
        }
        let (x, y) = match kind {
            RocKind::Discrete => (fp as f64, tp as f64 / total_gts),
            RocKind::Continuous => (fp as f64, iou_sum / total_gts),
            RocKind::Normalized => (fp as f64 / n_images, tp as f64 / total_gts),
        };
        points.push((x, y, t));
    }
    points
}

/// Small dataset on a coarse grid: detections cluster around the ground
/// truths so that matches, near misses and score ties all occur.
pub fn random_dataset(
    rng: &mut ChaCha8Rng,
    max_images: usize,
    max_dets: usize,
    max_gts: usize,
) -> EvalDataset {
    loop {
        let mut ds = EvalDataset::new();
        let n_images = rng.gen_range(1..=max_images);
        for i in 0..n_images {
            let id = format!("img{i}");
            let n_gts = rng.gen_range(0..=max_gts);
            let gts: Vec<GroundTruth> = (0..n_gts)
                .map(|_| {
                    let base = Rect::from_xywh(
                        rng.gen_range(0..8) as f64 * 10.0,
                        rng.gen_range(0..8) as f64 * 10.0,
                        rng.gen_range(2..6) as f64 * 5.0,
                        rng.gen_range(2..6) as f64 * 5.0,
                    )
                    .unwrap();
                    let region = if rng.gen_bool(0.3) {
                        let (cx, cy) = base.center();
                        let (a, b) = (
                            base.width().max(base.height()) / 2.0,
                            base.width().min(base.height()) / 2.0,
                        );
                        let angle = if base.width() >= base.height() {
                            0.0
                        } else {
                            std::f64::consts::FRAC_PI_2
                        };
                        Region::Ellipse(Ellipse::new(cx, cy, a, b, angle).unwrap())
                    } else {
                        Region::Rect(base)
                    };
                    GroundTruth::new(region, id.clone())
                })
                .collect();
            let n_dets = rng.gen_range(0..=max_dets);
            let dets: Vec<Detection> = (0..n_dets)
                .map(|_| {
                    let rect = match gts.get(rng.gen_range(0..gts.len().max(1))) {
                        Some(g) if rng.gen_bool(0.8) => {
                            let base = match &g.region {
                                Region::Rect(r) => *r,
                                Region::Ellipse(e) => facemetrics::geometry::bounding_rect(e),
                            };
                            let dx = rng.gen_range(-2i32..=2) as f64 * 2.0;
                            let dy = rng.gen_range(-2i32..=2) as f64 * 2.0;
                            let grow = rng.gen_range(-1i32..=2) as f64 * 2.0;
                            Rect::new(
                                base.x_min() + dx,
                                base.y_min() + dy,
                                base.x_max() + dx + grow,
                                base.y_max() + dy + grow,
                            )
                            .unwrap()
                        }
                        _ => Rect::from_xywh(
                            rng.gen_range(0..10) as f64 * 8.0,
                            rng.gen_range(0..10) as f64 * 8.0,
                            rng.gen_range(1..5) as f64 * 6.0,
                            rng.gen_range(1..5) as f64 * 6.0,
                        )
                        .unwrap(),
                    };
                    let score = rng.gen_range(1..=6) as f64 / 6.0;
                    Detection::new(rect, score, id.clone()).unwrap()
                })
                .collect();
            ds.add_image(id, dets, gts).unwrap();
        }
        if ds.total_gt_count() > 0 {
            return ds;
        }
    }
}
