//! RPN-style anchors, the proposal/anchor delta codec, top-N selection and
//! input resize planning.
//!
//! Ratios are height/width and preserve area: an anchor of scale `s` and
//! ratio `ρ` is `s/√ρ` wide and `s·√ρ` tall. Anchors are centered on feature
//! cells, at `((i + 0.5)·stride, (j + 0.5)·stride)`; implementations that put
//! the anchor center on the cell's top-left corner differ by `stride/2`.
//! Anchors that reach past the image border are kept as-is.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;

pub const DEFAULT_SCALES: [f64; 3] = [128.0, 256.0, 512.0];
pub const DEFAULT_RATIOS: [f64; 3] = [1.0, 2.0, 0.5];
pub const DEFAULT_STRIDE: f64 = 16.0;

/// Number of proposals the detector keeps per image at test time.
pub const DEFAULT_PROPOSAL_CAP: usize = 300;

/// Longest side after training-time resizing.
pub const MAX_SIDE: f64 = 1024.0;
/// Target shortest side after test-time resizing.
pub const TEST_MIN_SIDE: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSpec {
    scales: Vec<f64>,
    ratios: Vec<f64>,
    stride: f64,
}

impl AnchorSpec {
    pub fn new(scales: Vec<f64>, ratios: Vec<f64>, stride: f64) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidAnchorSpec("no scales given".into()));
        }
        if ratios.is_empty() {
            return Err(Error::InvalidAnchorSpec("no aspect ratios given".into()));
        }
        let positive = |v: &f64| v.is_finite() && *v > 0.0;
        if !scales.iter().all(positive) {
            return Err(Error::InvalidAnchorSpec(format!(
                "scales must be positive and finite: {scales:?}"
            )));
        }
        if !ratios.iter().all(positive) {
            return Err(Error::InvalidAnchorSpec(format!(
                "ratios must be positive and finite: {ratios:?}"
            )));
        }
        if !positive(&stride) {
            return Err(Error::InvalidAnchorSpec(format!(
                "stride must be positive and finite, got {stride}"
            )));
        }
        Ok(Self {
            scales,
            ratios,
            stride,
        })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn stride(&self) -> f64 {
        self.stride
    }

    /// Anchors per feature-map location.
    pub fn k(&self) -> usize {
        self.scales.len() * self.ratios.len()
    }
}

impl Default for AnchorSpec {
    /// 3 scales × 3 ratios at stride 16.
    fn default() -> Self {
        Self {
            scales: DEFAULT_SCALES.to_vec(),
            ratios: DEFAULT_RATIOS.to_vec(),
            stride: DEFAULT_STRIDE,
        }
    }
}

/// The `k` anchors centered at the origin, scale-major then ratio.
pub fn base_anchors(spec: &AnchorSpec) -> Vec<Rect> {
    let mut out = Vec::with_capacity(spec.k());
    for &s in &spec.scales {
        for &ratio in &spec.ratios {
            let root = ratio.sqrt();
            let (w, h) = (s / root, s * root);
            out.push(Rect::from_center(0.0, 0.0, w, h).expect("validated spec gives finite sizes"));
        }
    }
    out
}

/// All `W·H·k` anchors over a feature map, rows outermost, then columns, then
/// the base-anchor index.
pub fn anchor_grid(feature_w: usize, feature_h: usize, spec: &AnchorSpec) -> Result<Vec<Rect>> {
    if feature_w == 0 || feature_h == 0 {
        return Err(Error::InvalidArgument(format!(
            "feature map must be at least 1x1, got {feature_w}x{feature_h}"
        )));
    }
    let base = base_anchors(spec);
    let total = feature_w
        .checked_mul(feature_h)
        .and_then(|c| c.checked_mul(base.len()))
        .ok_or_else(|| Error::InvalidArgument("anchor grid size overflows".into()))?;
    let mut out = Vec::with_capacity(total);
    for j in 0..feature_h {
        let cy = (j as f64 + 0.5) * spec.stride;
        for i in 0..feature_w {
            let cx = (i as f64 + 0.5) * spec.stride;
            for a in &base {
                out.push(a.translate(cx, cy)?);
            }
        }
    }
    Ok(out)
}

/// Proposal expressed relative to an anchor: center offsets normalized by
/// the anchor size and log size ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDelta {
    pub tx: f64,
    pub ty: f64,
    pub tw: f64,
    pub th: f64,
}

fn require_positive_size(r: &Rect, what: &str) -> Result<()> {
    if r.width() > 0.0 && r.height() > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} must have positive width and height, got {}x{}",
            r.width(),
            r.height()
        )))
    }
}

pub fn encode(proposal: &Rect, anchor: &Rect) -> Result<BoxDelta> {
    require_positive_size(proposal, "proposal")?;
    require_positive_size(anchor, "anchor")?;
    let (cx, cy) = proposal.center();
    let (acx, acy) = anchor.center();
    let (aw, ah) = (anchor.width(), anchor.height());
    Ok(BoxDelta {
        tx: (cx - acx) / aw,
        ty: (cy - acy) / ah,
        tw: (proposal.width() / aw).ln(),
        th: (proposal.height() / ah).ln(),
    })
}

pub fn decode(delta: &BoxDelta, anchor: &Rect) -> Result<Rect> {
    require_positive_size(anchor, "anchor")?;
    let (acx, acy) = anchor.center();
    let (aw, ah) = (anchor.width(), anchor.height());
    let cx = acx + delta.tx * aw;
    let cy = acy + delta.ty * ah;
    let w = aw * delta.tw.exp();
    let h = ah * delta.th.exp();
    Rect::from_center(cx, cy, w, h)
}

/// The `n` highest-scoring items, by descending score, ties by input position.
pub fn top_n_by<T: Clone>(items: &[T], n: usize, score: impl Fn(&T) -> f64) -> Vec<T> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&i, &j| {
        score(&items[j])
            .total_cmp(&score(&items[i]))
            .then(i.cmp(&j))
    });
    order.truncate(n);
    order.into_iter().map(|i| items[i].clone()).collect()
}

pub fn top_n(scored: &[(Rect, f64)], n: usize) -> Vec<(Rect, f64)> {
    top_n_by(scored, n, |(_, s)| *s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizeMode {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResizePlan {
    pub scale: f64,
    pub resized_w: f64,
    pub resized_h: f64,
}

/// Input rescaling. Training: longest side to 1024. Testing: shortest side to
/// 600 unless that pushes the longest side past 1024. Upscaling is allowed.
pub fn resize_scale(w: f64, h: f64, mode: ResizeMode) -> Result<ResizePlan> {
    if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "image size must be positive and finite, got {w}x{h}"
        )));
    }
    let fit_max = MAX_SIDE / w.max(h);
    let scale = match mode {
        ResizeMode::Train => fit_max,
        ResizeMode::Test => (TEST_MIN_SIDE / w.min(h)).min(fit_max),
    };
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "image size {w}x{h} yields unusable scale {scale}"
        )));
    }
    Ok(ResizePlan {
        scale,
        resized_w: scale * w,
        resized_h: scale * h,
    })
}
