//! Overlap computations between axis-aligned rectangles and rotated ellipses.
//!
//! All coordinates live on the continuous plane: a rectangle `(0, 0, 10, 10)`
//! is 10 units wide, with no "+1" pixel convention. Ellipse overlaps are
//! computed by sampling the ellipse boundary into a convex polygon and
//! clipping it against the rectangle; the ellipse's own area is always the
//! exact `π·a·b`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::Detection;

/// Vertex count used for ellipse polygonization unless the caller picks one.
pub const DEFAULT_ELLIPSE_VERTICES: usize = 1024;

/// Smallest accepted polygonization.
pub const MIN_ELLIPSE_VERTICES: usize = 8;

/// Axis-aligned rectangle given by its min and max corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let invalid = |reason| Error::InvalidRect {
            x_min,
            y_min,
            x_max,
            y_max,
            reason,
        };
        if ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite()) {
            return Err(invalid("coordinates must be finite"));
        }
        if x_max < x_min || y_max < y_min {
            return Err(invalid("max corner lies before min corner"));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Builds a rectangle from its left-top corner and size.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !w.is_finite() || !h.is_finite() || w < 0.0 || h < 0.0 {
            return Err(Error::InvalidRect {
                x_min: x,
                y_min: y,
                x_max: x + w,
                y_max: y + h,
                reason: "width and height must be finite and non-negative",
            });
        }
        Self::new(x, y, x + w, y + h)
    }

    /// Builds a rectangle of the given size centered on `(cx, cy)`.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Area of the overlap with `other`, zero when they do not touch.
    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Result<Rect> {
        Rect::new(
            self.x_min + dx,
            self.y_min + dy,
            self.x_max + dx,
            self.y_max + dy,
        )
    }
}

/// Rotated ellipse. `angle` is in radians, counter-clockwise from the +x axis
/// to the major axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    center_x: f64,
    center_y: f64,
    semi_major: f64,
    semi_minor: f64,
    angle: f64,
}

impl Ellipse {
    pub fn new(
        center_x: f64,
        center_y: f64,
        semi_major: f64,
        semi_minor: f64,
        angle: f64,
    ) -> Result<Self> {
        if ![center_x, center_y, semi_major, semi_minor, angle]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidEllipse(
                "all parameters must be finite".into(),
            ));
        }
        if semi_minor <= 0.0 {
            return Err(Error::InvalidEllipse(format!(
                "semi-minor axis must be positive, got {semi_minor}"
            )));
        }
        if semi_major < semi_minor {
            return Err(Error::InvalidEllipse(format!(
                "semi-major axis {semi_major} is shorter than semi-minor axis {semi_minor}"
            )));
        }
        Ok(Self {
            center_x,
            center_y,
            semi_major,
            semi_minor,
            angle,
        })
    }

    pub fn circle(center_x: f64, center_y: f64, radius: f64) -> Result<Self> {
        Self::new(center_x, center_y, radius, radius, 0.0)
    }

    pub fn center_x(&self) -> f64 {
        self.center_x
    }

    pub fn center_y(&self) -> f64 {
        self.center_y
    }

    pub fn semi_major(&self) -> f64 {
        self.semi_major
    }

    pub fn semi_minor(&self) -> f64 {
        self.semi_minor
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Exact area `π·a·b`.
    pub fn area(&self) -> f64 {
        PI * self.semi_major * self.semi_minor
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Simple polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if !vertices.iter().all(|p| p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::InvalidArgument(
                "polygon vertices must be finite".into(),
            ));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.vertices).abs()
    }

    /// Tight axis-aligned bounds of the vertices.
    pub fn bounds(&self) -> Rect {
        let mut b = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for p in &self.vertices {
            b = (b.0.min(p.x), b.1.min(p.y), b.2.max(p.x), b.3.max(p.y));
        }
        Rect {
            x_min: b.0,
            y_min: b.1,
            x_max: b.2,
            y_max: b.3,
        }
    }
}

fn shoelace(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        twice += p.x * q.y - q.x * p.y;
    }
    0.5 * twice
}

pub fn area(r: &Rect) -> f64 {
    r.area()
}

/// Intersection over union of two rectangles. Zero when the union has no area.
pub fn iou_rect(a: &Rect, b: &Rect) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Samples `n` boundary points at uniform parameter angles, counter-clockwise.
pub fn ellipse_to_polygon(e: &Ellipse, n: usize) -> Result<Polygon> {
    if n < MIN_ELLIPSE_VERTICES {
        return Err(Error::TooFewVertices {
            min: MIN_ELLIPSE_VERTICES,
            got: n,
        });
    }
    let (sin_a, cos_a) = e.angle.sin_cos();
    let vertices = (0..n)
        .map(|i| {
            let t = 2.0 * PI * (i as f64) / (n as f64);
            let (sin_t, cos_t) = t.sin_cos();
            let u = e.semi_major * cos_t;
            let v = e.semi_minor * sin_t;
            Point {
                x: e.center_x + u * cos_a - v * sin_a,
                y: e.center_y + u * sin_a + v * cos_a,
            }
        })
        .collect();
    Ok(Polygon { vertices })
}

/// Tight axis-aligned bounding box of the ellipse.
pub fn bounding_rect(e: &Ellipse) -> Rect {
    let (sin_a, cos_a) = e.angle.sin_cos();
    let (a2, b2) = (e.semi_major * e.semi_major, e.semi_minor * e.semi_minor);
    let half_w = (a2 * cos_a * cos_a + b2 * sin_a * sin_a).sqrt();
    let half_h = (a2 * sin_a * sin_a + b2 * cos_a * cos_a).sqrt();
    Rect {
        x_min: e.center_x - half_w,
        y_min: e.center_y - half_h,
        x_max: e.center_x + half_w,
        y_max: e.center_y + half_h,
    }
}

#[derive(Clone, Copy)]
enum Side {
    Left(f64),
    Right(f64),
    Bottom(f64),
    Top(f64),
}

impl Side {
    fn inside(self, p: Point) -> bool {
        match self {
            Side::Left(x) => p.x >= x,
            Side::Right(x) => p.x <= x,
            Side::Bottom(y) => p.y >= y,
            Side::Top(y) => p.y <= y,
        }
    }

    /// Crossing of segment `p→q` with the boundary line. Only called when the
    /// endpoints are on opposite sides, so the denominator is non-zero.
    fn crossing(self, p: Point, q: Point) -> Point {
        match self {
            Side::Left(x) | Side::Right(x) => {
                let t = (x - p.x) / (q.x - p.x);
                Point {
                    x,
                    y: p.y + t * (q.y - p.y),
                }
            }
            Side::Bottom(y) | Side::Top(y) => {
                let t = (y - p.y) / (q.y - p.y);
                Point {
                    x: p.x + t * (q.x - p.x),
                    y,
                }
            }
        }
    }
}

fn clip_half_plane(subject: &[Point], side: Side, out: &mut Vec<Point>) {
    out.clear();
    let n = subject.len();
    for i in 0..n {
        let cur = subject[i];
        let next = subject[(i + 1) % n];
        match (side.inside(cur), side.inside(next)) {
            (true, true) => out.push(next),
            (true, false) => out.push(side.crossing(cur, next)),
            (false, true) => {
                out.push(side.crossing(cur, next));
                out.push(next);
            }
            (false, false) => {}
        }
    }
}

/// Sutherland-Hodgman clip of a polygon against a rectangle; returns the area
/// of the overlap.
pub fn polygon_rect_intersection_area(poly: &Polygon, r: &Rect) -> f64 {
    let mut current = poly.vertices.clone();
    let mut scratch = Vec::with_capacity(current.len() + 4);
    for side in [
        Side::Left(r.x_min),
        Side::Right(r.x_max),
        Side::Bottom(r.y_min),
        Side::Top(r.y_max),
    ] {
        clip_half_plane(&current, side, &mut scratch);
        std::mem::swap(&mut current, &mut scratch);
        if current.len() < 3 {
            return 0.0;
        }
    }
    shoelace(&current).abs()
}

/// IoU between an ellipse and a rectangle using an `n`-vertex polygonization
/// of the ellipse for the intersection and the exact ellipse area for the
/// union.
pub fn iou_ellipse_rect(e: &Ellipse, r: &Rect, n: usize) -> Result<f64> {
    if n < MIN_ELLIPSE_VERTICES {
        return Err(Error::TooFewVertices {
            min: MIN_ELLIPSE_VERTICES,
            got: n,
        });
    }
    if r.area() <= 0.0 || bounding_rect(e).intersection_area(r) <= 0.0 {
        return Ok(0.0);
    }
    let poly = ellipse_to_polygon(e, n)?;
    let inter = polygon_rect_intersection_area(&poly, r);
    if inter <= 0.0 {
        return Ok(0.0);
    }
    let union = e.area() + r.area() - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Greedy non-maximum suppression.
///
/// Detections are visited by descending score, ties by input position. A
/// detection is dropped when it overlaps an already kept one with
/// `IoU >= iou_threshold`; zero-overlap pairs never suppress each other.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Result<Vec<Detection>> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::InvalidArgument(format!(
            "NMS IoU threshold must lie in [0, 1], got {iou_threshold}"
        )));
    }
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| dets[j].score.total_cmp(&dets[i].score).then(i.cmp(&j)));

    let mut kept: Vec<&Detection> = Vec::new();
    for i in order {
        let cand = &dets[i];
        let suppressed = kept.iter().any(|k| {
            let iou = iou_rect(&k.region, &cand.region);
            iou > 0.0 && iou >= iou_threshold
        });
        if !suppressed {
            kept.push(cand);
        }
    }
    Ok(kept.into_iter().cloned().collect())
}
