//! Text formats: FDDB-style region lists, fold lists, bare rectangle lines,
//! and curve files (CSV or JSON).
//!
//! A region list is a sequence of records:
//!
//! ```text
//! <image id>
//! <region count>
//! <region line> × count
//! ```
//!
//! A region line has 4 numbers `x y w h` (rectangle, left-top corner plus
//! size), 5 numbers `x y w h score` (scored rectangle) or 6 numbers
//! `a b angle cx cy label` (ellipse with semi-axes `a ≥ b`). Blank lines are
//! ignored and CRLF line endings are accepted. Parsing is strict: any other
//! deviation is an error carrying the 1-based line number.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::geometry::{Ellipse, Rect};
use crate::matching::{Detection, GroundTruth, Matcher, Region};
use crate::metrics::{Curve, CurvePoint, EvalDataset, XSemantics, YSemantics};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
    #[error("image id {0:?} must be a single token")]
    InvalidImageId(String),
    #[error("image {0:?} appears twice")]
    DuplicateImageId(String),
    #[error("image {image_id:?}: missing region count")]
    MissingCount { image_id: String },
    #[error("image {image_id:?}: invalid region count {text:?}")]
    InvalidCount { image_id: String, text: String },
    #[error("image {image_id:?}: declared {declared} regions, found {found}")]
    CountMismatch {
        image_id: String,
        declared: usize,
        found: usize,
    },
    #[error("image {image_id:?}: more regions than the declared {declared}")]
    ExtraRegion { image_id: String, declared: usize },
    #[error("expected 4, 5 or 6 fields, found {0}")]
    FieldCount(usize),
    #[error("invalid number {0:?}")]
    InvalidNumber(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid curve header: {0}")]
    InvalidHeader(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

/// Decodes UTF-8, reporting the line of the first invalid byte.
pub fn decode_utf8(bytes: &[u8]) -> Result<&str, ParseError> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = 1 + bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count();
        err(line, ParseErrorKind::InvalidUtf8)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Radians,
    Degrees,
}

impl FromStr for AngleUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radians" | "rad" => Ok(AngleUnit::Radians),
            "degrees" | "deg" => Ok(AngleUnit::Degrees),
            other => Err(Error::InvalidArgument(format!(
                "unknown angle unit {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseOptions {
    /// Unit of the ellipse angle column.
    pub angle_unit: AngleUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AnnotatedRegion {
    Rect { rect: Rect, score: Option<f64> },
    Ellipse { ellipse: Ellipse, label: f64 },
}

impl AnnotatedRegion {
    pub fn region(&self) -> Region {
        match self {
            AnnotatedRegion::Rect { rect, .. } => Region::Rect(*rect),
            AnnotatedRegion::Ellipse { ellipse, .. } => Region::Ellipse(*ellipse),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationEntry {
    pub image_id: String,
    pub regions: Vec<AnnotatedRegion>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnnotationFile {
    pub entries: Vec<AnnotationEntry>,
}

fn parse_number(tok: &str, line: usize) -> Result<f64, ParseError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(err(line, ParseErrorKind::InvalidNumber(tok.to_string()))),
    }
}

fn parse_region_line(
    text: &str,
    line: usize,
    opts: &ParseOptions,
) -> Result<AnnotatedRegion, ParseError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if !(4..=6).contains(&fields.len()) {
        return Err(err(line, ParseErrorKind::FieldCount(fields.len())));
    }
    let nums = fields
        .iter()
        .map(|t| parse_number(t, line))
        .collect::<Result<Vec<f64>, _>>()?;
    let invalid = |e: Error| err(line, ParseErrorKind::InvalidRegion(e.to_string()));
    if nums.len() == 6 {
        let angle = match opts.angle_unit {
            AngleUnit::Radians => nums[2],
            AngleUnit::Degrees => nums[2].to_radians(),
        };
        let ellipse = Ellipse::new(nums[3], nums[4], nums[0], nums[1], angle).map_err(invalid)?;
        Ok(AnnotatedRegion::Ellipse {
            ellipse,
            label: nums[5],
        })
    } else {
        let rect = Rect::from_xywh(nums[0], nums[1], nums[2], nums[3]).map_err(invalid)?;
        Ok(AnnotatedRegion::Rect {
            rect,
            score: nums.get(4).copied(),
        })
    }
}

/// Non-blank lines with their 1-based line numbers, CR stripped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_region_list(text: &str) -> Result<AnnotationFile, ParseError> {
    parse_region_list_with(text, &ParseOptions::default())
}

pub fn parse_region_list_with(
    text: &str,
    opts: &ParseOptions,
) -> Result<AnnotationFile, ParseError> {
    let mut lines = content_lines(text).peekable();
    let mut entries: Vec<AnnotationEntry> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let last_line = text.lines().count().max(1);

    while let Some((id_line, id_text)) = lines.next() {
        if id_text.split_whitespace().nth(1).is_some() {
            if let Some(prev) = entries.last() {
                if parse_region_line(id_text, id_line, opts).is_ok() {
                    return Err(err(
                        id_line,
                        ParseErrorKind::ExtraRegion {
                            image_id: prev.image_id.clone(),
                            declared: prev.regions.len(),
                        },
                    ));
                }
            }
            return Err(err(
                id_line,
                ParseErrorKind::InvalidImageId(id_text.to_string()),
            ));
        }
        let image_id = id_text.to_string();
        if !seen.insert(image_id.clone()) {
            return Err(err(id_line, ParseErrorKind::DuplicateImageId(image_id)));
        }

        let (count_line, count_text) = lines.next().ok_or_else(|| {
            err(
                last_line,
                ParseErrorKind::MissingCount {
                    image_id: image_id.clone(),
                },
            )
        })?;
        let declared: usize = count_text.parse().map_err(|_| {
            err(
                count_line,
                ParseErrorKind::InvalidCount {
                    image_id: image_id.clone(),
                    text: count_text.to_string(),
                },
            )
        })?;

        let mut regions = Vec::new();
        while regions.len() < declared {
            let Some((line, text)) = lines.next() else {
                return Err(err(
                    last_line,
                    ParseErrorKind::CountMismatch {
                        image_id,
                        declared,
                        found: regions.len(),
                    },
                ));
            };
            regions.push(parse_region_line(text, line, opts)?);
        }
        entries.push(AnnotationEntry { image_id, regions });
    }
    Ok(AnnotationFile { entries })
}

/// Shortest representation that parses back to the same value.
fn exact(v: f64) -> String {
    format!("{v}")
}

fn write_region(out: &mut String, r: &AnnotatedRegion) {
    match r {
        AnnotatedRegion::Rect { rect, score } => {
            let _ = write!(
                out,
                "{} {} {} {}",
                exact(rect.x_min()),
                exact(rect.y_min()),
                exact(rect.width()),
                exact(rect.height())
            );
            if let Some(s) = score {
                let _ = write!(out, " {}", exact(*s));
            }
        }
        AnnotatedRegion::Ellipse { ellipse, label } => {
            let _ = write!(
                out,
                "{} {} {} {} {} {}",
                exact(ellipse.semi_major()),
                exact(ellipse.semi_minor()),
                exact(ellipse.angle()),
                exact(ellipse.center_x()),
                exact(ellipse.center_y()),
                exact(*label)
            );
        }
    }
    out.push('\n');
}

/// Region-list text; ellipse angles are written in radians.
pub fn write_region_list(file: &AnnotationFile) -> String {
    let mut out = String::new();
    for entry in &file.entries {
        let _ = writeln!(out, "{}\n{}", entry.image_id, entry.regions.len());
        for r in &entry.regions {
            write_region(&mut out, r);
        }
    }
    out
}

/// Bare rectangle lines (`x y w h [score]`), one per region, with no image
/// header. Ellipses are rejected.
pub fn parse_rect_lines(text: &str) -> Result<Vec<(Rect, Option<f64>)>, ParseError> {
    content_lines(text)
        .map(
            |(line, t)| match parse_region_line(t, line, &ParseOptions::default())? {
                AnnotatedRegion::Rect { rect, score } => Ok((rect, score)),
                AnnotatedRegion::Ellipse { .. } => Err(err(
                    line,
                    ParseErrorKind::InvalidRegion("expected a rectangle, found an ellipse".into()),
                )),
            },
        )
        .collect()
}

pub fn write_rect_lines(rects: &[(Rect, Option<f64>)]) -> String {
    let mut out = String::new();
    for (rect, score) in rects {
        write_region(
            &mut out,
            &AnnotatedRegion::Rect {
                rect: *rect,
                score: *score,
            },
        );
    }
    out
}

/// One image id per non-blank line, order preserved.
pub fn parse_fold_list(text: &str) -> Vec<String> {
    content_lines(text).map(|(_, l)| l.to_string()).collect()
}

/// Joins ground truths and scored detections by image id. Every annotated
/// image is part of the dataset, with or without detections.
pub fn build_dataset(
    annotations: &AnnotationFile,
    detections: &AnnotationFile,
) -> Result<EvalDataset> {
    let mut det_by_image: std::collections::BTreeMap<&str, Vec<Detection>> = Default::default();
    for entry in &detections.entries {
        let id = entry.image_id.as_str();
        if det_by_image.contains_key(id) {
            return Err(Error::DuplicateImage(entry.image_id.clone()));
        }
        let dets = entry
            .regions
            .iter()
            .map(|r| match r {
                AnnotatedRegion::Rect {
                    rect,
                    score: Some(score),
                } => Detection::new(*rect, *score, id),
                AnnotatedRegion::Rect { score: None, .. } => Err(Error::InvalidDetectionEntry {
                    image_id: id.to_string(),
                    reason: "detection has no score column".into(),
                }),
                AnnotatedRegion::Ellipse { .. } => Err(Error::InvalidDetectionEntry {
                    image_id: id.to_string(),
                    reason: "detections must be rectangles".into(),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        det_by_image.insert(id, dets);
    }

    let mut ds = EvalDataset::new();
    for entry in &annotations.entries {
        let id = entry.image_id.as_str();
        let gts = entry
            .regions
            .iter()
            .map(|r| GroundTruth::new(r.region(), id))
            .collect();
        let dets = det_by_image.remove(id).unwrap_or_default();
        ds.add_image(id, dets, gts)?;
    }
    if let Some(id) = det_by_image.keys().next() {
        return Err(Error::UnknownImage(id.to_string()));
    }
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveFormat {
    #[default]
    Csv,
    Json,
}

impl CurveFormat {
    pub fn extension(self) -> &'static str {
        match self {
            CurveFormat::Csv => "csv",
            CurveFormat::Json => "json",
        }
    }
}

impl FromStr for CurveFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(CurveFormat::Csv),
            "json" => Ok(CurveFormat::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown curve format {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub x_semantics: XSemantics,
    pub y_semantics: YSemantics,
    pub matcher: Option<Matcher>,
    pub dataset: Option<String>,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDocument {
    pub metadata: CurveMetadata,
    pub points: Vec<CurvePoint>,
}

impl CurveDocument {
    pub fn new(curve: &Curve, matcher: Option<Matcher>, dataset: Option<&str>) -> Self {
        Self {
            metadata: CurveMetadata {
                x_semantics: curve.x_semantics,
                y_semantics: curve.y_semantics,
                matcher,
                dataset: dataset.map(str::to_string),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
            },
            points: curve.points.clone(),
        }
    }

    pub fn to_curve(&self) -> Curve {
        Curve {
            points: self.points.clone(),
            x_semantics: self.metadata.x_semantics,
            y_semantics: self.metadata.y_semantics,
        }
    }
}

/// Renders `v` with 6 significant digits, `%g` style: fixed notation for
/// decimal exponents in [-4, 6), scientific otherwise, trailing zeros removed.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        format!("{}e{}", trim(mantissa), exp)
    } else {
        trim(&format!("{:.*}", (5 - exp) as usize, v))
    }
}

fn round_sig6(v: f64) -> f64 {
    format_sig6(v).parse().unwrap_or(v)
}

fn header_token(value: &str) -> String {
    value
        .chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect()
}

pub fn write_curve(c: &Curve, format: CurveFormat) -> String {
    write_curve_document(&CurveDocument::new(c, None, None), format)
}

/// Canonical text for a curve document: the same document always produces
/// the same bytes.
pub fn write_curve_document(doc: &CurveDocument, format: CurveFormat) -> String {
    match format {
        CurveFormat::Csv => {
            let m = &doc.metadata;
            let mut out = format!("# x={} y={}", m.x_semantics, m.y_semantics);
            if let Some(matcher) = m.matcher {
                let _ = write!(out, " matcher={matcher}");
            }
            if let Some(ds) = &m.dataset {
                let _ = write!(out, " dataset={}", header_token(ds));
            }
            let _ = writeln!(out, " version={}", header_token(&m.tool_version));
            out.push_str("x,y,threshold\n");
            for p in &doc.points {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    format_sig6(p.x),
                    format_sig6(p.y),
                    format_sig6(p.threshold)
                );
            }
            out
        }
        CurveFormat::Json => {
            let mut rounded = doc.clone();
            for p in &mut rounded.points {
                p.x = round_sig6(p.x);
                p.y = round_sig6(p.y);
                p.threshold = round_sig6(p.threshold);
            }
            let mut s = serde_json::to_string_pretty(&rounded).expect("curve documents serialize");
            s.push('\n');
            s
        }
    }
}

pub fn parse_curve_csv(text: &str) -> Result<CurveDocument, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let header_err = |line, msg: &str| err(line, ParseErrorKind::InvalidHeader(msg.to_string()));

    let (line, comment) = lines.next().ok_or_else(|| header_err(1, "empty input"))?;
    let body = comment
        .strip_prefix("# ")
        .ok_or_else(|| header_err(line, "first line must be a '# ' comment"))?;
    let (mut x_sem, mut y_sem, mut matcher, mut dataset, mut version) =
        (None, None, None, None, None);
    for tok in body.split(' ') {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| header_err(line, "expected key=value"))?;
        match key {
            "x" => {
                x_sem = Some(
                    XSemantics::parse(value)
                        .ok_or_else(|| header_err(line, "unknown x semantics"))?,
                )
            }
            "y" => {
                y_sem = Some(
                    YSemantics::parse(value)
                        .ok_or_else(|| header_err(line, "unknown y semantics"))?,
                )
            }
            "matcher" => {
                matcher = Some(
                    value
                        .parse::<Matcher>()
                        .map_err(|_| header_err(line, "unknown matcher"))?,
                )
            }
            "dataset" => dataset = Some(value.to_string()),
            "version" => version = Some(value.to_string()),
            _ => return Err(header_err(line, "unknown header key")),
        }
    }
    let metadata = CurveMetadata {
        x_semantics: x_sem.ok_or_else(|| header_err(line, "missing x semantics"))?,
        y_semantics: y_sem.ok_or_else(|| header_err(line, "missing y semantics"))?,
        matcher,
        dataset,
        tool_version: version.ok_or_else(|| header_err(line, "missing version"))?,
    };

    let (line, columns) = lines
        .next()
        .ok_or_else(|| header_err(line + 1, "missing column header"))?;
    if columns != "x,y,threshold" {
        return Err(header_err(line, "column header must be 'x,y,threshold'"));
    }

    let mut points = Vec::new();
    for (line, row) in lines {
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 3 {
            return Err(err(
                line,
                ParseErrorKind::InvalidCurve(format!("expected 3 columns, found {}", fields.len())),
            ));
        }
        points.push(CurvePoint {
            x: parse_number(fields[0], line)?,
            y: parse_number(fields[1], line)?,
            threshold: parse_number(fields[2], line)?,
        });
    }
    Ok(CurveDocument { metadata, points })
}

pub fn parse_curve_json(text: &str) -> Result<CurveDocument, ParseError> {
    serde_json::from_str(text)
        .map_err(|e| err(e.line().max(1), ParseErrorKind::InvalidCurve(e.to_string())))
}

pub fn parse_curve(text: &str, format: CurveFormat) -> Result<CurveDocument, ParseError> {
    match format {
        CurveFormat::Csv => parse_curve_csv(text),
        CurveFormat::Json => parse_curve_json(text),
    }
}
