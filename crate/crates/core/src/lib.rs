//! Evaluation and proposal-analysis toolkit for face detectors.
//!
//! - [`geometry`]: rectangle and ellipse overlaps, non-maximum suppression
//! - [`anchors`]: anchor grids, the proposal delta codec, resize planning
//! - [`matching`]: one-to-one detection/ground-truth assignment
//! - [`metrics`]: discrete, continuous and per-image ROC curves, proposal recall
//! - [`io`]: region-list, fold-list and curve file formats
//! - [`cli`]: the `facemetrics` command line

pub mod anchors;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod io;
pub mod matching;
pub mod metrics;

pub use error::{Error, Result};
pub use geometry::{Ellipse, Point, Polygon, Rect};
pub use matching::{Detection, GroundTruth, MatchOutcome, MatchPair, Matcher, Region};
pub use metrics::{Curve, CurvePoint, EvalDataset, EvalOptions};
