//! `facemetrics` command line.
//!
//! Exit codes: 0 on success, 1 for input or validation errors, 2 when an
//! internal invariant check fails. Outputs are written to a temporary file
//! next to the destination and renamed into place only once everything has
//! been computed, so a failed run leaves no partial files behind.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::anchors::{
    self, AnchorSpec, ResizeMode, DEFAULT_RATIOS, DEFAULT_SCALES, DEFAULT_STRIDE,
};
use crate::geometry::{self, DEFAULT_ELLIPSE_VERTICES, MIN_ELLIPSE_VERTICES};
use crate::io::{
    self, AngleUnit, AnnotatedRegion, AnnotationEntry, AnnotationFile, CurveDocument, CurveFormat,
    ParseOptions,
};
use crate::matching::{Detection, Matcher};
use crate::metrics::{self, curve_query, EvalDataset, EvalOptions, RocKind, DEFAULT_TOP_N};
use crate::Error;

/// Environment variable selecting the number of worker threads.
pub const THREADS_ENV: &str = "FACEMETRICS_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "facemetrics",
    version,
    about = "Face detection evaluation and proposal analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a discrete, continuous or per-image-normalized ROC curve.
    Eval(EvalArgs),
    /// Detection rate of the top-N proposals as a function of the IoU threshold.
    ProposalRecall(RecallArgs),
    /// Greedy non-maximum suppression of scored rectangles.
    Nms(NmsArgs),
    /// Enumerate the anchors of a feature map.
    Anchors(AnchorArgs),
    /// Compute the input rescaling for an image size.
    ResizePlan(ResizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Matches count 1; x = total false positives.
    Discrete,
    /// Matches count their IoU; x = total false positives.
    Continuous,
    /// Matches count 1; x = false positives per image.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatcherArg {
    /// Descending score; each detection takes its best free ground truth.
    Greedy,
    /// Maximize the summed IoU of matched pairs.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AngleArg {
    Radians,
    Degrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResizeModeArg {
    /// Longest side to 1024.
    Train,
    /// Shortest side to 600, longest side at most 1024.
    Test,
}

impl From<MatcherArg> for Matcher {
    fn from(m: MatcherArg) -> Self {
        match m {
            MatcherArg::Greedy => Matcher::Greedy,
            MatcherArg::Optimal => Matcher::Optimal,
        }
    }
}

impl From<FormatArg> for CurveFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => CurveFormat::Csv,
            FormatArg::Json => CurveFormat::Json,
        }
    }
}

impl From<AngleArg> for AngleUnit {
    fn from(a: AngleArg) -> Self {
        match a {
            AngleArg::Radians => AngleUnit::Radians,
            AngleArg::Degrees => AngleUnit::Degrees,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth region list ("-" for stdin).
    #[arg(long)]
    pub gt: PathBuf,
    /// Detection region list with scored rectangles ("-" for stdin).
    #[arg(long)]
    pub det: PathBuf,
    /// Curve to build.
    #[arg(long, value_enum, default_value = "discrete")]
    pub mode: ModeArg,
    /// One-to-one matching rule.
    #[arg(long, value_enum, default_value = "greedy")]
    pub matcher: MatcherArg,
    /// A match needs IoU strictly above this value.
    #[arg(long, default_value_t = metrics::DEFAULT_IOU_THRESHOLD)]
    pub iou: f64,
    /// Output curve file ("-" for stdout).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Output curve format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Print the true positive rate at this false-positive budget (curve x units).
    #[arg(long)]
    pub query_fp: Option<f64>,
    /// Keep at most this many highest-scoring detections per image.
    #[arg(long)]
    pub max_dets: Option<usize>,
    /// Restrict evaluation to the image ids listed in this fold file.
    #[arg(long)]
    pub folds: Option<PathBuf>,
    /// Vertices used to polygonize elliptical ground truth.
    #[arg(long, default_value_t = DEFAULT_ELLIPSE_VERTICES)]
    pub ellipse_vertices: usize,
    /// Unit of the ellipse angle column in the input files.
    #[arg(long, value_enum, default_value = "radians")]
    pub angle_unit: AngleArg,
    /// Dataset name recorded in the curve header.
    #[arg(long)]
    pub dataset_name: Option<String>,
}

#[derive(Debug, Args)]
pub struct RecallArgs {
    /// Ground-truth region list ("-" for stdin).
    #[arg(long)]
    pub gt: PathBuf,
    /// Proposal region list with scored rectangles ("-" for stdin).
    #[arg(long)]
    pub proposals: PathBuf,
    /// Proposal budgets; one curve file per value.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TOP_N.to_vec())]
    pub top_n: Vec<usize>,
    /// IoU thresholds in (0, 1]; defaults to 0.5, 0.55, ..., 1.0.
    #[arg(long, value_delimiter = ',')]
    pub iou_thresholds: Option<Vec<f64>>,
    /// Directory receiving recall_top<N>.<ext> files.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Output curve format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Vertices used to polygonize elliptical ground truth.
    #[arg(long, default_value_t = DEFAULT_ELLIPSE_VERTICES)]
    pub ellipse_vertices: usize,
    /// Unit of the ellipse angle column in the input files.
    #[arg(long, value_enum, default_value = "radians")]
    pub angle_unit: AngleArg,
    /// Dataset name recorded in the curve headers.
    #[arg(long)]
    pub dataset_name: Option<String>,
}

#[derive(Debug, Args)]
pub struct NmsArgs {
    /// Scored rectangles, one "x y w h score" per line ("-" for stdin).
    #[arg(long)]
    pub det: PathBuf,
    /// Suppress a box when its IoU with a kept box reaches this value.
    #[arg(long, default_value_t = metrics::DEFAULT_IOU_THRESHOLD)]
    pub iou: f64,
    /// Keep at most this many boxes (per image) after suppression, e.g. 300.
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Treat input and output as region lists and suppress per image.
    #[arg(long)]
    pub region_list: bool,
    /// Output file ("-" for stdout).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnchorArgs {
    /// Anchor side lengths in pixels.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SCALES.to_vec())]
    pub scales: Vec<f64>,
    /// Aspect ratios as height/width.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_RATIOS.to_vec())]
    pub ratios: Vec<f64>,
    /// Feature-map width in cells.
    #[arg(long)]
    pub width: usize,
    /// Feature-map height in cells.
    #[arg(long)]
    pub height: usize,
    /// Feature cell size in input pixels.
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    pub stride: f64,
    /// Output file ("-" for stdout).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResizeArgs {
    /// Image width in pixels.
    #[arg(long)]
    pub width: f64,
    /// Image height in pixels.
    #[arg(long)]
    pub height: f64,
    /// Rescaling rule.
    #[arg(long, value_enum, default_value = "test")]
    pub mode: ResizeModeArg,
    /// Output file ("-" for stdout).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Finished outputs: destination (None = stdout) and contents, plus lines for
/// the user.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(Option<PathBuf>, String)>,
    pub summary: Vec<String>,
}

fn destination(p: &Path) -> Option<PathBuf> {
    (p != Path::new("-")).then(|| p.to_path_buf())
}

fn read_input(path: &Path) -> CliResult<String> {
    let bytes = if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| input(format!("reading stdin: {e}")))?;
        buf
    } else {
        std::fs::read(path).map_err(|e| input(format!("reading {}: {e}", path.display())))?
    };
    io::decode_utf8(&bytes)
        .map(str::to_string)
        .map_err(|e| input(format!("{}: {e}", path.display())))
}

fn read_region_list(path: &Path, opts: &ParseOptions) -> CliResult<AnnotationFile> {
    let text = read_input(path)?;
    io::parse_region_list_with(&text, opts).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn check_stdin_once(paths: &[&Path]) -> CliResult<()> {
    if paths.iter().filter(|p| **p == Path::new("-")).count() > 1 {
        return Err(input("only one input may be read from stdin"));
    }
    Ok(())
}

fn check_unit_interval(name: &str, v: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(input(format!("--{name} must lie in [0, 1], got {v}")))
    }
}

fn check_vertices(n: usize) -> CliResult<()> {
    if n < MIN_ELLIPSE_VERTICES {
        return Err(input(format!(
            "--ellipse-vertices must be at least {MIN_ELLIPSE_VERTICES}, got {n}"
        )));
    }
    Ok(())
}

fn check_curve(c: &metrics::Curve) -> CliResult<()> {
    c.validate()
        .map_err(|m| CliError::Internal(format!("curve invariant violated: {m}")))
}

fn cap_detections(ds: &EvalDataset, max: usize) -> CliResult<EvalDataset> {
    let mut out = EvalDataset::new();
    for (id, image) in ds.images() {
        let mut dets = image.detections.clone();
        dets.sort_by(metrics::canonical_order);
        dets.truncate(max);
        out.add_image(id, dets, image.ground_truths.clone())?;
    }
    Ok(out)
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<Outputs> {
    check_unit_interval("iou", args.iou)?;
    check_vertices(args.ellipse_vertices)?;
    check_stdin_once(&[&args.gt, &args.det])?;
    if let Some(q) = args.query_fp {
        if !q.is_finite() {
            return Err(input(format!("--query-fp must be finite, got {q}")));
        }
    }
    let parse_opts = ParseOptions {
        angle_unit: args.angle_unit.into(),
    };
    let gt = read_region_list(&args.gt, &parse_opts)?;
    let det = read_region_list(&args.det, &parse_opts)?;
    let mut ds = io::build_dataset(&gt, &det)?;
    if let Some(folds) = &args.folds {
        let ids = io::parse_fold_list(&read_input(folds)?);
        ds = ds.restrict_to(&ids)?;
    }
    if let Some(max) = args.max_dets {
        ds = cap_detections(&ds, max)?;
    }

    let kind = match args.mode {
        ModeArg::Discrete => RocKind::Discrete,
        ModeArg::Continuous => RocKind::Continuous,
        ModeArg::Normalized => RocKind::Normalized,
    };
    let opts = EvalOptions {
        matcher: args.matcher.into(),
        iou_threshold: args.iou,
        ellipse_vertices: args.ellipse_vertices,
    };
    let curve = metrics::roc_curve(&ds, kind, &opts)?;
    check_curve(&curve)?;

    let doc = CurveDocument::new(&curve, Some(opts.matcher), args.dataset_name.as_deref());
    let text = io::write_curve_document(&doc, args.format.into());

    let mut summary = format!(
        "mode={} matcher={} images={} ground_truths={} detections={} points={}",
        args.mode
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default(),
        opts.matcher,
        ds.num_images(),
        ds.total_gt_count(),
        ds.num_detections(),
        curve.points.len()
    );
    if let Some(last) = curve.points.last() {
        summary.push_str(&format!(
            " final_x={} final_tpr={}",
            io::format_sig6(last.x),
            io::format_sig6(last.y)
        ));
    }
    if let Some(q) = args.query_fp {
        let tpr = curve_query(&curve, q).unwrap_or(0.0);
        summary.push_str(&format!(
            " tpr_at_{}={}",
            io::format_sig6(q),
            io::format_sig6(tpr)
        ));
    }
    Ok(Outputs {
        files: vec![(destination(&args.out), text)],
        summary: vec![summary],
    })
}

fn default_recall_thresholds() -> Vec<f64> {
    (10..=20).map(|i| i as f64 / 20.0).collect()
}

pub fn cmd_proposal_recall(args: &RecallArgs) -> CliResult<Outputs> {
    check_vertices(args.ellipse_vertices)?;
    check_stdin_once(&[&args.gt, &args.proposals])?;
    if args.top_n.is_empty() {
        return Err(input("--top-n needs at least one value"));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = args.top_n.iter().find(|n| !seen.insert(**n)) {
        return Err(input(format!("--top-n lists {dup} twice")));
    }
    let thresholds = args
        .iou_thresholds
        .clone()
        .unwrap_or_else(default_recall_thresholds);
    if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(input(format!(
            "--iou-thresholds must lie in (0, 1], got {t}"
        )));
    }
    let parse_opts = ParseOptions {
        angle_unit: args.angle_unit.into(),
    };
    let gt = read_region_list(&args.gt, &parse_opts)?;
    let props = read_region_list(&args.proposals, &parse_opts)?;
    let ds = io::build_dataset(&gt, &props)?;

    let curves = metrics::proposal_recall(&ds, &args.top_n, &thresholds, args.ellipse_vertices)?;
    let format: CurveFormat = args.format.into();
    let mut out = Outputs::default();
    for rc in &curves {
        check_curve(&rc.curve)?;
        let doc = CurveDocument::new(&rc.curve, None, args.dataset_name.as_deref());
        let path = args
            .out_dir
            .join(format!("recall_top{}.{}", rc.top_n, format.extension()));
        let at_half = curve_query(&rc.curve, 0.5).unwrap_or(0.0);
        out.summary.push(format!(
            "top_n={} file={} detection_rate_at_0.5={}",
            rc.top_n,
            path.display(),
            io::format_sig6(at_half)
        ));
        out.files
            .push((Some(path), io::write_curve_document(&doc, format)));
    }
    Ok(out)
}

fn nms_capped(dets: &[Detection], iou: f64, top_n: Option<usize>) -> CliResult<Vec<Detection>> {
    let mut kept = geometry::nms(dets, iou)?;
    if let Some(n) = top_n {
        kept.truncate(n);
    }
    Ok(kept)
}

fn scored(
    rect_and_score: (crate::Rect, Option<f64>),
    image_id: &str,
    line: usize,
) -> CliResult<Detection> {
    let (rect, score) = rect_and_score;
    let score = score.ok_or_else(|| input(format!("box {line} has no score column")))?;
    Ok(Detection::new(rect, score, image_id)?)
}

pub fn cmd_nms(args: &NmsArgs) -> CliResult<Outputs> {
    check_unit_interval("iou", args.iou)?;
    let text = read_input(&args.det)?;
    let where_ = args.det.display().to_string();
    let output = if args.region_list {
        let file = io::parse_region_list(&text).map_err(|e| input(format!("{where_}: {e}")))?;
        let mut out = AnnotationFile::default();
        for entry in &file.entries {
            let dets = entry
                .regions
                .iter()
                .enumerate()
                .map(|(i, r)| match r {
                    AnnotatedRegion::Rect { rect, score } => {
                        scored((*rect, *score), &entry.image_id, i + 1)
                    }
                    AnnotatedRegion::Ellipse { .. } => Err(input(format!(
                        "{where_}: image {:?} has an ellipse; NMS needs rectangles",
                        entry.image_id
                    ))),
                })
                .collect::<CliResult<Vec<_>>>()?;
            let kept = nms_capped(&dets, args.iou, args.top_n)?;
            out.entries.push(AnnotationEntry {
                image_id: entry.image_id.clone(),
                regions: kept
                    .into_iter()
                    .map(|d| AnnotatedRegion::Rect {
                        rect: d.region,
                        score: Some(d.score),
                    })
                    .collect(),
            });
        }
        io::write_region_list(&out)
    } else {
        let rects = io::parse_rect_lines(&text).map_err(|e| input(format!("{where_}: {e}")))?;
        let dets = rects
            .into_iter()
            .enumerate()
            .map(|(i, r)| scored(r, "", i + 1))
            .collect::<CliResult<Vec<_>>>()?;
        let kept = nms_capped(&dets, args.iou, args.top_n)?;
        let lines: Vec<_> = kept
            .into_iter()
            .map(|d| (d.region, Some(d.score)))
            .collect();
        io::write_rect_lines(&lines)
    };
    Ok(Outputs {
        files: vec![(destination(&args.out), output)],
        summary: vec![],
    })
}

pub fn cmd_anchors(args: &AnchorArgs) -> CliResult<Outputs> {
    let spec = AnchorSpec::new(args.scales.clone(), args.ratios.clone(), args.stride)?;
    let grid = anchors::anchor_grid(args.width, args.height, &spec)?;
    let lines: Vec<_> = grid.into_iter().map(|r| (r, None)).collect();
    Ok(Outputs {
        files: vec![(destination(&args.out), io::write_rect_lines(&lines))],
        summary: vec![],
    })
}

pub fn cmd_resize_plan(args: &ResizeArgs) -> CliResult<Outputs> {
    let mode = match args.mode {
        ResizeModeArg::Train => ResizeMode::Train,
        ResizeModeArg::Test => ResizeMode::Test,
    };
    let plan = anchors::resize_scale(args.width, args.height, mode)?;
    let text = format!(
        "scale {:.6}\nresized_width {:.6}\nresized_height {:.6}\n",
        plan.scale, plan.resized_w, plan.resized_h
    );
    Ok(Outputs {
        files: vec![(destination(&args.out), text)],
        summary: vec![],
    })
}

pub fn execute(command: &Command) -> CliResult<Outputs> {
    match command {
        Command::Eval(a) => cmd_eval(a),
        Command::ProposalRecall(a) => cmd_proposal_recall(a),
        Command::Nms(a) => cmd_nms(a),
        Command::Anchors(a) => cmd_anchors(a),
        Command::ResizePlan(a) => cmd_resize_plan(a),
    }
}

/// Writes every file through a sibling temporary, renaming only after all
/// temporaries were written.
fn commit(outputs: &Outputs) -> CliResult<()> {
    let mut staged = Vec::new();
    for (dest, text) in &outputs.files {
        let Some(dest) = dest else { continue };
        let dir = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir)
            .map_err(|e| input(format!("creating {}: {e}", dir.display())))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)
            .map_err(|e| input(format!("creating temporary file in {}: {e}", dir.display())))?;
        tmp.write_all(text.as_bytes())
            .and_then(|_| tmp.flush())
            .map_err(|e| input(format!("writing {}: {e}", dest.display())))?;
        staged.push((tmp, dest));
    }
    for (tmp, dest) in staged {
        tmp.persist(dest)
            .map_err(|e| input(format!("writing {}: {}", dest.display(), e.error)))?;
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for (dest, text) in &outputs.files {
        if dest.is_none() {
            lock.write_all(text.as_bytes())
                .map_err(|e| input(format!("writing stdout: {e}")))?;
        }
    }
    Ok(())
}

fn thread_count() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(input(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(input(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

/// Runs a parsed command with the configured worker count and writes its
/// outputs.
pub fn run(cli: &Cli) -> CliResult<Outputs> {
    let outputs = match thread_count()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(format!("starting worker pool: {e}")))?
            .install(|| execute(&cli.command))?,
        None => execute(&cli.command)?,
    };
    commit(&outputs)?;
    Ok(outputs)
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(outputs) => {
            let to_stdout = outputs.files.iter().all(|(d, _)| d.is_some());
            for line in &outputs.summary {
                if to_stdout {
                    println!("{line}");
                } else {
                    eprintln!("{line}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
