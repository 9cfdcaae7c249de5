//! `hawp`: command-line pipelines over the wireframe geometry core.
//!
//! Subcommands cover synthetic dataset generation, the attraction-field
//! codec, proposal binding, the evaluation suite, homography sampling and
//! warping, edge-map aggregation, pseudo-label filtering, and SVG
//! visualization. Every command that takes a seed is bit-reproducible,
//! and every command echoes its parsed flags into a `*.run.json`
//! sidecar next to its primary output.

mod svg;

use anyhow::{anyhow, bail, ensure, Context, Result};
use base64::Engine;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hawp_core::binding::{bind, DEFAULT_TAU_DELTA};
use hawp_core::eval::{
    default_heatmap_tol, heatmap_ap_f, junction_ap_curves, repeatability, sap_curves,
    sample_homography, PrCurve, SegmentMetric, DEFAULT_REP_EPS,
    JUNCTION_AP_THRESHOLDS, SAP_THRESHOLDS,
};
use hawp_core::hatfield::{
    decode_field, dedup_segments, encode_field, DEFAULT_D_MIN, DEFAULT_TAU_D,
};
use hawp_core::io;
use hawp_core::junctions::{extract_junctions, gt_junction_maps, ExtractMode, DEFAULT_TAU_J};
use hawp_core::ssl::{aggregate_edges, ssl_filter, EdgeMap, DEFAULT_TAU_SSL};
use hawp_core::synth::{generate_dataset_filtered, Primitive, DEFAULT_COUNT_PER_PRIMITIVE};
use hawp_core::{Homography, Junction, LineSegment, Wireframe};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "hawp",
    version,
    about = "Wireframe parsing pipelines: synthesis, field codec, binding, evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic primitive dataset.
    Synth(SynthArgs),
    /// Encode a wireframe into an attraction field (and junction maps).
    Encode(EncodeArgs),
    /// Decode an attraction field back into line segments.
    Decode(DecodeArgs),
    /// Snap segment endpoints to junctions, forming proposals.
    Bind(BindArgs),
    /// Evaluation metrics over prediction/ground-truth pairs.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Sample random homographies.
    Homography(HomographyArgs),
    /// Warp a wireframe or image through a homography.
    Warp(WarpArgs),
    /// Edge-map utilities for homography adaptation.
    #[command(subcommand)]
    Edges(EdgesCommand),
    /// Filter a putative wireframe by the combined SSL score.
    PseudoLabel(PseudoLabelArgs),
    /// Render a wireframe overlay as SVG.
    Plot(PlotArgs),
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Structural AP over line segments.
    Sap(SapArgs),
    /// Junction mAP.
    Junc(JuncArgs),
    /// Heatmap AP/F over rasterized edge pixels.
    Heatmap(HeatmapArgs),
    /// Repeatability under a known homography.
    Rep(RepArgs),
}

#[derive(Subcommand)]
enum EdgesCommand {
    /// Fuse warped-view edge maps back into the source frame.
    Aggregate(AggregateArgs),
    /// Rasterize a wireframe into a binary edge map.
    Rasterize(RasterizeArgs),
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let parts: Vec<&str> = s.split(['x', ',']).collect();
    let parse = |t: &str| -> Result<u32, String> {
        t.trim()
            .parse::<u32>()
            .map_err(|_| format!("bad size component '{t}'"))
    };
    match parts.as_slice() {
        [one] => {
            let v = parse(one)?;
            Ok((v, v))
        }
        [w, h] => Ok((parse(w)?, parse(h)?)),
        _ => Err(format!("bad size '{s}', expected WIDTHxHEIGHT")),
    }
}

#[derive(Args, Serialize)]
struct SynthArgs {
    /// Output directory (images/, wireframes/, manifest.json).
    #[arg(long)]
    out: PathBuf,
    /// Samples per primitive.
    #[arg(long, default_value_t = DEFAULT_COUNT_PER_PRIMITIVE)]
    count: usize,
    /// Master seed; per-sample seeds derive from it.
    #[arg(long)]
    seed: u64,
    /// Image size, WIDTHxHEIGHT (min 64x64).
    #[arg(long, value_parser = parse_size, default_value = "128x128")]
    size: (u32, u32),
    /// Restrict to these primitives (comma-separated names).
    #[arg(long, value_delimiter = ',')]
    primitive: Option<Vec<String>>,
}

#[derive(Args, Serialize)]
struct EncodeArgs {
    /// Ground-truth wireframe JSON.
    #[arg(long)]
    wireframe: PathBuf,
    /// Output attraction-field file.
    #[arg(long)]
    out: PathBuf,
    /// Lattice stride in pixels.
    #[arg(long, default_value_t = 4)]
    stride: u32,
    /// Attraction-region distance cap, in lattice units.
    #[arg(long, default_value_t = DEFAULT_TAU_D)]
    tau_d: f64,
    /// Minimum encodable distance, in lattice units.
    #[arg(long, default_value_t = DEFAULT_D_MIN)]
    d_min: f64,
    /// Also write ground-truth junction maps here.
    #[arg(long)]
    junctions_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct DecodeArgs {
    /// Attraction-field file.
    #[arg(long)]
    field: PathBuf,
    /// Output wireframe JSON.
    #[arg(long)]
    out: PathBuf,
    /// Residual scales to decode, comma-separated integers.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
          default_values_t = [-2, -1, 0, 1, 2])]
    scales: Vec<i32>,
    /// Collapse near-duplicate segments.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set, value_name = "BOOL")]
    dedup: bool,
    /// Endpoint tolerance for deduplication, in pixels.
    #[arg(long, default_value_t = 0.25)]
    dedup_tol: f64,
    /// Junction-map file; extracted junctions join the output wireframe.
    #[arg(long)]
    junctions: Option<PathBuf>,
    /// Junction score threshold for test-mode extraction.
    #[arg(long, default_value_t = DEFAULT_TAU_J)]
    tau_j: f64,
}

#[derive(Args, Serialize)]
struct BindArgs {
    /// Wireframe JSON whose segments are bound.
    #[arg(long)]
    input: PathBuf,
    /// Wireframe JSON providing the junctions (default: the input's own).
    #[arg(long)]
    junctions: Option<PathBuf>,
    /// Maximum endpoint displacement, in units.
    #[arg(long, default_value_t = DEFAULT_TAU_DELTA)]
    tau_delta: f64,
    /// Coordinate divisor applied before measuring displacement.
    #[arg(long, default_value_t = 4.0)]
    units: f64,
    /// Output proposals JSON.
    #[arg(long)]
    out: PathBuf,
    /// Also write the bound segments as a wireframe JSON (for evaluation).
    #[arg(long)]
    wireframe_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SapArgs {
    /// Predicted wireframe JSON file, or a directory of them.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth wireframe JSON file, or a directory of them.
    #[arg(long)]
    gt: PathBuf,
    /// Squared-distance thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = SAP_THRESHOLDS)]
    thresholds: Vec<f64>,
    /// Evaluation domain, WIDTHxHEIGHT.
    #[arg(long, value_parser = parse_size, default_value = "128x128")]
    domain: (u32, u32),
    /// Write the metrics JSON here (default: stdout only).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a precision/recall SVG here.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct JuncArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Squared-distance thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = JUNCTION_AP_THRESHOLDS)]
    thresholds: Vec<f64>,
    #[arg(long, value_parser = parse_size, default_value = "128x128")]
    domain: (u32, u32),
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct HeatmapArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, value_parser = parse_size, default_value = "128x128")]
    domain: (u32, u32),
    /// Pixel matching tolerance (default: 0.0075 * domain diagonal).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MetricArg {
    Structural,
    Orthogonal,
}

#[derive(Args, Serialize)]
struct RepArgs {
    /// Wireframe detected on view A.
    #[arg(long)]
    pred_a: PathBuf,
    /// Wireframe detected on view B.
    #[arg(long)]
    pred_b: PathBuf,
    /// Homography JSON mapping A's frame into B's.
    #[arg(long)]
    homography: PathBuf,
    /// Match threshold, in pixels.
    #[arg(long, default_value_t = DEFAULT_REP_EPS)]
    eps: f64,
    /// Segment distance.
    #[arg(long, value_enum, default_value_t = MetricArg::Structural)]
    metric: MetricArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct HomographyArgs {
    /// Seed for the first draw; draw i uses seed + i.
    #[arg(long)]
    seed: u64,
    /// Number of homographies.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Pixel frame the homography acts on.
    #[arg(long, value_parser = parse_size, default_value = "128x128")]
    size: (u32, u32),
    /// Output JSON file (count=1) or directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct WarpArgs {
    /// Wireframe JSON to warp.
    #[arg(long, conflicts_with = "image")]
    wireframe: Option<PathBuf>,
    /// PGM image to warp (inverse-mapped, bilinear).
    #[arg(long)]
    image: Option<PathBuf>,
    /// Homography JSON (source frame to output frame).
    #[arg(long)]
    homography: PathBuf,
    /// Output frame size (default: the input's size).
    #[arg(long, value_parser = parse_size)]
    size: Option<(u32, u32)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct AggregateArgs {
    /// Directory of per-view edge maps (PGM or EDGE), sorted by name.
    #[arg(long)]
    maps: PathBuf,
    /// Directory of per-view homography JSONs, sorted by name.
    #[arg(long)]
    homographies: PathBuf,
    /// Output frame size, WIDTHxHEIGHT.
    #[arg(long, value_parser = parse_size)]
    size: (u32, u32),
    /// Output edge map; `.pgm` writes quantized PGM, else binary EDGE.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct RasterizeArgs {
    /// Wireframe JSON to rasterize.
    #[arg(long)]
    wireframe: PathBuf,
    /// Raster size (default: the wireframe's own size).
    #[arg(long, value_parser = parse_size)]
    size: Option<(u32, u32)>,
    /// Output edge map; `.pgm` writes PGM, else binary EDGE.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct PseudoLabelArgs {
    /// Putative wireframe JSON; segment scores are verification scores.
    #[arg(long)]
    wireframe: PathBuf,
    /// Aggregated edge map (PGM or EDGE).
    #[arg(long)]
    edges: PathBuf,
    /// Combined-score pruning threshold (inclusive).
    #[arg(long, default_value_t = DEFAULT_TAU_SSL)]
    tau_ssl: f64,
    /// Output filtered wireframe JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct PlotArgs {
    /// Base PGM image.
    #[arg(long)]
    image: PathBuf,
    /// Wireframe JSON to overlay.
    #[arg(long)]
    wireframe: PathBuf,
    /// Output SVG.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    if let Ok(v) = std::env::var("HAWP_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: HAWP_THREADS must be a positive integer, got '{v}'");
                std::process::exit(1);
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(2);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => run_synth(args),
        Command::Encode(args) => run_encode(args),
        Command::Decode(args) => run_decode(args),
        Command::Bind(args) => run_bind(args),
        Command::Eval(EvalCommand::Sap(args)) => run_sap(args),
        Command::Eval(EvalCommand::Junc(args)) => run_junc(args),
        Command::Eval(EvalCommand::Heatmap(args)) => run_heatmap(args),
        Command::Eval(EvalCommand::Rep(args)) => run_rep(args),
        Command::Homography(args) => run_homography(args),
        Command::Warp(args) => run_warp(args),
        Command::Edges(EdgesCommand::Aggregate(args)) => run_aggregate(args),
        Command::Edges(EdgesCommand::Rasterize(args)) => run_rasterize(args),
        Command::PseudoLabel(args) => run_pseudo_label(args),
        Command::Plot(args) => run_plot(args),
    }
}

/// Echoes the parsed flags next to the primary output: `<dir>/run.json`
/// for directory outputs, `<file>.run.json` otherwise.
fn write_run_manifest<T: Serialize>(out: &Path, out_is_dir: bool, command: &str, args: &T) -> Result<()> {
    let path = if out_is_dir {
        out.join("run.json")
    } else {
        PathBuf::from(format!("{}.run.json", out.display()))
    };
    let manifest = serde_json::json!({ "command": command, "args": args });
    io::write_json(&path, &manifest)?;
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<()> {
    ensure!(
        args.size.0 >= 64 && args.size.1 >= 64,
        "size must be at least 64x64, got {}x{}",
        args.size.0,
        args.size.1
    );
    let primitives: Vec<Primitive> = match &args.primitive {
        None => Primitive::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| {
                Primitive::from_name(n)
                    .ok_or_else(|| anyhow!("unknown primitive '{n}'"))
            })
            .collect::<Result<_>>()?,
    };
    let manifest =
        generate_dataset_filtered(&args.out, &primitives, args.count, args.seed, args.size)?;
    println!(
        "wrote {} samples ({} primitives x {}) to {}",
        manifest.samples.len(),
        primitives.len(),
        args.count,
        args.out.display()
    );
    write_run_manifest(&args.out, true, "synth", &args)
}

fn run_encode(args: EncodeArgs) -> Result<()> {
    let wf = io::read_wireframe(&args.wireframe)?;
    let field = encode_field(&wf, args.stride, args.tau_d, args.d_min)
        .with_context(|| format!("encoding {}", args.wireframe.display()))?;
    io::write_hat_field(&args.out, &field)?;
    if let Some(junctions_out) = &args.junctions_out {
        io::write_junction_maps(junctions_out, &gt_junction_maps(&wf, args.stride))?;
    }
    println!(
        "encoded {}x{} lattice, {} foreground px -> {}",
        field.width_s,
        field.height_s,
        field.foreground_count(),
        args.out.display()
    );
    write_run_manifest(&args.out, false, "encode", &args)
}

fn run_decode(args: DecodeArgs) -> Result<()> {
    let field = io::read_hat_field(&args.field)?;
    let (proposals, skipped) = decode_field(&field, &args.scales);
    let mut segments: Vec<LineSegment> = proposals.into_iter().map(|p| p.segment).collect();
    let raw = segments.len();
    if args.dedup {
        segments = dedup_segments(&segments, args.dedup_tol);
    }
    let mut wf = Wireframe::new(
        field.width_s as u32 * field.stride,
        field.height_s as u32 * field.stride,
    );
    wf.segments = segments;
    if let Some(junctions) = &args.junctions {
        let maps = io::read_junction_maps(junctions)?;
        wf.junctions = extract_junctions(&maps, ExtractMode::Test, 0, args.tau_j);
    }
    println!(
        "decoded {} segments ({} raw, {} skipped) -> {}",
        wf.segments.len(),
        raw,
        skipped,
        args.out.display()
    );
    io::write_wireframe(&args.out, &wf)?;
    write_run_manifest(&args.out, false, "decode", &args)
}

fn run_bind(args: BindArgs) -> Result<()> {
    let input = io::read_wireframe(&args.input)?;
    let junctions: Vec<Junction> = match &args.junctions {
        Some(path) => io::read_wireframe(path)?.junctions,
        None => input.junctions.clone(),
    };
    let proposals = bind(&input.segments, &junctions, args.tau_delta, args.units)?;
    println!(
        "bound {} proposals from {} segments x {} junctions -> {}",
        proposals.len(),
        input.segments.len(),
        junctions.len(),
        args.out.display()
    );
    io::write_proposals(&args.out, &proposals, args.units)?;
    if let Some(wf_out) = &args.wireframe_out {
        let mut bound = Wireframe::new(input.width, input.height);
        bound.segments = proposals.iter().map(|p| p.bound_segment()).collect();
        bound.junctions = junctions;
        io::write_wireframe(wf_out, &bound)?;
    }
    write_run_manifest(&args.out, false, "bind", &args)
}

/// Loads prediction/ground-truth wireframes: two files, or two
/// directories paired by file stem.
fn load_pairs(pred: &Path, gt: &Path) -> Result<(Vec<Wireframe>, Vec<Wireframe>)> {
    if pred.is_dir() != gt.is_dir() {
        bail!("--pred and --gt must both be files or both be directories");
    }
    if !pred.is_dir() {
        return Ok((vec![io::read_wireframe(pred)?], vec![io::read_wireframe(gt)?]));
    }
    let preds = io::read_wireframe_dir(pred)?;
    let gts = io::read_wireframe_dir(gt)?;
    if preds.len() != gts.len() {
        bail!(
            "{} predictions vs {} ground-truth files",
            preds.len(),
            gts.len()
        );
    }
    for ((pn, _), (gn, _)) in preds.iter().zip(&gts) {
        if pn != gn {
            bail!("unpaired files: prediction '{pn}' vs ground truth '{gn}'");
        }
    }
    Ok((
        preds.into_iter().map(|(_, w)| w).collect(),
        gts.into_iter().map(|(_, w)| w).collect(),
    ))
}

#[derive(Serialize)]
struct CurveOut {
    thresholds: Vec<f64>,
    precision: Vec<f64>,
    recall: Vec<f64>,
    ap: f64,
}

impl From<&PrCurve> for CurveOut {
    fn from(c: &PrCurve) -> CurveOut {
        CurveOut {
            thresholds: c.thresholds.clone(),
            precision: c.precision.clone(),
            recall: c.recall.clone(),
            ap: c.ap,
        }
    }
}

#[derive(Serialize)]
struct ApEntry {
    threshold: f64,
    ap: f64,
    curve: CurveOut,
}

#[derive(Serialize)]
struct ApReport {
    metric: &'static str,
    domain: (u32, u32),
    images: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_ap: Option<f64>,
    results: Vec<ApEntry>,
}

fn finish_ap_report(
    report: &ApReport,
    curves: &[(f64, PrCurve)],
    title: &str,
    out: &Option<PathBuf>,
    plot: &Option<PathBuf>,
    command: &str,
    args: &impl Serialize,
) -> Result<()> {
    if let Some(path) = plot {
        let labeled: Vec<(String, &PrCurve)> = curves
            .iter()
            .map(|(t, c)| (format!("thr={t}"), c))
            .collect();
        std::fs::write(path, svg::pr_plot(title, &labeled))
            .with_context(|| path.display().to_string())?;
    }
    if let Some(path) = out {
        io::write_json(path, report)?;
        write_run_manifest(path, false, command, args)?;
    }
    Ok(())
}

fn run_sap(args: SapArgs) -> Result<()> {
    let (preds, gts) = load_pairs(&args.pred, &args.gt)?;
    let curves = sap_curves(&preds, &gts, &args.thresholds, args.domain)?;
    for (thr, curve) in &curves {
        println!("sAP@{thr}: {:.4}", curve.ap);
    }
    let report = ApReport {
        metric: "sap",
        domain: args.domain,
        images: preds.len(),
        mean_ap: None,
        results: curves
            .iter()
            .map(|(t, c)| ApEntry { threshold: *t, ap: c.ap, curve: c.into() })
            .collect(),
    };
    finish_ap_report(&report, &curves, "structural AP", &args.out, &args.plot, "eval-sap", &args)
}

fn run_junc(args: JuncArgs) -> Result<()> {
    let (preds, gts) = load_pairs(&args.pred, &args.gt)?;
    let curves = junction_ap_curves(&preds, &gts, &args.thresholds, args.domain)?;
    for (thr, curve) in &curves {
        println!("junction AP@{thr}: {:.4}", curve.ap);
    }
    let mean = if curves.is_empty() {
        0.0
    } else {
        curves.iter().map(|(_, c)| c.ap).sum::<f64>() / curves.len() as f64
    };
    println!("junction mAP: {mean:.4}");
    let report = ApReport {
        metric: "junction-ap",
        domain: args.domain,
        images: preds.len(),
        mean_ap: Some(mean),
        results: curves
            .iter()
            .map(|(t, c)| ApEntry { threshold: *t, ap: c.ap, curve: c.into() })
            .collect(),
    };
    finish_ap_report(&report, &curves, "junction AP", &args.out, &args.plot, "eval-junc", &args)
}

#[derive(Serialize)]
struct HeatmapReport {
    metric: &'static str,
    domain: (u32, u32),
    images: usize,
    tol: f64,
    ap: f64,
    f: f64,
    curve: CurveOut,
}

fn run_heatmap(args: HeatmapArgs) -> Result<()> {
    let (preds, gts) = load_pairs(&args.pred, &args.gt)?;
    let tol = args.tol.unwrap_or_else(|| default_heatmap_tol(args.domain));
    let result = heatmap_ap_f(&preds, &gts, args.domain, tol)?;
    println!("heatmap AP: {:.4}", result.ap);
    println!("heatmap F: {:.4}", result.f);
    let report = HeatmapReport {
        metric: "heatmap",
        domain: args.domain,
        images: preds.len(),
        tol,
        ap: result.ap,
        f: result.f,
        curve: (&result.curve).into(),
    };
    if let Some(path) = &args.plot {
        let labeled = vec![("heatmap".to_string(), &result.curve)];
        std::fs::write(path, svg::pr_plot("heatmap PR", &labeled))
            .with_context(|| path.display().to_string())?;
    }
    if let Some(path) = &args.out {
        io::write_json(path, &report)?;
        write_run_manifest(path, false, "eval-heatmap", &args)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RepReport {
    metric: &'static str,
    distance: MetricArg,
    eps: f64,
    rep: f64,
    /// Mean matched distance; absent when nothing matched.
    loc: Option<f64>,
    matched: usize,
    total: usize,
}

fn run_rep(args: RepArgs) -> Result<()> {
    let a = io::read_wireframe(&args.pred_a)?;
    let b = io::read_wireframe(&args.pred_b)?;
    let h = io::read_homography(&args.homography)?;
    let metric = match args.metric {
        MetricArg::Structural => SegmentMetric::Structural,
        MetricArg::Orthogonal => SegmentMetric::Orthogonal,
    };
    let r = repeatability(&a, &b, &h, metric, args.eps)?;
    println!("repeatability: {:.4}", r.rep);
    if r.loc.is_nan() {
        println!("localization: n/a (no matches)");
    } else {
        println!("localization: {:.4}", r.loc);
    }
    println!("matched: {} / {}", r.matched, r.total);
    let report = RepReport {
        metric: "repeatability",
        distance: args.metric,
        eps: args.eps,
        rep: r.rep,
        loc: (!r.loc.is_nan()).then_some(r.loc),
        matched: r.matched,
        total: r.total,
    };
    if let Some(path) = &args.out {
        io::write_json(path, &report)?;
        write_run_manifest(path, false, "eval-rep", &args)?;
    }
    Ok(())
}

fn run_homography(args: HomographyArgs) -> Result<()> {
    let single_file = args.out.extension().is_some_and(|e| e == "json");
    if single_file {
        ensure!(
            args.count == 1,
            "--out names a .json file; use a directory for --count > 1"
        );
        let h = sample_homography(args.seed, args.size)?;
        io::write_homography(&args.out, &h)?;
        println!("wrote homography -> {}", args.out.display());
        return write_run_manifest(&args.out, false, "homography", &args);
    }
    io::create_dir_all(&args.out)?;
    for i in 0..args.count {
        let h = sample_homography(args.seed + i as u64, args.size)?;
        io::write_homography(&args.out.join(format!("h_{i:04}.json")), &h)?;
    }
    println!("wrote {} homographies -> {}", args.count, args.out.display());
    write_run_manifest(&args.out, true, "homography", &args)
}

fn bilinear_u8(pixels: &[u8], width: u32, x: f64, y: f64) -> f64 {
    let w = width as usize;
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(pixels.len() / w - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let v00 = pixels[y0 * w + x0] as f64;
    let v10 = pixels[y0 * w + x1] as f64;
    let v01 = pixels[y1 * w + x0] as f64;
    let v11 = pixels[y1 * w + x1] as f64;
    (v00 * (1.0 - fx) + v10 * fx) * (1.0 - fy) + (v01 * (1.0 - fx) + v11 * fx) * fy
}

fn run_warp(args: WarpArgs) -> Result<()> {
    let h = io::read_homography(&args.homography)?;
    match (&args.wireframe, &args.image) {
        (Some(wf_path), None) => {
            let wf = io::read_wireframe(wf_path)?;
            let out_size = args.size.unwrap_or((wf.width, wf.height));
            let warped = hawp_core::geometry::warp_wireframe(&h, &wf, out_size)?;
            println!(
                "warped {} -> {} segments, {} -> {} junctions -> {}",
                wf.segments.len(),
                warped.segments.len(),
                wf.junctions.len(),
                warped.junctions.len(),
                args.out.display()
            );
            io::write_wireframe(&args.out, &warped)?;
        }
        (None, Some(img_path)) => {
            let (w, hgt, pixels) = io::read_pgm(img_path)?;
            let out_size = args.size.unwrap_or((w, hgt));
            let h_inv = h.inverse().context("homography is not invertible")?;
            let mut out_px = vec![0u8; out_size.0 as usize * out_size.1 as usize];
            for y in 0..out_size.1 {
                for x in 0..out_size.0 {
                    let Ok(q) = h_inv.apply(hawp_core::geometry::Point2::new(x as f64, y as f64))
                    else {
                        continue;
                    };
                    if q.x >= 0.0
                        && q.y >= 0.0
                        && q.x <= (w - 1) as f64
                        && q.y <= (hgt - 1) as f64
                    {
                        out_px[(y * out_size.0 + x) as usize] =
                            bilinear_u8(&pixels, w, q.x, q.y).round().clamp(0.0, 255.0) as u8;
                    }
                }
            }
            io::write_pgm(&args.out, out_size.0, out_size.1, &out_px)?;
            println!("warped image -> {}", args.out.display());
        }
        _ => bail!("exactly one of --wireframe or --image is required"),
    }
    write_run_manifest(&args.out, false, "warp", &args)
}

/// Lists the data files of a directory in name order, skipping run
/// manifests.
fn sorted_data_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| dir.display().to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && !p
                    .file_name()
                    .is_some_and(|n| n.to_string_lossy().ends_with("run.json"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn write_edge_output(path: &Path, map: &EdgeMap) -> Result<()> {
    if path.extension().is_some_and(|e| e == "pgm") {
        let pixels: Vec<u8> = map
            .grid
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        io::write_pgm(path, map.width, map.height, &pixels)?;
    } else {
        io::write_edge_map(path, map)?;
    }
    Ok(())
}

fn run_aggregate(args: AggregateArgs) -> Result<()> {
    let map_files = sorted_data_files(&args.maps)?;
    let hom_files = sorted_data_files(&args.homographies)?;
    ensure!(
        map_files.len() == hom_files.len() && !map_files.is_empty(),
        "need matching non-empty directories, got {} edge maps and {} homographies",
        map_files.len(),
        hom_files.len()
    );
    let maps: Vec<EdgeMap> = map_files
        .iter()
        .map(|p| io::read_edge_map(p))
        .collect::<Result<_, _>>()?;
    let homs: Vec<Homography> = hom_files
        .iter()
        .map(|p| io::read_homography(p))
        .collect::<Result<_, _>>()?;
    let fused = aggregate_edges(&maps, &homs, args.size)?;
    write_edge_output(&args.out, &fused)?;
    println!(
        "aggregated {} views -> {}",
        maps.len(),
        args.out.display()
    );
    write_run_manifest(&args.out, false, "edges-aggregate", &args)
}

fn run_rasterize(args: RasterizeArgs) -> Result<()> {
    let wf = io::read_wireframe(&args.wireframe)?;
    let size = args.size.unwrap_or((wf.width, wf.height));
    let map = EdgeMap::from_segments(&wf.segments, size.0, size.1);
    write_edge_output(&args.out, &map)?;
    println!(
        "rasterized {} segments at {}x{} -> {}",
        wf.segments.len(),
        size.0,
        size.1,
        args.out.display()
    );
    write_run_manifest(&args.out, false, "edges-rasterize", &args)
}

fn run_pseudo_label(args: PseudoLabelArgs) -> Result<()> {
    let wf = io::read_wireframe(&args.wireframe)?;
    let edges = io::read_edge_map(&args.edges)?;
    let filtered = ssl_filter(&wf, &edges, args.tau_ssl);
    println!(
        "kept {}/{} segments, {}/{} junctions -> {}",
        filtered.segments.len(),
        wf.segments.len(),
        filtered.junctions.len(),
        wf.junctions.len(),
        args.out.display()
    );
    io::write_wireframe(&args.out, &filtered)?;
    write_run_manifest(&args.out, false, "pseudo-label", &args)
}

fn run_plot(args: PlotArgs) -> Result<()> {
    let (w, h, pixels) = io::read_pgm(&args.image)?;
    let wf = io::read_wireframe(&args.wireframe)?;
    ensure!(
        (w, h) == (wf.width, wf.height),
        "image is {w}x{h} but wireframe says {}x{}",
        wf.width,
        wf.height
    );
    let img = image::GrayImage::from_raw(w, h, pixels)
        .ok_or_else(|| anyhow!("image buffer size mismatch"))?;
    let mut png = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
        .context("PNG encoding failed")?;
    let b64 = base64::engine::general_purpose::STANDARD.encode(&png);
    std::fs::write(&args.out, svg::overlay(&b64, &wf))
        .with_context(|| args.out.display().to_string())?;
    println!(
        "plotted {} segments, {} junctions -> {}",
        wf.segments.len(),
        wf.junctions.len(),
        args.out.display()
    );
    write_run_manifest(&args.out, false, "plot", &args)
}
