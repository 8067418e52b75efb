//! Command-line front end: argument types and one driver per subcommand.
//!
//! Image files hold luminance (white paper is 1). Coverage images used by the
//! renderer and the losses are the inverse. Importance maps are read as is,
//! bright meaning salient.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::init::{dce_simplify, importance_map, plan_from_polyline, tsp_order, voronoi_stipple, Polyline};
use crate::io::{self, GmlOptions};
use crate::metrics::{compare, ComparisonReport};
use crate::optimize::{optimize, LossConfig, OptimizationTrace};
use crate::render::{hermite_to_bezier, rasterize, BezierPath, RadiusMap, RasterImage, DEFAULT_SCALES};
use crate::reparam::{limit_resample, minjerk_reparam_with, totg_lite_with, Limits, DEFAULT_RESOLUTION};
use crate::slm::{sample_trajectory, MotorPlan, Trajectory};

pub const FIT_LAMBDA: f64 = 0.01;
pub const ABSTRACT_LAMBDA: f64 = 0.1;

#[derive(Debug, Clone, Parser)]
#[command(name = "sigmadraw", version, about = "Sigma-lognormal drawing trajectories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Sample a motor plan and write trajectory, SVG and raster render.
    Synth(SynthArgs),
    /// Fit a motor plan to a target image, initialized from a GML trace or the image.
    Fit(FitArgs),
    /// Abstract an image into a single stippled and optimized path.
    Abstract(AbstractArgs),
    /// Compare a trajectory against two baseline time parameterizations.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    fn ext(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Png => "png",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Stroke radius in pixels at zero height.
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    /// Radius change per unit height; used with --variable-width.
    #[arg(long, default_value_t = 1.0)]
    pub width_gain: f64,
    /// Map target heights to stroke radius (and optimize them when fitting).
    #[arg(long)]
    pub variable_width: bool,
    #[arg(long, value_enum, default_value = "pgm")]
    pub format: ImageFormat,
}

impl RenderArgs {
    fn radius_map(&self) -> RadiusMap {
        RadiusMap {
            gain: if self.variable_width { self.width_gain } else { 0.0 },
            base: self.radius,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimArgs {
    #[arg(long, default_value_t = 300)]
    pub steps: usize,
    /// Weight of the smoothness term [default: 0.01 for fit, 0.1 for abstract].
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 50.0)]
    pub w_sigma: f64,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SCALES.to_vec())]
    pub scales: Vec<usize>,
    /// Also optimize the lognormal shape parameters.
    #[arg(long)]
    pub optimize_shape: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl OptimArgs {
    fn loss_config(&self, default_lambda: f64, render: &RenderArgs) -> Result<LossConfig> {
        let cfg = LossConfig {
            lambda: self.lambda.unwrap_or(default_lambda),
            w_sigma: self.w_sigma,
            scales: self.scales.clone(),
            steps: self.steps,
            radius: render.radius_map(),
            optimize_shape: self.optimize_shape,
            optimize_width: render.variable_width,
            ..LossConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Motor plan JSON.
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, short = 'o')]
    pub out_dir: PathBuf,
    /// Sample intervals [default: 5 per stroke].
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[command(flatten)]
    pub render: RenderArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Gml,
    Image,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Target image; rendered from the GML trace when omitted.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// GML trace used for initialization.
    #[arg(long)]
    pub gml: Option<PathBuf>,
    /// Initialization source [default: gml when --gml is given, else image].
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    /// Number of strokes (virtual targets).
    #[arg(long, short = 'm', default_value_t = 8)]
    pub m: usize,
    /// Fit every GML stroke on its own instead of one concatenated trace.
    #[arg(long)]
    pub per_stroke: bool,
    #[arg(long)]
    pub flip_y: bool,
    /// Canvas size when no target image is given.
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[arg(long, short = 'o')]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[command(flatten)]
    pub render: RenderArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AbstractArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Number of virtual targets.
    #[arg(long, short = 'k', default_value_t = 150)]
    pub k: usize,
    /// Importance map image (bright = salient) replacing the built-in proxy.
    #[arg(long)]
    pub importance_map: Option<PathBuf>,
    #[arg(long, short = 'o')]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[command(flatten)]
    pub render: RenderArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Trajectory JSON on a uniform time grid.
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long)]
    pub v_max: f64,
    #[arg(long)]
    pub a_max: f64,
    /// Arc-length steps of the baseline parameterizations.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
    #[arg(long, short = 'o')]
    pub out_dir: PathBuf,
}

/// Files produced by a subcommand, written only once everything succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, path: PathBuf, bytes: impl Into<Vec<u8>>) {
        self.files.push((path, bytes.into()));
    }

    fn add_image(&mut self, path: PathBuf, coverage: &RasterImage) -> Result<()> {
        let lum = coverage.inverted();
        let bytes = match path.extension().and_then(|e| e.to_str()) {
            Some("png") => io::encode_png(&lum)?,
            _ => io::encode_pgm(&lum),
        };
        self.add(path, bytes);
        Ok(())
    }

    pub fn paths(&self) -> Vec<&Path> {
        self.files.iter().map(|(p, _)| p.as_path()).collect()
    }

    pub fn write(&self) -> Result<()> {
        for (path, bytes) in &self.files {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn run(cli: &Cli) -> Result<Outputs> {
    let out = match &cli.command {
        Command::Synth(a) => cmd_synth(a)?,
        Command::Fit(a) => cmd_fit(a)?,
        Command::Abstract(a) => cmd_abstract(a)?,
        Command::Compare(a) => cmd_compare(a)?,
    };
    out.write()?;
    Ok(out)
}

fn render_outputs(
    out: &mut Outputs,
    stem: &str,
    dir: &Path,
    plan: &MotorPlan,
    n: usize,
    size: (usize, usize),
    render: &RenderArgs,
) -> Result<RasterImage> {
    let traj = sample_trajectory(plan, n)?;
    let path = hermite_to_bezier(&traj, &render.radius_map());
    let img = rasterize(&path, size.0, size.1, render.radius)?;
    out.add(
        dir.join(format!("{stem}trajectory.json")),
        io::serialize_trajectory(&traj)?,
    );
    out.add(
        dir.join(format!("{stem}path.svg")),
        io::export_svg(&path, size.0, size.1),
    );
    out.add_image(dir.join(format!("{stem}render.{}", render.format.ext())), &img)?;
    Ok(img)
}

/// Samples a plan file into trajectory, SVG and render.
pub fn cmd_synth(args: &SynthArgs) -> Result<Outputs> {
    let plan = io::parse_plan(&read_text(&args.plan)?)?;
    let n = args.n.unwrap_or(5 * plan.m());
    let mut out = Outputs::default();
    render_outputs(
        &mut out,
        "",
        &args.out_dir,
        &plan,
        n,
        (args.width, args.height),
        &args.render,
    )?;
    eprintln!("synth: m = {}, n = {n}", plan.m());
    Ok(out)
}

/// Straight-segment path through polyline points.
fn polyline_path(points: &[[f64; 2]]) -> BezierPath {
    let segments = points
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let at = |f: f64| [a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f];
            [a, at(1.0 / 3.0), at(2.0 / 3.0), b]
        })
        .collect();
    BezierPath {
        segments,
        radii: vec![],
    }
}

fn max_image(a: &mut RasterImage, b: &RasterImage) {
    for (x, y) in a.data.iter_mut().zip(&b.data) {
        *x = x.max(*y);
    }
}

/// Plan through `count` stippled points of `map` joined by an open tour.
pub fn tour_plan(map: &RasterImage, count: usize, seed: u64) -> Result<MotorPlan> {
    let pts = voronoi_stipple(map, count, seed)?;
    let order = tsp_order(&pts, seed)?;
    let line = Polyline::new(order.iter().map(|&i| pts[i]).collect(), None)?;
    plan_from_polyline(&line)
}

fn fit_one(
    out: &mut Outputs,
    stem: &str,
    dir: &Path,
    init: &MotorPlan,
    target: &RasterImage,
    cfg: &LossConfig,
    render: &RenderArgs,
) -> Result<(MotorPlan, RasterImage, OptimizationTrace)> {
    eprintln!(
        "fit{stem}: m = {}, {} steps, lambda = {}",
        init.m(),
        cfg.steps,
        cfg.lambda
    );
    let (plan, trace) = optimize(init, target, cfg)?;
    if let (Some(first), Some(last)) = (trace.records.first(), trace.records.last()) {
        eprintln!("fit{stem}: loss {:.6e} -> {:.6e}", first.total, last.total);
    }
    out.add(dir.join(format!("{stem}plan.json")), io::serialize_plan(&plan)?);
    out.add(dir.join(format!("{stem}trace.csv")), trace.to_csv());
    let n = cfg.samples_per_stroke * plan.m();
    let img = render_outputs(out, stem, dir, &plan, n.max(2), (target.width, target.height), render)?;
    Ok((plan, img, trace))
}

/// Fits a motor plan to a target image.
pub fn cmd_fit(args: &FitArgs) -> Result<Outputs> {
    let cfg = args.optim.loss_config(FIT_LAMBDA, &args.render)?;
    if args.m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    let init_kind = args.init.unwrap_or(if args.gml.is_some() {
        InitKind::Gml
    } else {
        InitKind::Image
    });
    let doc = match &args.gml {
        Some(p) => Some(io::parse_gml_with(&read_text(p)?, &GmlOptions { flip_y: args.flip_y })?),
        None => None,
    };
    let target = match &args.target {
        Some(p) => Some(io::read_image(p)?.inverted()),
        None => None,
    };
    let (w, h) = target
        .as_ref()
        .map_or((args.width, args.height), |t| (t.width, t.height));
    let strokes: Vec<Vec<[f64; 2]>> = doc
        .iter()
        .flat_map(|d| &d.strokes)
        .map(|s| s.points.iter().map(|p| [p[0] * w as f64, p[1] * h as f64]).collect())
        .collect();
    let stroke_image = |pts: &[[f64; 2]]| rasterize(&polyline_path(pts), w, h, args.render.radius);
    let target = match target {
        Some(t) => t,
        None if !strokes.is_empty() => {
            let mut img = RasterImage::zeros(w, h);
            for s in &strokes {
                max_image(&mut img, &stroke_image(s)?);
            }
            img
        }
        None => return Err(Error::domain("fit needs --target, --gml, or both")),
    };

    let mut out = Outputs::default();
    match init_kind {
        InitKind::Image => {
            let init = tour_plan(&target, args.m + 1, args.optim.seed)?;
            fit_one(&mut out, "", &args.out_dir, &init, &target, &cfg, &args.render)?;
        }
        InitKind::Gml if strokes.is_empty() => {
            return Err(Error::domain("--init gml requires --gml"));
        }
        InitKind::Gml if args.per_stroke => {
            let lengths: Vec<f64> = strokes
                .iter()
                .map(|s| {
                    s.windows(2)
                        .map(|p| ((p[1][0] - p[0][0]).powi(2) + (p[1][1] - p[0][1]).powi(2)).sqrt())
                        .sum()
                })
                .collect();
            let total: f64 = lengths.iter().sum();
            let mut combined = RasterImage::zeros(w, h);
            for (k, s) in strokes.iter().enumerate() {
                let share = (args.m as f64 * lengths[k] / total).round() as usize;
                let m_k = share.clamp(1, s.len() - 1);
                let line = Polyline::new(s.clone(), None)?;
                let init = plan_from_polyline(&dce_simplify(&line, m_k)?)?;
                let own_target = if args.target.is_some() {
                    target.clone()
                } else {
                    stroke_image(s)?
                };
                let (_, img, _) = fit_one(
                    &mut out,
                    &format!("stroke{k}_"),
                    &args.out_dir,
                    &init,
                    &own_target,
                    &cfg,
                    &args.render,
                )?;
                max_image(&mut combined, &img);
            }
            out.add_image(
                args.out_dir.join(format!("render.{}", args.render.format.ext())),
                &combined,
            )?;
        }
        InitKind::Gml => {
            let joined: Vec<[f64; 2]> = strokes.concat();
            let line = Polyline::new(joined, None)?;
            let m = args.m.min(line.len() - 1);
            if m < args.m {
                eprintln!("fit: trace has {} points, using m = {m}", line.len());
            }
            let init = plan_from_polyline(&dce_simplify(&line, m)?)?;
            fit_one(&mut out, "", &args.out_dir, &init, &target, &cfg, &args.render)?;
        }
    }
    Ok(out)
}

/// Stipples the importance map, joins the points by a tour and optimizes the
/// resulting single path against the map.
pub fn cmd_abstract(args: &AbstractArgs) -> Result<Outputs> {
    let cfg = args.optim.loss_config(ABSTRACT_LAMBDA, &args.render)?;
    if args.k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    let image = io::read_image(&args.image)?;
    let map = match &args.importance_map {
        Some(p) => {
            let m = io::read_image(p)?;
            if !m.same_size(&image) {
                return Err(Error::Dimension(format!(
                    "importance map is {}x{}, image is {}x{}",
                    m.width, m.height, image.width, image.height
                )));
            }
            m
        }
        None => importance_map(&image),
    };
    let init = tour_plan(&map, args.k + 1, args.optim.seed)?;
    let mut out = Outputs::default();
    out.add_image(
        args.out_dir.join(format!("importance.{}", args.render.format.ext())),
        &map,
    )?;
    fit_one(&mut out, "", &args.out_dir, &init, &map, &cfg, &args.render)?;
    Ok(out)
}

pub const REFERENCE: &str = "sigma_lognormal";

/// The three parameterizations of one trajectory's path under `lim`.
pub fn comparison(traj: &Trajectory, lim: &Limits, resolution: usize) -> Result<ComparisonReport> {
    let rows = vec![
        (REFERENCE.to_string(), limit_resample(traj, lim)?),
        ("totg_lite".to_string(), totg_lite_with(&traj.x, lim, resolution)?),
        ("minjerk".to_string(), minjerk_reparam_with(&traj.x, lim, resolution)?),
    ];
    compare(&rows, REFERENCE)
}

/// Writes `report.txt` and `report.csv`.
pub fn cmd_compare(args: &CompareArgs) -> Result<Outputs> {
    let traj = io::parse_trajectory(&read_text(&args.trajectory)?)?;
    let lim = Limits::new(args.v_max, args.a_max)?;
    let report = comparison(&traj, &lim, args.resolution)?;
    eprint!("{}", report.to_text());
    let mut out = Outputs::default();
    out.add(args.out_dir.join("report.txt"), report.to_text());
    out.add(args.out_dir.join("report.csv"), report.to_csv());
    Ok(out)
}
