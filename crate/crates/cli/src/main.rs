use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use edgeplan::io::{self, DocumentKind, FormatError};
use edgeplan::losses::LossConfig;
use edgeplan::matching::{DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_LAMBDA_CLS};
use edgeplan::metrics::{aggregate, evaluate_scene, MatchStrategy, MetricThresholds, MetricsReport, SceneCounts, ScenePrediction};
use edgeplan::polygonize::{floorplan_to_polygons, DEFAULT_EPS};
use edgeplan::projection::{project_with_margin, Bounds, DEFAULT_MARGIN, DEFAULT_RESOLUTION};
use edgeplan::{denoising, match_floorplans, perturb, total_loss, LossWeights, MatchingOptions, NoiseConfig, Plan};

#[derive(Parser)]
#[command(name = "edgeplan", version, about = "Directed-edge floorplan toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project an `x y z` point cloud to a density map (binary PGM).
    Project(ProjectArgs),
    /// Convert edge predictions into room polygons.
    Polygonize(PolygonizeArgs),
    /// Match predicted rooms to ground truth.
    Match(MatchArgs),
    /// Evaluate the training loss terms.
    Loss(LossArgs),
    /// Generate a perturbed copy of a ground-truth floorplan.
    Perturb(PerturbArgs),
    /// Score a directory of predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Draw polygons, optionally over a density map, as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct ProjectArgs {
    cloud: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    res: usize,
    #[arg(long, num_args = 4, value_names = ["X0", "Y0", "X1", "Y1"], allow_negative_numbers = true)]
    bounds: Option<Vec<f64>>,
    /// Fractional margin around the tight box when `--bounds` is absent.
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
}

#[derive(Args)]
struct PolygonizeArgs {
    pred: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Confidence at or above which a predicted token counts as valid.
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct MatchArgs {
    gt: PathBuf,
    pred: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAMBDA_CLS)]
    lambda_cls: f64,
    /// Also scan reversed traversal of ground-truth rooms.
    #[arg(long)]
    allow_reversal: bool,
}

#[derive(Args)]
struct LossArgs {
    gt: PathBuf,
    pred: PathBuf,
    /// cls,edge,ras,cls_dn,edge_dn
    #[arg(long, value_delimiter = ',', num_args = 5, default_values_t = [0.6, 6.0, 1.0, 0.6, 6.0])]
    weights: Vec<f64>,
    /// Perturbed queries paired index-by-index with the ground truth.
    #[arg(long)]
    dn: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    res: usize,
}

#[derive(Args)]
struct PerturbArgs {
    gt: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long = "lambda", default_value_t = denoising::DEFAULT_LAMBDA_GEO)]
    lambda_geo: f64,
    #[arg(long = "gamma", default_value_t = denoising::DEFAULT_GAMMA_FLIP)]
    gamma_flip: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    gt_dir: PathBuf,
    pred_dir: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    iou: f64,
    #[arg(long, default_value_t = 10.0)]
    corner_px: f64,
    #[arg(long, default_value_t = 5.0)]
    angle_deg: f64,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    res: usize,
    /// Optimal instead of greedy one-to-one matching.
    #[arg(long)]
    hungarian: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct RenderArgs {
    polys: PathBuf,
    #[arg(long)]
    bg: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
    /// Canvas size without a background.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    size: usize,
}

fn print_json(v: &Value) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run_project(a: ProjectArgs) -> anyhow::Result<Value> {
    let cloud = io::load_xyz(&a.cloud)?;
    let bounds = a.bounds.map(|b| Bounds::new(b[0], b[1], b[2], b[3])).transpose()?;
    let map = project_with_margin(&cloud, a.res, a.res, bounds, a.margin)?;
    io::write_density_pgm(&map, &a.output)?;
    let b = map.bounds;
    Ok(json!({
        "output": a.output,
        "width": map.width,
        "height": map.height,
        "points": cloud.len(),
        "max_count": map.max_count,
        "bounds": [b.min_x, b.min_y, b.max_x, b.max_y],
    }))
}

fn run_polygonize(a: PolygonizeArgs) -> anyhow::Result<Value> {
    let fp = io::load_predictions(&a.pred)?.to_floorplan(a.threshold)?;
    let polys = floorplan_to_polygons(&fp, a.eps);
    let mut meta = BTreeMap::new();
    meta.insert("eps".to_string(), a.eps.to_string());
    io::save_polygons(&polys, meta, &a.output)?;
    Ok(json!({ "output": a.output, "rooms": fp.real_room_count(), "polygons": polys.len() }))
}

fn run_match(a: MatchArgs) -> anyhow::Result<Value> {
    let gt = io::load_floorplan(&a.gt)?;
    let pred = io::load_predictions(&a.pred)?;
    let opts = MatchingOptions { lambda_cls: a.lambda_cls, allow_reversal: a.allow_reversal };
    let m = match_floorplans(&gt, &pred, &opts)?;
    Ok(json!({
        "assignment": m.assignment,
        "per_pair_cost": m.per_pair_cost,
        "best_rotation": m.best_rotations(),
        "reversed": m.alignments.iter().map(|a| a.reversed).collect::<Vec<_>>(),
        "total_cost": m.total_cost(),
    }))
}

fn run_loss(a: LossArgs) -> anyhow::Result<Value> {
    let gt = io::load_floorplan(&a.gt)?;
    let pred = io::load_predictions(&a.pred)?;
    let w = &a.weights;
    let weights = LossWeights { lambda_cls: w[0], lambda_edge: w[1], lambda_ras: w[2], lambda_cls_dn: w[3], lambda_edge_dn: w[4] };
    let cfg = LossConfig { weights, eps: a.eps, resolution: a.res, ..LossConfig::default() };
    let m = match_floorplans(&gt, &pred, &MatchingOptions::with_lambda(weights.lambda_cls))?;
    let dn = a.dn.as_deref().map(io::load_predictions).transpose()?;
    let br = total_loss(&gt, &pred, &m, dn.as_ref().map(|d| (&gt, d)), &cfg)?;
    Ok(serde_json::to_value(br)?)
}

fn run_perturb(a: PerturbArgs) -> anyhow::Result<Value> {
    let gt = io::load_floorplan(&a.gt)?;
    let cfg = NoiseConfig { lambda_geo: a.lambda_geo, gamma_flip: a.gamma_flip, seed: a.seed, groups: 1 };
    let set = perturb(&gt, &cfg, 1.0, 1.0)?;
    let flips = set.tokens().iter().filter(|t| t.flipped).count();
    let mut meta = BTreeMap::new();
    meta.insert("lambda".to_string(), a.lambda_geo.to_string());
    meta.insert("gamma".to_string(), a.gamma_flip.to_string());
    meta.insert("seed".to_string(), a.seed.to_string());
    if let Some(id) = &gt.scene_id {
        meta.insert("scene_id".to_string(), id.clone());
    }
    io::save_predictions(&set.group_predictions(0)?, meta, &a.output)?;
    Ok(json!({ "output": a.output, "flipped": flips, "seed": a.seed }))
}

fn json_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json"));
    files.sort();
    Ok(files)
}

fn load_scene_prediction(path: &Path) -> anyhow::Result<ScenePrediction<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(match io::document_kind(&text)? {
        DocumentKind::Polygons => ScenePrediction::Polygons(io::PolygonDocument::parse(&text)?.to_polygons()?),
        _ => ScenePrediction::Edges(io::EdgeDocument::parse(&text)?.to_predictions()?),
    })
}

fn evaluate_one(gt_path: &Path, pred_dir: &Path, eps: f64, th: &MetricThresholds) -> anyhow::Result<(String, SceneCounts)> {
    let name = gt_path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let gt: Plan = io::load_floorplan(gt_path).with_context(|| format!("scene {name}"))?;
    let pred_path = pred_dir.join(gt_path.file_name().unwrap_or_default());
    let pred = if pred_path.exists() {
        load_scene_prediction(&pred_path).with_context(|| format!("scene {name}"))?
    } else {
        log::warn!("no prediction for scene {name}; scoring as empty");
        ScenePrediction::Polygons(Vec::new())
    };
    Ok((name, evaluate_scene(&gt, &pred, eps, th)?))
}

fn percent_report(r: &MetricsReport) -> Value {
    let level = |p: edgeplan::Prf| {
        let p = p.percent();
        json!({ "precision": p.precision, "recall": p.recall, "f1": p.f1 })
    };
    json!({
        "room": level(r.room),
        "corner": level(r.corner),
        "angle": level(r.angle),
        "room_iou": r.room_iou * 100.0,
        "counts": r.counts,
    })
}

fn run_evaluate(a: EvaluateArgs) -> anyhow::Result<Value> {
    let th = MetricThresholds {
        room_iou_min: a.iou,
        corner_dist_max: a.corner_px,
        angle_tol_deg: a.angle_deg,
        resolution: a.res,
        strategy: if a.hungarian { MatchStrategy::Hungarian } else { MatchStrategy::Greedy },
    };
    th.validate()?;
    let scenes = json_files(&a.gt_dir)?;
    if scenes.is_empty() {
        bail!("no ground-truth scenes in {}", a.gt_dir.display());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.workers).build()?;
    let counts: Vec<(String, SceneCounts)> = pool.install(|| {
        scenes.par_iter().map(|p| evaluate_one(p, &a.pred_dir, a.eps, &th)).collect::<anyhow::Result<_>>()
    })?;
    let report = aggregate(counts);

    let mut table = format!("{:<24} {:>7} {:>7} {:>7} {:>7}\n", "scene", "room", "corner", "angle", "iou");
    for (name, r) in report.scenes.iter().chain(std::iter::once(&("ALL".to_string(), report.micro))) {
        table += &format!(
            "{:<24} {:>7.1} {:>7.1} {:>7.1} {:>7.1}\n",
            name,
            r.room.f1 * 100.0,
            r.corner.f1 * 100.0,
            r.angle.f1 * 100.0,
            r.room_iou * 100.0
        );
    }
    eprint!("{table}");

    let (mr, mc, ma) = report.macro_f1;
    Ok(json!({
        "scenes_evaluated": report.scenes.len(),
        "thresholds": th,
        "eps": a.eps,
        "micro": percent_report(&report.micro),
        "macro_f1": { "room": mr * 100.0, "corner": mc * 100.0, "angle": ma * 100.0 },
        "scenes": report.scenes.iter().map(|(n, r)| json!({ "scene": n, "report": percent_report(r) })).collect::<Vec<_>>(),
    }))
}

fn run_render(a: RenderArgs) -> anyhow::Result<Value> {
    let polys = io::load_polygons(&a.polys)?;
    let bg = a.bg.as_deref().map(io::read_density_pgm).transpose()?;
    io::write_svg(&polys, bg.as_ref(), a.size, &a.output)?;
    Ok(json!({ "output": a.output, "polygons": polys.len() }))
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    if let Some(f) = e.downcast_ref::<FormatError>() {
        return f.kind();
    }
    if e.downcast_ref::<edgeplan::Error>().is_some() {
        return "InvalidInput";
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return "IoError";
    }
    "Error"
}

fn error_json(e: &anyhow::Error) -> Value {
    json!({ "error": error_kind(e), "message": format!("{e:#}") })
}

fn run(command: Command) -> anyhow::Result<Value> {
    match command {
        Command::Project(a) => run_project(a),
        Command::Polygonize(a) => run_polygonize(a),
        Command::Match(a) => run_match(a),
        Command::Loss(a) => run_loss(a),
        Command::Perturb(a) => run_perturb(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Render(a) => run_render(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command).and_then(|v| print_json(&v)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use edgeplan::{ModelCapacity, Point};

    /// Runs one command line; arguments written `@name` resolve inside `dir`.
    fn cli(dir: &Path, args: &[&str]) -> anyhow::Result<Value> {
        let argv = std::iter::once("edgeplan".to_string()).chain(args.iter().map(|a| match a.strip_prefix('@') {
            Some(name) => dir.join(name).to_string_lossy().into_owned(),
            None => a.to_string(),
        }));
        run(Cli::try_parse_from(argv)?.command)
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point> {
        vec![Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)]
    }

    fn scene() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("gt")).unwrap();
        let plan = Plan::from_vertex_loops(&[rect(0.1, 0.1, 0.4, 0.4), rect(0.5, 0.2, 0.9, 0.8)], ModelCapacity::default())
            .unwrap()
            .with_scene_id("s1");
        io::save_floorplan(&plan, &dir.path().join("gt/s1.json")).unwrap();
        dir
    }

    #[test]
    fn defaults_match_published_constants() {
        let Command::Loss(l) = Cli::try_parse_from(["edgeplan", "loss", "a", "b"]).unwrap().command else { panic!() };
        assert_eq!(l.weights, vec![0.6, 6.0, 1.0, 0.6, 6.0]);
        assert_eq!((l.eps, l.res), (0.1, 256));
        let Command::Perturb(p) = Cli::try_parse_from(["edgeplan", "perturb", "a", "-o", "b"]).unwrap().command else { panic!() };
        assert_eq!((p.lambda_geo, p.gamma_flip), (0.4, 0.2));
        let Command::Match(m) = Cli::try_parse_from(["edgeplan", "match", "a", "b"]).unwrap().command else { panic!() };
        assert_eq!(m.lambda_cls, 0.6);
        let Command::Evaluate(e) = Cli::try_parse_from(["edgeplan", "evaluate", "a", "b"]).unwrap().command else { panic!() };
        assert_eq!((e.iou, e.corner_px, e.angle_deg, e.eps), (0.7, 10.0, 5.0, 0.1));
    }

    #[test]
    fn evaluate_self_is_perfect() {
        let dir = scene();
        let r = cli(dir.path(), &["evaluate", "@gt", "@gt", "--workers", "2"]).unwrap();
        for level in ["room", "corner", "angle"] {
            assert_eq!(r["micro"][level]["f1"], 100.0);
        }
        assert_eq!(r["scenes"][0]["scene"], "s1");
    }

    #[test]
    fn zero_noise_perturb_is_identity() {
        let dir = scene();
        cli(dir.path(), &["perturb", "@gt/s1.json", "-o", "@p.json", "--lambda", "0", "--gamma", "0", "--seed", "1"]).unwrap();
        let (a, b) = (dir.path().join("p.json"), dir.path().join("gt/s1.json"));
        assert_eq!(io::load_floorplan(&a).unwrap(), io::load_floorplan(&b).unwrap());
    }

    #[test]
    fn perturb_is_deterministic() {
        let dir = scene();
        for name in ["@a.json", "@b.json"] {
            cli(dir.path(), &["perturb", "@gt/s1.json", "-o", name, "--seed", "42"]).unwrap();
        }
        assert_eq!(std::fs::read(dir.path().join("a.json")).unwrap(), std::fs::read(dir.path().join("b.json")).unwrap());
    }

    #[test]
    fn identical_loss_is_zero() {
        let dir = scene();
        let r = cli(dir.path(), &["loss", "@gt/s1.json", "@gt/s1.json", "--dn", "@gt/s1.json"]).unwrap();
        assert!(r["total"].as_f64().unwrap() <= 1e-6);
    }

    #[test]
    fn match_reports_assignment() {
        let dir = scene();
        let r = cli(dir.path(), &["match", "@gt/s1.json", "@gt/s1.json"]).unwrap();
        assert_eq!(r["total_cost"], 0.0);
        assert_eq!(r["assignment"].as_array().unwrap().len(), 20);
        assert_eq!(r["assignment"][1], 1);
    }

    #[test]
    fn project_polygonize_render() {
        let dir = scene();
        std::fs::write(dir.path().join("c.xyz"), "# x y z\n0.2 0.2 0.0\n0.2 0.2 1.0\n0.8 0.9 0.5\n").unwrap();
        let p = cli(dir.path(), &["project", "@c.xyz", "-o", "@m.pgm", "--res", "32", "--bounds", "0", "0", "1", "1"]).unwrap();
        assert_eq!(p["max_count"], 2);
        let map = io::read_density_pgm(&dir.path().join("m.pgm")).unwrap();
        assert_eq!((map.width, map.height), (32, 32));
        cli(dir.path(), &["polygonize", "@gt/s1.json", "-o", "@polys.json"]).unwrap();
        cli(dir.path(), &["render", "@polys.json", "--bg", "@m.pgm", "-o", "@a.svg"]).unwrap();
        cli(dir.path(), &["render", "@polys.json", "--bg", "@m.pgm", "-o", "@b.svg"]).unwrap();
        let a = std::fs::read_to_string(dir.path().join("a.svg")).unwrap();
        assert_eq!(a.matches("<path").count(), 2);
        assert_eq!(a, std::fs::read_to_string(dir.path().join("b.svg")).unwrap());
    }

    #[test]
    fn errors_carry_machine_readable_kind() {
        let dir = tempfile::tempdir().unwrap();
        let kind = |args: &[&str]| error_json(&cli(dir.path(), args).unwrap_err())["error"].clone();
        std::fs::write(dir.path().join("bad.json"), "{\"schema_version\": 1,\n \"kind\": oops}").unwrap();
        assert_eq!(kind(&["match", "@bad.json", "@bad.json"]), "ParseError");
        std::fs::write(dir.path().join("bad.pgm"), "P2\n1 1\n255\n0\n").unwrap();
        std::fs::write(dir.path().join("p.json"), r#"{"schema_version":1,"kind":"polygons","polygons":[]}"#).unwrap();
        assert_eq!(kind(&["render", "@p.json", "--bg", "@bad.pgm", "-o", "@x.svg"]), "BadMagic");
        std::fs::write(dir.path().join("r.json"), r#"{"schema_version":1,"kind":"floorplan","capacity":[2,4],"rooms":[[[1.2,0,0,0,1]]]}"#)
            .unwrap();
        assert_eq!(kind(&["perturb", "@r.json", "-o", "@y.json"]), "SchemaViolation");
        assert_eq!(kind(&["match", "@missing.json", "@missing.json"]), "IoError");
    }
}
