//! `xgrasp`: scene generation, detection, grasp planning and evaluation.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 input-data error,
//! 4 pipeline-empty (no foreground or no grasps), 1 anything else.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use xgrasp::cluster::InstanceSet;
use xgrasp::config::{Clusterer, HeightFrame, PipelineConfig};
use xgrasp::eval::{episode_metrics, gt_instances, map_suite, predictions_from_scored, MapReport};
use xgrasp::grasp::CalibrationExtrinsics;
use xgrasp::io::{encode_cloud, load_cloud_auto, CloudFormat};
use xgrasp::pipeline::{detect, run_grasp_loop, EpisodeLog};
use xgrasp::score::{parse_feature_scores, parse_scored_json, scored_to_json, REJECTED};
use xgrasp::segment::{load_scores, SemanticScores};
use xgrasp::sim::{generate_scene, scenario_presets, DeviceProfile, SceneSpec};
use xgrasp::{Error, PointCloud};

const EXIT_FAILURE: u8 = 1;
const EXIT_ARGUMENT: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_EMPTY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "xgrasp",
    version,
    about = "Tabletop object detection and grasp planning on point clouds"
)]
struct Cli {
    /// Worker threads for parallel stages (0 = all cores). Output does not
    /// depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic tabletop scene to a labelled point cloud.
    Generate(GenerateArgs),
    /// Segment, cluster and score a cloud once.
    Detect(DetectArgs),
    /// Run the iterative grasp loop and write an episode log.
    Grasp(GraspArgs),
    /// Score predictions or an episode against a labelled cloud.
    Eval(EvalArgs),
    /// Compare the density-split and distance clusterers on labelled scenes.
    CompareClustering(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Ply,
    PlyBinary,
    Json,
}

#[derive(Args)]
struct GenerateArgs {
    /// Named preset (scenario1..scenario5).
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    preset: Option<String>,
    /// Scene description file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Device profile: ainstec or d455.
    #[arg(long)]
    profile: Option<String>,
    /// Scene seed; overrides the seed in --spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Pipeline config supplying profile and seed defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Ply)]
    format: OutputFormat,
    /// Output directory; receives the cloud and scene.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClustererArg {
    Binary,
    Distance,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeightFrameArg {
    Sensor,
    Robot,
}

/// Config file plus per-field overrides; flags win over the file.
#[derive(Args)]
struct PipelineArgs {
    /// Pipeline config JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Voxel edge length in metres.
    #[arg(long)]
    voxel: Option<f64>,
    /// Neighborhood radius for point density.
    #[arg(long)]
    r_d: Option<f64>,
    /// Linking radius for grouping dense points.
    #[arg(long)]
    r_group: Option<f64>,
    /// Neighborhood radius for assigning sparse points by vote.
    #[arg(long)]
    r_vote: Option<f64>,
    /// Points with more neighbors than this count as dense.
    #[arg(long)]
    d_theta: Option<usize>,
    /// Number of voting passes over sparse points.
    #[arg(long)]
    vote_passes: Option<usize>,
    /// Instances with fewer points are never grasped.
    #[arg(long)]
    n_theta: Option<usize>,
    /// Weight of the feature score against the height score.
    #[arg(long)]
    alpha: Option<f64>,
    /// Stop grasping when the best score falls below this.
    #[arg(long)]
    c_theta: Option<f64>,
    /// Instance clusterer.
    #[arg(long, value_enum)]
    clusterer: Option<ClustererArg>,
    /// Smallest component kept by the distance clusterer.
    #[arg(long)]
    min_pts: Option<usize>,
    /// Neighborhood radius of the geometric feature score.
    #[arg(long)]
    feature_radius: Option<f64>,
    /// Height above the table plane treated as table without semantic scores.
    #[arg(long)]
    table_margin: Option<f64>,
    /// Frame in which object height is measured.
    #[arg(long, value_enum)]
    height_frame: Option<HeightFrameArg>,
    /// Per-point semantic scores (JSON or CSV).
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Hand-eye calibration JSON. Absent: identity.
    #[arg(long)]
    calibration: Option<PathBuf>,
}

impl PipelineArgs {
    fn resolve(&self) -> Result<PipelineConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => at(p, PipelineConfig::load(p))?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            )*};
        }
        set!(
            voxel,
            r_d,
            r_group,
            r_vote,
            d_theta,
            vote_passes,
            n_theta,
            alpha,
            c_theta,
            min_pts
        );
        set!(feature_radius, table_margin);
        if let Some(c) = self.clusterer {
            cfg.clusterer = match c {
                ClustererArg::Binary => Clusterer::Binary,
                ClustererArg::Distance => Clusterer::Distance,
            };
        }
        if let Some(h) = self.height_frame {
            cfg.height_frame = match h {
                HeightFrameArg::Sensor => HeightFrame::Sensor,
                HeightFrameArg::Robot => HeightFrame::Robot,
            };
        }
        if let Some(p) = &self.scores {
            cfg.scores = Some(p.clone());
        }
        if let Some(p) = &self.calibration {
            cfg.calibration = Some(p.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Input cloud (PLY or JSON).
    #[arg(long)]
    cloud: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Per-instance feature scores `{"s_f": [...]}` in canonical order.
    #[arg(long)]
    s_f: Option<PathBuf>,
    /// Output directory; receives instances.json and scores.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GraspArgs {
    /// Input cloud (PLY or JSON).
    #[arg(long)]
    cloud: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Episode log (JSON lines).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Cloud carrying ground-truth instance labels.
    #[arg(long)]
    gt: PathBuf,
    /// Predicted instances JSON.
    #[arg(long, requires = "scored", required_unless_present = "episode")]
    instances: Option<PathBuf>,
    /// Scored instances JSON giving confidences.
    #[arg(long, requires = "instances")]
    scored: Option<PathBuf>,
    /// Episode log; reports recognition and grasp rates instead of AP.
    #[arg(long, conflicts_with_all = ["instances", "scored"])]
    episode: Option<PathBuf>,
    /// Write metrics as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Labelled clouds to compare on.
    #[arg(long = "cloud", required_unless_present = "preset")]
    clouds: Vec<PathBuf>,
    /// Generate scenes from this preset instead.
    #[arg(long, conflicts_with = "clouds")]
    preset: Option<String>,
    /// Device profile for generated scenes.
    #[arg(long, default_value = "d455")]
    profile: String,
    /// Number of consecutive seeds, starting at --first-seed.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First scene seed.
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Write the comparison report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Empty(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Empty(_) => EXIT_EMPTY,
            Failure::Lib(Error::Argument(_)) => EXIT_ARGUMENT,
            Failure::Lib(Error::EmptyForeground) => EXIT_EMPTY,
            Failure::Lib(e) if e.is_input_error() => EXIT_INPUT,
            Failure::Lib(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => e.fmt(f),
            Failure::Empty(why) => f.write_str(why),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: cannot start thread pool: {e}");
        return ExitCode::from(EXIT_FAILURE);
    }
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Grasp(a) => cmd_grasp(a),
        Command::Eval(a) => cmd_eval(a),
        Command::CompareClustering(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Attach the offending path to I/O failures.
fn at<T>(path: &Path, r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))).into(),
        other => other.into(),
    })
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    at(path, std::fs::read(path).map_err(Error::Io))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        at(dir, std::fs::create_dir_all(dir).map_err(Error::Io))?;
    }
    at(path, std::fs::write(path, bytes).map_err(Error::Io))?;
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let cfg = match &a.config {
        Some(p) => at(p, PipelineConfig::load(p))?,
        None => PipelineConfig::default(),
    };
    let profile = DeviceProfile::by_name(a.profile.as_deref().unwrap_or(&cfg.profile))?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let spec = match (&a.preset, &a.spec) {
        (Some(name), _) => scenario_presets(name, seed)?,
        (None, Some(path)) => {
            let mut spec = SceneSpec::parse_json(&read(path)?)?;
            if let Some(s) = a.seed {
                spec.seed = s;
            }
            spec
        }
        (None, None) => unreachable!("clap requires --preset or --spec"),
    };
    let cloud = generate_scene(&spec, &profile)?;
    let (name, format) = match a.format {
        OutputFormat::Ply => ("cloud.ply", CloudFormat::PlyAscii),
        OutputFormat::PlyBinary => ("cloud.ply", CloudFormat::PlyBinaryLe),
        OutputFormat::Json => ("cloud.json", CloudFormat::Json),
    };
    write_file(&a.out.join(name), &encode_cloud(&cloud, format))?;
    write_file(&a.out.join("scene.json"), &spec.to_json())?;
    println!(
        "{} points, {} objects, profile {} -> {}",
        cloud.len(),
        spec.objects.len(),
        profile.name,
        a.out.display()
    );
    Ok(())
}

struct Inputs {
    cloud: PointCloud,
    semantic: Option<SemanticScores>,
    calib: CalibrationExtrinsics,
}

fn load_inputs(cloud: &Path, cfg: &PipelineConfig) -> Result<Inputs, Failure> {
    let cloud = at(cloud, load_cloud_auto(cloud))?;
    let semantic = cfg
        .scores
        .as_ref()
        .map(|p| at(p, load_scores(p, cloud.len())))
        .transpose()?;
    let calib = match &cfg.calibration {
        Some(p) => at(p, CalibrationExtrinsics::load(p))?,
        None => CalibrationExtrinsics::identity(),
    };
    Ok(Inputs { cloud, semantic, calib })
}

fn cmd_detect(a: DetectArgs) -> Result<(), Failure> {
    let mut cfg = a.pipeline.resolve()?;
    if let Some(p) = &a.s_f {
        cfg.s_f = Some(p.clone());
    }
    let inputs = load_inputs(&a.cloud, &cfg)?;
    let features = match &cfg.s_f {
        Some(p) => Some(parse_feature_scores(&read(p)?)?),
        None => None,
    };
    let det = detect(
        &inputs.cloud,
        &cfg,
        inputs.semantic.as_ref(),
        features.as_deref(),
        &inputs.calib,
    )?;
    let instances = det.input_instances()?;
    write_file(&a.out.join("instances.json"), &instances.to_json())?;
    write_file(&a.out.join("scores.json"), &scored_to_json(&det.scored))?;
    let graspable = det
        .scored
        .iter()
        .filter(|s| s.sc != REJECTED && s.sc >= cfg.c_theta)
        .count();
    println!(
        "{} foreground points, {} instances, {} above threshold",
        det.mask.count(),
        instances.len(),
        graspable
    );
    Ok(())
}

fn cmd_grasp(a: GraspArgs) -> Result<(), Failure> {
    let cfg = a.pipeline.resolve()?;
    let inputs = load_inputs(&a.cloud, &cfg)?;
    let log = run_grasp_loop(&inputs.cloud, &cfg, inputs.semantic.as_ref(), &inputs.calib)?;
    write_file(&a.out, &log.to_jsonl())?;
    println!(
        "{} grasps in {} iterations, {}",
        log.grasps.len(),
        log.iterations,
        log.termination
    );
    if log.initial_foreground == 0 {
        return Err(Failure::Empty("no foreground points".into()));
    }
    if log.grasps.is_empty() {
        return Err(Failure::Empty("no instance reached the confidence threshold".into()));
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let gt_cloud = at(&a.gt, load_cloud_auto(&a.gt))?;
    let report = if let Some(path) = &a.episode {
        let log = at(path, EpisodeLog::load(path))?;
        let m = episode_metrics(&log, &gt_cloud)?;
        println!("recognition_rate {:.4}", m.recognition_rate);
        println!("grasp_rate       {:.4}", m.grasp_rate);
        serde_json::to_vec_pretty(&m).expect("metrics always serialize")
    } else {
        let (Some(inst), Some(sc)) = (&a.instances, &a.scored) else {
            unreachable!("clap requires --instances with --scored")
        };
        let instances = InstanceSet::parse_json(&read(inst)?)?;
        if instances.cloud_len() != gt_cloud.len() {
            return Err(Error::Mismatch(format!(
                "instances cover {} points, cloud has {}",
                instances.cloud_len(),
                gt_cloud.len()
            ))
            .into());
        }
        let scored = parse_scored_json(&read(sc)?)?;
        let preds = predictions_from_scored(&instances, &scored)?;
        let report = map_suite(&preds, &gt_instances(&gt_cloud)?);
        print!("{}", MapReport::table(&[("predictions", &report)]));
        report.to_json()
    };
    if let Some(out) = &a.out {
        write_file(out, &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SceneComparison {
    scene: String,
    binary: MapReport,
    distance: MapReport,
}

#[derive(Serialize)]
struct ComparisonReport {
    scenes: Vec<SceneComparison>,
    mean_map_binary: f64,
    mean_map_distance: f64,
    binary_at_least_distance: usize,
}

fn evaluate_clusterer(
    cloud: &PointCloud,
    semantic: Option<&SemanticScores>,
    calib: &CalibrationExtrinsics,
    cfg: &PipelineConfig,
    clusterer: Clusterer,
) -> Result<MapReport, Failure> {
    let cfg = PipelineConfig {
        clusterer,
        ..cfg.clone()
    };
    let det = detect(cloud, &cfg, semantic, None, calib)?;
    let preds = predictions_from_scored(&det.input_instances()?, &det.scored)?;
    Ok(map_suite(&preds, &gt_instances(cloud)?))
}

fn cmd_compare(a: CompareArgs) -> Result<(), Failure> {
    let cfg = a.pipeline.resolve()?;
    let mut scenes: Vec<(String, PointCloud)> = Vec::new();
    if let Some(preset) = &a.preset {
        let profile = DeviceProfile::by_name(&a.profile)?;
        for seed in a.first_seed..a.first_seed + a.seeds {
            let spec = scenario_presets(preset, seed)?;
            scenes.push((format!("{preset}/{seed}"), generate_scene(&spec, &profile)?));
        }
    } else {
        for p in &a.clouds {
            scenes.push((p.display().to_string(), at(p, load_cloud_auto(p))?));
        }
    }
    let calib = match &cfg.calibration {
        Some(p) => at(p, CalibrationExtrinsics::load(p))?,
        None => CalibrationExtrinsics::identity(),
    };

    let mut rows = Vec::new();
    for (name, cloud) in scenes {
        let semantic = cfg
            .scores
            .as_ref()
            .map(|p| at(p, load_scores(p, cloud.len())))
            .transpose()?;
        let binary = evaluate_clusterer(&cloud, semantic.as_ref(), &calib, &cfg, Clusterer::Binary)?;
        let distance = evaluate_clusterer(&cloud, semantic.as_ref(), &calib, &cfg, Clusterer::Distance)?;
        rows.push(SceneComparison {
            scene: name,
            binary,
            distance,
        });
    }

    let n = rows.len().max(1) as f64;
    let report = ComparisonReport {
        mean_map_binary: rows.iter().map(|r| r.binary.map).sum::<f64>() / n,
        mean_map_distance: rows.iter().map(|r| r.distance.map).sum::<f64>() / n,
        binary_at_least_distance: rows.iter().filter(|r| r.binary.map >= r.distance.map).count(),
        scenes: rows,
    };
    let mut text = String::new();
    for r in &report.scenes {
        let _ = writeln!(
            text,
            "{:<24} binary mAP {:>5.1}  distance mAP {:>5.1}",
            r.scene,
            r.binary.map * 100.0,
            r.distance.map * 100.0
        );
    }
    let _ = writeln!(
        text,
        "mean: binary {:.1}, distance {:.1}; binary >= distance on {}/{} scenes",
        report.mean_map_binary * 100.0,
        report.mean_map_distance * 100.0,
        report.binary_at_least_distance,
        report.scenes.len()
    );
    print!("{text}");
    if let Some(out) = &a.out {
        write_file(
            out,
            &serde_json::to_vec_pretty(&report).expect("reports always serialize"),
        )?;
    }
    Ok(())
}
