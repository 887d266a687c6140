use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vlo_core::eval::{evaluate, kitti_segment_errors, Alignment, EvalError, EvalReport, SegmentErrors, Trajectory};
use vlo_core::geometry::trajectory_io::read_trajectory;
use vlo_core::geometry::GeometryError;
use vlo_core::pipeline::{
    emit_report, export_kitti_sequence, run_pipeline, DataMode, FrameSource, KittiSequence, PipelineError, RunConfig,
    RunReport,
};

#[derive(Parser)]
#[command(
    name = "vlo",
    version,
    about = "Scale-corrected visual odometry with LiDAR odometry bootstrapping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario and run the pipeline on it.
    Simulate(RunArgs),
    /// Run the pipeline on a KITTI-layout sequence.
    Run {
        #[command(flatten)]
        common: RunArgs,
        /// Sequence directory (overrides kitti.sequence_dir).
        #[arg(long)]
        sequence: Option<PathBuf>,
        /// Visual odometry trajectory (overrides kitti.vo_trajectory).
        #[arg(long)]
        vo: Option<PathBuf>,
        /// Ground-truth trajectory (overrides kitti.ground_truth).
        #[arg(long)]
        gt: Option<PathBuf>,
    },
    /// Compare an estimated trajectory against ground truth.
    Eval {
        ground_truth: PathBuf,
        estimate: PathBuf,
        #[arg(long, value_enum, default_value_t = AlignArg::Rigid)]
        alignment: AlignArg,
        /// Write eval.json and segments.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a KITTI-layout sequence loads, optionally re-exporting it.
    KittiImport {
        sequence: PathBuf,
        /// Visual odometry trajectory to bundle as vo.txt.
        #[arg(long)]
        vo: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        first: usize,
        #[arg(long)]
        count: Option<usize>,
        /// Write the validated frames in KITTI layout here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for trajectories, events and the report.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// LiDAR odometry initialisation.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Select keypoints with the FAST-12 pre-test for low-resolution LiDAR.
    #[arg(long)]
    sparse_lidar: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Bootstrap,
    Constvel,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlignArg {
    None,
    Rigid,
    Similarity,
}

impl From<AlignArg> for Alignment {
    fn from(a: AlignArg) -> Self {
        match a {
            AlignArg::None => Alignment::None,
            AlignArg::Rigid => Alignment::Rigid,
            AlignArg::Similarity => Alignment::Similarity,
        }
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_ESTIMATION: u8 = 3;

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Self {
            code: pipeline_exit_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        PipelineError::from(e).into()
    }
}

fn pipeline_exit_code(e: &PipelineError) -> u8 {
    match e {
        PipelineError::Config(_) => EXIT_USAGE,
        PipelineError::Frame { source, .. } => pipeline_exit_code(source),
        // too few frames, or timestamps out of order
        PipelineError::Domain(_) | PipelineError::Eval(EvalError::NotIncreasing(_)) => EXIT_DATA,
        e if e.is_data_error() => EXIT_DATA,
        _ => EXIT_ESTIMATION,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Run {
            common,
            sequence,
            vo,
            gt,
        } => run_kitti(&common, sequence, vo, gt),
        Command::Eval {
            ground_truth,
            estimate,
            alignment,
            out,
        } => eval(&ground_truth, &estimate, alignment.into(), out.as_deref()),
        Command::KittiImport {
            sequence,
            vo,
            first,
            count,
            out,
        } => kitti_import(&sequence, vo.as_deref(), first, count, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path).map_err(|e| Failure::usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = args.mode {
        let value = match mode {
            ModeArg::Bootstrap => "bootstrap",
            ModeArg::Constvel => "constvel",
        };
        cfg.set("odom.mode", value).map_err(Failure::usage)?;
    }
    if args.sparse_lidar {
        cfg.set("selection.mode", "sparse").map_err(Failure::usage)?;
    }
    Ok(cfg)
}

fn simulate(args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(args)?;
    cfg.data = DataMode::Synthetic;
    execute(&cfg, &args.out)
}

fn run_kitti(
    args: &RunArgs,
    sequence: Option<PathBuf>,
    vo: Option<PathBuf>,
    gt: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut cfg = load_config(args)?;
    cfg.data = DataMode::Kitti;
    cfg.kitti.sequence_dir = sequence.or(cfg.kitti.sequence_dir);
    cfg.kitti.vo_trajectory = vo.or(cfg.kitti.vo_trajectory);
    cfg.kitti.ground_truth = gt.or(cfg.kitti.ground_truth);
    execute(&cfg, &args.out)
}

fn execute(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let report = run_pipeline(cfg)?;
    emit_report(&report, out)?;
    print!("{}", summary(&report));
    println!("outputs written to {}", out.display());
    if report.events.is_empty() && !report.failures.is_empty() {
        return Err(Failure {
            code: EXIT_ESTIMATION,
            message: format!(
                "no keyframe produced a scale estimate ({} failures)",
                report.failures.len()
            ),
        });
    }
    Ok(())
}

fn summary(report: &RunReport) -> String {
    let mut s = String::new();
    let triggered = report.triggered_events().count();
    let _ = writeln!(
        s,
        "frames {} keyframes {} scale estimates {} (corrections {triggered}) failures {}",
        report.frame_count,
        report.keyframe_count,
        report.events.len(),
        report.failures.len()
    );
    if let Some(last) = report.events.last() {
        let _ = writeln!(s, "cumulative scale correction {:.4}", last.correction);
    }
    if let Some(odom) = &report.odom {
        let _ = writeln!(
            s,
            "lidar odometry: {} registration failures",
            odom.registration_failures
        );
    }
    if let Some(eval) = &report.eval {
        let _ = writeln!(
            s,
            "vo ATE {:.3} m -> {:.3} m, final error {:.3} m -> {:.3} m",
            eval.vo_input.ate_rmse, eval.vo_corrected.ate_rmse, eval.final_error_input, eval.final_error_corrected
        );
        if let Some(lidar) = &eval.lidar {
            let _ = writeln!(s, "lidar ATE {:.3} m", lidar.ate_rmse);
        }
    }
    s
}

#[derive(Serialize)]
struct EvalOutput {
    report: EvalReport,
    segments: Option<SegmentErrors>,
}

fn eval(gt_path: &Path, est_path: &Path, alignment: Alignment, out: Option<&Path>) -> Result<(), Failure> {
    let load = |path: &Path| -> Result<Trajectory, Failure> {
        let samples = read_trajectory(path).map_err(|e| Failure {
            code: EXIT_DATA,
            message: format!("{}: {e}", path.display()),
        })?;
        Ok(Trajectory::new(samples)?)
    };
    let (gt, est) = (load(gt_path)?, load(est_path)?);
    let report = match evaluate(&gt, &est, alignment) {
        Err(EvalError::Geometry(GeometryError::AlignmentDegenerate(_))) if alignment != Alignment::None => {
            eprintln!("note: alignment is degenerate for this path, reporting unaligned errors");
            evaluate(&gt, &est, Alignment::None)?
        }
        r => r?,
    };
    // short trajectories have no KITTI segments; that is not an error here
    let segments = match kitti_segment_errors(&gt, &est) {
        Ok(s) => Some(s),
        Err(EvalError::NoValidSegments) => None,
        Err(e) => return Err(e.into()),
    };

    println!("poses {}", report.pose_count);
    println!("ATE RMSE {:.6} m", report.ate_rmse);
    if let Some(are) = report.are_deg {
        println!("ARE RMSE {are:.6} deg");
    }
    match &segments {
        Some(seg) => println!(
            "KITTI translation {:.4} %, rotation {:.6} deg/m over {} segments",
            seg.trans_pct,
            seg.rot_deg_per_m,
            seg.segments.len()
        ),
        None => println!("KITTI segment errors: trajectory shorter than the shortest segment"),
    }

    if let Some(dir) = out {
        let io = |path: &Path, e: std::io::Error| Failure {
            code: EXIT_DATA,
            message: format!("{}: {e}", path.display()),
        };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut csv = String::from("start_index,length,trans_pct,rot_deg_per_m\n");
        for seg in segments.iter().flat_map(|s| &s.segments) {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                seg.start_index, seg.length, seg.trans_pct, seg.rot_deg_per_m
            );
        }
        let path = dir.join("segments.csv");
        fs::write(&path, csv).map_err(|e| io(&path, e))?;
        let json = serde_json::to_string_pretty(&EvalOutput { report, segments }).expect("eval output serializes");
        let path = dir.join("eval.json");
        fs::write(&path, json + "\n").map_err(|e| io(&path, e))?;
    }
    Ok(())
}

fn kitti_import(
    dir: &Path,
    vo: Option<&Path>,
    first: usize,
    count: Option<usize>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let mut seq = KittiSequence::open(dir)?.with_range(first, count)?;
    if let Some(vo) = vo {
        seq = seq.with_visual_odometry(vo)?;
    }
    let mut points = 0;
    for i in 0..seq.len() {
        seq.image(i).map_err(|e| e.at_frame(i))?;
        points += seq.cloud(i).map_err(|e| e.at_frame(i))?.len();
    }
    let k = seq.intrinsics();
    println!(
        "{} frames, {}x{} images, fx {} fy {}, {points} lidar points, ground truth {}",
        seq.len(),
        k.width,
        k.height,
        k.fx,
        k.fy,
        if seq.gt_pose(0).is_some() { "present" } else { "absent" }
    );
    if let Some(out) = out {
        export_kitti_sequence(&seq, out)?;
        println!("sequence written to {}", out.display());
    }
    Ok(())
}
