//! Command-line front end: `analyze`, `map`, `modes` and `synth`.
//!
//! Exit codes: 0 ok, 1 input error, 2 out of reach, 3 unsupported
//! operation, 4 infeasible synthesis spec. Every failure prints a single
//! line starting with `error:` on standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::Error;
use crate::kinetostatics;
use crate::mechanism::{JointVector, MechanismKind, MechanismModel, Pose, WorkingMode};
use crate::report::{self, num};
use crate::synthesis::{synthesize_orthoglide, SynthesisSpec};
use crate::workspace::{sweep_grid, AxisRange, FactorBounds, Region, CUBE_LATTICE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_OUT_OF_REACH: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pkm", version, about = "Kinetostatic analysis and synthesis of parallel kinematic machines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kinetostatic report (matrices, amplification factors, conditioning,
    /// ellipsoid, singularity class) at one pose.
    Analyze(AnalyzeArgs),
    /// Sweep a region and write a CSV map of the kinetostatic metrics.
    Map(MapArgs),
    /// List working modes for a pose, or assembly modes for joint values.
    Modes(ModesArgs),
    /// Size an Orthoglide so a prescribed cube keeps every amplification
    /// factor within [lo, hi].
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Mechanism description file (JSON).
    #[arg(long = "model", value_name = "FILE")]
    pub model: PathBuf,
    /// Working mode as comma-separated signs, e.g. `-1,1` (defaults to the
    /// isotropic branch for the Orthoglide and `-1,1` for the biglide).
    #[arg(long, value_name = "SIGNS", allow_hyphen_values = true)]
    pub mode: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Tool pose, e.g. `0,4` or `0,0,0` (3-RPR: `x,y,phi` with phi in radians).
    #[arg(long, value_name = "COORDS", allow_hyphen_values = true)]
    pub pose: String,
    /// 3-RPR only: length (mm) used to homogenize the rotational row of J.
    #[arg(long, value_name = "MM")]
    pub char_length: Option<f64>,
    /// Output path (standard output when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sampling of one axis as `axis=min:max:count`; repeat once per pose
    /// axis (x, y and z or phi). A fixed coordinate is `axis=v:v:1`.
    #[arg(long = "region", value_name = "AXIS=MIN:MAX:COUNT", required = true, allow_hyphen_values = true)]
    pub region: Vec<String>,
    /// Lower bound on the velocity amplification factors (adds a `dextrous` column).
    #[arg(long, requires = "hi")]
    pub lo: Option<f64>,
    /// Upper bound on the velocity amplification factors.
    #[arg(long, requires = "lo")]
    pub hi: Option<f64>,
    /// Output path (standard output when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    #[arg(long = "model", value_name = "FILE")]
    pub model: PathBuf,
    /// Tool pose: list every working mode with its joint values.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "joints", required_unless_present = "joints")]
    pub pose: Option<String>,
    /// Joint values: list every assembly mode.
    #[arg(long, allow_hyphen_values = true)]
    pub joints: Option<String>,
    /// Output path (standard output when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Edge of the prescribed cubic workspace (mm).
    #[arg(long)]
    pub cube: f64,
    #[arg(long)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    /// Verification lattice density (points per axis).
    #[arg(long, default_value_t = CUBE_LATTICE)]
    pub lattice: usize,
    /// Where to write the synthesized mechanism file.
    #[arg(long, default_value = "orthoglide.json")]
    pub model_out: PathBuf,
    /// Where to write the synthesis report.
    #[arg(long, default_value = "synthesis_report.json")]
    pub report_out: PathBuf,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::OutOfReach { .. } => EXIT_OUT_OF_REACH,
            Error::Unsupported(_) => EXIT_UNSUPPORTED,
            Error::InfeasibleSpec(_) => EXIT_INFEASIBLE,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_INPUT;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let line = e.message.replace('\n', " ");
            let _ = writeln!(stderr, "error: {line}");
            e.code
        }
    }
}

pub fn execute(command: &Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Analyze(a) => analyze(a, stdout),
        Command::Map(a) => map(a, stdout),
        Command::Modes(a) => modes(a, stdout),
        Command::Synth(a) => synth(a, stdout),
    }
}

fn parse_list(flag: &str, text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("--{flag}: cannot parse {t:?} as a number")))
        })
        .collect()
}

fn parse_mode(model: &MechanismModel, text: Option<&str>) -> CliResult<WorkingMode> {
    let Some(text) = text else {
        return Ok(model.default_working_mode());
    };
    let signs = text
        .split(',')
        .map(|t| match t.trim() {
            "-1" | "-" => Ok(-1),
            "1" | "+1" | "+" => Ok(1),
            other => Err(CliError::input(format!("--mode: invalid sign {other:?}"))),
        })
        .collect::<CliResult<Vec<i8>>>()?;
    let mode = WorkingMode::new(signs);
    model.check_working_mode(&mode)?;
    Ok(mode)
}

/// Parses repeated `axis=min:max:count` flags into a region over the
/// model's pose axes.
pub fn parse_region(kind: MechanismKind, specs: &[String]) -> CliResult<Region> {
    let names = report::pose_axes(kind);
    let mut axes: Vec<Option<AxisRange>> = vec![None; names.len()];
    for spec in specs {
        let (name, rest) = spec
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("--region: expected axis=min:max:count, got {spec:?}")))?;
        let idx = names.iter().position(|n| *n == name.trim()).ok_or_else(|| {
            CliError::input(format!("--region: unknown axis {name:?} for {kind} (axes: {})", names.join(",")))
        })?;
        let parts: Vec<&str> = rest.split(':').collect();
        let [min, max, count] = parts.as_slice() else {
            return Err(CliError::input(format!("--region: expected min:max:count, got {rest:?}")));
        };
        let bad = |what: &str| CliError::input(format!("--region {name}: cannot parse {what}"));
        let min: f64 = min.trim().parse().map_err(|_| bad("min"))?;
        let max: f64 = max.trim().parse().map_err(|_| bad("max"))?;
        let count: usize = count.trim().parse().map_err(|_| bad("count"))?;
        if axes[idx].is_some() {
            return Err(CliError::input(format!("--region: axis {name} given twice")));
        }
        axes[idx] = Some(AxisRange::new(min, max, count).map_err(|e| CliError::input(format!("--region {name}: {e}")))?);
    }
    let axes = axes
        .into_iter()
        .zip(names)
        .map(|(a, n)| a.ok_or_else(|| CliError::input(format!("--region: missing axis {n}"))))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Region::new(axes)?)
}

fn pose_for(model: &MechanismModel, coords: Vec<f64>) -> CliResult<Pose> {
    if coords.len() != model.pose_dim() {
        return Err(CliError::input(format!(
            "--pose: {} needs {} coordinates, got {}",
            model.kind(),
            model.pose_dim(),
            coords.len()
        )));
    }
    Ok(if model.kind() == MechanismKind::PlanarThreeRpr {
        Pose::oriented(coords[0], coords[1], coords[2])
    } else {
        Pose::new(coords)
    })
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::input(format!("cannot write output: {e}"))),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn analyze(a: &AnalyzeArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = report::load_mechanism(&a.model.model)?;
    let mode = parse_mode(&model, a.model.mode.as_deref())?;
    let pose = pose_for(&model, parse_list("pose", &a.pose)?)?;
    let joints = model.inverse_kinematics(&pose, &mode)?;
    let rep = kinetostatics::analyze_with_length(&model, &pose, &joints, a.char_length)?;
    let doc = report::analysis_json(&model, &pose, &mode, &joints, &rep, a.char_length);
    emit(a.out.as_deref(), &pretty(&doc), stdout)
}

fn map(a: &MapArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = report::load_mechanism(&a.model.model)?;
    let mode = parse_mode(&model, a.model.mode.as_deref())?;
    let region = parse_region(model.kind(), &a.region)?;
    let bounds = match (a.lo, a.hi) {
        (Some(lo), Some(hi)) => Some(FactorBounds::new(lo, hi)?),
        _ => None,
    };
    let grid = sweep_grid(&model, &region, &mode)?;
    let csv = report::grid_csv(model.kind(), &grid, bounds.as_ref());
    emit(a.out.as_deref(), &csv, stdout)
}

fn modes(a: &ModesArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = report::load_mechanism(&a.model)?;
    let doc = if let Some(pose) = &a.pose {
        let pose = pose_for(&model, parse_list("pose", pose)?)?;
        let listing: Vec<Value> = model
            .enumerate_working_modes()
            .iter()
            .map(|m| match model.inverse_kinematics(&pose, m) {
                Ok(j) => json!({
                    "signs": m.signs(),
                    "reachable": true,
                    "joints": j.iter().map(|&v| num(v)).collect::<Vec<_>>(),
                    "within_joint_limits": model.within_joint_limits(&j),
                }),
                Err(_) => json!({ "signs": m.signs(), "reachable": false, "joints": null }),
            })
            .collect();
        json!({
            "kind": model.kind().name(),
            "pose": pose.iter().map(|&v| num(v)).collect::<Vec<_>>(),
            "working_modes": listing,
        })
    } else {
        let joints = JointVector::new(parse_list("joints", a.joints.as_deref().unwrap_or_default())?);
        let poses = model.enumerate_assembly_modes(&joints)?;
        json!({
            "kind": model.kind().name(),
            "joints": joints.iter().map(|&v| num(v)).collect::<Vec<_>>(),
            "assembly_modes": poses.iter().enumerate().map(|(i, p)| json!({
                "mode": i + 1,
                "pose": p.iter().map(|&v| num(v)).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    };
    emit(a.out.as_deref(), &pretty(&doc), stdout)
}

fn synth(a: &SynthArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let bounds = FactorBounds::new(a.lo, a.hi)?;
    let spec = SynthesisSpec::with_lattice(a.cube, bounds, a.lattice)?;
    let result = synthesize_orthoglide(&spec)?;
    let model = result.model()?;
    let mut model_text = report::mechanism_to_json(&model);
    model_text.push('\n');
    emit(Some(&a.model_out), &model_text, stdout)?;
    let report = report::synthesis_report_json(&result);
    emit(Some(&a.report_out), &pretty(&report), stdout)?;
    let summary = json!({
        "model": a.model_out.display().to_string(),
        "report": a.report_out.display().to_string(),
        "L": num(result.leg_length),
        "achieved_factor_range": result.achieved_factor_range.iter().map(|&v| num(v)).collect::<Vec<_>>(),
    });
    emit(None, &pretty(&summary), stdout)
}
