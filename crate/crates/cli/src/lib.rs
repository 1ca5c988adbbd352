//! Command-line front end. `run` takes argv and writers so the whole
//! surface is testable in-process.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use osteonav::handeye::{calibrate_hand_eye, HandEyeConfig, HandEyeSolution, Pairing};
use osteonav::io::{self, PlanFile, TableFormat};
use osteonav::metrics::{build_report, TrialLabel};
use osteonav::pointcal::{calibrate_pivot, calibrate_tip_in_ee, PivotConfig, TipCalConfig};
use osteonav::simrig::{self, JitterModel, NoiseModel, RigGroundTruth};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "osteonav", version, about = "Calibration and osteotomy trajectory analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve robot base -> tracker and flange -> tool from a pose log.
    CalibrateHandeye {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = PairingArg::Consecutive)]
        pairing: PairingArg,
        #[arg(long, default_value_t = 10.0)]
        min_motion_deg: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Solve the tool tip offset from pivoting poses.
    CalibratePivot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 20.0)]
        min_spread_deg: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Solve the tip in the flange frame from digitizer touches.
    CalibrateTip {
        #[arg(long)]
        input: PathBuf,
        /// Hand-eye solution JSON.
        #[arg(long)]
        handeye: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        max_spread_mm: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Compute trial metrics for one trajectory against a plan.
    Analyze {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Trial label such as R3.1 or M1^4.
        #[arg(long, default_value = "R1.1")]
        label: String,
        /// json prints the full report; text and csv print a one-row table.
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Write synthetic logs with known ground truth.
    Simulate(SimulateArgs),
    /// Aggregate report JSON files into the per-set summary table.
    Report {
        #[arg(long = "input", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args, Debug)]
struct OutArg {
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(value_enum)]
    kind: SimKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed for the rig ground truth; defaults to --seed.
    #[arg(long)]
    rig_seed: Option<u64>,
    /// Plan JSON (ruso, muso).
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Sampling rate for trajectories (Hz).
    #[arg(long, default_value_t = 60.0)]
    rate: f64,
    /// Number of poses (handeye, pivot, tip).
    #[arg(long)]
    poses: Option<usize>,
    /// Pivot cone half-angle (deg).
    #[arg(long, default_value_t = 30.0)]
    cone_deg: f64,
    /// Tracker rotation noise (deg); default depends on the kind.
    #[arg(long)]
    tracker_rot_deg: Option<f64>,
    /// Tracker translation noise (mm); default depends on the kind.
    #[arg(long)]
    tracker_trans: Option<f64>,
    /// Also write the rig ground truth as JSON.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SimKind {
    Ruso,
    Muso,
    Handeye,
    Pivot,
    Tip,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PairingArg {
    Consecutive,
    AllPairs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
    Json,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => TableFormat::Text,
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Json => TableFormat::Json,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Data(osteonav::Error),
}

impl From<osteonav::Error> for Failure {
    fn from(e: osteonav::Error) -> Self {
        Failure::Data(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) | Failure::Data(_) => EXIT_DATA,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Failure::Usage(m) => serde_json::json!({ "error": "UsageError", "message": m }),
            Failure::Io(m) => serde_json::json!({ "error": "IoError", "message": m }),
            Failure::Data(e) => {
                let mut v = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
                if let Some(line) = e.line() {
                    v["line"] = line.into();
                }
                v
            }
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn read(path: &Path) -> std::result::Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> std::result::Result<String, Failure> {
    String::from_utf8(read(path)?).map_err(|_| Failure::Io(format!("{}: not valid UTF-8", path.display())))
}

fn emit(out: &OutArg, text: &str, stdout: &mut dyn Write) -> Outcome {
    match &out.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serialises") + "\n"
}

fn load_plan(path: &Option<PathBuf>) -> std::result::Result<PlanFile, Failure> {
    let path = path.as_ref().ok_or_else(|| Failure::Usage("--plan is required for this simulation".into()))?;
    Ok(PlanFile::from_json(&read_text(path)?)?)
}

fn simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Outcome {
    let gt = RigGroundTruth::from_seed(a.rig_seed.unwrap_or(a.seed));
    let noise = |rot_deg: f64, trans: f64| {
        NoiseModel::tracker(a.tracker_rot_deg.unwrap_or(rot_deg).to_radians(), a.tracker_trans.unwrap_or(trans))
    };
    let text = match a.kind {
        SimKind::Ruso => {
            let p = load_plan(&a.plan)?;
            let defaults = NoiseModel::default();
            let n = noise(defaults.tracker_rot_sigma.to_degrees(), defaults.tracker_trans_sigma);
            io::write_trajectory_log(&simrig::synthesize_ruso_trial(&gt, &p.plan, &p.policy, &n, a.rate, a.seed)?)
        }
        SimKind::Muso => {
            let p = load_plan(&a.plan)?;
            io::write_trajectory_log(&simrig::synthesize_muso_trial(&p.plan, &JitterModel::default(), a.rate, a.seed)?)
        }
        SimKind::Handeye => {
            let d = simrig::generate_handeye_dataset(&gt, a.poses.unwrap_or(20), &noise(0.05, 0.1), a.seed)?;
            io::write_pose_log(&io::handeye_log(&d))
        }
        SimKind::Pivot => {
            let n = noise(0.0, 0.1);
            let d = simrig::generate_pivot_dataset(&gt, a.poses.unwrap_or(50), a.cone_deg.to_radians(), &n, a.seed)?;
            io::write_pose_log(&io::pivot_log(&d))
        }
        SimKind::Tip => {
            let d = simrig::generate_tipcal_dataset(&gt, a.poses.unwrap_or(5), &noise(0.0, 0.1), a.seed)?;
            io::write_pose_log(&io::tipcal_log(&d))
        }
    };
    if let Some(path) = &a.truth {
        std::fs::write(path, to_json(&gt)).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    emit(&a.out, &text, stdout)
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Outcome {
    match command {
        Command::CalibrateHandeye { input, pairing, min_motion_deg, out } => {
            let rows = io::parse_pose_log(&read(&input)?)?;
            let d = io::handeye_dataset_from_log(&rows)?;
            let cfg = HandEyeConfig {
                pairing: match pairing {
                    PairingArg::Consecutive => Pairing::Consecutive,
                    PairingArg::AllPairs => Pairing::AllPairs,
                },
                min_motion_angle: min_motion_deg.to_radians(),
                ..HandEyeConfig::default()
            };
            emit(&out, &to_json(&calibrate_hand_eye(&d, &cfg)?), stdout)
        }
        Command::CalibratePivot { input, min_spread_deg, out } => {
            let d = io::pivot_dataset_from_log(&io::parse_pose_log(&read(&input)?)?);
            let sol = calibrate_pivot(&d, &PivotConfig { min_rotation_spread: min_spread_deg.to_radians() })?;
            emit(&out, &to_json(&sol), stdout)
        }
        Command::CalibrateTip { input, handeye, max_spread_mm, out } => {
            let he: HandEyeSolution =
                serde_json::from_str(&read_text(&handeye)?).map_err(|e| Failure::Data(e.into()))?;
            let d = io::tipcal_dataset_from_log(&io::parse_pose_log(&read(&input)?)?, he)?;
            emit(&out, &to_json(&calibrate_tip_in_ee(&d, &TipCalConfig { max_spread_mm })?), stdout)
        }
        Command::Analyze { traj, plan, label, format, out } => {
            let label: TrialLabel = label.parse().map_err(|e: osteonav::Error| Failure::Usage(e.to_string()))?;
            let p = PlanFile::from_json(&read_text(&plan)?)?;
            let rec = io::parse_trajectory_log(&read(&traj)?)?;
            let report = build_report(&rec, &p.plan, &p.analysis, label)?;
            let text = match format {
                FormatArg::Json => to_json(&report),
                f => io::emit_report_table(std::slice::from_ref(&report), f.into())?,
            };
            emit(&out, &text, stdout)
        }
        Command::Simulate(a) => simulate(&a, stdout),
        Command::Report { inputs, format, out } => {
            let mut reports = Vec::new();
            for path in &inputs {
                reports.extend(io::parse_reports_json(&read_text(path)?)?);
            }
            emit(&out, &io::emit_report_table(&reports, format.into())?, stdout)
        }
    }
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let failure = Failure::Usage(e.to_string().trim_end().to_string());
            let _ = writeln!(stderr, "{}", failure.to_json());
            return failure.exit_code();
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            let _ = writeln!(stderr, "{}", failure.to_json());
            failure.exit_code()
        }
    }
}
