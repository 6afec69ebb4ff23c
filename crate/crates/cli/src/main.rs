//! `perigid`: build, analyze and deform periodic frameworks from the shell.
//!
//! Exit codes: 0 success, 2 usage or invalid input, 3 numerical failure,
//! 4 I/O error.

use std::env;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use perigid::cones::{analyze_star, vertex_star};
use perigid::constructions::{simplex_framework, stressed_framework, SimplexVariant};
use perigid::expansive::{
    central_direction, expansive_cone, pair_rates, stable_radius, write_pair_csv, DEFAULT_RADIUS,
};
use perigid::io::{framework_to_json, load_framework, to_json_string};
use perigid::motion::{
    audit_expansiveness, continue_motion, export_frames, facet_separation, FrameFormat,
    MotionConfig,
};
use perigid::rigidity::DEFAULT_RANK_TOL;
use perigid::{analyze, PeriodicFramework};
use serde_json::{json, Value};

const TOL_RANK_VAR: &str = "PERIGID_TOL_RANK";
const TOL_NEWTON_VAR: &str = "PERIGID_TOL_NEWTON";

#[derive(Parser)]
#[command(
    name = "perigid",
    version,
    about = "Periodic framework rigidity and expansive motions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a built-in framework as JSON.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
    /// Rigidity report: rank, degrees of freedom, flexes and stresses.
    Analyze {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Truncated expansive cone with a stable-radius probe.
    Cone {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Pair rates at the central cone direction, as CSV.
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Cone spanned by the edge vectors at one vertex orbit.
    Star {
        input: PathBuf,
        #[arg(long)]
        orbit: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Continue an infinitesimal flex into a finite motion and audit it.
    Simulate(SimulateArgs),
}

#[derive(Subcommand)]
enum Family {
    /// Cubic two-orbit framework with a self-stress.
    Stressed {
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Two-orbit simplex family.
    Simplex {
        #[arg(long)]
        dim: usize,
        /// base, enhanced or removed:K.
        #[arg(long)]
        variant: SimplexVariant,
        /// Regular-simplex lattice instead of the standard basis.
        #[arg(long)]
        regular: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    input: PathBuf,
    /// Seed with this extreme ray of the expansive cone.
    #[arg(
        long,
        conflicts_with = "direction",
        required_unless_present = "direction"
    )]
    ray: Option<usize>,
    /// Seed with a JSON array: a full motion vector or flex coordinates.
    #[arg(long)]
    direction: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Step length in units of the shortest bar.
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// Follow the negated seed.
    #[arg(long)]
    reverse: bool,
    /// Pair box radius for the cone and the audit.
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: usize,
    #[arg(long, default_value_t = 1e-8)]
    audit_tol: f64,
    #[arg(long, default_value = "obj")]
    format: FrameFormat,
    /// Radius of the exported block of cells.
    #[arg(long, default_value_t = 1)]
    supercell: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(perigid::Error),
}

impl From<perigid::Error> for CliError {
    fn from(e: perigid::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_io() => 4,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

struct Tolerances {
    rank: f64,
    newton: f64,
}

fn tolerance_from_env(var: &str, default: f64) -> CliResult<f64> {
    match env::var(var) {
        Err(_) => Ok(default),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            _ => Err(CliError::Usage(format!(
                "{var} must be a positive number, got `{s}`"
            ))),
        },
    }
}

fn tolerances() -> CliResult<Tolerances> {
    let defaults = MotionConfig::default();
    Ok(Tolerances {
        rank: tolerance_from_env(TOL_RANK_VAR, DEFAULT_RANK_TOL)?,
        newton: tolerance_from_env(TOL_NEWTON_VAR, defaults.newton_tol)?,
    })
}

fn emit_text(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n"))?,
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

fn emit(value: &Value, out: Option<&Path>) -> CliResult<()> {
    emit_text(&to_json_string(value), out)
}

fn require_radius(radius: usize) -> CliResult<()> {
    if radius == 0 {
        return Err(CliError::Usage("--radius must be at least 1".into()));
    }
    Ok(())
}

fn cmd_gen(family: Family) -> CliResult<()> {
    let (fw, out) = match family {
        Family::Stressed { out } => (stressed_framework(), out),
        Family::Simplex {
            dim,
            variant,
            regular,
            out,
        } => (simplex_framework(dim, variant, regular)?, out),
    };
    emit_text(&framework_to_json(&fw), out.as_deref())
}

fn cmd_analyze(input: &Path, out: Option<&Path>, tol: &Tolerances) -> CliResult<()> {
    let fw = load_framework(input)?;
    emit(&analyze(&fw, tol.rank)?.to_json_value(), out)
}

fn cmd_cone(
    input: &Path,
    radius: usize,
    out: Option<&Path>,
    pairs: Option<&Path>,
    tol: &Tolerances,
) -> CliResult<()> {
    require_radius(radius)?;
    let fw = load_framework(input)?;
    let report = analyze(&fw, tol.rank)?;
    let cone = expansive_cone(&fw, &report, radius, tol.rank)?;
    let stable = if cone.is_trivial {
        None
    } else {
        stable_radius(&fw, &report, radius, tol.rank)?
    };
    if let Some(p) = pairs {
        let motion = central_direction(&cone).unwrap_or_else(|| DVector::zeros(fw.num_unknowns()));
        let rates = pair_rates(&fw, &motion, radius);
        write_pair_csv(&fw, &rates, BufWriter::new(File::create(p)?))?;
    }
    emit(&cone.to_json_value(stable), out)
}

fn cmd_star(input: &Path, orbit: &str, out: Option<&Path>, tol: &Tolerances) -> CliResult<()> {
    let fw = load_framework(input)?;
    let star = vertex_star(&fw, orbit)?;
    emit(
        &analyze_star(&star, fw.dimension(), tol.rank)?.to_json_value(),
        out,
    )
}

fn read_direction(
    path: &Path,
    fw: &PeriodicFramework,
    tol: &Tolerances,
) -> CliResult<DVector<f64>> {
    let text = fs::read_to_string(path)?;
    let values: Vec<f64> = serde_json::from_str(&text).map_err(perigid::Error::from)?;
    if values.len() == fw.num_unknowns() {
        return Ok(DVector::from_vec(values));
    }
    let report = analyze(fw, tol.rank)?;
    if values.len() == report.dof && report.dof > 0 {
        return Ok(report.flex_matrix() * DVector::from_vec(values));
    }
    Err(perigid::Error::DimensionMismatch(format!(
        "direction has {} entries; expected {} (motion) or {} (flex coordinates)",
        values.len(),
        fw.num_unknowns(),
        report.dof
    ))
    .into())
}

fn cmd_simulate(args: &SimulateArgs, tol: &Tolerances) -> CliResult<()> {
    require_radius(args.radius)?;
    if args.supercell == 0 {
        return Err(CliError::Usage("--supercell must be at least 1".into()));
    }
    if !(args.h.is_finite() && args.h > 0.0) {
        return Err(CliError::Usage("--h must be positive".into()));
    }
    if !(args.audit_tol.is_finite() && args.audit_tol > 0.0) {
        return Err(CliError::Usage("--audit-tol must be positive".into()));
    }
    if args.steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let fw = load_framework(&args.input)?;
    let mut seed = match (&args.direction, args.ray) {
        (Some(p), _) => read_direction(p, &fw, tol)?,
        (None, Some(k)) => {
            let report = analyze(&fw, tol.rank)?;
            let cone = expansive_cone(&fw, &report, args.radius, tol.rank)?;
            let rays = cone.ray_motions();
            rays.get(k).cloned().ok_or_else(|| {
                if rays.is_empty() {
                    CliError::Core(perigid::Error::InvalidInput(
                        "expansive cone has no rays".into(),
                    ))
                } else {
                    CliError::Core(perigid::Error::IndexOutOfRange {
                        index: k,
                        len: rays.len(),
                    })
                }
            })?
        }
        (None, None) => return Err(CliError::Usage("give --ray or --direction".into())),
    };
    if args.reverse {
        seed = -seed;
    }
    let config = MotionConfig {
        n_steps: args.steps,
        step_size: args.h,
        newton_tol: tol.newton,
        rank_tol: tol.rank,
        ..MotionConfig::default()
    };
    let path = continue_motion(&fw, &seed, &config)?;
    let audit = audit_expansiveness(&path, args.radius, args.audit_tol)?;

    fs::create_dir_all(&args.out)?;
    let frames = export_frames(&path, args.supercell, args.format, &args.out)?;
    let audit_csv = args.out.join("audit.csv");
    audit.write_csv(&path.graph, BufWriter::new(File::create(&audit_csv)?))?;

    let mut path_json = path.to_json_value();
    if let (Value::Object(map), Ok(sep)) = (&mut path_json, facet_separation(&path)) {
        map.insert("facet_separation".into(), json!(sep));
    }
    let audit_json = audit.to_json_value();
    emit(&path_json, Some(&args.out.join("path.json")))?;
    emit(&audit_json, Some(&args.out.join("audit.json")))?;

    let mut files: Vec<String> = frames
        .iter()
        .chain([&audit_csv])
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    files.extend(["path.json".to_string(), "audit.json".to_string()]);
    let summary = json!({
        "steps": path.len(),
        "max_residual": path_json["max_residual"],
        "max_length_drift": path.max_length_drift(),
        "audit_passed": audit.passed,
        "violations": audit.violations.len(),
        "files": files,
    });
    emit(&summary, None)
}

fn run(cli: Cli) -> CliResult<()> {
    let tol = tolerances()?;
    match cli.command {
        Command::Gen { family } => cmd_gen(family),
        Command::Analyze { input, out } => cmd_analyze(&input, out.as_deref(), &tol),
        Command::Cone {
            input,
            radius,
            out,
            pairs,
        } => cmd_cone(&input, radius, out.as_deref(), pairs.as_deref(), &tol),
        Command::Star { input, orbit, out } => cmd_star(&input, &orbit, out.as_deref(), &tol),
        Command::Simulate(args) => cmd_simulate(&args, &tol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
