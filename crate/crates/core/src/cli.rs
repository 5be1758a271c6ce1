//! The `gism` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::geometry::{ElementId, Point};
use crate::paths::{
    check_equal_angles, classify, path_length, ReflectionPath, DEFAULT_VALIDITY_TOL,
};
use crate::pipeline::{planar_sources, simulate, RenderOptions};
use crate::quadrature::WeightConvention;
use crate::rir::{Excitation, Interpolation};
use crate::scene::{
    load_excitation, load_scene, parse_scene, scene_to_json, write_outputs, write_sources,
    write_sources_csv, Scene,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_ENGINE: i32 = 5;
pub const EXIT_RENDER: i32 = 6;
pub const EXIT_IO: i32 = 7;

#[derive(Debug, Parser)]
#[command(
    name = "gism",
    version,
    about = "Image-source room impulse responses for arbitrary reflecting boundaries"
)]
pub struct Cli {
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate paths, render the impulse response and write all outputs.
    Simulate(SimulateArgs),
    /// List planar image sources only.
    Sources(SourcesArgs),
    /// Classify a path given by its reflection points.
    CheckPath(CheckPathArgs),
}

/// Scene file plus the scene fields that can be overridden.
#[derive(Debug, Clone, Args)]
pub struct SceneArgs {
    /// Scene description (JSON).
    #[arg(long)]
    pub scene: PathBuf,
    /// Overrides `simulation.max_order`.
    #[arg(long)]
    pub max_order: Option<usize>,
    /// Overrides `simulation.lattice_M`; patches with their own `M` keep it.
    #[arg(long = "lattice-M")]
    pub lattice_m: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Output sample rate in Hz.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Output length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// WAV or CSV signal to convolve with; a unit impulse when omitted.
    #[arg(long)]
    pub excitation: Option<PathBuf>,
    /// `spacing` or `ball_volume`.
    #[arg(long, default_value_t = WeightConvention::Spacing)]
    pub weight_convention: WeightConvention,
    /// Place taps with a windowed sinc instead of on the nearest sample.
    #[arg(long)]
    pub sinc: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SourcesArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Directory for `sources.csv`; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckPathArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// A reflection point as `ID@x,y[,z]`, in path order. Repeat per bounce.
    #[arg(long = "via", value_parser = parse_via)]
    pub via: Vec<(ElementId, Point)>,
}

fn parse_via(s: &str) -> std::result::Result<(ElementId, Point), String> {
    let (id, coords) = s
        .split_once('@')
        .ok_or_else(|| format!("expected ID@x,y[,z], got `{s}`"))?;
    let id = id
        .trim()
        .parse::<ElementId>()
        .map_err(|e| format!("bad element id `{id}`: {e}"))?;
    let xs = coords
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad coordinate `{c}`: {e}"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if xs.len() != 2 && xs.len() != 3 {
        return Err(format!("expected 2 or 3 coordinates, got {}", xs.len()));
    }
    Point::from_slice(&xs)
        .map(|p| (id, p))
        .map_err(|e| e.to_string())
}

/// Exit status for each error category.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Validation { .. } | Error::DimensionMismatch { .. } => EXIT_VALIDATION,
        Error::AmbiguousBoundary { .. }
        | Error::DegenerateSegment { .. }
        | Error::DegenerateLine { .. }
        | Error::InjectivityViolation { .. }
        | Error::RankDeficient { .. }
        | Error::UnknownElement(_)
        | Error::NotOnElement { .. }
        | Error::Config(_) => EXIT_ENGINE,
        Error::CollocatedAtom { .. } | Error::Wav { .. } => EXIT_RENDER,
        Error::Io { .. } => EXIT_IO,
    }
}

fn category(e: &Error) -> &'static str {
    match exit_code(e) {
        EXIT_PARSE => "parse error",
        EXIT_VALIDATION => "invalid scene",
        EXIT_ENGINE => "engine error",
        EXIT_RENDER => "render error",
        _ => "i/o error",
    }
}

/// Loads the scene and applies overrides. The result goes through the same
/// validation as the file itself.
fn load_with_overrides(
    args: &SceneArgs,
    fs_hz: Option<f64>,
    duration: Option<f64>,
) -> Result<Scene> {
    let mut scene = load_scene(&args.scene)?;
    let sim = &mut scene.simulation;
    let mut changed = false;
    if let Some(k) = args.max_order {
        sim.max_order = k;
        changed = true;
    }
    if let Some(m) = args.lattice_m {
        sim.lattice_m = m;
        changed = true;
    }
    if let Some(f) = fs_hz {
        sim.output.fs = f;
        changed = true;
    }
    if let Some(d) = duration {
        sim.output.duration = d;
        changed = true;
    }
    if changed {
        scene = parse_scene(&scene_to_json(&scene)?)?;
    }
    Ok(scene)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn fmt_point(p: &Point) -> String {
    let xs: Vec<String> = p.as_slice().iter().map(|x| x.to_string()).collect();
    format!("({})", xs.join(", "))
}

fn run_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let scene = load_with_overrides(&a.scene, a.fs, a.duration)?;
    let excitation = match &a.excitation {
        Some(p) => Excitation::Signal(load_excitation(p, scene.simulation.output.fs)?),
        None => Excitation::Impulse,
    };
    let opts = RenderOptions {
        convention: a.weight_convention,
        excitation,
        interpolation: if a.sinc {
            Interpolation::WindowedSinc { half_width: 16 }
        } else {
            Interpolation::Nearest
        },
    };
    let res = simulate(&scene, &opts)?;
    write_outputs(&a.out, &res.taps, &res.rir, &res.measure.atoms)?;

    let stdout = io_err(Path::new("<stdout>"));
    let counts = res.measure.stratum_counts();
    let total: usize = counts.iter().sum();
    let per: Vec<String> = counts
        .iter()
        .enumerate()
        .map(|(q, n)| format!("stratum {q}: {n}"))
        .collect();
    let first = res
        .first_arrival()
        .map_or("none".to_string(), |t| format!("{t} s"));
    writeln!(
        out,
        "atoms: {total} ({})\ntaps: {}\nfirst arrival: {first}\noutput: {}",
        per.join(", "),
        res.taps.len(),
        a.out.display()
    )
    .map_err(stdout)
}

fn run_sources(a: &SourcesArgs, out: &mut dyn Write) -> Result<()> {
    let scene = load_with_overrides(&a.scene, None, None)?;
    let sources = planar_sources(&scene)?;
    let r = scene.receiver.position;
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            let path = dir.join("sources.csv");
            write_sources_csv(&path, &sources, &r)?;
            writeln!(
                out,
                "sources: {}\noutput: {}",
                sources.len(),
                path.display()
            )
            .map_err(io_err(Path::new("<stdout>")))
        }
        None => write_sources(out, Path::new("<stdout>"), &sources, &r),
    }
}

fn run_check_path(a: &CheckPathArgs, out: &mut dyn Write) -> Result<()> {
    let scene = load_scene(&a.scene)?;
    let tol = scene.simulation.tolerances.geom_tol;
    let path = ReflectionPath::resolve(
        &scene.boundary,
        scene.source.position,
        &a.via,
        scene.receiver.position,
        tol,
    )?;
    let c = classify(&path, &scene.boundary, tol, DEFAULT_VALIDITY_TOL)?;
    let elements: Vec<String> = path.elements().iter().map(|e| e.to_string()).collect();
    let blocking = c
        .blocking_element
        .map_or("none".to_string(), |id| id.to_string());
    writeln!(
        out,
        "order: {}\nelements: {}\nimage: {}\nlength: {}\nvalidity_residual: {}\n\
         equal_angle_residual: {}\nvalid: {}\nvisible: {}\ngrazing: {}\nblocking_element: {}",
        path.order(),
        elements.join(" "),
        fmt_point(&path.image()),
        path_length(&path),
        c.validity_residual,
        check_equal_angles(&path),
        c.valid,
        c.visible,
        c.grazing,
        blocking,
    )
    .map_err(io_err(Path::new("<stdout>")))
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => run_simulate(a, out),
        Command::Sources(a) => run_sources(a, out),
        Command::CheckPath(a) => run_check_path(a, out),
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(0) => {
            let _ = writeln!(err, "error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, &mut buf)),
            Err(e) => Err(Error::Config(e.to_string())),
        },
        None => dispatch(&cli, &mut buf),
    };
    let _ = out.write_all(&buf);
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", category(&e));
            exit_code(&e)
        }
    }
}
