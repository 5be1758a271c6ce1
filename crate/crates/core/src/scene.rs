//! Scene files (JSON) and simulation outputs.
//!
//! Scene layout:
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "speed_of_sound": 343.0,
//!   "walls": [{"id": 0, "vertices": [[0, 0], [1, 0]], "absorption": 0.9}],
//!   "patches": [{"type": "circle", "params": {"center": [0, 0], "radius": 2}}],
//!   "point_reflectors": [],
//!   "source": {"position": [0.3, 0.3], "directivity": "omni"},
//!   "receiver": {"position": [0.6, 0.4]},
//!   "simulation": {"max_order": 6, "output": {"fs": 48000, "duration": 0.5}}
//! }
//! ```
//!
//! Missing ids are the element's position in the order walls, patches,
//! point reflectors.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curved::WeightedAtom;
use crate::error::{Error, Result};
use crate::geometry::{
    Boundary, CircleArc, CurvedPatch, Cylinder, ElementId, ParamPatch, PatchShape, PlanarWall,
    Point, PointReflector, Sphere, UnitVector, DEFAULT_GEOM_TOL,
};
use crate::paths::{check_validity, path_length, DEFAULT_VALIDITY_TOL};
use crate::planar::VirtualSource;
use crate::rir::{DirectivityPattern, Signal, Tap, DEFAULT_COLLOCATION_EPS};

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;
pub const DEFAULT_MAX_ORDER: usize = 6;
pub const DEFAULT_CURVED_MAX_ORDER: usize = 1;
pub const DEFAULT_LATTICE_M: usize = 256;
pub const DEFAULT_SAMPLE_RATE: f64 = 48_000.0;
pub const DEFAULT_DURATION: f64 = 1.0;

/// A source or receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Transducer {
    pub position: Point,
    pub directivity: DirectivityPattern,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub geom_tol: f64,
    /// `None` lets the curved engine derive it from the lattice spacing.
    pub angular_tol: Option<f64>,
    pub collocation_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            geom_tol: DEFAULT_GEOM_TOL,
            angular_tol: None,
            collocation_eps: DEFAULT_COLLOCATION_EPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputSpec {
    pub fs: f64,
    pub duration: f64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            fs: DEFAULT_SAMPLE_RATE,
            duration: DEFAULT_DURATION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simulation {
    /// Maximum reflection order of the planar engine.
    pub max_order: usize,
    /// Maximum order of sequences involving patches or point reflectors.
    pub curved_max_order: usize,
    pub lattice_m: usize,
    /// Source and receiver intentionally coincide.
    pub collocated: bool,
    pub tolerances: Tolerances,
    pub output: OutputSpec,
}

impl Default for Simulation {
    fn default() -> Self {
        Simulation {
            max_order: DEFAULT_MAX_ORDER,
            curved_max_order: DEFAULT_CURVED_MAX_ORDER,
            lattice_m: DEFAULT_LATTICE_M,
            collocated: false,
            tolerances: Tolerances::default(),
            output: OutputSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub boundary: Boundary,
    pub speed_of_sound: f64,
    pub source: Transducer,
    pub receiver: Transducer,
    pub simulation: Simulation,
}

impl Scene {
    pub fn dim(&self) -> usize {
        self.boundary.dim()
    }
}

// File representation.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    dimension: usize,
    #[serde(default = "default_c")]
    speed_of_sound: f64,
    #[serde(default)]
    walls: Vec<WallFile>,
    #[serde(default)]
    patches: Vec<PatchFile>,
    #[serde(default)]
    point_reflectors: Vec<PointFile>,
    source: TransducerFile,
    receiver: TransducerFile,
    #[serde(default)]
    simulation: SimulationFile,
}

fn default_c() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WallFile {
    #[serde(default)]
    id: Option<ElementId>,
    vertices: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normal: Option<UnitVector>,
    #[serde(default = "one")]
    absorption: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
enum ShapeFile {
    Circle(CircleArc),
    Sphere(Sphere),
    Cylinder(Cylinder),
    Param(ParamPatch),
}

#[derive(Serialize, Deserialize)]
struct PatchFile {
    #[serde(default)]
    id: Option<ElementId>,
    #[serde(flatten)]
    shape: ShapeFile,
    #[serde(default = "one")]
    absorption: f64,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    lattice_m: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointFile {
    #[serde(default)]
    id: Option<ElementId>,
    position: Point,
    vector: UnitVector,
    #[serde(default = "one")]
    absorption: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransducerFile {
    position: Point,
    #[serde(default)]
    directivity: DirectivityFile,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DirectivityFile {
    Name(String),
    Pattern(PatternFile),
}

impl Default for DirectivityFile {
    fn default() -> Self {
        DirectivityFile::Name("omni".into())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum PatternFile {
    Omni,
    Cardioid { axis: UnitVector },
    Tabulated { table: Vec<TableEntry> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    direction: UnitVector,
    gain: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationFile {
    #[serde(default = "d_max_order")]
    max_order: usize,
    #[serde(default = "d_curved_max_order")]
    curved_max_order: usize,
    #[serde(rename = "lattice_M", default = "d_lattice_m")]
    lattice_m: usize,
    #[serde(default)]
    collocated: bool,
    #[serde(default)]
    tolerances: TolerancesFile,
    #[serde(default)]
    output: OutputFile,
}

fn d_max_order() -> usize {
    DEFAULT_MAX_ORDER
}
fn d_curved_max_order() -> usize {
    DEFAULT_CURVED_MAX_ORDER
}
fn d_lattice_m() -> usize {
    DEFAULT_LATTICE_M
}

impl Default for SimulationFile {
    fn default() -> Self {
        SimulationFile::from(&Simulation::default())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TolerancesFile {
    #[serde(default = "d_geom_tol")]
    geom_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angular_tol: Option<f64>,
    #[serde(default = "d_collocation_eps")]
    collocation_eps: f64,
}

fn d_geom_tol() -> f64 {
    DEFAULT_GEOM_TOL
}
fn d_collocation_eps() -> f64 {
    DEFAULT_COLLOCATION_EPS
}

impl Default for TolerancesFile {
    fn default() -> Self {
        TolerancesFile {
            geom_tol: DEFAULT_GEOM_TOL,
            angular_tol: None,
            collocation_eps: DEFAULT_COLLOCATION_EPS,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputFile {
    #[serde(default = "d_fs")]
    fs: f64,
    #[serde(default = "d_duration")]
    duration: f64,
}

fn d_fs() -> f64 {
    DEFAULT_SAMPLE_RATE
}
fn d_duration() -> f64 {
    DEFAULT_DURATION
}

impl Default for OutputFile {
    fn default() -> Self {
        OutputFile {
            fs: DEFAULT_SAMPLE_RATE,
            duration: DEFAULT_DURATION,
        }
    }
}

impl From<&Simulation> for SimulationFile {
    fn from(s: &Simulation) -> Self {
        SimulationFile {
            max_order: s.max_order,
            curved_max_order: s.curved_max_order,
            lattice_m: s.lattice_m,
            collocated: s.collocated,
            tolerances: TolerancesFile {
                geom_tol: s.tolerances.geom_tol,
                angular_tol: s.tolerances.angular_tol,
                collocation_eps: s.tolerances.collocation_eps,
            },
            output: OutputFile {
                fs: s.output.fs,
                duration: s.output.duration,
            },
        }
    }
}

fn directivity_from_file(
    d: DirectivityFile,
    field: &str,
    dim: usize,
) -> Result<DirectivityPattern> {
    let bad = |m: String| Error::validation(field, m);
    let pattern = match d {
        DirectivityFile::Name(n) if n == "omni" => DirectivityPattern::Omni,
        DirectivityFile::Name(n) => {
            return Err(bad(format!(
                "unknown directivity `{n}`; use \"omni\" or an object with a `type`"
            )))
        }
        DirectivityFile::Pattern(PatternFile::Omni) => DirectivityPattern::Omni,
        DirectivityFile::Pattern(PatternFile::Cardioid { axis }) => {
            if axis.dim() != dim {
                return Err(bad("cardioid axis has the wrong dimension".into()));
            }
            DirectivityPattern::Cardioid { axis }
        }
        DirectivityFile::Pattern(PatternFile::Tabulated { table }) => {
            if table.is_empty() {
                return Err(bad("tabulated directivity needs at least one entry".into()));
            }
            if table.iter().any(|e| e.direction.dim() != dim) {
                return Err(bad("table direction has the wrong dimension".into()));
            }
            if table.iter().any(|e| !e.gain.is_finite()) {
                return Err(bad("table gain is not finite".into()));
            }
            DirectivityPattern::Tabulated {
                table: table.into_iter().map(|e| (e.direction, e.gain)).collect(),
            }
        }
    };
    Ok(pattern)
}

fn directivity_to_file(d: &DirectivityPattern) -> DirectivityFile {
    match d {
        DirectivityPattern::Omni => DirectivityFile::Name("omni".into()),
        DirectivityPattern::Cardioid { axis } => {
            DirectivityFile::Pattern(PatternFile::Cardioid { axis: *axis })
        }
        DirectivityPattern::Tabulated { table } => {
            DirectivityFile::Pattern(PatternFile::Tabulated {
                table: table
                    .iter()
                    .map(|(d, g)| TableEntry {
                        direction: *d,
                        gain: *g,
                    })
                    .collect(),
            })
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, "must be a positive finite number"))
    }
}

fn transducer(t: TransducerFile, field: &str, dim: usize) -> Result<Transducer> {
    if t.position.dim() != dim {
        return Err(Error::validation(
            format!("{field}.position"),
            format!("expected {dim} coordinates, got {}", t.position.dim()),
        ));
    }
    Ok(Transducer {
        position: t.position,
        directivity: directivity_from_file(t.directivity, &format!("{field}.directivity"), dim)?,
    })
}

fn scene_from_file(f: SceneFile) -> Result<Scene> {
    let dim = f.dimension;
    if dim != 2 && dim != 3 {
        return Err(Error::validation("dimension", "must be 2 or 3"));
    }
    positive("speed_of_sound", f.speed_of_sound)?;
    let mut next = 0u32;
    let mut id = |given: Option<ElementId>| {
        let i = given.unwrap_or(next);
        next += 1;
        i
    };
    let coords = |field: String, p: &Point| -> Result<()> {
        if p.dim() == dim {
            Ok(())
        } else {
            Err(Error::validation(
                field,
                format!("expected {dim} coordinates, got {}", p.dim()),
            ))
        }
    };

    let mut walls = Vec::new();
    for (i, w) in f.walls.into_iter().enumerate() {
        for v in &w.vertices {
            coords(format!("walls[{i}].vertices"), v)?;
        }
        walls.push(PlanarWall::new(
            id(w.id),
            w.vertices,
            w.normal,
            w.absorption,
        )?);
    }
    let mut patches = Vec::new();
    for (i, p) in f.patches.into_iter().enumerate() {
        let shape = match p.shape {
            ShapeFile::Circle(c) => PatchShape::Circle(c),
            ShapeFile::Sphere(s) => PatchShape::Sphere(s),
            ShapeFile::Cylinder(c) => PatchShape::Cylinder(c),
            ShapeFile::Param(q) => PatchShape::Param(q),
        };
        let mut patch = CurvedPatch::new(id(p.id), shape, p.absorption)?;
        if patch.dim() != dim {
            return Err(Error::validation(
                format!("patches[{i}]"),
                format!("shape lives in {} dimensions, scene in {dim}", patch.dim()),
            ));
        }
        if let Some(m) = p.lattice_m {
            if m < 2 {
                return Err(Error::validation(
                    format!("patches[{i}].M"),
                    "must be at least 2",
                ));
            }
        }
        patch.lattice_m = p.lattice_m;
        patches.push(patch);
    }
    let mut points = Vec::new();
    for (i, p) in f.point_reflectors.into_iter().enumerate() {
        coords(format!("point_reflectors[{i}].position"), &p.position)?;
        if p.vector.dim() != dim {
            return Err(Error::validation(
                format!("point_reflectors[{i}].vector"),
                "wrong dimension",
            ));
        }
        points.push(PointReflector::new(
            id(p.id),
            p.position,
            p.vector,
            p.absorption,
        )?);
    }
    let boundary = Boundary::new(dim, walls, patches, points)?;

    let source = transducer(f.source, "source", dim)?;
    let receiver = transducer(f.receiver, "receiver", dim)?;

    let s = f.simulation;
    if s.lattice_m < 2 {
        return Err(Error::validation(
            "simulation.lattice_M",
            "must be at least 2",
        ));
    }
    if s.curved_max_order > 2 {
        return Err(Error::validation(
            "simulation.curved_max_order",
            "sequences through patches are supported up to order 2",
        ));
    }
    positive("simulation.tolerances.geom_tol", s.tolerances.geom_tol)?;
    positive(
        "simulation.tolerances.collocation_eps",
        s.tolerances.collocation_eps,
    )?;
    if let Some(a) = s.tolerances.angular_tol {
        positive("simulation.tolerances.angular_tol", a)?;
    }
    positive("simulation.output.fs", s.output.fs)?;
    positive("simulation.output.duration", s.output.duration)?;

    let gap = source.position.distance(&receiver.position);
    let eps = s.tolerances.collocation_eps;
    if s.collocated && gap >= eps {
        return Err(Error::validation(
            "simulation.collocated",
            format!("source and receiver are {gap} m apart, more than collocation_eps"),
        ));
    }
    if !s.collocated && gap < eps {
        return Err(Error::validation(
            "receiver.position",
            "source and receiver coincide; set simulation.collocated to true",
        ));
    }

    Ok(Scene {
        boundary,
        speed_of_sound: f.speed_of_sound,
        source,
        receiver,
        simulation: Simulation {
            max_order: s.max_order,
            curved_max_order: s.curved_max_order,
            lattice_m: s.lattice_m,
            collocated: s.collocated,
            tolerances: Tolerances {
                geom_tol: s.tolerances.geom_tol,
                angular_tol: s.tolerances.angular_tol,
                collocation_eps: s.tolerances.collocation_eps,
            },
            output: OutputSpec {
                fs: s.output.fs,
                duration: s.output.duration,
            },
        },
    })
}

fn scene_to_file(scene: &Scene) -> Result<SceneFile> {
    let b = &scene.boundary;
    let walls = b
        .walls
        .iter()
        .map(|w| WallFile {
            id: Some(w.id),
            vertices: w.vertices().to_vec(),
            normal: Some(w.normal()),
            absorption: w.absorption,
        })
        .collect();
    let patches = b
        .patches
        .iter()
        .map(|p| {
            let shape = match &p.shape {
                PatchShape::Circle(c) => ShapeFile::Circle(*c),
                PatchShape::Sphere(s) => ShapeFile::Sphere(*s),
                PatchShape::Cylinder(c) => ShapeFile::Cylinder(*c),
                PatchShape::Param(q) => ShapeFile::Param(q.clone()),
                PatchShape::Custom(_) => {
                    return Err(Error::Config(format!(
                        "patch {} has a custom surface, which cannot be written to a scene file",
                        p.id
                    )))
                }
            };
            Ok(PatchFile {
                id: Some(p.id),
                shape,
                absorption: p.absorption,
                lattice_m: p.lattice_m,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let point_reflectors = b
        .points
        .iter()
        .map(|p| PointFile {
            id: Some(p.id),
            position: p.position,
            vector: p.vector,
            absorption: p.absorption,
        })
        .collect();
    let t = |t: &Transducer| TransducerFile {
        position: t.position,
        directivity: directivity_to_file(&t.directivity),
    };
    Ok(SceneFile {
        dimension: b.dim(),
        speed_of_sound: scene.speed_of_sound,
        walls,
        patches,
        point_reflectors,
        source: t(&scene.source),
        receiver: t(&scene.receiver),
        simulation: SimulationFile::from(&scene.simulation),
    })
}

/// Parses and validates a scene from JSON text.
pub fn parse_scene(json: &str) -> Result<Scene> {
    let file: SceneFile = serde_json::from_str(json).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scene_from_file(file)
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene(&text)
}

/// Pretty JSON with every id and wall normal written out, so that parsing
/// it again reproduces `scene` exactly.
pub fn scene_to_json(scene: &Scene) -> Result<String> {
    let file = scene_to_file(scene)?;
    serde_json::to_string_pretty(&file).map_err(|e| Error::Config(e.to_string()))
}

pub fn save_scene(scene: &Scene, path: &Path) -> Result<()> {
    let json = scene_to_json(scene)?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

// Outputs.

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

fn write_rows_to(
    sink: impl Write,
    label: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header).map_err(|e| csv_error(label, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(label, e))?;
    }
    w.flush().map_err(|e| Error::io(label, e))
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows_to(BufWriter::new(file), path, header, rows)
}

/// `delay_s,amplitude,order,stratum_dim`, one row per tap.
pub fn write_taps_csv(path: &Path, taps: &[Tap]) -> Result<()> {
    write_rows(
        path,
        &["delay_s", "amplitude", "order", "stratum_dim"],
        taps.iter().map(|t| {
            vec![
                t.delay.to_string(),
                t.amplitude.to_string(),
                t.order.to_string(),
                t.stratum_dim.to_string(),
            ]
        }),
    )
}

/// `t,value`, one row per sample.
pub fn write_signal_csv(path: &Path, signal: &Signal) -> Result<()> {
    write_rows(
        path,
        &["t", "value"],
        signal
            .samples
            .iter()
            .enumerate()
            .map(|(i, v)| vec![signal.time(i).to_string(), v.to_string()]),
    )
}

/// Mono 32-bit float WAV. The sample rate must be a whole number of hertz.
pub fn write_wav(path: &Path, signal: &Signal) -> Result<()> {
    let wav_err = |m: String| Error::Wav {
        path: path.to_path_buf(),
        message: m,
    };
    let rate = signal.sample_rate;
    if rate.fract() != 0.0 || rate < 1.0 || rate > u32::MAX as f64 {
        return Err(wav_err(format!(
            "sample rate {rate} is not a whole number of hertz"
        )));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| wav_err(e.to_string()))?;
    for &v in &signal.samples {
        w.write_sample(v as f32)
            .map_err(|e| wav_err(e.to_string()))?;
    }
    w.finalize().map_err(|e| wav_err(e.to_string()))
}

#[derive(Serialize)]
struct PathRecord<'a> {
    order: usize,
    elements: Vec<ElementId>,
    points: Vec<&'a [f64]>,
    image: &'a [f64],
    length: f64,
    validity_residual: f64,
    valid: bool,
    visible: bool,
    grazing: bool,
    stratum_dim: usize,
    weight: f64,
}

/// One JSON object per atom. Atoms come out of the engines valid and
/// visible; the residual is recomputed from the stored path.
pub fn write_paths_jsonl(path: &Path, atoms: &[WeightedAtom]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for a in atoms {
        let pts = a.path.points();
        let (valid, residual) = check_validity(&a.path, DEFAULT_VALIDITY_TOL)?;
        let rec = PathRecord {
            order: a.order(),
            elements: a.path.elements(),
            points: pts.iter().map(|p| p.as_slice()).collect(),
            image: a.position.as_slice(),
            length: path_length(&a.path),
            validity_residual: residual,
            valid,
            visible: true,
            grazing: a.grazing,
            stratum_dim: a.stratum_dim,
            weight: a.weight,
        };
        let line = serde_json::to_string(&rec).map_err(|e| Error::Config(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `order,walls,x,y[,z],distance`, one row per planar virtual source.
pub fn write_sources_csv(path: &Path, sources: &[VirtualSource], receiver: &Point) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_sources(BufWriter::new(file), path, sources, receiver)
}

/// [`write_sources_csv`] into any writer; `label` names it in errors.
pub fn write_sources(
    sink: impl Write,
    label: &Path,
    sources: &[VirtualSource],
    receiver: &Point,
) -> Result<()> {
    let dim = receiver.dim();
    let mut header = vec!["order", "walls", "x", "y"];
    if dim == 3 {
        header.push("z");
    }
    header.push("distance");
    write_rows_to(
        sink,
        label,
        &header,
        sources.iter().map(|v| {
            let walls: Vec<String> = v.wall_sequence.0.iter().map(|i| i.to_string()).collect();
            let mut row = vec![v.order.to_string(), walls.join(" ")];
            row.extend(v.position.as_slice().iter().map(|x| x.to_string()));
            row.push(v.position.distance(receiver).to_string());
            row
        }),
    )
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub taps: PathBuf,
    pub rir_csv: PathBuf,
    pub rir_wav: PathBuf,
    pub paths: PathBuf,
}

impl OutputFiles {
    pub fn in_dir(dir: &Path) -> Self {
        OutputFiles {
            taps: dir.join("taps.csv"),
            rir_csv: dir.join("rir.csv"),
            rir_wav: dir.join("rir.wav"),
            paths: dir.join("paths.jsonl"),
        }
    }
}

/// Writes `taps.csv`, `rir.csv`, `rir.wav` and `paths.jsonl` into `dir`,
/// creating it if needed.
pub fn write_outputs(
    dir: &Path,
    taps: &[Tap],
    signal: &Signal,
    atoms: &[WeightedAtom],
) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = OutputFiles::in_dir(dir);
    write_taps_csv(&files.taps, taps)?;
    write_signal_csv(&files.rir_csv, signal)?;
    write_wav(&files.rir_wav, signal)?;
    write_paths_jsonl(&files.paths, atoms)?;
    Ok(files)
}

/// Reads an excitation signal from a WAV file (first channel) or a CSV file
/// with either a `t,value` pair per row or a single value column. A single
/// column is taken to be sampled at `default_rate`.
pub fn load_excitation(path: &Path, default_rate: f64) -> Result<Signal> {
    let is_wav = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
    if is_wav {
        load_wav(path)
    } else {
        load_csv_signal(path, default_rate)
    }
}

fn load_wav(path: &Path) -> Result<Signal> {
    let wav_err = |m: String| Error::Wav {
        path: path.to_path_buf(),
        message: m,
    };
    let mut r = hound::WavReader::open(path).map_err(|e| wav_err(e.to_string()))?;
    let spec = r.spec();
    let channels = spec.channels.max(1) as usize;
    let all: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => r
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        hound::SampleFormat::Int => {
            let scale = 2f64.powi(spec.bits_per_sample as i32 - 1);
            r.samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(|e| wav_err(e.to_string()))?;
    let samples = all.into_iter().step_by(channels).collect();
    Signal::new(samples, spec.sample_rate as f64, 0.0)
}

fn load_csv_signal(path: &Path, default_rate: f64) -> Result<Signal> {
    let bad = |m: String| Error::Parse {
        line: 0,
        column: 0,
        message: format!("{}: {m}", path.display()),
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if !v.is_empty() => rows.push(v),
            // A non-numeric first row is a header.
            Err(_) if i == 0 => {}
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    column: 0,
                    message: format!("{}: expected numbers", path.display()),
                })
            }
        }
    }
    if rows.is_empty() {
        return Err(bad("no samples".into()));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) || width > 2 {
        return Err(bad(
            "rows must all have one value or all have a time and a value".into(),
        ));
    }
    if width == 1 {
        return Signal::new(rows.into_iter().map(|r| r[0]).collect(), default_rate, 0.0);
    }
    if rows.len() < 2 {
        return Err(bad("a timed signal needs at least two rows".into()));
    }
    let dt = rows[1][0] - rows[0][0];
    if !(dt > 0.0) {
        return Err(bad("time column must increase".into()));
    }
    let t0 = rows[0][0];
    Signal::new(rows.into_iter().map(|r| r[1]).collect(), 1.0 / dt, t0)
}
