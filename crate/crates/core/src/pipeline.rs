//! Scene in, taps and impulse response out.

use crate::curved::{find_curved_paths, CurvedConfig, WeightedAtom};
use crate::error::Result;
use crate::planar::{enumerate_virtual_sources, VirtualSource};
use crate::quadrature::WeightConvention;
use crate::rir::{
    render_taps, tap_list, AbsorptionModel, ConstantAbsorption, Excitation, Interpolation, Signal,
    SourceMeasure, Tap,
};
use crate::scene::Scene;

/// Rendering choices that are not part of the scene.
#[derive(Debug, Clone, Default)]
pub struct RenderOptions {
    pub convention: WeightConvention,
    pub excitation: Excitation,
    pub interpolation: Interpolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub measure: SourceMeasure,
    pub taps: Vec<Tap>,
    pub rir: Signal,
}

impl SimulationResult {
    pub fn first_arrival(&self) -> Option<f64> {
        self.taps.first().map(|t| t.delay)
    }
}

/// Planar image sources of the scene up to its `max_order`.
pub fn planar_sources(scene: &Scene) -> Result<Vec<VirtualSource>> {
    enumerate_virtual_sources(
        &scene.boundary,
        scene.source.position,
        scene.receiver.position,
        scene.simulation.max_order,
        scene.simulation.tolerances.geom_tol,
    )
}

/// Every atom of the scene: planar image sources first (by order), then
/// sequences through patches and point reflectors.
pub fn collect_atoms(scene: &Scene, convention: WeightConvention) -> Result<Vec<WeightedAtom>> {
    let sim = &scene.simulation;
    let mut atoms: Vec<WeightedAtom> = planar_sources(scene)?.iter().map(Into::into).collect();
    let curved_order = sim.max_order.min(sim.curved_max_order);
    let b = &scene.boundary;
    if curved_order > 0 && !(b.patches.is_empty() && b.points.is_empty()) {
        let cfg = CurvedConfig {
            max_order: curved_order,
            lattice_m: sim.lattice_m,
            angular_tol: sim.tolerances.angular_tol,
            geom_tol: sim.tolerances.geom_tol,
            convention,
        };
        atoms.extend(find_curved_paths(
            b,
            scene.source.position,
            scene.receiver.position,
            &cfg,
        )?);
    }
    Ok(atoms)
}

/// The virtual-source measure with constant per-element absorption.
pub fn source_measure(scene: &Scene, convention: WeightConvention) -> Result<SourceMeasure> {
    source_measure_with(scene, convention, &ConstantAbsorption)
}

pub fn source_measure_with(
    scene: &Scene,
    convention: WeightConvention,
    model: &dyn AbsorptionModel,
) -> Result<SourceMeasure> {
    let atoms = collect_atoms(scene, convention)?;
    SourceMeasure::assemble(
        atoms,
        &scene.boundary,
        scene.source.position,
        scene.receiver.position,
        &scene.source.directivity,
        &scene.receiver.directivity,
        model,
        scene.simulation.tolerances.collocation_eps,
    )
}

/// Runs enumeration, sampling, tap assembly and rendering.
pub fn simulate(scene: &Scene, opts: &RenderOptions) -> Result<SimulationResult> {
    let measure = source_measure(scene, opts.convention)?;
    let taps = tap_list(&measure, scene.speed_of_sound)?;
    let out = &scene.simulation.output;
    let rir = render_taps(
        &taps,
        &opts.excitation,
        out.fs,
        out.duration,
        opts.interpolation,
    )?;
    Ok(SimulationResult { measure, taps, rir })
}
