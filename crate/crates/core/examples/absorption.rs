//! An angle-dependent absorption model plugged in place of the constant
//! per-element coefficient.

use gism::geometry::ElementRef;
use gism::pipeline::{source_measure, source_measure_with};
use gism::quadrature::WeightConvention;
use gism::rir::{tap_list, AbsorptionModel};
use gism::scene::load_scene;

/// Retains the element's coefficient at normal incidence, less toward grazing.
struct GrazingLoss;

impl AbsorptionModel for GrazingLoss {
    fn retained(&self, element: ElementRef<'_>, cos_incidence: f64) -> f64 {
        element.absorption() * cos_incidence.sqrt()
    }
}

fn main() -> gism::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/shoebox.json");
    let mut scene = load_scene(path.as_ref())?;
    scene.simulation.max_order = 2;
    let constant = tap_list(
        &source_measure(&scene, WeightConvention::Spacing)?,
        scene.speed_of_sound,
    )?;
    let angled = source_measure_with(&scene, WeightConvention::Spacing, &GrazingLoss)?;
    let angled = tap_list(&angled, scene.speed_of_sound)?;
    for (a, b) in constant.iter().zip(&angled) {
        println!(
            "{:.6} s  order {}  constant {:.6}  angled {:.6}",
            a.delay, a.order, a.amplitude, b.amplitude
        );
    }
    Ok(())
}
