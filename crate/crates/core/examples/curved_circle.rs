//! Inside a circle a centered source sees a whole ring of first-order
//! images; off center it sees two isolated ones.

use gism::pipeline::source_measure;
use gism::quadrature::WeightConvention;
use gism::scene::load_scene;

fn main() -> gism::Result<()> {
    for name in ["circle.json", "circle_offset.json"] {
        let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
        let scene = load_scene(path.as_ref())?;
        let measure = source_measure(&scene, WeightConvention::Spacing)?;
        let ring: Vec<_> = measure
            .atoms
            .iter()
            .filter(|a| a.stratum_dim == 1)
            .collect();
        let isolated: Vec<_> = measure
            .atoms
            .iter()
            .filter(|a| a.stratum_dim == 0)
            .collect();
        let ring_weight: f64 = ring.iter().map(|a| a.weight).sum();
        println!("{name}: {} isolated atoms", isolated.len());
        for a in isolated {
            println!(
                "  order {} length {:.6}",
                a.path.order(),
                a.path
                    .points()
                    .windows(2)
                    .map(|w| w[0].distance(&w[1]))
                    .sum::<f64>()
            );
        }
        println!("  {} ring atoms, total weight {ring_weight:.6}", ring.len());
    }
    Ok(())
}
