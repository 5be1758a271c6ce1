//! Image sources of a unit square room, checked against the lattice of
//! mirrored rooms.

use gism::geometry::Point;
use gism::oracle::{rect_lattice_images, AxisBox};
use gism::pipeline::planar_sources;
use gism::scene::load_scene;

fn main() -> gism::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/shoebox.json");
    let mut scene = load_scene(path.as_ref())?;
    scene.simulation.max_order = 3;
    let sources = planar_sources(&scene)?;
    for v in &sources {
        println!(
            "order {} walls {:?} at {:?}",
            v.order,
            v.wall_sequence.0,
            v.position.as_slice()
        );
    }
    let room = AxisBox {
        lo: Point::new2(0.0, 0.0),
        hi: Point::new2(1.0, 1.0),
    };
    let lattice = rect_lattice_images(&room, &scene.source.position, 3);
    println!(
        "{} image sources, {} lattice images",
        sources.len(),
        lattice.len()
    );
    Ok(())
}
