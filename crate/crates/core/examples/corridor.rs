//! Two parallel walls with source and receiver outside the walls' span:
//! reflections happen from both sides.

use gism::pipeline::planar_sources;
use gism::scene::load_scene;

fn main() -> gism::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corridor.json");
    let scene = load_scene(path.as_ref())?;
    for v in planar_sources(&scene)? {
        let points: Vec<_> = v.path.points().iter().map(|p| p.to_vec()).collect();
        println!("walls {:?}: {:?}", v.wall_sequence.0, points);
    }
    Ok(())
}
