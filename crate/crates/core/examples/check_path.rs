//! Classify hand-made paths over a floor with a screen standing on it.

use gism::geometry::Point;
use gism::paths::{classify, ReflectionPath};
use gism::scene::load_scene;

fn main() -> gism::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/occluder.json");
    let scene = load_scene(path.as_ref())?;
    let (s, r) = (scene.source.position, scene.receiver.position);
    let tol = scene.simulation.tolerances.geom_tol;
    let candidates = [
        ("direct", vec![]),
        ("floor at 0", vec![(0, Point::new2(0.0, 0.0))]),
        ("floor at -0.5", vec![(0, Point::new2(-0.5, 0.0))]),
        ("floor at 3", vec![(0, Point::new2(3.0, 0.0))]),
    ];
    for (label, via) in candidates {
        let p = ReflectionPath::resolve(&scene.boundary, s, &via, r, tol)?;
        let c = classify(&p, &scene.boundary, tol, 1e-9)?;
        println!(
            "{label:14} valid {:5} visible {:5} blocked by {:?}",
            c.valid, c.visible, c.blocking_element
        );
    }
    Ok(())
}
