//! Brute-force ray shooting inside a circle, compared with the arrivals
//! the curved engine predicts.

use gism::oracle::{ray_shoot, RayShootConfig};
use gism::pipeline::simulate;
use gism::scene::load_scene;

fn main() -> gism::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/circle_offset.json");
    let scene = load_scene(path.as_ref())?;
    let res = simulate(&scene, &Default::default())?;
    for t in &res.taps {
        println!("engine tap at {:.6} s, order {}", t.delay, t.order);
    }
    let cfg = RayShootConfig {
        n_rays: 50_000,
        speed_of_sound: scene.speed_of_sound,
        ..Default::default()
    };
    let arrivals = ray_shoot(
        &scene.boundary,
        scene.source.position,
        scene.receiver.position,
        &cfg,
    );
    let mut bins = std::collections::BTreeMap::new();
    for a in &arrivals {
        *bins
            .entry(((a.time * 1e4).round() as i64, a.bounces))
            .or_insert(0usize) += 1;
    }
    println!("{} ray arrivals", arrivals.len());
    for ((bin, bounces), n) in bins {
        println!("  {:.4} s, {bounces} bounces: {n} rays", bin as f64 * 1e-4);
    }
    Ok(())
}
