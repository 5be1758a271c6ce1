//! Impulse response of a 3D box with a cardioid receiver, rendered with
//! nearest-sample and windowed-sinc placement.

use gism::pipeline::{simulate, RenderOptions};
use gism::rir::Interpolation;
use gism::scene::load_scene;

fn main() -> gism::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/shoebox3d.json");
    let scene = load_scene(path.as_ref())?;
    for interpolation in [
        Interpolation::Nearest,
        Interpolation::WindowedSinc { half_width: 8 },
    ] {
        let opts = RenderOptions {
            interpolation,
            ..Default::default()
        };
        let res = simulate(&scene, &opts)?;
        let energy: f64 = res.rir.samples.iter().map(|v| v * v).sum();
        println!(
            "{interpolation:?}: {} taps, energy {energy:.6}",
            res.taps.len()
        );
        for t in res.taps.iter().take(5) {
            println!("  {:.6} s  {:+.6}  order {}", t.delay, t.amplitude, t.order);
        }
    }
    Ok(())
}
