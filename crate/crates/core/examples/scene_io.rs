//! Load a scene, simulate it, and write the output files to a directory
//! given on the command line (default `example_out`).

use gism::pipeline::{simulate, RenderOptions};
use gism::scene::{load_scene, save_scene, write_outputs};

fn main() -> gism::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "example_out".into());
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/shoebox.json");
    let scene = load_scene(path.as_ref())?;
    let res = simulate(&scene, &RenderOptions::default())?;
    let files = write_outputs(out.as_ref(), &res.taps, &res.rir, &res.measure.atoms)?;
    let copy = std::path::Path::new(&out).join("scene.json");
    save_scene(&scene, &copy)?;
    println!("{:#?}", files);
    println!("scene written back to {}", copy.display());
    Ok(())
}
