//! Lattice sampling of a quarter circle and the error of its weight sum
//! against the exact arc length as the lattice refines.

use std::f64::consts::FRAC_PI_2;

use gism::geometry::{CircleArc, CurvedPatch, PatchShape, Point};
use gism::quadrature::{riemann_reference, sample_patch, WeightConvention};

fn main() -> gism::Result<()> {
    let arc = CircleArc {
        center: Point::new2(0.0, 0.0),
        radius: 1.0,
        arc: [0.0, FRAC_PI_2],
    };
    let patch = CurvedPatch::new(0, PatchShape::Circle(arc), 1.0)?;
    let exact = FRAC_PI_2;
    for m in [16, 64, 256, 1024] {
        let lattice = sample_patch(&patch, m, WeightConvention::Spacing)?;
        let total: f64 = lattice.samples.iter().map(|s| s.weight).sum();
        let riemann = riemann_reference(&patch, |_| 1.0, m);
        println!(
            "M = {m:5}: {} samples, weight error {:.3e}, riemann error {:.3e}",
            lattice.samples.len(),
            (total - exact).abs(),
            (riemann - exact).abs()
        );
    }
    Ok(())
}
