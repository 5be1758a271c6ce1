#![allow(dead_code)]

use std::path::PathBuf;

use gism::geometry::{Boundary, PlanarWall, Point, Vector};
use gism::oracle::AxisBox;
use gism::scene::{load_scene, Scene};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn load(name: &str) -> Scene {
    load_scene(&fixture(name)).unwrap()
}

pub fn p2(x: f64, y: f64) -> Point {
    Vector::new2(x, y)
}

pub fn p3(x: f64, y: f64, z: f64) -> Point {
    Vector::new3(x, y, z)
}

/// Walls of the axis-aligned box `[0, size]`, with unit absorption.
pub fn box_boundary(size: &[f64]) -> Boundary {
    box_boundary_with(size, 1.0)
}

pub fn box_boundary_with(size: &[f64], absorption: f64) -> Boundary {
    let mut walls = Vec::new();
    if size.len() == 2 {
        let (a, b) = (size[0], size[1]);
        let corners = [p2(0.0, 0.0), p2(a, 0.0), p2(a, b), p2(0.0, b)];
        for i in 0..4 {
            let w = PlanarWall::new(
                i as u32,
                vec![corners[i], corners[(i + 1) % 4]],
                None,
                absorption,
            );
            walls.push(w.unwrap());
        }
        Boundary::new(2, walls, vec![], vec![]).unwrap()
    } else {
        let (a, b, c) = (size[0], size[1], size[2]);
        let faces = [
            [p3(0., 0., 0.), p3(a, 0., 0.), p3(a, b, 0.), p3(0., b, 0.)],
            [p3(0., 0., c), p3(0., b, c), p3(a, b, c), p3(a, 0., c)],
            [p3(0., 0., 0.), p3(0., 0., c), p3(a, 0., c), p3(a, 0., 0.)],
            [p3(0., b, 0.), p3(a, b, 0.), p3(a, b, c), p3(0., b, c)],
            [p3(0., 0., 0.), p3(0., b, 0.), p3(0., b, c), p3(0., 0., c)],
            [p3(a, 0., 0.), p3(a, 0., c), p3(a, b, c), p3(a, b, 0.)],
        ];
        for (i, f) in faces.iter().enumerate() {
            walls.push(PlanarWall::new(i as u32, f.to_vec(), None, absorption).unwrap());
        }
        Boundary::new(3, walls, vec![], vec![]).unwrap()
    }
}

pub fn axis_box(size: &[f64]) -> AxisBox {
    let zero = Vector::zeros(size.len());
    AxisBox::new(zero, Point::from_slice(size).unwrap())
}

/// A random point at least `margin` inside the box `[0, size]`.
pub fn interior(rng: &mut impl Rng, size: &[f64], margin: f64) -> Point {
    let xs: Vec<f64> = size
        .iter()
        .map(|&l| rng.gen_range(margin..l - margin))
        .collect();
    Point::from_slice(&xs).unwrap()
}
