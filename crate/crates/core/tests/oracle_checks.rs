mod common;

use common::*;
use gism::geometry::{Boundary, PlanarWall};
use gism::oracle::{ray_shoot, rect_lattice_images, RayShootConfig};

#[test]
fn centered_source_images_pair_up() {
    let room = axis_box(&[4.0, 6.0]);
    let s = p2(2.0, 3.0);
    let imgs = rect_lattice_images(&room, &s, 3);
    for (p, order) in &imgs {
        let mirrored = p2(4.0 - p.x(), p.y());
        assert!(imgs
            .iter()
            .any(|(q, o)| o == order && q.distance(&mirrored) < 1e-12));
    }
    assert_eq!(rect_lattice_images(&room, &s, 0), vec![(s, 0)]);
}

#[test]
fn three_dimensional_lattice_size() {
    let imgs = rect_lattice_images(&axis_box(&[3.0, 4.0, 5.0]), &p3(1.0, 1.0, 1.0), 2);
    // 1 + 6 + 18 points with |q1| + |q2| + |q3| <= 2.
    assert_eq!(imgs.len(), 25);
}

#[test]
fn captures_grow_with_ray_count() {
    let wall = PlanarWall::new(0, vec![p2(-10.0, 0.0), p2(10.0, 0.0)], None, 1.0).unwrap();
    let b = Boundary::new(2, vec![wall], vec![], vec![]).unwrap();
    let count = |n: usize| {
        let cfg = RayShootConfig {
            n_rays: n,
            ..Default::default()
        };
        let arr = ray_shoot(&b, p2(0.0, 1.0), p2(2.0, 1.0), &cfg);
        (
            arr.iter().filter(|a| a.bounces == 0).count() as f64,
            arr.iter().filter(|a| a.bounces == 1).count() as f64,
        )
    };
    let (d1, r1) = count(20_000);
    let (d2, r2) = count(80_000);
    assert!(d1 > 0.0 && r1 > 0.0);
    assert!((d2 / d1 - 4.0).abs() < 0.4, "{d1} -> {d2}");
    assert!((r2 / r1 - 4.0).abs() < 0.4, "{r1} -> {r2}");
}

#[test]
fn shoebox_rays_arrive_near_image_delays() {
    let scene = load("shoebox.json");
    let c = scene.speed_of_sound;
    let cfg = RayShootConfig {
        n_rays: 20_000,
        max_bounces: 1,
        capture_radius: 0.01,
        speed_of_sound: c,
        ..Default::default()
    };
    let imgs = rect_lattice_images(&axis_box(&[1.0, 1.0]), &scene.source.position, 1);
    let arrivals = ray_shoot(
        &scene.boundary,
        scene.source.position,
        scene.receiver.position,
        &cfg,
    );
    assert!(!arrivals.is_empty());
    for a in arrivals {
        let ok = imgs.iter().any(|(p, o)| {
            *o == a.bounces
                && (p.distance(&scene.receiver.position) / c - a.time).abs()
                    <= cfg.capture_radius / c
        });
        assert!(ok, "{a:?}");
    }
}
