mod common;

use common::*;
use gism::geometry::{Boundary, Point};
use gism::oracle::rect_lattice_images;
use gism::paths::check_validity;
use gism::planar::enumerate_virtual_sources;
use proptest::prelude::*;

fn room() -> impl Strategy<Value = (Vec<f64>, Point, Point)> {
    (2usize..=3).prop_flat_map(|d| {
        prop::collection::vec(2.0..10.0f64, d).prop_flat_map(move |size| {
            let s = size.iter().map(|&l| 0.05..l - 0.05).collect::<Vec<_>>();
            let r = s.clone();
            (Just(size), s, r).prop_map(|(size, s, r)| {
                (
                    size,
                    Point::from_slice(&s).unwrap(),
                    Point::from_slice(&r).unwrap(),
                )
            })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn matches_the_image_lattice((size, s, r) in room()) {
        let sources = enumerate_virtual_sources(&box_boundary(&size), s, r, 4, 1e-9).unwrap();
        let lattice = rect_lattice_images(&axis_box(&size), &s, 4);
        prop_assert_eq!(sources.len(), lattice.len());
        for (p, order) in lattice {
            let m: Vec<_> = sources.iter().filter(|v| v.position.distance(&p) <= 1e-9).collect();
            prop_assert_eq!(m.len(), 1);
            prop_assert_eq!(m[0].order, order);
        }
    }

    #[test]
    fn emitted_paths_are_valid_and_on_their_walls((size, s, r) in room()) {
        let b = box_boundary(&size);
        for v in enumerate_virtual_sources(&b, s, r, 3, 1e-9).unwrap() {
            let (valid, res) = check_validity(&v.path, 1e-10).unwrap();
            prop_assert!(valid, "residual {}", res);
            for refl in &v.path.reflections {
                prop_assert!(b.wall(refl.element).unwrap().contains(&refl.point, 1e-9));
            }
        }
    }

    #[test]
    fn positions_are_distinct((size, s, r) in room()) {
        let sources = enumerate_virtual_sources(&box_boundary(&size), s, r, 4, 1e-9).unwrap();
        for (i, a) in sources.iter().enumerate() {
            for b in &sources[i + 1..] {
                prop_assert!(a.position.distance(&b.position) > 1e-9);
            }
        }
    }

    #[test]
    fn flipping_any_normals_changes_nothing((size, s, r) in room(), mask in 0u32..64) {
        let b = box_boundary(&size);
        let flipped = Boundary::new(
            b.dim(),
            b.walls.iter().map(|w| if mask >> w.id & 1 == 1 { w.flipped() } else { w.clone() }).collect(),
            vec![],
            vec![],
        )
        .unwrap();
        let a = enumerate_virtual_sources(&b, s, r, 3, 1e-9).unwrap();
        let c = enumerate_virtual_sources(&flipped, s, r, 3, 1e-9).unwrap();
        prop_assert_eq!(a.len(), c.len());
        for (x, y) in a.iter().zip(&c) {
            prop_assert_eq!(x.position, y.position);
            prop_assert_eq!(&x.wall_sequence, &y.wall_sequence);
        }
    }

    #[test]
    fn raising_the_order_extends_the_list((size, s, r) in room(), k in 0usize..4) {
        let b = box_boundary(&size);
        let lo = enumerate_virtual_sources(&b, s, r, k, 1e-9).unwrap();
        let hi = enumerate_virtual_sources(&b, s, r, k + 1, 1e-9).unwrap();
        prop_assert!(hi.len() >= lo.len());
        prop_assert_eq!(&hi[..lo.len()], &lo[..]);
    }
}

#[test]
fn corridor_walls_reflect_on_both_sides() {
    let scene = load("corridor.json");
    let sources = enumerate_virtual_sources(
        &scene.boundary,
        scene.source.position,
        scene.receiver.position,
        3,
        1e-9,
    )
    .unwrap();
    let upper: Vec<_> = sources
        .iter()
        .flat_map(|v| {
            v.path
                .reflections
                .iter()
                .filter(|r| r.element == 0)
                .map(|r| r.point)
        })
        .collect();
    // Wall 0 is hit from above (outer bounce) and from below (inside the corridor).
    let came_from_above = sources.iter().any(|v| v.wall_sequence.0 == vec![0]);
    let came_from_below = sources.iter().any(|v| v.wall_sequence.0 == vec![1, 0, 1]);
    assert!(came_from_above && came_from_below && !upper.is_empty());
}
