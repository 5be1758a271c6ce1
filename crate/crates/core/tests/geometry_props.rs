use gism::geometry::{compose_projections, symmetric_project, Point, UnitVector, Vector};
use proptest::prelude::*;

fn point(dim: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-10.0..10.0f64, dim).prop_map(|v| Point::from_slice(&v).unwrap())
}

fn unit(dim: usize) -> impl Strategy<Value = UnitVector> {
    prop::collection::vec(-1.0..1.0f64, dim)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(|v| UnitVector::normalized(Vector::from_slice(&v).unwrap()).unwrap())
}

fn triple() -> impl Strategy<Value = (Point, Point, UnitVector)> {
    (2usize..=3).prop_flat_map(|d| (point(d), point(d), unit(d)))
}

proptest! {
    #[test]
    fn projection_is_an_isometry_about_v((u, v, n) in triple()) {
        let p = symmetric_project(u, v, n);
        prop_assert!(((p - v).norm() - (u - v).norm()).abs() <= 1e-12 * (1.0 + (u - v).norm()));
    }

    #[test]
    fn projection_is_an_involution((u, v, n) in triple()) {
        let back = symmetric_project(symmetric_project(u, v, n), v, n);
        prop_assert!(back.distance(&u) <= 1e-12 * (1.0 + u.norm() + v.norm()));
    }

    #[test]
    fn projection_ignores_vector_sign((u, v, n) in triple()) {
        prop_assert_eq!(symmetric_project(u, v, n), symmetric_project(u, v, -n));
    }

    #[test]
    fn displacement_is_parallel_to_vector((u, v, n) in triple()) {
        let d = symmetric_project(u, v, n) - u;
        prop_assume!(d.norm() > 1e-6);
        let along = d.dot(&n).abs() / d.norm();
        prop_assert!((along - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn composition_is_a_left_fold((u, v, n) in triple(), (w, m) in (2usize..=3).prop_flat_map(|d| (point(d), unit(d)))) {
        prop_assume!(w.dim() == u.dim());
        let two = compose_projections(u, &[(v, n), (w, m)]);
        prop_assert_eq!(two, symmetric_project(symmetric_project(u, v, n), w, m));
    }
}
