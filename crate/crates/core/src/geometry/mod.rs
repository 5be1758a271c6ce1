//! Euclidean primitives, boundary elements, and the symmetric projection.
//!
//! A boundary is a union of planar walls, curved patches and isolated point
//! reflectors. Every element carries an assigned unit vector at each of its
//! points; reflections are defined with respect to that vector only, so its
//! sign is irrelevant.

mod boundary;
mod patch;
mod vector;
mod wall;

pub use boundary::{Boundary, ElementRef, PointReflector};
pub use patch::{
    jacobian_measure, CircleArc, CurvedPatch, Cylinder, ParamDomain, ParamPatch, PatchShape,
    Sphere, Surface, SurfaceHit, Term, TrigFactor,
};
pub use vector::{Point, UnitVector, Vector, UNIT_NORM_TOL};
pub use wall::{PlanarWall, SegmentHit};

/// Identifier of a boundary element; unique across walls, patches and points.
pub type ElementId = u32;

/// Default boundary-membership tolerance in meters.
pub const DEFAULT_GEOM_TOL: f64 = 1e-9;

/// Mirror image of `u` across the hyperplane through `v` with normal `n`.
///
/// Computes `u - 2<u - v, n> n`. The result is the same for `n` and `-n`,
/// bit for bit.
#[inline]
pub fn symmetric_project(u: Point, v: Point, n: UnitVector) -> Point {
    let k = 2.0 * (u - v).dot(&n);
    u - n.as_vector() * k
}

/// Left fold of [`symmetric_project`] over the reflection points in path order.
pub fn compose_projections(source: Point, reflections: &[(Point, UnitVector)]) -> Point {
    reflections
        .iter()
        .fold(source, |u, &(v, n)| symmetric_project(u, v, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: Point, b: Point, tol: f64) {
        assert!(a.distance(&b) <= tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn mirror_across_vertical_line() {
        let p = symmetric_project(
            Vector::new2(0.0, 0.0),
            Vector::new2(2.0, 0.0),
            UnitVector::new2(1.0, 0.0).unwrap(),
        );
        assert_close(p, Vector::new2(4.0, 0.0), 1e-15);
    }

    #[test]
    fn mirror_across_x_axis() {
        let p = symmetric_project(
            Vector::new2(1.0, 1.0),
            Vector::new2(0.0, 0.0),
            UnitVector::new2(0.0, 1.0).unwrap(),
        );
        assert_close(p, Vector::new2(1.0, -1.0), 1e-15);
    }

    #[test]
    fn mirror_across_anti_diagonal() {
        let p = symmetric_project(
            Vector::new2(3.0, 4.0),
            Vector::new2(0.0, 0.0),
            UnitVector::new2(1.0, 1.0).unwrap(),
        );
        assert_close(p, Vector::new2(-4.0, -3.0), 1e-12);
    }

    #[test]
    fn compose_single_and_empty() {
        let s = Vector::new2(0.3, 0.3);
        let left = (Vector::new2(0.0, 0.7), UnitVector::new2(1.0, 0.0).unwrap());
        assert_close(
            compose_projections(s, &[left]),
            Vector::new2(-0.3, 0.3),
            1e-15,
        );
        assert_eq!(compose_projections(s, &[]), s);
    }

    #[test]
    fn compose_two_mirrors_in_unit_square() {
        let s = Vector::new2(0.3, 0.3);
        let left = (Vector::new2(0.0, 0.5), UnitVector::new2(1.0, 0.0).unwrap());
        let floor = (Vector::new2(0.25, 0.0), UnitVector::new2(0.0, 1.0).unwrap());
        // Lattice image with one reflection per axis: (-s_x, -s_y).
        assert_close(
            compose_projections(s, &[left, floor]),
            Vector::new2(-0.3, -0.3),
            1e-15,
        );
    }

    #[test]
    fn sign_independence_is_exact() {
        let u = Vector::new3(0.1, -2.3, 7.7);
        let v = Vector::new3(1.0, 1.0, 1.0);
        let n = UnitVector::new3(0.3, -0.4, 1.2).unwrap();
        assert_eq!(symmetric_project(u, v, n), symmetric_project(u, v, -n));
    }
}
