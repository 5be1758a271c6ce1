//! Reflection paths and the validity and visibility predicates.

use crate::error::{Error, Result};
use crate::geometry::{
    compose_projections, symmetric_project, Boundary, ElementId, ElementRef, Point, SegmentHit,
    UnitVector,
};

/// Default threshold on the validity residual for exact planar geometry.
pub const DEFAULT_VALIDITY_TOL: f64 = 1e-9;

/// Below this `|<v, unit direction>|` a boundary contact counts as tangential.
const TANGENT_EPS: f64 = 1e-9;

/// One bounce: where it happens, on which element, and the element's vector there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    pub point: Point,
    pub element: ElementId,
    pub vector: UnitVector,
}

/// `(source, y_1, ..., y_k, sink)` with the element of every bounce.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionPath {
    pub source: Point,
    pub reflections: Vec<Reflection>,
    pub sink: Point,
}

impl ReflectionPath {
    pub fn direct(source: Point, sink: Point) -> Self {
        ReflectionPath {
            source,
            reflections: Vec::new(),
            sink,
        }
    }

    /// Builds a path from raw reflection points, looking up the vector of each
    /// named element at its point.
    ///
    /// Fails with [`Error::NotOnElement`] when a point is farther than `tol`
    /// from its element.
    pub fn resolve(
        boundary: &Boundary,
        source: Point,
        via: &[(ElementId, Point)],
        sink: Point,
        tol: f64,
    ) -> Result<Self> {
        source.check_dim(boundary.dim())?;
        sink.check_dim(boundary.dim())?;
        let mut reflections = Vec::with_capacity(via.len());
        for &(id, point) in via {
            point.check_dim(boundary.dim())?;
            let e = boundary.element(id).ok_or(Error::UnknownElement(id))?;
            let distance = e.distance(&point);
            if distance > tol {
                return Err(Error::NotOnElement {
                    element: id,
                    distance,
                });
            }
            reflections.push(Reflection {
                point,
                element: id,
                vector: e.vector_near(&point),
            });
        }
        Ok(ReflectionPath {
            source,
            reflections,
            sink,
        })
    }

    pub fn order(&self) -> usize {
        self.reflections.len()
    }

    pub fn points(&self) -> Vec<Point> {
        let mut pts = Vec::with_capacity(self.order() + 2);
        pts.push(self.source);
        pts.extend(self.reflections.iter().map(|r| r.point));
        pts.push(self.sink);
        pts
    }

    pub fn elements(&self) -> Vec<ElementId> {
        self.reflections.iter().map(|r| r.element).collect()
    }

    /// Virtual source: the source mirrored through every bounce in order.
    pub fn image(&self) -> Point {
        let pairs: Vec<(Point, UnitVector)> = self
            .reflections
            .iter()
            .map(|r| (r.point, r.vector))
            .collect();
        compose_projections(self.source, &pairs)
    }

    /// The same path traversed from sink to source.
    pub fn reversed(&self) -> Self {
        ReflectionPath {
            source: self.sink,
            reflections: self.reflections.iter().rev().copied().collect(),
            sink: self.source,
        }
    }

    /// Whether both paths visit the same points within `tol`.
    pub fn coincides(&self, other: &ReflectionPath, tol: f64) -> bool {
        self.order() == other.order()
            && self
                .points()
                .iter()
                .zip(other.points())
                .all(|(a, b)| a.distance(&b) <= tol)
    }
}

/// Total travelled distance.
pub fn path_length(path: &ReflectionPath) -> f64 {
    path.points().windows(2).map(|w| w[0].distance(&w[1])).sum()
}

fn check_segments(path: &ReflectionPath, tol: f64) -> Result<Vec<Point>> {
    let pts = path.points();
    for (index, w) in pts.windows(2).enumerate() {
        if w[0].distance(&w[1]) <= tol {
            return Err(Error::DegenerateSegment { index });
        }
    }
    Ok(pts)
}

/// Largest mismatch between the outgoing direction at each bounce and the
/// direction from the mirrored previous point through the bounce.
///
/// Returns `(residual <= tol, residual)`. The vectors stored with the path
/// are used, so this is independent of the boundary representation.
pub fn check_validity(path: &ReflectionPath, tol: f64) -> Result<(bool, f64)> {
    let pts = check_segments(path, tol)?;
    let mut residual = 0.0_f64;
    for (j, refl) in path.reflections.iter().enumerate() {
        let (prev, y, next) = (pts[j], pts[j + 1], pts[j + 2]);
        let out = (next - y) * (1.0 / next.distance(&y));
        let mirrored = symmetric_project(prev, y, refl.vector);
        let inc = (y - mirrored) * (1.0 / y.distance(&mirrored));
        residual = residual.max((out - inc).norm());
    }
    Ok((residual <= tol, residual))
}

/// Largest `|<incident + reflected, n>|` over the bounces, both directions
/// taken as unit vectors along the travel direction. Zero for valid paths.
pub fn check_equal_angles(path: &ReflectionPath) -> f64 {
    let pts = path.points();
    path.reflections
        .iter()
        .enumerate()
        .map(|(j, refl)| {
            let (prev, y, next) = (pts[j], pts[j + 1], pts[j + 2]);
            let inc = (y - prev) * (1.0 / y.distance(&prev));
            let out = (next - y) * (1.0 / next.distance(&y));
            refl.vector.dot(&(inc + out)).abs()
        })
        .fold(0.0, f64::max)
}

/// Result of the occlusion test.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Visibility {
    pub visible: bool,
    /// First element crossed transversally, in travel order.
    pub blocking_element: Option<ElementId>,
    /// Some segment slides along or touches an element tangentially.
    pub grazing: bool,
}

/// Tests every open segment of the path against the boundary.
///
/// A segment is blocked when it meets an element at a point whose vector is
/// not orthogonal to the segment. Contacts within `tol` of a segment's
/// endpoints are ignored, so a bounce never blocks its own segments.
pub fn check_visibility(path: &ReflectionPath, boundary: &Boundary, tol: f64) -> Visibility {
    let pts = path.points();
    let mut grazing = false;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.distance(&b);
        if len <= tol {
            continue;
        }
        let delta = tol / len;
        let open = |l: f64| l > delta && l < 1.0 - delta;
        let dir = (b - a) * (1.0 / len);
        let mut first: Option<(f64, ElementId)> = None;
        let mut block = |lambda: f64, id: ElementId| {
            if first.is_none_or(|(l, _)| lambda < l) {
                first = Some((lambda, id));
            }
        };
        for e in boundary.elements() {
            match e {
                ElementRef::Wall(wall) => match wall.intersect_segment(&a, &b, tol) {
                    SegmentHit::Transversal { lambda, .. } if open(lambda) => {
                        block(lambda, wall.id)
                    }
                    SegmentHit::Grazing => grazing = true,
                    _ => {}
                },
                ElementRef::Patch(patch) => {
                    let s = patch.surface();
                    for hit in s.segment_hits(&a, &b) {
                        if !open(hit.lambda) {
                            continue;
                        }
                        if s.vector(hit.param).dot(&dir).abs() > TANGENT_EPS {
                            block(hit.lambda, patch.id);
                        } else {
                            grazing = true;
                        }
                    }
                }
                ElementRef::Point(p) => {
                    let lambda = (p.position - a).dot(&dir) / len;
                    if !open(lambda) || (a + dir * (lambda * len)).distance(&p.position) > tol {
                        continue;
                    }
                    if p.vector.dot(&dir).abs() > TANGENT_EPS {
                        block(lambda, p.id);
                    } else {
                        grazing = true;
                    }
                }
            }
        }
        if let Some((_, id)) = first {
            return Visibility {
                visible: false,
                blocking_element: Some(id),
                grazing,
            };
        }
    }
    Visibility {
        visible: true,
        blocking_element: None,
        grazing,
    }
}

/// Validity and visibility of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathClassification {
    pub valid: bool,
    pub visible: bool,
    pub validity_residual: f64,
    pub blocking_element: Option<ElementId>,
    pub grazing: bool,
}

pub fn classify(
    path: &ReflectionPath,
    boundary: &Boundary,
    geom_tol: f64,
    validity_tol: f64,
) -> Result<PathClassification> {
    check_segments(path, geom_tol)?;
    let (valid, validity_residual) = check_validity(path, validity_tol)?;
    let vis = check_visibility(path, boundary, geom_tol);
    Ok(PathClassification {
        valid,
        visible: vis.visible,
        validity_residual,
        blocking_element: vis.blocking_element,
        grazing: vis.grazing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PlanarWall, PointReflector, Vector};

    fn v2(x: f64, y: f64) -> Vector {
        Vector::new2(x, y)
    }

    fn floor_boundary() -> Boundary {
        let floor = PlanarWall::new(0, vec![v2(-5.0, 0.0), v2(5.0, 0.0)], None, 1.0).unwrap();
        Boundary::new(2, vec![floor], vec![], vec![]).unwrap()
    }

    fn floor_path(r: Vector) -> ReflectionPath {
        ReflectionPath::resolve(
            &floor_boundary(),
            v2(-1.0, 1.0),
            &[(0, v2(0.0, 0.0))],
            r,
            1e-9,
        )
        .unwrap()
    }

    #[test]
    fn lengths() {
        assert_eq!(
            path_length(&ReflectionPath::direct(v2(0.0, 0.0), v2(3.0, 4.0))),
            5.0
        );
        let p = floor_path(v2(1.0, 1.0));
        assert!((path_length(&p) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((p.image().distance(&p.sink) - path_length(&p)).abs() < 1e-15);
    }

    #[test]
    fn mirror_path_is_valid() {
        let p = floor_path(v2(1.0, 1.0));
        let (valid, residual) = check_validity(&p, DEFAULT_VALIDITY_TOL).unwrap();
        assert!(valid && residual < 1e-15);
        assert!(check_equal_angles(&p) <= 1e-12);
    }

    #[test]
    fn unequal_angles_are_invalid() {
        let p = floor_path(v2(2.0, 1.0));
        let (valid, residual) = check_validity(&p, DEFAULT_VALIDITY_TOL).unwrap();
        assert!(!valid && residual > 0.1);
        assert!(check_equal_angles(&p) > 0.0);
    }

    #[test]
    fn degenerate_segment_is_an_error() {
        let p = ReflectionPath {
            source: v2(0.0, 0.0),
            reflections: vec![Reflection {
                point: v2(0.0, 0.0),
                element: 0,
                vector: UnitVector::new2(0.0, 1.0).unwrap(),
            }],
            sink: v2(1.0, 1.0),
        };
        assert!(matches!(
            check_validity(&p, 1e-9),
            Err(Error::DegenerateSegment { index: 0 })
        ));
    }

    #[test]
    fn resolve_rejects_off_element_points() {
        let err = ReflectionPath::resolve(
            &floor_boundary(),
            v2(-1.0, 1.0),
            &[(0, v2(0.0, 0.1))],
            v2(1.0, 1.0),
            1e-9,
        );
        assert!(matches!(err, Err(Error::NotOnElement { element: 0, .. })));
    }

    #[test]
    fn transversal_wall_blocks() {
        let wall = PlanarWall::new(4, vec![v2(0.0, -1.0), v2(0.0, 1.0)], None, 1.0).unwrap();
        let b = Boundary::new(2, vec![wall], vec![], vec![]).unwrap();
        let p = ReflectionPath::direct(v2(-1.0, 0.0), v2(1.0, 0.0));
        let vis = check_visibility(&p, &b, 1e-9);
        assert!(!vis.visible);
        assert_eq!(vis.blocking_element, Some(4));
        assert_eq!(check_visibility(&p.reversed(), &b, 1e-9), vis);
    }

    #[test]
    fn grazing_segment_is_visible_and_flagged() {
        let p = ReflectionPath::direct(v2(-1.0, 0.0), v2(1.0, 0.0));
        let vis = check_visibility(&p, &floor_boundary(), 1e-9);
        assert!(vis.visible && vis.grazing);
    }

    #[test]
    fn bounce_point_does_not_block_itself() {
        let p = floor_path(v2(1.0, 1.0));
        let vis = check_visibility(&p, &floor_boundary(), 1e-9);
        assert!(vis.visible && !vis.grazing);
    }

    #[test]
    fn point_reflector_blocks_unless_tangent() {
        let hit =
            PointReflector::new(1, v2(0.0, 0.0), UnitVector::new2(1.0, 1.0).unwrap(), 1.0).unwrap();
        let b = Boundary::new(2, vec![], vec![], vec![hit]).unwrap();
        let p = ReflectionPath::direct(v2(-1.0, 0.0), v2(1.0, 0.0));
        assert_eq!(check_visibility(&p, &b, 1e-9).blocking_element, Some(1));
        let tangent =
            PointReflector::new(1, v2(0.0, 0.0), UnitVector::new2(0.0, 1.0).unwrap(), 1.0).unwrap();
        let b = Boundary::new(2, vec![], vec![], vec![tangent]).unwrap();
        let vis = check_visibility(&p, &b, 1e-9);
        assert!(vis.visible && vis.grazing);
    }
}
