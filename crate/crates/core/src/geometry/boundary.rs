use std::collections::HashSet;

use crate::error::{Error, Result};

use super::{CurvedPatch, ElementId, PlanarWall, Point, UnitVector};

/// An isolated reflecting point with its own assigned vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PointReflector {
    pub id: ElementId,
    pub position: Point,
    pub vector: UnitVector,
    pub absorption: f64,
}

impl PointReflector {
    pub fn new(
        id: ElementId,
        position: Point,
        vector: UnitVector,
        absorption: f64,
    ) -> Result<Self> {
        vector.as_vector().check_dim(position.dim())?;
        if !(0.0..=1.0).contains(&absorption) {
            return Err(Error::validation(
                format!("point_reflectors[id={id}]"),
                "absorption must lie in [0, 1]",
            ));
        }
        Ok(PointReflector {
            id,
            position,
            vector,
            absorption,
        })
    }
}

/// Borrowed view of one boundary element.
#[derive(Debug, Clone, Copy)]
pub enum ElementRef<'a> {
    Wall(&'a PlanarWall),
    Patch(&'a CurvedPatch),
    Point(&'a PointReflector),
}

impl<'a> ElementRef<'a> {
    pub fn id(&self) -> ElementId {
        match self {
            ElementRef::Wall(w) => w.id,
            ElementRef::Patch(p) => p.id,
            ElementRef::Point(p) => p.id,
        }
    }

    pub fn absorption(&self) -> f64 {
        match self {
            ElementRef::Wall(w) => w.absorption,
            ElementRef::Patch(p) => p.absorption,
            ElementRef::Point(p) => p.absorption,
        }
    }

    /// Euclidean distance from `u` to the closed element.
    pub fn distance(&self, u: &Point) -> f64 {
        match self {
            ElementRef::Wall(w) => w.distance(u),
            ElementRef::Patch(p) => p.surface().closest(u).1,
            ElementRef::Point(p) => p.position.distance(u),
        }
    }

    /// Assigned vector at the element point nearest to `u`.
    pub fn vector_near(&self, u: &Point) -> UnitVector {
        match self {
            ElementRef::Wall(w) => w.normal(),
            ElementRef::Patch(p) => {
                let s = p.surface();
                s.vector(s.closest(u).0)
            }
            ElementRef::Point(p) => p.vector,
        }
    }
}

/// Union of planar walls, curved patches and point reflectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    dim: usize,
    pub walls: Vec<PlanarWall>,
    pub patches: Vec<CurvedPatch>,
    pub points: Vec<PointReflector>,
}

impl Boundary {
    pub fn empty(dim: usize) -> Self {
        Boundary {
            dim,
            walls: Vec::new(),
            patches: Vec::new(),
            points: Vec::new(),
        }
    }

    /// Checks dimensions and id uniqueness.
    pub fn new(
        dim: usize,
        walls: Vec<PlanarWall>,
        patches: Vec<CurvedPatch>,
        points: Vec<PointReflector>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::validation("dimension", "must be 2 or 3"));
        }
        let mut seen = HashSet::new();
        let b = Boundary {
            dim,
            walls,
            patches,
            points,
        };
        for e in b.elements() {
            if !seen.insert(e.id()) {
                return Err(Error::validation(
                    "id",
                    format!("element id {} is used twice", e.id()),
                ));
            }
            let got = match e {
                ElementRef::Wall(w) => w.dim(),
                ElementRef::Patch(p) => p.dim(),
                ElementRef::Point(p) => p.position.dim(),
            };
            if got != dim {
                return Err(Error::DimensionMismatch { expected: dim, got });
            }
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.walls.is_empty() && self.patches.is_empty() && self.points.is_empty()
    }

    /// All elements: walls, then patches, then points, each in stored order.
    pub fn elements(&self) -> impl Iterator<Item = ElementRef<'_>> {
        self.walls
            .iter()
            .map(ElementRef::Wall)
            .chain(self.patches.iter().map(ElementRef::Patch))
            .chain(self.points.iter().map(ElementRef::Point))
    }

    pub fn element(&self, id: ElementId) -> Option<ElementRef<'_>> {
        self.elements().find(|e| e.id() == id)
    }

    pub fn wall(&self, id: ElementId) -> Option<&PlanarWall> {
        self.walls.iter().find(|w| w.id == id)
    }

    /// Copy with every wall normal and point-reflector vector negated.
    ///
    /// Patch vector fields are left alone; built-in shapes fix their own sign.
    pub fn with_flipped_vectors(&self) -> Self {
        Boundary {
            dim: self.dim,
            walls: self.walls.iter().map(PlanarWall::flipped).collect(),
            patches: self.patches.clone(),
            points: self
                .points
                .iter()
                .map(|p| PointReflector {
                    vector: -p.vector,
                    ..p.clone()
                })
                .collect(),
        }
    }

    /// The boundary vector field: the assigned vector of the unique element
    /// within `tol` of `u`, or `None` off the boundary.
    ///
    /// Two nearby elements carrying the same axis (e.g. coplanar walls sharing
    /// an edge) are not ambiguous.
    pub fn vector_field(&self, u: &Point, tol: f64) -> Result<Option<UnitVector>> {
        u.check_dim(self.dim)?;
        let mut found: Option<(ElementId, UnitVector)> = None;
        for e in self.elements() {
            if e.distance(u) > tol {
                continue;
            }
            let v = e.vector_near(u);
            match found {
                None => found = Some((e.id(), v)),
                Some((first, w)) => {
                    if !w.same_axis(&v, 1e-12) {
                        return Err(Error::AmbiguousBoundary {
                            first,
                            second: e.id(),
                        });
                    }
                }
            }
        }
        Ok(found.map(|(_, v)| v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CircleArc, PatchShape, Vector};

    fn floor() -> PlanarWall {
        PlanarWall::new(
            0,
            vec![Vector::new2(0.0, 0.0), Vector::new2(1.0, 0.0)],
            Some(UnitVector::new2(0.0, 1.0).unwrap()),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn vector_field_on_and_off_wall() {
        let b = Boundary::new(2, vec![floor()], vec![], vec![]).unwrap();
        let v = b.vector_field(&Vector::new2(0.5, 0.0), 1e-9).unwrap();
        assert_eq!(v.unwrap().as_vector(), Vector::new2(0.0, 1.0));
        assert!(b
            .vector_field(&Vector::new2(0.5, 0.5), 1e-9)
            .unwrap()
            .is_none());
    }

    #[test]
    fn vector_field_on_point_reflector() {
        let p = PointReflector::new(
            7,
            Vector::new2(2.0, 0.0),
            UnitVector::new2(1.0, 0.0).unwrap(),
            1.0,
        )
        .unwrap();
        let b = Boundary::new(2, vec![], vec![], vec![p]).unwrap();
        let v = b
            .vector_field(&Vector::new2(2.0, 0.0), 1e-9)
            .unwrap()
            .unwrap();
        assert_eq!(v.as_vector(), Vector::new2(1.0, 0.0));
    }

    #[test]
    fn corner_is_ambiguous() {
        let side = PlanarWall::new(
            1,
            vec![Vector::new2(0.0, 0.0), Vector::new2(0.0, 1.0)],
            None,
            1.0,
        )
        .unwrap();
        let b = Boundary::new(2, vec![floor(), side], vec![], vec![]).unwrap();
        assert!(matches!(
            b.vector_field(&Vector::new2(0.0, 0.0), 1e-9),
            Err(Error::AmbiguousBoundary {
                first: 0,
                second: 1
            })
        ));
    }

    #[test]
    fn duplicate_ids_and_dimensions_rejected() {
        assert!(Boundary::new(2, vec![floor(), floor()], vec![], vec![]).is_err());
        let c = CurvedPatch::new(
            3,
            PatchShape::Circle(CircleArc::full(Vector::new2(0.0, 0.0), 1.0)),
            1.0,
        )
        .unwrap();
        assert!(Boundary::new(3, vec![], vec![c], vec![]).is_err());
    }

    #[test]
    fn patch_vector_field_is_radial() {
        let c = CurvedPatch::new(
            0,
            PatchShape::Circle(CircleArc::full(Vector::new2(0.0, 0.0), 2.0)),
            1.0,
        )
        .unwrap();
        let b = Boundary::new(2, vec![], vec![c], vec![]).unwrap();
        let v = b
            .vector_field(&Vector::new2(0.0, -2.0), 1e-9)
            .unwrap()
            .unwrap();
        assert!(v.same_axis(&UnitVector::new2(0.0, 1.0).unwrap(), 1e-12));
    }
}
