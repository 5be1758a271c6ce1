use crate::error::{Error, Result};

use super::{ElementId, Point, UnitVector, Vector};

/// Coplanarity tolerance for wall vertices, in meters.
const VERTEX_PLANE_TOL: f64 = 1e-9;

/// A convex piece of a hyperplane `<normal, v> = offset`.
///
/// In 2D the extent is a segment given by its two endpoints; in 3D it is a
/// convex polygon given by its vertices in order (either winding).
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarWall {
    pub id: ElementId,
    normal: UnitVector,
    offset: f64,
    vertices: Vec<Point>,
    /// Retained-amplitude factor: 1 reflects everything, 0 kills the path.
    pub absorption: f64,
    /// 3D only: (vertex, in-plane unit vector pointing into the polygon) per edge.
    edges: Vec<(Point, Vector)>,
}

/// Outcome of intersecting a segment with a wall's closed extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentHit {
    None,
    /// The segment crosses the hyperplane at parameter `lambda` inside the extent.
    Transversal {
        lambda: f64,
        point: Point,
    },
    /// The segment lies in the hyperplane and overlaps the extent.
    Grazing,
}

impl PlanarWall {
    /// Builds a wall from its vertices. The normal is inferred from the winding
    /// when not given: the counter-clockwise quarter turn of `v1 - v0` in 2D,
    /// Newell's method in 3D. Either sign describes the same reflector.
    pub fn new(
        id: ElementId,
        vertices: Vec<Point>,
        normal: Option<UnitVector>,
        absorption: f64,
    ) -> Result<Self> {
        let field = |m: &str| Error::validation(format!("walls[id={id}]"), m);
        let dim = match vertices.first() {
            Some(v) => v.dim(),
            None => return Err(field("no vertices")),
        };
        if vertices.iter().any(|v| v.dim() != dim) {
            return Err(field("vertices have mixed dimensions"));
        }
        if !(0.0..=1.0).contains(&absorption) {
            return Err(field("absorption must lie in [0, 1]"));
        }
        match dim {
            2 if vertices.len() != 2 => return Err(field("a 2D wall needs exactly 2 vertices")),
            3 if vertices.len() < 3 => return Err(field("a 3D wall needs at least 3 vertices")),
            _ => {}
        }

        let newell = if dim == 2 {
            (vertices[1] - vertices[0]).perp()
        } else {
            newell_normal(&vertices)
        };
        let inferred = newell
            .normalize()
            .ok_or_else(|| field("extent has an empty relative interior"))?;
        let normal = match normal {
            Some(n) if n.dim() != dim => return Err(field("normal has the wrong dimension")),
            Some(n) => n,
            None => inferred,
        };
        let offset = normal.dot(&vertices[0]);
        for v in &vertices {
            if (normal.dot(v) - offset).abs() > VERTEX_PLANE_TOL {
                return Err(field("vertices do not lie in the plane of the normal"));
            }
        }

        let mut edges = Vec::new();
        if dim == 3 {
            let n = inferred;
            for (i, &a) in vertices.iter().enumerate() {
                let b = vertices[(i + 1) % vertices.len()];
                let inward = n
                    .cross(&(b - a))
                    .normalize()
                    .ok_or_else(|| field("repeated vertex"))?;
                edges.push((a, inward.as_vector()));
            }
            for &(a, inward) in &edges {
                if vertices
                    .iter()
                    .any(|v| (*v - a).dot(&inward) < -VERTEX_PLANE_TOL)
                {
                    return Err(field("polygon is not convex"));
                }
            }
        }

        Ok(PlanarWall {
            id,
            normal,
            offset,
            vertices,
            absorption,
            edges,
        })
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    pub fn normal(&self) -> UnitVector {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Same wall with the stored normal (and offset) negated.
    pub fn flipped(&self) -> Self {
        PlanarWall {
            normal: -self.normal,
            offset: -self.offset,
            ..self.clone()
        }
    }

    #[inline]
    pub fn signed_distance(&self, u: &Point) -> f64 {
        self.normal.dot(u) - self.offset
    }

    /// Mirror image across the wall's hyperplane, `u - 2<u,n>n + 2bn`.
    ///
    /// Independent of which point of the hyperplane is used as the
    /// reflection point.
    #[inline]
    pub fn mirror(&self, u: Point) -> Point {
        let k = 2.0 * self.signed_distance(&u);
        u - self.normal.as_vector() * k
    }

    /// Signed in-plane distance from the projection of `p` to the extent's
    /// relative boundary: positive inside, negative outside.
    pub fn extent_margin(&self, p: &Point) -> f64 {
        if self.dim() == 2 {
            let a = self.vertices[0];
            let e = self.vertices[1] - a;
            let len = e.norm();
            let t = (*p - a).dot(&e) / len;
            t.min(len - t)
        } else {
            self.edges
                .iter()
                .map(|(a, inward)| (*p - *a).dot(inward))
                .fold(f64::INFINITY, f64::min)
        }
    }

    /// Euclidean distance from `p` to the closed wall.
    pub fn distance(&self, p: &Point) -> f64 {
        let h = self.signed_distance(p);
        let margin = self.extent_margin(p);
        if margin >= 0.0 {
            return h.abs();
        }
        if self.dim() == 2 {
            let d0 = p.distance(&self.vertices[0]);
            let d1 = p.distance(&self.vertices[1]);
            return d0.min(d1);
        }
        let n = self.vertices.len();
        (0..n)
            .map(|i| point_segment_distance(p, &self.vertices[i], &self.vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        self.distance(p) <= tol
    }

    /// Intersects the segment `a -> b` with the closed extent (within `tol`).
    pub fn intersect_segment(&self, a: &Point, b: &Point, tol: f64) -> SegmentHit {
        let d = *b - *a;
        let len = d.norm();
        let ha = self.signed_distance(a);
        let hb = self.signed_distance(b);
        if ha.abs() <= tol && hb.abs() <= tol {
            // Lies in the hyperplane; grazing if it overlaps the extent.
            return if self.segment_overlaps_extent(a, b, tol) {
                SegmentHit::Grazing
            } else {
                SegmentHit::None
            };
        }
        let denom = self.normal.dot(&d);
        if denom.abs() <= tol * len.max(f64::MIN_POSITIVE) {
            return SegmentHit::None;
        }
        let lambda = -ha / denom;
        if !(0.0..=1.0).contains(&lambda) {
            return SegmentHit::None;
        }
        let point = *a + d * lambda;
        if self.extent_margin(&point) >= -tol {
            SegmentHit::Transversal { lambda, point }
        } else {
            SegmentHit::None
        }
    }

    fn segment_overlaps_extent(&self, a: &Point, b: &Point, tol: f64) -> bool {
        if self.dim() == 2 {
            let v0 = self.vertices[0];
            let e = self.vertices[1] - v0;
            let len = e.norm();
            let ta = (*a - v0).dot(&e) / len;
            let tb = (*b - v0).dot(&e) / len;
            let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            return hi >= -tol && lo <= len + tol;
        }
        // Clip the segment against each edge half-plane.
        let d = *b - *a;
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for (v, inward) in &self.edges {
            let fa = (*a - *v).dot(inward) + tol;
            let fd = d.dot(inward);
            if fd.abs() < 1e-300 {
                if fa < 0.0 {
                    return false;
                }
                continue;
            }
            let t = -fa / fd;
            if fd > 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
            if lo > hi {
                return false;
            }
        }
        true
    }
}

fn newell_normal(vertices: &[Point]) -> Vector {
    let mut n = Vector::zeros(3);
    for (i, a) in vertices.iter().enumerate() {
        let b = vertices[(i + 1) % vertices.len()];
        n += Vector::new3(
            (a.y() - b.y()) * (a.z() + b.z()),
            (a.z() - b.z()) * (a.x() + b.x()),
            (a.x() - b.x()) * (a.y() + b.y()),
        );
    }
    n
}

pub(crate) fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let d = *b - *a;
    let l2 = d.norm_squared();
    if l2 == 0.0 {
        return p.distance(a);
    }
    let t = ((*p - *a).dot(&d) / l2).clamp(0.0, 1.0);
    p.distance(&(*a + d * t))
}
