//! Image sources for planar walls: wall sequences, the line construction,
//! the feasibility map and the enumeration loop.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Boundary, ElementId, PlanarWall, Point, UnitVector};
use crate::paths::{check_visibility, path_length, Reflection, ReflectionPath};

/// A straight line through `anchor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub anchor: Point,
    pub direction: UnitVector,
}

impl Line {
    pub fn through(a: Point, b: Point) -> Option<Line> {
        (b - a).normalize().map(|direction| Line {
            anchor: a,
            direction,
        })
    }

    pub fn distance(&self, p: &Point) -> f64 {
        let w = *p - self.anchor;
        (w - self.direction.as_vector() * self.direction.dot(&w)).norm()
    }
}

/// Ordered wall ids `i_1, ..., i_k` a ray reflects off.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct WallSequence(pub Vec<ElementId>);

impl WallSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// No wall appears twice in a row.
    pub fn is_consecutive_distinct(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1])
    }

    fn walls<'a>(&self, boundary: &'a Boundary) -> Result<Vec<&'a PlanarWall>> {
        self.0
            .iter()
            .map(|&id| boundary.wall(id).ok_or(Error::UnknownElement(id)))
            .collect()
    }
}

/// An image source together with the path that explains it.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualSource {
    pub position: Point,
    pub order: usize,
    pub path: ReflectionPath,
    pub wall_sequence: WallSequence,
    /// Some segment of the path slides along an element.
    pub grazing: bool,
}

/// Mirrors `s` through the hyperplanes of the walls in order.
///
/// Uses the hyperplane form, so no reflection point is needed.
pub fn image_of_source_through_walls(
    s: Point,
    seq: &WallSequence,
    boundary: &Boundary,
) -> Result<Point> {
    Ok(seq.walls(boundary)?.iter().fold(s, |u, w| w.mirror(u)))
}

/// The lines `L_0, ..., L_k` that must carry the segments of a valid path.
///
/// `L_i` passes through the image of `s` after walls `1..=k-i` and the image
/// of `r` through walls `k, k-1, ..., k-i+1`. So `L_0` ends at `r` and `L_k`
/// starts at `s`; the segment leaving the `j`-th bounce lies on `L_{k-j}`.
pub fn build_lines(
    s: Point,
    r: Point,
    seq: &WallSequence,
    boundary: &Boundary,
    tol: f64,
) -> Result<Vec<Line>> {
    if seq.is_empty() {
        return Err(Error::Config("wall sequence must not be empty".into()));
    }
    let walls = seq.walls(boundary)?;
    let k = walls.len();
    let forward = forward_images(s, &walls);
    // backward[j] = P_{j+1} o ... o P_k (r)
    let mut backward = vec![r; k + 1];
    for j in (0..k).rev() {
        backward[j] = walls[j].mirror(backward[j + 1]);
    }
    (0..=k)
        .map(|i| {
            let (a, b) = (forward[k - i], backward[k - i]);
            if a.distance(&b) <= tol {
                return Err(Error::DegenerateLine { index: i });
            }
            Ok(Line::through(a, b).expect("distinct points"))
        })
        .collect()
}

fn forward_images(s: Point, walls: &[&PlanarWall]) -> Vec<Point> {
    let mut images = Vec::with_capacity(walls.len() + 1);
    images.push(s);
    for w in walls {
        images.push(w.mirror(*images.last().unwrap()));
    }
    images
}

/// The unique valid path reflecting off `seq` in order, or `None` when the
/// sequence is infeasible.
///
/// Works backwards from `r`: the last bounce is where the segment from the
/// full image of `s` to `r` meets the last wall; each earlier bounce is where
/// the segment from the partial image to the next bounce meets its wall. A
/// bounce must lie strictly between the image and its target, strictly
/// inside the wall extent (more than `tol` from its edges) and away from
/// every other wall.
pub fn psi(
    seq: &WallSequence,
    s: Point,
    r: Point,
    boundary: &Boundary,
    tol: f64,
) -> Result<Option<ReflectionPath>> {
    let walls = seq.walls(boundary)?;
    Ok(psi_walls(&walls, s, r, boundary, tol))
}

fn psi_walls(
    walls: &[&PlanarWall],
    s: Point,
    r: Point,
    boundary: &Boundary,
    tol: f64,
) -> Option<ReflectionPath> {
    if walls.windows(2).any(|w| w[0].id == w[1].id) {
        return None;
    }
    let k = walls.len();
    let images = forward_images(s, walls);
    let mut points = vec![r; k];
    let mut target = r;
    for j in (0..k).rev() {
        let wall = walls[j];
        let a = images[j + 1];
        let d = target - a;
        let denom = wall.normal().dot(&d);
        if denom == 0.0 {
            return None;
        }
        let lambda = -wall.signed_distance(&a) / denom;
        if !(lambda > 0.0 && lambda < 1.0) {
            return None;
        }
        let y = a + d * lambda;
        if wall.extent_margin(&y) <= tol || y.distance(&target) <= tol {
            return None;
        }
        points[j] = y;
        target = y;
    }
    if points[0].distance(&s) <= tol {
        return None;
    }
    // A bounce on another wall's closure is on a seam.
    for (j, y) in points.iter().enumerate() {
        if boundary
            .walls
            .iter()
            .any(|w| w.id != walls[j].id && w.distance(y) <= tol)
        {
            return None;
        }
    }
    Some(ReflectionPath {
        source: s,
        reflections: points
            .into_iter()
            .zip(walls)
            .map(|(point, w)| Reflection {
                point,
                element: w.id,
                vector: w.normal(),
            })
            .collect(),
        sink: r,
    })
}

/// All consecutive-distinct sequences of length `k` over `ids`, in
/// lexicographic order of `ids`.
pub fn wall_sequences(ids: &[ElementId], k: usize) -> Vec<WallSequence> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(ids: &[ElementId], k: usize, cur: &mut Vec<ElementId>, out: &mut Vec<WallSequence>) {
        if cur.len() == k {
            out.push(WallSequence(cur.clone()));
            return;
        }
        for &id in ids {
            if cur.last() != Some(&id) {
                cur.push(id);
                rec(ids, k, cur, out);
                cur.pop();
            }
        }
    }
    if k > 0 {
        rec(&sorted, k, &mut cur, &mut out);
    }
    out
}

/// Valid and visible image sources off the walls of `boundary` up to
/// `max_order` reflections, including the direct path when visible.
///
/// Patches and point reflectors take part in the visibility test only.
/// Output is sorted by order, then wall sequence; paths whose points all
/// coincide within `tol` with an earlier one are dropped.
pub fn enumerate_virtual_sources(
    boundary: &Boundary,
    s: Point,
    r: Point,
    max_order: usize,
    tol: f64,
) -> Result<Vec<VirtualSource>> {
    s.check_dim(boundary.dim())?;
    r.check_dim(boundary.dim())?;
    let mut out = Vec::new();
    if s.distance(&r) > tol {
        let direct = ReflectionPath::direct(s, r);
        let vis = check_visibility(&direct, boundary, tol);
        if vis.visible {
            out.push(VirtualSource {
                position: s,
                order: 0,
                path: direct,
                wall_sequence: WallSequence::default(),
                grazing: vis.grazing,
            });
        }
    }
    let ids: Vec<ElementId> = boundary.walls.iter().map(|w| w.id).collect();
    for k in 1..=max_order {
        let found: Vec<VirtualSource> = wall_sequences(&ids, k)
            .into_par_iter()
            .filter_map(|seq| {
                let walls = seq.walls(boundary).ok()?;
                let path = psi_walls(&walls, s, r, boundary, tol)?;
                let vis = check_visibility(&path, boundary, tol);
                vis.visible.then(|| VirtualSource {
                    position: path.image(),
                    order: k,
                    path,
                    wall_sequence: seq,
                    grazing: vis.grazing,
                })
            })
            .collect();
        push_distinct(&mut out, found, tol);
    }
    Ok(out)
}

fn push_distinct(out: &mut Vec<VirtualSource>, found: Vec<VirtualSource>, tol: f64) {
    let start = out.len();
    for v in found {
        let len = path_length(&v.path);
        let dup = out[start..]
            .iter()
            .any(|u| (path_length(&u.path) - len).abs() <= tol && u.path.coincides(&v.path, tol));
        if !dup {
            out.push(v);
        }
    }
}
