//! Brute-force references: the closed-form image lattice of an axis-aligned
//! box and forward ray shooting.
//!
//! Neither shares code with the path engines beyond the vector type and the
//! reflection formula.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::geometry::{
    symmetric_project, Boundary, CurvedPatch, PatchShape, PlanarWall, Point, Surface, UnitVector,
    Vector,
};

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBox {
    pub lo: Point,
    pub hi: Point,
}

impl AxisBox {
    pub fn new(lo: Point, hi: Point) -> Self {
        assert_eq!(lo.dim(), hi.dim());
        AxisBox { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }
}

/// Image of coordinate `s` in `[lo, lo + len]` after lattice step `q`.
fn lattice_coord(s: f64, lo: f64, len: f64, q: i64) -> f64 {
    let s = s - lo;
    let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    // ceil(q / 2) for either sign of q.
    let half = q.div_euclid(2) + q.rem_euclid(2);
    lo + sign * s + 2.0 * half as f64 * len
}

/// Every image point of `s` with total reflection order `sum |q_i| <= max_order`,
/// listed by order and then by lattice index.
pub fn rect_lattice_images(room: &AxisBox, s: &Point, max_order: usize) -> Vec<(Point, usize)> {
    let dim = room.dim();
    let k = max_order as i64;
    let mut out = Vec::new();
    let mut q = vec![-k; dim];
    loop {
        let order: i64 = q.iter().map(|x| x.abs()).sum();
        if order <= k {
            let coords: Vec<f64> = (0..dim)
                .map(|i| {
                    let len = room.hi.get(i) - room.lo.get(i);
                    lattice_coord(s.get(i), room.lo.get(i), len, q[i])
                })
                .collect();
            out.push((Point::from_slice(&coords).expect("finite"), order as usize));
        }
        // Odometer over [-k, k]^dim.
        let mut i = 0;
        loop {
            if i == dim {
                out.sort_by_key(|(_, o)| *o);
                return out;
            }
            q[i] += 1;
            if q[i] <= k {
                break;
            }
            q[i] = -k;
            i += 1;
        }
    }
}

/// Settings of [`ray_shoot`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayShootConfig {
    pub n_rays: usize,
    pub max_bounces: usize,
    /// Rays passing within this distance of the receiver count as arrivals.
    pub capture_radius: f64,
    pub speed_of_sound: f64,
    /// Rays are abandoned after this travel distance.
    pub max_distance: f64,
}

impl Default for RayShootConfig {
    fn default() -> Self {
        RayShootConfig {
            n_rays: 100_000,
            max_bounces: 1,
            capture_radius: 0.05,
            speed_of_sound: 343.0,
            max_distance: 1e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    /// Travel time to the point of closest approach.
    pub time: f64,
    pub bounces: usize,
    /// Closest distance between the ray and the receiver.
    pub miss: f64,
}

/// Deterministic, evenly spread directions: equal angles in 2D, a Fibonacci
/// lattice in 3D.
pub fn ray_directions(dim: usize, n: usize) -> Vec<UnitVector> {
    if dim == 2 {
        (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                UnitVector::new2(t.cos(), t.sin()).expect("unit")
            })
            .collect()
    } else {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|k| {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * k as f64;
                UnitVector::new3(rho * phi.cos(), rho * phi.sin(), z).expect("unit")
            })
            .collect()
    }
}

/// Shoots `n_rays` rays from `s`, reflects them specularly off walls and
/// patches, and records every pass within `capture_radius` of `r`.
///
/// Point reflectors have zero cross-section and are never hit. Arrivals
/// are listed ray by ray, so the result does not depend on threading.
pub fn ray_shoot(boundary: &Boundary, s: Point, r: Point, cfg: &RayShootConfig) -> Vec<Arrival> {
    ray_directions(boundary.dim(), cfg.n_rays)
        .into_par_iter()
        .map(|d| trace(boundary, s, d, r, cfg))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

const MIN_T: f64 = 1e-9;

fn trace(
    boundary: &Boundary,
    s: Point,
    d: UnitVector,
    r: Point,
    cfg: &RayShootConfig,
) -> Vec<Arrival> {
    let mut out = Vec::new();
    let (mut p, mut d) = (s, d);
    let mut travelled = 0.0;
    for bounce in 0..=cfg.max_bounces {
        let hit = nearest_hit(boundary, &p, &d);
        let t_end = hit.map_or(f64::INFINITY, |h| h.0);
        let t_star = (r - p).dot(&d).clamp(0.0, t_end.min(cfg.max_distance));
        let miss = (p + d.as_vector() * t_star).distance(&r);
        if miss <= cfg.capture_radius {
            out.push(Arrival {
                time: (travelled + t_star) / cfg.speed_of_sound,
                bounces: bounce,
                miss,
            });
        }
        let Some((t, normal)) = hit else { break };
        travelled += t;
        if travelled > cfg.max_distance {
            break;
        }
        let q = p + d.as_vector() * t;
        let ahead = symmetric_project(q + d.as_vector(), q, normal);
        d = match (ahead - q).normalize() {
            Some(u) => u,
            None => break,
        };
        p = q;
    }
    out
}

/// Closest forward hit: distance along the ray and the surface normal there.
fn nearest_hit(boundary: &Boundary, p: &Point, d: &UnitVector) -> Option<(f64, UnitVector)> {
    let mut best: Option<(f64, UnitVector)> = None;
    let mut consider = |h: Option<(f64, UnitVector)>| {
        if let Some((t, n)) = h {
            if t > MIN_T && best.is_none_or(|b| t < b.0) {
                best = Some((t, n));
            }
        }
    };
    for w in &boundary.walls {
        consider(wall_hit(w, p, d));
    }
    for patch in &boundary.patches {
        for h in patch_hits(patch, p, d) {
            consider(Some(h));
        }
    }
    best
}

fn wall_hit(w: &PlanarWall, p: &Point, d: &UnitVector) -> Option<(f64, UnitVector)> {
    let n = w.normal();
    let denom = n.dot(d);
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = (w.offset() - n.dot(p)) / denom;
    if t <= MIN_T {
        return None;
    }
    let q = *p + d.as_vector() * t;
    let v = w.vertices();
    let inside = if v.len() == 2 {
        let e = v[1] - v[0];
        let lam = (q - v[0]).dot(&e) / e.norm_squared();
        (0.0..=1.0).contains(&lam)
    } else {
        // Convex polygon: q is on the same side of every edge.
        let mut sign = 0.0;
        v.iter().enumerate().all(|(i, a)| {
            let b = v[(i + 1) % v.len()];
            let c = (b - *a).cross(&(q - *a)).dot(&n);
            if c.abs() < 1e-14 {
                return true;
            }
            if sign == 0.0 {
                sign = c.signum();
            }
            c.signum() == sign
        })
    };
    inside.then_some((t, n))
}

/// Roots `t > MIN_T` of `|p + t d - c|^2 = rad^2`, with `a` the
/// component of `p - c` and `d` taken in the relevant subspace.
fn quadric_roots(pc: Vector, d: Vector, rad: f64) -> Vec<f64> {
    let a = d.norm_squared();
    if a < 1e-30 {
        return Vec::new();
    }
    let b = 2.0 * pc.dot(&d);
    let c = pc.norm_squared() - rad * rad;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let mut ts = vec![(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)];
    ts.retain(|&t| t > MIN_T);
    ts
}

fn in_arc(angle: f64, start: f64, end: f64) -> bool {
    let (lo, hi) = if start <= end {
        (start, end)
    } else {
        (end, start)
    };
    if hi - lo >= TAU - 1e-12 {
        return true;
    }
    let rel = (angle - lo).rem_euclid(TAU);
    rel <= hi - lo + 1e-12
}

fn patch_hits(patch: &CurvedPatch, p: &Point, d: &UnitVector) -> Vec<(f64, UnitVector)> {
    match &patch.shape {
        PatchShape::Circle(c) => quadric_roots(*p - c.center, d.as_vector(), c.radius)
            .into_iter()
            .filter_map(|t| {
                let q = *p + d.as_vector() * t - c.center;
                let ang = q.y().atan2(q.x());
                in_arc(ang, c.arc[0], c.arc[1]).then(|| (t, q.normalize().expect("on circle")))
            })
            .collect(),
        PatchShape::Sphere(sp) => quadric_roots(*p - sp.center, d.as_vector(), sp.radius)
            .into_iter()
            .filter_map(|t| {
                let q = *p + d.as_vector() * t - sp.center;
                let theta = (q.z() / q.norm()).clamp(-1.0, 1.0).acos();
                (theta <= sp.cap + 1e-12).then(|| (t, q.normalize().expect("on sphere")))
            })
            .collect(),
        PatchShape::Cylinder(cy) => {
            let a = cy.axis.as_vector();
            let radial = |v: Vector| v - a * a.dot(&v);
            let pc = *p - cy.base;
            quadric_roots(radial(pc), radial(d.as_vector()), cy.radius)
                .into_iter()
                .filter_map(|t| {
                    let q = pc + d.as_vector() * t;
                    let h = a.dot(&q);
                    ((0.0..=cy.height).contains(&h))
                        .then(|| (t, radial(q).normalize().expect("on cylinder")))
                })
                .collect()
        }
        PatchShape::Param(s) => generic_hits(s, p, d),
        PatchShape::Custom(s) => generic_hits(s.as_ref(), p, d),
    }
}

fn surface_normal(s: &(impl Surface + ?Sized), x: [f64; 2]) -> Option<UnitVector> {
    let j = s.jacobian(x);
    if s.space_dim() == 2 {
        j[0].perp().normalize()
    } else {
        j[0].cross(&j[1]).normalize()
    }
}

/// Curves: sign changes of the signed distance from the ray's line, refined
/// by bisection. Surfaces: Newton on `Phi(x) - p - t d` from a seed grid.
fn generic_hits(s: &(impl Surface + ?Sized), p: &Point, d: &UnitVector) -> Vec<(f64, UnitVector)> {
    let dom = s.domain();
    let mut out = Vec::new();
    if s.space_dim() == 2 {
        const SCAN: usize = 2048;
        let side = |x: f64| (s.map([x, 0.0]) - *p).dot(&d.perp());
        let at = |k: usize| dom.lo[0] + dom.width(0) * k as f64 / SCAN as f64;
        let mut prev = side(at(0));
        for k in 1..=SCAN {
            let (mut a, mut b) = (at(k - 1), at(k));
            let cur = side(b);
            if prev == 0.0 || prev.signum() != cur.signum() {
                let mut fa = prev;
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    let fm = side(m);
                    if fm == 0.0 || fm.signum() == fa.signum() {
                        if fm == 0.0 {
                            a = m;
                            b = m;
                            break;
                        }
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                let x = 0.5 * (a + b);
                let t = (s.map([x, 0.0]) - *p).dot(d);
                if t > MIN_T {
                    if let Some(n) = surface_normal(s, [x, 0.0]) {
                        out.push((t, n));
                    }
                }
            }
            prev = cur;
        }
    } else {
        const GRID: usize = 16;
        for i in 0..GRID {
            for j in 0..GRID {
                let mut x = [
                    dom.lo[0] + dom.width(0) * (i as f64 + 0.5) / GRID as f64,
                    dom.lo[1] + dom.width(1) * (j as f64 + 0.5) / GRID as f64,
                ];
                let mut t = (s.map(x) - *p).dot(d);
                let mut ok = false;
                for _ in 0..30 {
                    let f = s.map(x) - *p - d.as_vector() * t;
                    if f.norm() < 1e-12 {
                        ok = true;
                        break;
                    }
                    let jac = s.jacobian(x);
                    let m = nalgebra::Matrix3::from_columns(&[
                        to_na(&jac[0]),
                        to_na(&jac[1]),
                        -to_na(&d.as_vector()),
                    ]);
                    let Some(step) = m.lu().solve(&-to_na(&f)) else {
                        break;
                    };
                    x = dom.normalize([x[0] + step[0], x[1] + step[1]]);
                    t += step[2];
                }
                if ok && t > MIN_T && dom.contains_open(x) {
                    if let Some(n) = surface_normal(s, x) {
                        if !out
                            .iter()
                            .any(|(u, _): &(f64, UnitVector)| (u - t).abs() < 1e-9)
                        {
                            out.push((t, n));
                        }
                    }
                }
            }
        }
    }
    out
}

fn to_na(v: &Vector) -> nalgebra::Vector3<f64> {
    nalgebra::Vector3::new(v.x(), v.y(), v.z())
}
