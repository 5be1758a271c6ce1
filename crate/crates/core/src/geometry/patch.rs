use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ElementId, Point, UnitVector, Vector};

/// Open parameter box `U` of a patch. Periodic axes wrap at `hi` back to `lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDomain {
    pub dim: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub periodic: [bool; 2],
}

impl ParamDomain {
    pub fn unit(dim: usize, periodic: [bool; 2]) -> Self {
        ParamDomain {
            dim,
            lo: [0.0; 2],
            hi: [1.0; 2],
            periodic,
        }
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Brings a parameter back into the box: wraps periodic axes, clamps the rest.
    pub fn normalize(&self, mut x: [f64; 2]) -> [f64; 2] {
        for i in 0..self.dim {
            if self.periodic[i] {
                let w = self.width(i);
                x[i] = self.lo[i] + (x[i] - self.lo[i]).rem_euclid(w);
            } else {
                x[i] = x[i].clamp(self.lo[i], self.hi[i]);
            }
        }
        x
    }

    /// Whether `x` lies strictly inside the box (periodic axes always do).
    pub fn contains_open(&self, x: [f64; 2]) -> bool {
        (0..self.dim).all(|i| self.periodic[i] || (x[i] > self.lo[i] && x[i] < self.hi[i]))
    }
}

/// Intersection of a segment with a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    /// Segment parameter in `[0, 1]`.
    pub lambda: f64,
    pub param: [f64; 2],
}

/// A parametrized hypersurface `Phi: U -> R^N` with an assigned vector field.
///
/// The parameter dimension is always `N - 1`. Parameters are passed as
/// `[f64; 2]`; the second entry is ignored when `N = 2`.
pub trait Surface: Send + Sync + fmt::Debug {
    fn space_dim(&self) -> usize;

    fn param_dim(&self) -> usize {
        self.space_dim() - 1
    }

    fn domain(&self) -> ParamDomain;

    fn map(&self, x: [f64; 2]) -> Point;

    /// Columns of the derivative of `map`, one per parameter axis.
    fn jacobian(&self, x: [f64; 2]) -> [Vector; 2];

    /// The assigned reflection vector at `map(x)`.
    fn vector(&self, x: [f64; 2]) -> UnitVector;

    /// All crossings of the closed segment `a -> b` with the closed patch.
    fn segment_hits(&self, a: &Point, b: &Point) -> Vec<SurfaceHit> {
        mesh_segment_hits(self, a, b)
    }

    /// Parameter of the patch point closest to `u`, and its distance.
    fn closest(&self, u: &Point) -> ([f64; 2], f64) {
        numeric_closest(self, u)
    }
}

/// Area (or length) element `sqrt(det(J^T J))` of a surface at `x`.
pub fn jacobian_measure(s: &(impl Surface + ?Sized), x: [f64; 2]) -> f64 {
    let j = s.jacobian(x);
    if s.param_dim() == 1 {
        j[0].norm()
    } else {
        let (a, b, c) = (j[0].dot(&j[0]), j[0].dot(&j[1]), j[1].dot(&j[1]));
        (a * c - b * b).max(0.0).sqrt()
    }
}

/// Arc of a circle in 2D, `theta = start + sweep * x` for `x` in (0, 1).
///
/// A full turn (`|sweep| = 2 pi`) makes the parameter periodic. The vector
/// field is the radial direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleArc {
    pub center: Point,
    pub radius: f64,
    /// `[start, end]` angles in radians; a full turn when omitted.
    #[serde(default = "full_turn")]
    pub arc: [f64; 2],
}

fn full_turn() -> [f64; 2] {
    [0.0, TAU]
}

fn half_turn() -> f64 {
    PI
}

impl CircleArc {
    pub fn full(center: Point, radius: f64) -> Self {
        CircleArc {
            center,
            radius,
            arc: [0.0, TAU],
        }
    }

    fn sweep(&self) -> f64 {
        self.arc[1] - self.arc[0]
    }

    fn is_full(&self) -> bool {
        (self.sweep().abs() - TAU).abs() <= 1e-12
    }

    fn angle(&self, x: [f64; 2]) -> f64 {
        self.arc[0] + self.sweep() * x[0]
    }

    /// Parameter of the angle `theta`, or `None` when outside the closed arc.
    fn param_of_angle(&self, theta: f64) -> Option<f64> {
        let sweep = self.sweep();
        let rel = if sweep > 0.0 {
            (theta - self.arc[0]).rem_euclid(TAU)
        } else {
            (self.arc[0] - theta).rem_euclid(TAU)
        };
        let x = rel / sweep.abs();
        let slack = 1e-12;
        if self.is_full() {
            Some(x.min(1.0 - f64::EPSILON))
        } else if x <= 1.0 + slack {
            Some(x.min(1.0))
        } else if (rel - TAU) / sweep.abs() >= -slack {
            Some(0.0)
        } else {
            None
        }
    }
}

impl Surface for CircleArc {
    fn space_dim(&self) -> usize {
        2
    }

    fn domain(&self) -> ParamDomain {
        ParamDomain::unit(1, [self.is_full(), false])
    }

    fn map(&self, x: [f64; 2]) -> Point {
        let t = self.angle(x);
        self.center + Vector::new2(t.cos(), t.sin()) * self.radius
    }

    fn jacobian(&self, x: [f64; 2]) -> [Vector; 2] {
        let t = self.angle(x);
        let k = self.radius * self.sweep();
        [Vector::new2(-t.sin() * k, t.cos() * k), Vector::zeros(2)]
    }

    fn vector(&self, x: [f64; 2]) -> UnitVector {
        let t = self.angle(x);
        UnitVector::normalized(Vector::new2(t.cos(), t.sin())).expect("unit circle point")
    }

    fn segment_hits(&self, a: &Point, b: &Point) -> Vec<SurfaceHit> {
        sphere_roots(&self.center, self.radius, a, b)
            .into_iter()
            .filter_map(|lambda| {
                let p = *a + (*b - *a) * lambda;
                let q = p - self.center;
                let x = self.param_of_angle(q.y().atan2(q.x()))?;
                Some(SurfaceHit {
                    lambda,
                    param: [x, 0.0],
                })
            })
            .collect()
    }

    fn closest(&self, u: &Point) -> ([f64; 2], f64) {
        let q = *u - self.center;
        let theta = q.y().atan2(q.x());
        let x = match self.param_of_angle(theta) {
            Some(x) => x,
            None => {
                // Nearest arc endpoint.
                let d0 = self.map([0.0, 0.0]).distance(u);
                let d1 = self.map([1.0, 0.0]).distance(u);
                if d0 <= d1 {
                    0.0
                } else {
                    1.0
                }
            }
        };
        let x = [x, 0.0];
        (x, self.map(x).distance(u))
    }
}

/// Spherical cap around the +z axis: polar angle `theta = cap * x0` in
/// (0, cap), azimuth `phi = 2 pi x1` (periodic). `cap = pi` is the full sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Point,
    pub radius: f64,
    /// Polar opening angle; the whole sphere when omitted.
    #[serde(default = "half_turn")]
    pub cap: f64,
}

impl Sphere {
    fn angles(&self, x: [f64; 2]) -> (f64, f64) {
        (self.cap * x[0], TAU * x[1])
    }
}

impl Surface for Sphere {
    fn space_dim(&self) -> usize {
        3
    }

    fn domain(&self) -> ParamDomain {
        ParamDomain::unit(2, [false, true])
    }

    fn map(&self, x: [f64; 2]) -> Point {
        let (t, p) = self.angles(x);
        self.center + Vector::new3(t.sin() * p.cos(), t.sin() * p.sin(), t.cos()) * self.radius
    }

    fn jacobian(&self, x: [f64; 2]) -> [Vector; 2] {
        let (t, p) = self.angles(x);
        let r = self.radius;
        [
            Vector::new3(t.cos() * p.cos(), t.cos() * p.sin(), -t.sin()) * (r * self.cap),
            Vector::new3(-t.sin() * p.sin(), t.sin() * p.cos(), 0.0) * (r * TAU),
        ]
    }

    fn vector(&self, x: [f64; 2]) -> UnitVector {
        let (t, p) = self.angles(x);
        UnitVector::normalized(Vector::new3(t.sin() * p.cos(), t.sin() * p.sin(), t.cos()))
            .expect("unit sphere point")
    }

    fn segment_hits(&self, a: &Point, b: &Point) -> Vec<SurfaceHit> {
        sphere_roots(&self.center, self.radius, a, b)
            .into_iter()
            .filter_map(|lambda| {
                let q = (*a + (*b - *a) * lambda) - self.center;
                let (theta, phi) = polar_angles(&q);
                (theta <= self.cap + 1e-12).then(|| SurfaceHit {
                    lambda,
                    param: [(theta / self.cap).min(1.0), phi / TAU],
                })
            })
            .collect()
    }

    fn closest(&self, u: &Point) -> ([f64; 2], f64) {
        let q = *u - self.center;
        let (theta, phi) = polar_angles(&q);
        let x = [(theta / self.cap).min(1.0), phi / TAU];
        (x, self.map(x).distance(u))
    }
}

fn polar_angles(q: &Vector) -> (f64, f64) {
    let r = q.norm();
    let theta = if r > 0.0 {
        (q.z() / r).clamp(-1.0, 1.0).acos()
    } else {
        0.0
    };
    let phi = q.y().atan2(q.x()).rem_euclid(TAU);
    (theta, phi)
}

/// Lateral surface of a finite circular cylinder. `phi = 2 pi x0` (periodic),
/// height `h = height * x1`. The vector field points radially.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    /// Center of the base disc.
    pub base: Point,
    pub axis: UnitVector,
    pub radius: f64,
    pub height: f64,
}

impl Cylinder {
    fn frame(&self) -> (Vector, Vector) {
        let a = self.axis.as_vector();
        let helper = if a.x().abs() < 0.9 {
            Vector::new3(1.0, 0.0, 0.0)
        } else {
            Vector::new3(0.0, 1.0, 0.0)
        };
        let e1 = a.cross(&helper).normalize().expect("non-parallel helper");
        let e2 = a.cross(&e1);
        (e1.as_vector(), e2)
    }
}

impl Surface for Cylinder {
    fn space_dim(&self) -> usize {
        3
    }

    fn domain(&self) -> ParamDomain {
        ParamDomain::unit(2, [true, false])
    }

    fn map(&self, x: [f64; 2]) -> Point {
        let (e1, e2) = self.frame();
        let p = TAU * x[0];
        self.base
            + (e1 * p.cos() + e2 * p.sin()) * self.radius
            + self.axis.as_vector() * (self.height * x[1])
    }

    fn jacobian(&self, x: [f64; 2]) -> [Vector; 2] {
        let (e1, e2) = self.frame();
        let p = TAU * x[0];
        [
            (e2 * p.cos() - e1 * p.sin()) * (self.radius * TAU),
            self.axis.as_vector() * self.height,
        ]
    }

    fn vector(&self, x: [f64; 2]) -> UnitVector {
        let (e1, e2) = self.frame();
        let p = TAU * x[0];
        UnitVector::normalized(e1 * p.cos() + e2 * p.sin()).expect("unit radial")
    }

    fn segment_hits(&self, a: &Point, b: &Point) -> Vec<SurfaceHit> {
        let axis = self.axis.as_vector();
        let (e1, e2) = self.frame();
        let d = *b - *a;
        let w = *a - self.base;
        let wp = w - axis * w.dot(&axis);
        let dp = d - axis * d.dot(&axis);
        quadratic_unit_roots(
            dp.dot(&dp),
            2.0 * wp.dot(&dp),
            wp.dot(&wp) - self.radius.powi(2),
        )
        .into_iter()
        .filter_map(|lambda| {
            let q = w + d * lambda;
            let h = q.dot(&axis);
            if h < -1e-12 || h > self.height + 1e-12 {
                return None;
            }
            let phi = q.dot(&e2).atan2(q.dot(&e1)).rem_euclid(TAU);
            Some(SurfaceHit {
                lambda,
                param: [phi / TAU, (h / self.height).clamp(0.0, 1.0)],
            })
        })
        .collect()
    }

    fn closest(&self, u: &Point) -> ([f64; 2], f64) {
        let axis = self.axis.as_vector();
        let (e1, e2) = self.frame();
        let q = *u - self.base;
        let phi = q.dot(&e2).atan2(q.dot(&e1)).rem_euclid(TAU);
        let h = q.dot(&axis).clamp(0.0, self.height);
        let x = [phi / TAU, h / self.height];
        (x, self.map(x).distance(u))
    }
}

/// Roots in `[0, 1]` of `|a + lambda (b - a) - c|^2 = r^2`.
fn sphere_roots(c: &Point, r: f64, a: &Point, b: &Point) -> Vec<f64> {
    let d = *b - *a;
    let w = *a - *c;
    quadratic_unit_roots(d.dot(&d), 2.0 * w.dot(&d), w.dot(&w) - r * r)
}

fn quadratic_unit_roots(qa: f64, qb: f64, qc: f64) -> Vec<f64> {
    if qa <= 0.0 {
        return Vec::new();
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // Numerically stable pair of roots.
    let q = -0.5 * (qb + qb.signum() * sq);
    let mut roots = if q != 0.0 {
        vec![q / qa, qc / q]
    } else {
        vec![-qb / (2.0 * qa)]
    };
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots.retain(|l| (0.0..=1.0).contains(l));
    roots
}

/// One factor of a [`Term`] along a parameter axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigFactor {
    #[default]
    None,
    Sin(f64),
    Cos(f64),
}

impl TrigFactor {
    fn eval(&self, x: f64) -> (f64, f64) {
        match *self {
            TrigFactor::None => (1.0, 0.0),
            TrigFactor::Sin(w) => ((w * x).sin(), w * (w * x).cos()),
            TrigFactor::Cos(w) => ((w * x).cos(), -w * (w * x).sin()),
        }
    }
}

/// `coef * prod_j x_j^pow_j * trig_j(x_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    #[serde(default)]
    pub pow: Vec<u32>,
    #[serde(default)]
    pub trig: Vec<TrigFactor>,
}

impl Term {
    fn factor(&self, axis: usize, x: f64) -> (f64, f64) {
        let a = self.pow.get(axis).copied().unwrap_or(0);
        let (t, dt) = self.trig.get(axis).copied().unwrap_or_default().eval(x);
        let (m, dm) = match a {
            0 => (1.0, 0.0),
            _ => (x.powi(a as i32), a as f64 * x.powi(a as i32 - 1)),
        };
        (m * t, dm * t + m * dt)
    }

    fn eval(&self, x: [f64; 2], p: usize) -> (f64, [f64; 2]) {
        let f: Vec<(f64, f64)> = (0..p).map(|i| self.factor(i, x[i])).collect();
        let value = self.coef * f.iter().map(|v| v.0).product::<f64>();
        let mut grad = [0.0; 2];
        for (i, g) in grad.iter_mut().enumerate().take(p) {
            *g = self.coef
                * f.iter()
                    .enumerate()
                    .map(|(j, v)| if i == j { v.1 } else { v.0 })
                    .product::<f64>();
        }
        (value, grad)
    }
}

/// A patch whose coordinates are sums of polynomial-trigonometric terms.
///
/// The vector field is the unit normal derived from the exact derivative of
/// the tables (quarter turn of the tangent in 2D, cross product in 3D),
/// optionally negated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPatch {
    /// Open parameter box; `lo.len() == hi.len() == N - 1`.
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// One term list per output coordinate.
    pub coords: Vec<Vec<Term>>,
    #[serde(default)]
    pub flip_normal: bool,
}

impl ParamPatch {
    fn p(&self) -> usize {
        self.lo.len()
    }

    fn eval(&self, x: [f64; 2]) -> (Point, [Vector; 2]) {
        let p = self.p();
        let mut v = [0.0; 3];
        let mut g = [[0.0; 3]; 2];
        for (k, terms) in self.coords.iter().enumerate() {
            for t in terms {
                let (val, grad) = t.eval(x, p);
                v[k] += val;
                g[0][k] += grad[0];
                g[1][k] += grad[1];
            }
        }
        let mk = |c: [f64; 3]| {
            if self.coords.len() == 2 {
                Vector::new2(c[0], c[1])
            } else {
                Vector::new3(c[0], c[1], c[2])
            }
        };
        (mk(v), [mk(g[0]), mk(g[1])])
    }
}

impl Surface for ParamPatch {
    fn space_dim(&self) -> usize {
        self.coords.len()
    }

    fn domain(&self) -> ParamDomain {
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        lo[..self.p()].copy_from_slice(&self.lo);
        hi[..self.p()].copy_from_slice(&self.hi);
        ParamDomain {
            dim: self.p(),
            lo,
            hi,
            periodic: [false; 2],
        }
    }

    fn map(&self, x: [f64; 2]) -> Point {
        self.eval(x).0
    }

    fn jacobian(&self, x: [f64; 2]) -> [Vector; 2] {
        self.eval(x).1
    }

    fn vector(&self, x: [f64; 2]) -> UnitVector {
        let j = self.jacobian(x);
        let n = if self.space_dim() == 2 {
            j[0].perp()
        } else {
            j[0].cross(&j[1])
        };
        let n = n.normalize().unwrap_or_else(|| {
            UnitVector::new(if self.space_dim() == 2 {
                Vector::new2(0.0, 1.0)
            } else {
                Vector::new3(0.0, 0.0, 1.0)
            })
            .expect("axis is unit")
        });
        if self.flip_normal {
            -n
        } else {
            n
        }
    }
}

/// Geometry of a curved patch.
#[derive(Debug, Clone)]
pub enum PatchShape {
    Circle(CircleArc),
    Sphere(Sphere),
    Cylinder(Cylinder),
    Param(ParamPatch),
    /// Library-supplied surface; not representable in scene files.
    Custom(Arc<dyn Surface>),
}

impl PartialEq for PatchShape {
    fn eq(&self, other: &Self) -> bool {
        use PatchShape::*;
        match (self, other) {
            (Circle(a), Circle(b)) => a == b,
            (Sphere(a), Sphere(b)) => a == b,
            (Cylinder(a), Cylinder(b)) => a == b,
            (Param(a), Param(b)) => a == b,
            (Custom(a), Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl PatchShape {
    pub fn surface(&self) -> &dyn Surface {
        match self {
            PatchShape::Circle(s) => s,
            PatchShape::Sphere(s) => s,
            PatchShape::Cylinder(s) => s,
            PatchShape::Param(s) => s,
            PatchShape::Custom(s) => s.as_ref(),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{what} must be positive"))
            }
        };
        match self {
            PatchShape::Circle(c) => {
                c.center.check_dim(2).map_err(|e| e.to_string())?;
                positive(c.radius, "radius")?;
                let sweep = c.sweep();
                if sweep == 0.0 || sweep.abs() > TAU + 1e-12 || !sweep.is_finite() {
                    return Err("arc must span (0, 2 pi] radians".into());
                }
            }
            PatchShape::Sphere(s) => {
                s.center.check_dim(3).map_err(|e| e.to_string())?;
                positive(s.radius, "radius")?;
                if !(s.cap > 0.0 && s.cap <= PI) {
                    return Err("cap must lie in (0, pi]".into());
                }
            }
            PatchShape::Cylinder(c) => {
                c.base.check_dim(3).map_err(|e| e.to_string())?;
                if c.axis.dim() != 3 {
                    return Err("axis must be 3D".into());
                }
                positive(c.radius, "radius")?;
                positive(c.height, "height")?;
            }
            PatchShape::Param(p) => {
                let n = p.coords.len();
                if n != 2 && n != 3 {
                    return Err("coords must have 2 or 3 entries".into());
                }
                if p.lo.len() != n - 1 || p.hi.len() != n - 1 {
                    return Err(format!("lo/hi must have {} entries", n - 1));
                }
                if p.lo
                    .iter()
                    .zip(&p.hi)
                    .any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite())
                {
                    return Err("parameter box must satisfy lo < hi".into());
                }
                for t in p.coords.iter().flatten() {
                    if !t.coef.is_finite() || t.pow.len() > n - 1 || t.trig.len() > n - 1 {
                        return Err(
                            "term is not finite or has more pow/trig entries than parameters"
                                .into(),
                        );
                    }
                }
            }
            PatchShape::Custom(s) => {
                if s.param_dim() + 1 != s.space_dim() {
                    return Err("custom surfaces must be hypersurfaces".into());
                }
            }
        }
        Ok(())
    }
}

/// A curved reflecting element.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvedPatch {
    pub id: ElementId,
    pub shape: PatchShape,
    /// Retained-amplitude factor in [0, 1].
    pub absorption: f64,
    /// Per-patch lattice density override.
    pub lattice_m: Option<usize>,
}

impl CurvedPatch {
    pub fn new(id: ElementId, shape: PatchShape, absorption: f64) -> Result<Self> {
        shape
            .validate()
            .map_err(|m| Error::validation(format!("patches[id={id}]"), m))?;
        if !(0.0..=1.0).contains(&absorption) {
            return Err(Error::validation(
                format!("patches[id={id}]"),
                "absorption must lie in [0, 1]",
            ));
        }
        Ok(CurvedPatch {
            id,
            shape,
            absorption,
            lattice_m: None,
        })
    }

    pub fn surface(&self) -> &dyn Surface {
        self.shape.surface()
    }

    pub fn dim(&self) -> usize {
        self.surface().space_dim()
    }
}

/// Closed lattice used for numeric intersection and projection of generic
/// surfaces.
fn coarse_grid(s: &(impl Surface + ?Sized), per_axis: usize) -> Vec<[f64; 2]> {
    let dom = s.domain();
    let axis = |i: usize| -> Vec<f64> {
        if i >= dom.dim {
            return vec![0.0];
        }
        (0..=per_axis)
            .map(|k| dom.lo[i] + dom.width(i) * k as f64 / per_axis as f64)
            .collect()
    };
    let (a0, a1) = (axis(0), axis(1));
    a1.iter()
        .flat_map(|&y| a0.iter().map(move |&x| [x, y]))
        .collect()
}

fn numeric_closest(s: &(impl Surface + ?Sized), u: &Point) -> ([f64; 2], f64) {
    let per_axis = if s.param_dim() == 1 { 256 } else { 64 };
    let mut best = [0.0; 2];
    let mut best_d = f64::INFINITY;
    for x in coarse_grid(s, per_axis) {
        let d = s.map(x).distance(u);
        if d < best_d {
            best_d = d;
            best = x;
        }
    }
    let dom = s.domain();
    let p = s.param_dim();
    let mut x = best;
    for _ in 0..50 {
        let r = *u - s.map(x);
        let j = s.jacobian(x);
        let step = solve_normal_equations(&j[..p], &r);
        let mut next = x;
        for i in 0..p {
            next[i] += step[i];
        }
        let next = dom.normalize(next);
        let moved = (0..p).map(|i| (next[i] - x[i]).abs()).fold(0.0, f64::max);
        x = next;
        if moved < 1e-15 {
            break;
        }
    }
    let d = s.map(x).distance(u);
    if d <= best_d {
        (x, d)
    } else {
        (best, best_d)
    }
}

/// Least-squares step `argmin |J dx - r|` for at most two columns.
pub(crate) fn solve_normal_equations(cols: &[Vector], r: &Vector) -> [f64; 2] {
    match cols.len() {
        1 => {
            let a = cols[0].dot(&cols[0]);
            if a > 0.0 {
                [cols[0].dot(r) / a, 0.0]
            } else {
                [0.0; 2]
            }
        }
        _ => {
            let (a, b, c) = (
                cols[0].dot(&cols[0]),
                cols[0].dot(&cols[1]),
                cols[1].dot(&cols[1]),
            );
            let (r0, r1) = (cols[0].dot(r), cols[1].dot(r));
            let det = a * c - b * b;
            if det.abs() <= 1e-300 {
                return [0.0; 2];
            }
            [(c * r0 - b * r1) / det, (a * r1 - b * r0) / det]
        }
    }
}

fn mesh_segment_hits(s: &(impl Surface + ?Sized), a: &Point, b: &Point) -> Vec<SurfaceHit> {
    let dom = s.domain();
    let p = s.param_dim();
    let d = *b - *a;
    let mut hits = Vec::new();
    if p == 1 {
        let k = 512;
        let xs: Vec<f64> = (0..=k)
            .map(|i| dom.lo[0] + dom.width(0) * i as f64 / k as f64)
            .collect();
        let pts: Vec<Point> = xs.iter().map(|&x| s.map([x, 0.0])).collect();
        for i in 0..k {
            if let Some((lambda, t)) = segment_segment_2d(a, &d, &pts[i], &(pts[i + 1] - pts[i])) {
                let x0 = [xs[i] + t * (xs[i + 1] - xs[i]), 0.0];
                hits.push(refine_hit(s, a, &d, lambda, x0));
            }
        }
    } else {
        let k = 96;
        let grid = coarse_grid(s, k);
        let pts: Vec<Point> = grid.iter().map(|&x| s.map(x)).collect();
        let idx = |i: usize, j: usize| j * (k + 1) + i;
        for j in 0..k {
            for i in 0..k {
                let quad = [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)];
                for tri in [[quad[0], quad[1], quad[2]], [quad[0], quad[2], quad[3]]] {
                    let [p0, p1, p2] = tri.map(|t| pts[t]);
                    if let Some((lambda, u, v)) = segment_triangle(a, &d, &p0, &p1, &p2) {
                        let g = tri.map(|t| grid[t]);
                        let x0 = [
                            g[0][0] + u * (g[1][0] - g[0][0]) + v * (g[2][0] - g[0][0]),
                            g[0][1] + u * (g[1][1] - g[0][1]) + v * (g[2][1] - g[0][1]),
                        ];
                        hits.push(refine_hit(s, a, &d, lambda, x0));
                    }
                }
            }
        }
    }
    hits.retain(|h| (0.0..=1.0).contains(&h.lambda));
    hits.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
    hits.dedup_by(|x, y| (x.lambda - y.lambda).abs() < 1e-12);
    hits
}

/// Newton refinement of `map(x) = a + lambda d` from a mesh estimate.
fn refine_hit(
    s: &(impl Surface + ?Sized),
    a: &Point,
    d: &Vector,
    lambda0: f64,
    x0: [f64; 2],
) -> SurfaceHit {
    let dom = s.domain();
    let p = s.param_dim();
    let (mut x, mut lambda) = (x0, lambda0);
    for _ in 0..30 {
        let f = s.map(x) - (*a + *d * lambda);
        if f.norm() < 1e-14 {
            break;
        }
        let j = s.jacobian(x);
        // Square system [J | -d] [dx; dl] = -f.
        let cols: Vec<Vector> = j[..p].iter().copied().chain([-*d]).collect();
        let Some(step) = solve_square(&cols, &(-f)) else {
            break;
        };
        for i in 0..p {
            x[i] += step[i];
        }
        lambda += step[p];
        x = dom.normalize(x);
    }
    SurfaceHit { lambda, param: x }
}

fn solve_square(cols: &[Vector], rhs: &Vector) -> Option<Vec<f64>> {
    let n = cols.len();
    let a = nalgebra::DMatrix::from_fn(n, n, |r, c| cols[c].get(r));
    let b = nalgebra::DVector::from_fn(n, |r, _| rhs.get(r));
    a.lu().solve(&b).map(|x| x.iter().copied().collect())
}

fn segment_segment_2d(a: &Point, d: &Vector, p: &Point, e: &Vector) -> Option<(f64, f64)> {
    let denom = d.x() * e.y() - d.y() * e.x();
    if denom.abs() < 1e-300 {
        return None;
    }
    let w = *p - *a;
    let lambda = (w.x() * e.y() - w.y() * e.x()) / denom;
    let t = (w.x() * d.y() - w.y() * d.x()) / denom;
    let slack = 1e-9;
    ((-slack..=1.0 + slack).contains(&lambda) && (-slack..=1.0 + slack).contains(&t))
        .then_some((lambda, t))
}

/// Moller-Trumbore with a small slack on the barycentric bounds.
fn segment_triangle(
    a: &Point,
    d: &Vector,
    p0: &Point,
    p1: &Point,
    p2: &Point,
) -> Option<(f64, f64, f64)> {
    let e1 = *p1 - *p0;
    let e2 = *p2 - *p0;
    let h = d.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = *a - *p0;
    let u = inv * s.dot(&h);
    let q = s.cross(&e1);
    let v = inv * d.dot(&q);
    let lambda = inv * e2.dot(&q);
    let slack = 1e-9;
    (u >= -slack && v >= -slack && u + v <= 1.0 + slack && (-slack..=1.0 + slack).contains(&lambda))
        .then_some((lambda, u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parabola() -> ParamPatch {
        // y = x^2 on (-1, 1).
        ParamPatch {
            lo: vec![-1.0],
            hi: vec![1.0],
            coords: vec![
                vec![Term {
                    coef: 1.0,
                    pow: vec![1],
                    trig: vec![],
                }],
                vec![Term {
                    coef: 1.0,
                    pow: vec![2],
                    trig: vec![],
                }],
            ],
            flip_normal: false,
        }
    }

    #[test]
    fn circle_map_and_vector() {
        let c = CircleArc::full(Vector::new2(1.0, 2.0), 2.0);
        let p = c.map([0.25, 0.0]);
        assert!(p.distance(&Vector::new2(1.0, 4.0)) < 1e-14);
        assert!(c.vector([0.25, 0.0]).distance(&Vector::new2(0.0, 1.0)) < 1e-15);
        assert!((jacobian_measure(&c, [0.3, 0.0]) - 2.0 * TAU).abs() < 1e-12);
        assert!(c.domain().periodic[0]);
    }

    #[test]
    fn circle_segment_hits() {
        let c = CircleArc::full(Vector::new2(0.0, 0.0), 1.0);
        let hits = c.segment_hits(&Vector::new2(-2.0, 0.0), &Vector::new2(2.0, 0.0));
        assert_eq!(hits.len(), 2);
        assert!((hits[0].lambda - 0.25).abs() < 1e-15);
        assert!((hits[0].param[0] - 0.5).abs() < 1e-15);
        let arc = CircleArc {
            center: Vector::new2(0.0, 0.0),
            radius: 1.0,
            arc: [-0.5, 0.5],
        };
        let hits = arc.segment_hits(&Vector::new2(-2.0, 0.0), &Vector::new2(2.0, 0.0));
        assert_eq!(hits.len(), 1);
        assert!((hits[0].param[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sphere_and_cylinder_hits() {
        let s = Sphere {
            center: Vector::new3(0.0, 0.0, 0.0),
            radius: 1.0,
            cap: PI / 2.0,
        };
        let hits = s.segment_hits(&Vector::new3(0.0, 0.0, -2.0), &Vector::new3(0.0, 0.0, 2.0));
        // Only the upper hemisphere exists.
        assert_eq!(hits.len(), 1);
        assert!((hits[0].lambda - 0.75).abs() < 1e-14);
        let cyl = Cylinder {
            base: Vector::new3(0.0, 0.0, 0.0),
            axis: UnitVector::new3(0.0, 0.0, 1.0).unwrap(),
            radius: 1.0,
            height: 2.0,
        };
        let hits = cyl.segment_hits(&Vector::new3(-2.0, 0.0, 1.0), &Vector::new3(2.0, 0.0, 1.0));
        assert_eq!(hits.len(), 2);
        for h in &hits {
            assert!(
                cyl.map(h.param)
                    .distance(&Vector::new3(-2.0 + 4.0 * h.lambda, 0.0, 1.0))
                    < 1e-12
            );
        }
        let above = cyl.segment_hits(&Vector::new3(-2.0, 0.0, 3.0), &Vector::new3(2.0, 0.0, 3.0));
        assert!(above.is_empty());
    }

    #[test]
    fn param_patch_derivatives_match_finite_differences() {
        let p = ParamPatch {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
            coords: vec![
                vec![Term {
                    coef: 2.0,
                    pow: vec![1, 0],
                    trig: vec![],
                }],
                vec![Term {
                    coef: 1.0,
                    pow: vec![0, 1],
                    trig: vec![TrigFactor::None, TrigFactor::Cos(1.5)],
                }],
                vec![Term {
                    coef: 0.5,
                    pow: vec![2, 1],
                    trig: vec![TrigFactor::Sin(3.0)],
                }],
            ],
            flip_normal: false,
        };
        let x = [0.3, 0.7];
        let j = p.jacobian(x);
        let h = 1e-6;
        for axis in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            let fd = (p.map(xp) - p.map(xm)) * (0.5 / h);
            assert!((fd - j[axis]).norm() < 1e-8, "axis {axis}");
        }
    }

    #[test]
    fn param_mesh_hits_are_refined_onto_surface() {
        let p = parabola();
        let a = Vector::new2(0.5, -1.0);
        let b = Vector::new2(0.5, 2.0);
        let hits = p.segment_hits(&a, &b);
        assert_eq!(hits.len(), 1);
        assert!((hits[0].param[0] - 0.5).abs() < 1e-12);
        assert!((hits[0].lambda - 1.25 / 3.0).abs() < 1e-12);
        let n = p.vector([0.0, 0.0]);
        assert!(n.distance(&Vector::new2(0.0, 1.0)) < 1e-15);
    }

    #[test]
    fn closest_points() {
        let p = parabola();
        let (x, d) = p.closest(&Vector::new2(0.5, 0.25));
        assert!((x[0] - 0.5).abs() < 1e-10 && d < 1e-10);
        let c = CircleArc::full(Vector::new2(0.0, 0.0), 2.0);
        let (_, d) = c.closest(&Vector::new2(0.0, 3.0));
        assert!((d - 1.0).abs() < 1e-14);
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        let bad = PatchShape::Circle(CircleArc {
            center: Vector::new2(0.0, 0.0),
            radius: -1.0,
            arc: [0.0, 1.0],
        });
        assert!(CurvedPatch::new(0, bad, 1.0).is_err());
        let bad_box = PatchShape::Param(ParamPatch {
            lo: vec![1.0],
            hi: vec![0.0],
            ..parabola()
        });
        assert!(CurvedPatch::new(0, bad_box, 1.0).is_err());
    }
}
