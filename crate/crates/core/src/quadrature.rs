//! Lattice sampling of curved patches and nearest-neighbour quadrature
//! weights for the Hausdorff measure of the mapped set.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{jacobian_measure, CurvedPatch, ElementId, Point, UnitVector};

/// Two mapped samples closer than this violate injectivity.
pub const INJECTIVITY_TOL: f64 = 1e-9;
/// Jacobian measures at or below this count as rank deficient.
pub const RANK_TOL: f64 = 1e-12;

/// How a sample's nearest-neighbour distance `eps` becomes a weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightConvention {
    /// `eps^p`: on a uniform segment this is the lattice spacing `1/M`.
    #[default]
    Spacing,
    /// Volume of the `p`-ball of radius `eps`: `2 eps` for curves, `pi eps^2`
    /// for surfaces.
    BallVolume,
}

impl WeightConvention {
    pub fn weight(&self, eps: f64, p: usize) -> f64 {
        match (self, p) {
            (_, 0) => 1.0,
            (WeightConvention::Spacing, p) => eps.powi(p as i32),
            (WeightConvention::BallVolume, 1) => 2.0 * eps,
            (WeightConvention::BallVolume, 2) => PI * eps * eps,
            (WeightConvention::BallVolume, p) => {
                // V_p(r) = pi^(p/2) / Gamma(p/2 + 1) r^p; only p <= 2 occurs.
                let gamma = if p % 2 == 0 {
                    (1..=p / 2).map(|k| k as f64).product::<f64>()
                } else {
                    (0..=p / 2).map(|k| k as f64 + 0.5).product::<f64>() * PI.sqrt()
                };
                PI.powf(p as f64 / 2.0) / gamma * eps.powi(p as i32)
            }
        }
    }
}

impl fmt::Display for WeightConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightConvention::Spacing => "spacing",
            WeightConvention::BallVolume => "ball_volume",
        })
    }
}

impl FromStr for WeightConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spacing" => Ok(WeightConvention::Spacing),
            "ball_volume" => Ok(WeightConvention::BallVolume),
            _ => Err(Error::Config(format!(
                "unknown weight convention `{s}` (expected spacing or ball_volume)"
            ))),
        }
    }
}

/// One lattice sample of a patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Integer lattice coordinates, counted from the first sample on each axis.
    pub index: [usize; 2],
    pub param: [f64; 2],
    pub point: Point,
    pub vector: UnitVector,
    /// Distance to the nearest other mapped sample.
    pub eps: f64,
    pub weight: f64,
}

/// Samples of a patch on the lattice of spacing `1 / M` inside its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSampling {
    pub patch_id: ElementId,
    pub spacing: f64,
    /// Parameter dimension.
    pub p: usize,
    /// Samples per axis; `samples` is ordered with axis 0 fastest.
    pub counts: [usize; 2],
    pub periodic: [bool; 2],
    pub samples: Vec<Sample>,
}

impl LatticeSampling {
    pub fn flat_index(&self, index: [usize; 2]) -> usize {
        index[1] * self.counts[0] + index[0]
    }

    /// Flat indices of the lattice neighbours of `index` (8-neighbourhood in
    /// two parameters), wrapping periodic axes.
    pub fn neighbors(&self, index: [usize; 2]) -> Vec<usize> {
        let step = |axis: usize, d: i64| -> Option<usize> {
            let n = self.counts[axis] as i64;
            let j = index[axis] as i64 + d;
            if self.periodic[axis] {
                Some(j.rem_euclid(n) as usize)
            } else {
                (0..n).contains(&j).then_some(j as usize)
            }
        };
        let d1: &[i64] = if self.p == 2 { &[-1, 0, 1] } else { &[0] };
        let mut out = Vec::with_capacity(8);
        for &b in d1 {
            for a in [-1i64, 0, 1] {
                if a == 0 && b == 0 {
                    continue;
                }
                if let (Some(i), Some(j)) = (step(0, a), step(1, b)) {
                    let f = self.flat_index([i, j]);
                    if !out.contains(&f) {
                        out.push(f);
                    }
                }
            }
        }
        let own = self.flat_index(index);
        out.retain(|&f| f != own);
        out
    }

    /// `sum g(point) * weight`.
    pub fn integrate(&self, g: impl Fn(&Point) -> f64) -> f64 {
        self.samples.iter().map(|s| g(&s.point) * s.weight).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.samples.iter().map(|s| s.weight).sum()
    }
}

/// Lattice coordinates `lo + k / M` on one axis: strictly inside the open
/// interval, or one full period on a periodic axis.
fn axis_lattice(lo: f64, hi: f64, m: usize, periodic: bool) -> Vec<f64> {
    let h = 1.0 / m as f64;
    if periodic {
        let n = ((hi - lo) * m as f64).round() as usize;
        return (0..n).map(|k| lo + k as f64 * h).collect();
    }
    let first = (lo * m as f64).floor() as i64 + 1;
    let last = (hi * m as f64).ceil() as i64 - 1;
    (first..=last)
        .map(|k| k as f64 * h)
        .filter(|&x| x > lo && x < hi)
        .collect()
}

fn lattice_params(patch: &CurvedPatch, m: usize) -> (Vec<[usize; 2]>, Vec<[f64; 2]>, [usize; 2]) {
    let dom = patch.surface().domain();
    let a0 = axis_lattice(dom.lo[0], dom.hi[0], m, dom.periodic[0]);
    let a1 = if dom.dim == 2 {
        axis_lattice(dom.lo[1], dom.hi[1], m, dom.periodic[1])
    } else {
        vec![0.0]
    };
    let mut idx = Vec::with_capacity(a0.len() * a1.len());
    let mut params = Vec::with_capacity(a0.len() * a1.len());
    for (j, &y) in a1.iter().enumerate() {
        for (i, &x) in a0.iter().enumerate() {
            idx.push([i, j]);
            params.push([x, y]);
        }
    }
    (idx, params, [a0.len(), a1.len()])
}

/// Samples `patch` on the lattice of spacing `1 / M` and weights every
/// sample by its nearest-neighbour distance among the mapped samples.
///
/// Errors when two samples map within [`INJECTIVITY_TOL`] of each other or
/// when the Jacobian degenerates at a sample.
pub fn sample_patch(
    patch: &CurvedPatch,
    m: usize,
    convention: WeightConvention,
) -> Result<LatticeSampling> {
    if m < 2 {
        return Err(Error::Config(format!(
            "lattice M must be at least 2, got {m}"
        )));
    }
    let surface = patch.surface();
    let p = surface.param_dim();
    let dom = surface.domain();
    let (idx, params, counts) = lattice_params(patch, m);
    if let Some(k) = params
        .iter()
        .position(|&x| jacobian_measure(surface, x) <= RANK_TOL)
    {
        return Err(Error::RankDeficient {
            patch: patch.id,
            sample: k,
        });
    }
    let points: Vec<Point> = params.par_iter().map(|&x| surface.map(x)).collect();
    let nn = nearest_neighbors(&points);
    let mut samples = Vec::with_capacity(points.len());
    for (k, ((index, param), point)) in idx.into_iter().zip(params).zip(points).enumerate() {
        let (eps, other) = nn[k];
        if eps <= INJECTIVITY_TOL {
            return Err(Error::InjectivityViolation {
                patch: patch.id,
                a: k.min(other),
                b: k.max(other),
            });
        }
        samples.push(Sample {
            index,
            param,
            point,
            vector: surface.vector(param),
            eps,
            weight: convention.weight(eps, p),
        });
    }
    Ok(LatticeSampling {
        patch_id: patch.id,
        spacing: 1.0 / m as f64,
        p,
        counts,
        periodic: dom.periodic,
        samples,
    })
}

/// Riemann sum `sum g(Phi(x)) J(x) (1/M)^p` over the same lattice as
/// [`sample_patch`]; the reference value for `int g dH^p` on the patch.
pub fn riemann_reference(patch: &CurvedPatch, g: impl Fn(&Point) -> f64 + Sync, m: usize) -> f64 {
    let s = patch.surface();
    let (_, params, _) = lattice_params(patch, m);
    let cell = (1.0 / m as f64).powi(s.param_dim() as i32);
    params
        .par_iter()
        .map(|&x| g(&s.map(x)) * jacobian_measure(s, x) * cell)
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// For every point, the distance to and index of its nearest other point.
///
/// Uses a uniform grid sized so that occupied cells hold a few points on a
/// curve or surface. A single point gets `(inf, itself)`.
pub fn nearest_neighbors(points: &[Point]) -> Vec<(f64, usize)> {
    let n = points.len();
    if n < 2 {
        return (0..n).map(|i| (f64::INFINITY, i)).collect();
    }
    let dim = points[0].dim();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for a in 0..dim {
            lo[a] = lo[a].min(p.get(a));
            hi[a] = hi[a].max(p.get(a));
        }
    }
    let extent = (0..dim).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    if extent == 0.0 {
        return (0..n).map(|i| (0.0, if i == 0 { 1 } else { 0 })).collect();
    }
    // Points lie on a manifold of dimension at most dim - 1.
    let h = extent / (n as f64).powf(1.0 / (dim as f64 - 1.0)).max(1.0);
    let cell_of = |p: &Point| -> [i64; 3] {
        let mut c = [0i64; 3];
        for a in 0..dim {
            c[a] = ((p.get(a) - lo[a]) / h).floor() as i64;
        }
        c
    };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell_of(p)).or_default().push(i);
    }
    let max_ring = (extent / h).ceil() as i64 + 1;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let c = cell_of(&points[i]);
            let mut best = (f64::INFINITY, i);
            for ring in 0..=max_ring {
                for cell in ring_cells(c, ring, dim) {
                    if let Some(list) = grid.get(&cell) {
                        for &j in list {
                            if j == i {
                                continue;
                            }
                            let d = points[i].distance(&points[j]);
                            if d < best.0 || (d == best.0 && j < best.1) {
                                best = (d, j);
                            }
                        }
                    }
                }
                // Anything beyond this ring is at least `ring * h` away.
                if best.0 <= ring as f64 * h {
                    break;
                }
            }
            best
        })
        .collect()
}

/// Cells at Chebyshev distance exactly `ring` from `c`.
fn ring_cells(c: [i64; 3], ring: i64, dim: usize) -> Vec<[i64; 3]> {
    let r = ring;
    let rz = if dim == 3 { r } else { 0 };
    let mut out = Vec::new();
    for dz in -rz..=rz {
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs().max(dy.abs()).max(dz.abs()) == r {
                    out.push([c[0] + dx, c[1] + dy, c[2] + dz]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CircleArc, ParamPatch, PatchShape, Sphere, Term, Vector};

    fn unit_segment() -> CurvedPatch {
        let shape = PatchShape::Param(ParamPatch {
            lo: vec![0.0],
            hi: vec![1.0],
            coords: vec![
                vec![Term {
                    coef: 1.0,
                    pow: vec![1],
                    trig: vec![],
                }],
                vec![],
            ],
            flip_normal: false,
        });
        CurvedPatch::new(0, shape, 1.0).unwrap()
    }

    #[test]
    fn unit_segment_spacing_weights() {
        let s = sample_patch(&unit_segment(), 10, WeightConvention::Spacing).unwrap();
        assert_eq!(s.samples.len(), 9);
        for smp in &s.samples {
            assert!((smp.weight - 0.1).abs() < 1e-15);
        }
        assert!((s.total_weight() - 0.9).abs() < 1e-14);
        let b = sample_patch(&unit_segment(), 10, WeightConvention::BallVolume).unwrap();
        assert!((b.total_weight() - 1.8).abs() < 1e-14);
    }

    #[test]
    fn riemann_reference_on_segment_and_circle() {
        let m = 1000;
        assert!((riemann_reference(&unit_segment(), |_| 1.0, m) - 0.999).abs() < 1e-12);
        let x = riemann_reference(&unit_segment(), |p| p.x(), m);
        assert!((x - 0.5).abs() < 1.0 / m as f64);
        let circle = CurvedPatch::new(
            1,
            PatchShape::Circle(CircleArc::full(Vector::new2(0.0, 0.0), 1.5)),
            1.0,
        )
        .unwrap();
        let c = riemann_reference(&circle, |_| 1.0, m);
        assert!((c - 2.0 * PI * 1.5).abs() < 1e-9);
    }

    #[test]
    fn quarter_circle_total_weight() {
        let arc = CurvedPatch::new(
            0,
            PatchShape::Circle(CircleArc {
                center: Vector::new2(0.0, 0.0),
                radius: 2.0,
                arc: [0.0, PI / 2.0],
            }),
            1.0,
        )
        .unwrap();
        let s = sample_patch(&arc, 1000, WeightConvention::Spacing).unwrap();
        assert!((s.total_weight() - PI).abs() / PI < 0.01);
    }

    #[test]
    fn periodic_circle_wraps_neighbours() {
        let c = CurvedPatch::new(
            0,
            PatchShape::Circle(CircleArc::full(Vector::new2(0.0, 0.0), 1.0)),
            1.0,
        )
        .unwrap();
        let s = sample_patch(&c, 8, WeightConvention::Spacing).unwrap();
        assert_eq!(s.samples.len(), 8);
        assert_eq!(s.neighbors([0, 0]), vec![7, 1]);
        let chord = 2.0 * (PI / 8.0).sin();
        assert!(s.samples.iter().all(|x| (x.eps - chord).abs() < 1e-14));
    }

    #[test]
    fn sphere_sampling_is_injective_and_counts_match() {
        let sp = CurvedPatch::new(
            0,
            PatchShape::Sphere(Sphere {
                center: Vector::new3(0.0, 0.0, 0.0),
                radius: 1.0,
                cap: PI / 2.0,
            }),
            1.0,
        )
        .unwrap();
        let s = sample_patch(&sp, 20, WeightConvention::Spacing).unwrap();
        assert_eq!(s.counts, [19, 20]);
        assert_eq!(s.neighbors([0, 0]).len(), 5);
    }

    #[test]
    fn nearest_neighbors_match_brute_force() {
        let pts: Vec<Point> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.731;
                Vector::new3(t.cos() * (1.0 + 0.1 * t), t.sin(), (0.37 * t).sin())
            })
            .collect();
        let fast = nearest_neighbors(&pts);
        for (i, p) in pts.iter().enumerate() {
            let brute = pts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.distance(q))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(fast[i].0, brute);
        }
    }

    #[test]
    fn injectivity_violation_is_reported() {
        // x -> (cos 2 pi x, sin 2 pi x) over (0, 2) wraps twice.
        let shape = PatchShape::Param(ParamPatch {
            lo: vec![0.0],
            hi: vec![2.0],
            coords: vec![
                vec![Term {
                    coef: 1.0,
                    pow: vec![],
                    trig: vec![crate::geometry::TrigFactor::Cos(2.0 * PI)],
                }],
                vec![Term {
                    coef: 1.0,
                    pow: vec![],
                    trig: vec![crate::geometry::TrigFactor::Sin(2.0 * PI)],
                }],
            ],
            flip_normal: false,
        });
        let patch = CurvedPatch::new(0, shape, 1.0).unwrap();
        assert!(matches!(
            sample_patch(&patch, 8, WeightConvention::Spacing),
            Err(Error::InjectivityViolation { .. })
        ));
    }
}
