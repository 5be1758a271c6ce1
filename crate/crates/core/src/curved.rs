//! Reflection paths off curved patches and point reflectors, and the
//! weighted atoms they contribute to the virtual-source measure.
//!
//! Candidates are lattice samples (or pairs of samples for two bounces).
//! Promising candidates are refined by a damped Gauss-Newton solve of the
//! reflection law, merged, and classified: an isolated solution becomes a
//! unit-weight atom; a family of solutions becomes a continuum whose atoms
//! are weighted by their spacing in virtual-source space.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Boundary, ElementId, ParamDomain, Point, Surface, UnitVector};
use crate::paths::{check_visibility, Reflection, ReflectionPath, DEFAULT_VALIDITY_TOL};
use crate::planar::VirtualSource;
use crate::quadrature::{nearest_neighbors, sample_patch, LatticeSampling, WeightConvention};

/// Largest number of lattice tuples examined for one element sequence.
pub const MAX_CANDIDATES: usize = 4_000_000;
/// Refined solutions closer than this (every point of the path) are merged.
pub const MERGE_TOL: f64 = 1e-6;
/// Residual at which refinement stops.
const CONVERGED: f64 = 1e-10;
/// Scaled singular values below this span the tangent of a solution family.
const NULL_TOL: f64 = 1e-6;

/// One quantum of the virtual-source measure.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAtom {
    pub position: Point,
    /// 1 for isolated sources; meters^stratum_dim for continuum samples.
    pub weight: f64,
    /// Dimension of the family of virtual sources this atom samples.
    pub stratum_dim: usize,
    pub path: ReflectionPath,
    pub grazing: bool,
    /// Retained amplitude over all bounces; 1 until a measure is assembled.
    pub absorption: f64,
    /// Source and receiver gain product; 1 until a measure is assembled.
    pub directivity: f64,
}

impl WeightedAtom {
    pub fn order(&self) -> usize {
        self.path.order()
    }
}

impl From<&VirtualSource> for WeightedAtom {
    fn from(v: &VirtualSource) -> Self {
        WeightedAtom {
            position: v.position,
            weight: 1.0,
            stratum_dim: 0,
            path: v.path.clone(),
            grazing: v.grazing,
            absorption: 1.0,
            directivity: 1.0,
        }
    }
}

/// Settings of [`find_curved_paths`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvedConfig {
    /// 1 or 2.
    pub max_order: usize,
    /// Default lattice density; patches may override it.
    pub lattice_m: usize,
    /// Acceptance threshold on the validity residual of lattice candidates.
    /// `None` uses `2 * (sum of sample spacings) / shortest segment`.
    pub angular_tol: Option<f64>,
    pub geom_tol: f64,
    pub convention: WeightConvention,
}

impl Default for CurvedConfig {
    fn default() -> Self {
        CurvedConfig {
            max_order: 1,
            lattice_m: 256,
            angular_tol: None,
            geom_tol: crate::geometry::DEFAULT_GEOM_TOL,
            convention: WeightConvention::Spacing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Wall(usize),
    Patch(usize),
    Point(usize),
}

struct Engine<'a> {
    boundary: &'a Boundary,
    samplings: Vec<LatticeSampling>,
    s: Point,
    r: Point,
    cfg: CurvedConfig,
}

/// A candidate before refinement.
struct Seed {
    /// Lattice sample per patch slot.
    samples: Vec<usize>,
    eps_sum: f64,
}

/// A refined, valid path with its bookkeeping.
struct Solution {
    path: ReflectionPath,
    null_dim: usize,
    eps_sum: f64,
}

/// Valid, visible paths with at least one bounce on a patch or point
/// reflector, up to two bounces, as weighted atoms.
///
/// Sequences mix walls, patches and point reflectors with at most one wall
/// (all-wall sequences belong to the planar engine). The same patch may be
/// hit twice in a row; a wall or point may not.
pub fn find_curved_paths(
    boundary: &Boundary,
    s: Point,
    r: Point,
    cfg: &CurvedConfig,
) -> Result<Vec<WeightedAtom>> {
    s.check_dim(boundary.dim())?;
    r.check_dim(boundary.dim())?;
    if boundary.patches.is_empty() && boundary.points.is_empty() {
        return Ok(Vec::new());
    }
    if cfg.max_order > 2 {
        return Err(Error::Config(format!(
            "curved reflections support at most 2 bounces, got max order {}",
            cfg.max_order
        )));
    }
    let samplings = boundary
        .patches
        .iter()
        .map(|p| sample_patch(p, p.lattice_m.unwrap_or(cfg.lattice_m), cfg.convention))
        .collect::<Result<Vec<_>>>()?;
    let engine = Engine {
        boundary,
        samplings,
        s,
        r,
        cfg: *cfg,
    };
    let mut atoms = Vec::new();
    for seq in engine.sequences() {
        atoms.extend(engine.solve_sequence(&seq)?);
    }
    Ok(atoms)
}

impl<'a> Engine<'a> {
    fn id(&self, slot: Slot) -> ElementId {
        match slot {
            Slot::Wall(i) => self.boundary.walls[i].id,
            Slot::Patch(i) => self.boundary.patches[i].id,
            Slot::Point(i) => self.boundary.points[i].id,
        }
    }

    fn sequences(&self) -> Vec<Vec<Slot>> {
        let b = self.boundary;
        let walls = (0..b.walls.len()).map(Slot::Wall);
        let curved: Vec<Slot> = (0..b.patches.len())
            .map(Slot::Patch)
            .chain((0..b.points.len()).map(Slot::Point))
            .collect();
        let all: Vec<Slot> = walls.chain(curved.iter().copied()).collect();
        let mut seqs: Vec<Vec<Slot>> = Vec::new();
        if self.cfg.max_order >= 1 {
            seqs.extend(curved.iter().map(|&c| vec![c]));
        }
        if self.cfg.max_order >= 2 {
            for &a in &all {
                for &b in &all {
                    let walls = [a, b].iter().filter(|x| matches!(x, Slot::Wall(_))).count();
                    let same_non_patch = a == b && !matches!(a, Slot::Patch(_));
                    if walls <= 1 && !same_non_patch {
                        seqs.push(vec![a, b]);
                    }
                }
            }
        }
        seqs.sort_by_key(|q| (q.len(), q.iter().map(|&x| self.id(x)).collect::<Vec<_>>()));
        seqs
    }

    fn patch_slots(seq: &[Slot]) -> Vec<usize> {
        seq.iter()
            .filter_map(|x| match x {
                Slot::Patch(i) => Some(*i),
                _ => None,
            })
            .collect()
    }

    fn surface(&self, patch: usize) -> &dyn Surface {
        self.boundary.patches[patch].surface()
    }

    /// Builds the path for the given patch parameters (one per patch slot).
    /// Wall bounces are placed where the specular point must be given the
    /// neighbouring points.
    fn build(&self, seq: &[Slot], params: &[[f64; 2]]) -> Option<ReflectionPath> {
        let tol = self.cfg.geom_tol;
        let mut pts: Vec<Option<(Point, UnitVector)>> = Vec::with_capacity(seq.len());
        let mut next_param = params.iter();
        for &slot in seq {
            pts.push(match slot {
                Slot::Patch(i) => {
                    let sf = self.surface(i);
                    let x = sf.domain().normalize(*next_param.next()?);
                    Some((sf.map(x), sf.vector(x)))
                }
                Slot::Point(i) => {
                    let p = &self.boundary.points[i];
                    Some((p.position, p.vector))
                }
                Slot::Wall(_) => None,
            });
        }
        for (j, &slot) in seq.iter().enumerate() {
            if let Slot::Wall(i) = slot {
                let wall = &self.boundary.walls[i];
                let prev = if j == 0 { self.s } else { pts[j - 1]?.0 };
                let next = if j + 1 == seq.len() {
                    self.r
                } else {
                    pts[j + 1]?.0
                };
                let a = wall.mirror(prev);
                let d = next - a;
                let denom = wall.normal().dot(&d);
                if denom == 0.0 {
                    return None;
                }
                let lambda = -wall.signed_distance(&a) / denom;
                if !(lambda > 0.0 && lambda < 1.0) {
                    return None;
                }
                let y = a + d * lambda;
                if wall.extent_margin(&y) <= tol {
                    return None;
                }
                pts[j] = Some((y, wall.normal()));
            }
        }
        let reflections: Vec<Reflection> = seq
            .iter()
            .zip(pts)
            .map(|(&slot, p)| {
                let (point, vector) = p.expect("all points placed");
                Reflection {
                    point,
                    element: self.id(slot),
                    vector,
                }
            })
            .collect();
        let path = ReflectionPath {
            source: self.s,
            reflections,
            sink: self.r,
        };
        let pts = path.points();
        if pts.windows(2).any(|w| w[0].distance(&w[1]) <= tol) {
            return None;
        }
        Some(path)
    }

    fn solve_sequence(&self, seq: &[Slot]) -> Result<Vec<WeightedAtom>> {
        let slots = Self::patch_slots(seq);
        let seeds = self.seeds(seq, &slots)?;
        let solved: Vec<Option<Solution>> = seeds
            .par_iter()
            .map(|seed| self.refine(seq, &slots, seed))
            .collect();
        let distinct = dedupe(solved.into_iter().flatten().collect());
        let visible: Vec<(Solution, bool)> = distinct
            .into_par_iter()
            .filter_map(|sol| {
                let vis = check_visibility(&sol.path, self.boundary, self.cfg.geom_tol);
                vis.visible.then_some((sol, vis.grazing))
            })
            .collect();
        // Continuum atoms are weighted by their spacing among atoms of the
        // same family dimension.
        let mut by_dim: HashMap<usize, Vec<usize>> = HashMap::new();
        for (k, (sol, _)) in visible.iter().enumerate() {
            if sol.null_dim > 0 {
                by_dim.entry(sol.null_dim).or_default().push(k);
            }
        }
        let mut weights = vec![1.0; visible.len()];
        for (q, members) in by_dim {
            let pos: Vec<Point> = members.iter().map(|&k| visible[k].0.path.image()).collect();
            let nn = nearest_neighbors(&pos);
            for (&k, (eps, _)) in members.iter().zip(nn) {
                let eps = if eps.is_finite() {
                    eps
                } else {
                    visible[k].0.eps_sum
                };
                weights[k] = self.cfg.convention.weight(eps, q);
            }
        }
        Ok(visible
            .into_iter()
            .zip(weights)
            .map(|((sol, grazing), weight)| WeightedAtom {
                position: sol.path.image(),
                weight,
                stratum_dim: sol.null_dim,
                path: sol.path,
                grazing,
                absorption: 1.0,
                directivity: 1.0,
            })
            .collect())
    }

    /// Lattice tuples worth refining: those whose residual is within the
    /// acceptance threshold, plus local residual minima for single-patch
    /// sequences.
    fn seeds(&self, seq: &[Slot], slots: &[usize]) -> Result<Vec<Seed>> {
        let counts: Vec<usize> = slots
            .iter()
            .map(|&i| self.samplings[i].samples.len())
            .collect();
        let total = counts.iter().product::<usize>();
        if total > MAX_CANDIDATES {
            return Err(Error::Config(format!(
                "{total} lattice candidates for one reflection sequence exceed the cap of {MAX_CANDIDATES}; lower lattice_M"
            )));
        }
        let tuple = |mut k: usize| -> Vec<usize> {
            counts
                .iter()
                .map(|&n| {
                    let i = k % n;
                    k /= n;
                    i
                })
                .collect()
        };
        let eval: Vec<Option<(f64, f64, f64)>> = (0..total)
            .into_par_iter()
            .map(|k| {
                let idx = tuple(k);
                let params: Vec<[f64; 2]> = slots
                    .iter()
                    .zip(&idx)
                    .map(|(&p, &i)| self.samplings[p].samples[i].param)
                    .collect();
                let path = self.build(seq, &params)?;
                let eps_sum: f64 = slots
                    .iter()
                    .zip(&idx)
                    .map(|(&p, &i)| self.samplings[p].samples[i].eps)
                    .sum();
                let (res, min_seg) = residual(&path);
                Some((res, min_seg, eps_sum))
            })
            .collect();
        let mut seeds = Vec::new();
        for (k, e) in eval.iter().enumerate() {
            let Some((res, min_seg, eps_sum)) = *e else {
                continue;
            };
            let accept = if slots.is_empty() {
                res <= DEFAULT_VALIDITY_TOL
            } else {
                let tol = self.cfg.angular_tol.unwrap_or(2.0 * eps_sum / min_seg);
                res <= tol || (slots.len() == 1 && self.is_local_min(slots[0], k, res, &eval))
            };
            if accept {
                seeds.push(Seed {
                    samples: tuple(k),
                    eps_sum,
                });
            }
        }
        Ok(seeds)
    }

    fn is_local_min(
        &self,
        patch: usize,
        k: usize,
        res: f64,
        eval: &[Option<(f64, f64, f64)>],
    ) -> bool {
        let sampling = &self.samplings[patch];
        sampling
            .neighbors(sampling.samples[k].index)
            .into_iter()
            .all(|n| eval[n].is_none_or(|(r, _, _)| res <= r))
    }

    /// Damped Gauss-Newton on the stacked reflection mismatch, confined to
    /// one lattice cell around the seed.
    fn refine(&self, seq: &[Slot], slots: &[usize], seed: &Seed) -> Option<Solution> {
        let layout: Vec<(usize, usize)> = slots
            .iter()
            .flat_map(|&p| (0..self.samplings[p].p).map(move |a| (p, a)))
            .collect();
        let z0: Vec<f64> = slots
            .iter()
            .zip(&seed.samples)
            .flat_map(|(&p, &i)| {
                let s = &self.samplings[p];
                s.samples[i].param[..s.p].to_vec()
            })
            .collect();
        let n = z0.len();
        let cells: Vec<f64> = layout
            .iter()
            .map(|&(p, _)| self.samplings[p].spacing)
            .collect();
        let domains: Vec<ParamDomain> = layout
            .iter()
            .map(|&(p, _)| self.surface(p).domain())
            .collect();
        let clamp = |z: &mut [f64]| {
            for k in 0..n {
                let (_, a) = layout[k];
                z[k] = z[k].clamp(z0[k] - cells[k], z0[k] + cells[k]);
                if !domains[k].periodic[a] {
                    z[k] = z[k].clamp(domains[k].lo[a], domains[k].hi[a]);
                }
            }
        };
        let f = |z: &[f64]| -> Option<(ReflectionPath, DVector<f64>)> {
            let params = unpack(z, slots, &layout);
            let path = self.build(seq, &params)?;
            let v = mismatch(&path);
            Some((path, v))
        };
        let (mut path, mut fz) = f(&z0)?;
        let mut z = z0.clone();
        let mut mu = 1e-3;
        for _ in 0..100 {
            if max_bounce_norm(&fz, self.boundary.dim()) <= CONVERGED || n == 0 {
                break;
            }
            let jac = fd_jacobian(&f, &z, &cells)?;
            let jtj = jac.transpose() * &jac;
            let g = jac.transpose() * &fz;
            let mut improved = false;
            while mu < 1e12 {
                let mut lhs = jtj.clone();
                for k in 0..n {
                    lhs[(k, k)] += mu * jtj[(k, k)].max(1e-12);
                }
                let Some(step) = lhs.lu().solve(&(-&g)) else {
                    mu *= 10.0;
                    continue;
                };
                let mut trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                clamp(&mut trial);
                if let Some((p2, f2)) = f(&trial) {
                    if f2.norm() < fz.norm() {
                        z = trial;
                        path = p2;
                        fz = f2;
                        mu = (mu / 3.0).max(1e-12);
                        improved = true;
                        break;
                    }
                }
                mu *= 4.0;
            }
            if !improved {
                break;
            }
        }
        if max_bounce_norm(&fz, self.boundary.dim()) > CONVERGED {
            return None;
        }
        // The patch is open: solutions on its rim do not count.
        for k in 0..n {
            let (_, a) = layout[k];
            let d = &domains[k];
            if !d.periodic[a] && !(z[k] > d.lo[a] && z[k] < d.hi[a]) {
                return None;
            }
        }
        let null_dim = if n == 0 {
            0
        } else {
            let jac = fd_jacobian(&f, &z, &cells)?;
            self.null_dimension(jac, &z, slots, &layout, &path)
        };
        Some(Solution {
            path,
            null_dim,
            eps_sum: seed.eps_sum,
        })
    }

    /// Number of independent parameter directions along which the reflection
    /// law stays satisfied to first order.
    fn null_dimension(
        &self,
        mut jac: DMatrix<f64>,
        z: &[f64],
        slots: &[usize],
        layout: &[(usize, usize)],
        path: &ReflectionPath,
    ) -> usize {
        let params = unpack(z, slots, layout);
        let (_, min_seg) = residual(path);
        // Rescale columns to "per meter moved on the surface" times a length.
        let mut slot_of_col = Vec::with_capacity(layout.len());
        let mut k = 0;
        for (si, &p) in slots.iter().enumerate() {
            for _ in 0..self.samplings[p].p {
                slot_of_col.push(si);
                k += 1;
            }
        }
        debug_assert_eq!(k, layout.len());
        for (c, &(p, a)) in layout.iter().enumerate() {
            let speed = self.surface(p).jacobian(params[slot_of_col[c]])[a].norm();
            let scale = if speed > 0.0 { min_seg / speed } else { 0.0 };
            for r in 0..jac.nrows() {
                jac[(r, c)] *= scale;
            }
        }
        let sv = jac.svd(false, false).singular_values;
        let n = layout.len();
        let rank = sv.iter().filter(|&&v| v > NULL_TOL).count();
        n - rank.min(n)
    }
}

fn unpack(z: &[f64], slots: &[usize], layout: &[(usize, usize)]) -> Vec<[f64; 2]> {
    let mut params = vec![[0.0; 2]; slots.len()];
    let mut slot = 0;
    let mut prev_patch_pos = None;
    for (k, &(_, a)) in layout.iter().enumerate() {
        if a == 0 && prev_patch_pos.is_some() {
            slot += 1;
        }
        prev_patch_pos = Some(k);
        params[slot][a] = z[k];
    }
    params
}

fn fd_jacobian(
    f: &impl Fn(&[f64]) -> Option<(ReflectionPath, DVector<f64>)>,
    z: &[f64],
    cells: &[f64],
) -> Option<DMatrix<f64>> {
    let n = z.len();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let h = 1e-3 * cells[k];
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[k] += h;
        zm[k] -= h;
        let (_, fp) = f(&zp)?;
        let (_, fm) = f(&zm)?;
        cols.push((fp - fm) / (2.0 * h));
    }
    Some(DMatrix::from_columns(&cols))
}

/// Stacked `out - inc` differences, one block of `N` entries per bounce.
fn mismatch(path: &ReflectionPath) -> DVector<f64> {
    let dim = path.source.dim();
    let pts = path.points();
    let mut v = DVector::zeros(dim * path.order());
    for (j, refl) in path.reflections.iter().enumerate() {
        let (prev, y, next) = (pts[j], pts[j + 1], pts[j + 2]);
        let out = (next - y) * (1.0 / next.distance(&y));
        let mirrored = crate::geometry::symmetric_project(prev, y, refl.vector);
        let inc = (y - mirrored) * (1.0 / y.distance(&mirrored));
        let d = out - inc;
        for a in 0..dim {
            v[j * dim + a] = d.get(a);
        }
    }
    v
}

fn max_bounce_norm(v: &DVector<f64>, dim: usize) -> f64 {
    v.as_slice()
        .chunks(dim)
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// `(validity residual, shortest segment)`.
fn residual(path: &ReflectionPath) -> (f64, f64) {
    let res = max_bounce_norm(&mismatch(path), path.source.dim());
    let min_seg = path
        .points()
        .windows(2)
        .map(|w| w[0].distance(&w[1]))
        .fold(f64::INFINITY, f64::min);
    (res, min_seg)
}

/// Keeps the first of every group of solutions whose paths coincide within
/// [`MERGE_TOL`]. A merged group that mixes family dimensions keeps the
/// largest one.
fn dedupe(solutions: Vec<Solution>) -> Vec<Solution> {
    let cell = |p: &Point| -> [i64; 3] {
        let mut c = [0i64; 3];
        for (a, v) in c.iter_mut().enumerate().take(p.dim()) {
            *v = (p.get(a) / MERGE_TOL).floor() as i64;
        }
        c
    };
    let mut kept: Vec<Solution> = Vec::new();
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for sol in solutions {
        let key = sol.path.reflections[0].point;
        let c = cell(&key);
        let mut dup = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        if let Some(&k) = list
                            .iter()
                            .find(|&&k| kept[k].path.coincides(&sol.path, MERGE_TOL))
                        {
                            dup = Some(k);
                            break 'search;
                        }
                    }
                }
            }
        }
        match dup {
            Some(k) => kept[k].null_dim = kept[k].null_dim.max(sol.null_dim),
            None => {
                grid.entry(c).or_default().push(kept.len());
                kept.push(sol);
            }
        }
    }
    kept
}
