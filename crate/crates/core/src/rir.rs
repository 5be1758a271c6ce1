//! From virtual-source atoms to taps and sampled impulse responses.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::curved::WeightedAtom;
use crate::error::{Error, Result};
use crate::geometry::{Boundary, ElementRef, Point, UnitVector};

/// Default radius of the exclusion ball around the receiver, in meters.
pub const DEFAULT_COLLOCATION_EPS: f64 = 1e-3;

/// Gain of a source or receiver as a function of direction.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum DirectivityPattern {
    #[default]
    Omni,
    /// `(1 + cos theta) / 2` about `axis`.
    Cardioid { axis: UnitVector },
    /// Gains at sample directions. 2D: linear in angle between the two
    /// neighbouring entries. 3D: inverse-angle weighting of the three nearest
    /// entries.
    Tabulated { table: Vec<(UnitVector, f64)> },
}

impl DirectivityPattern {
    pub fn gain(&self, dir: &UnitVector) -> f64 {
        match self {
            DirectivityPattern::Omni => 1.0,
            DirectivityPattern::Cardioid { axis } => 0.5 * (1.0 + axis.dot(dir)),
            DirectivityPattern::Tabulated { table } => tabulated_gain(table, dir),
        }
    }
}

fn angle_between(a: &UnitVector, b: &UnitVector) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}

fn tabulated_gain(table: &[(UnitVector, f64)], dir: &UnitVector) -> f64 {
    match table.len() {
        0 => return 1.0,
        1 => return table[0].1,
        _ => {}
    }
    if dir.dim() == 2 {
        let mut entries: Vec<(f64, f64)> = table
            .iter()
            .map(|(d, g)| (d.y().atan2(d.x()).rem_euclid(TAU), *g))
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let t = dir.y().atan2(dir.x()).rem_euclid(TAU);
        let n = entries.len();
        let hi = entries.iter().position(|e| e.0 >= t).unwrap_or(n);
        let (a, b) = if hi == 0 || hi == n {
            // Between the last entry and the first one, across 2 pi.
            let (last, first) = (entries[n - 1], entries[0]);
            (last, (first.0 + TAU, first.1))
        } else {
            (entries[hi - 1], entries[hi])
        };
        let t = if t < a.0 { t + TAU } else { t };
        let span = b.0 - a.0;
        if span <= 0.0 {
            return a.1;
        }
        let w = (t - a.0) / span;
        a.1 + w * (b.1 - a.1)
    } else {
        let mut near: Vec<(f64, f64)> = table
            .iter()
            .map(|(d, g)| (angle_between(d, dir), *g))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0));
        if near[0].0 <= 1e-12 {
            return near[0].1;
        }
        let k = near.len().min(3);
        let (num, den) = near[..k]
            .iter()
            .fold((0.0, 0.0), |(n, d), (ang, g)| (n + g / ang, d + 1.0 / ang));
        num / den
    }
}

/// Per-bounce retained amplitude, possibly depending on the incidence angle.
pub trait AbsorptionModel: Sync {
    /// `cos_incidence` is `|<incoming direction, element vector>|`.
    fn retained(&self, element: ElementRef<'_>, cos_incidence: f64) -> f64;
}

/// The element's constant absorption value, whatever the angle.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantAbsorption;

impl AbsorptionModel for ConstantAbsorption {
    fn retained(&self, element: ElementRef<'_>, _cos_incidence: f64) -> f64 {
        element.absorption()
    }
}

/// `d_s` toward the first bounce times `d_r` toward the last bounce; the
/// direct path uses `r` and `s` instead.
pub fn directivity_coeff(
    atom: &WeightedAtom,
    d_s: &DirectivityPattern,
    d_r: &DirectivityPattern,
) -> f64 {
    let p = &atom.path;
    let first = p.reflections.first().map_or(p.sink, |r| r.point);
    let last = p.reflections.last().map_or(p.source, |r| r.point);
    let gs = (first - p.source).normalize().map_or(1.0, |u| d_s.gain(&u));
    let gr = (last - p.sink).normalize().map_or(1.0, |u| d_r.gain(&u));
    gs * gr
}

/// Product of the retained amplitude of every bounce (1 for the direct path).
pub fn absorption_coeff(atom: &WeightedAtom, boundary: &Boundary) -> Result<f64> {
    absorption_coeff_with(atom, boundary, &ConstantAbsorption)
}

pub fn absorption_coeff_with(
    atom: &WeightedAtom,
    boundary: &Boundary,
    model: &dyn AbsorptionModel,
) -> Result<f64> {
    let pts = atom.path.points();
    let mut a = 1.0;
    for (j, refl) in atom.path.reflections.iter().enumerate() {
        let e = boundary
            .element(refl.element)
            .ok_or(Error::UnknownElement(refl.element))?;
        let inc = (pts[j + 1] - pts[j]).normalize();
        let cos = inc.map_or(1.0, |u| refl.vector.dot(&u).abs());
        a *= model.retained(e, cos);
    }
    Ok(a)
}

/// The virtual-source measure seen from one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceMeasure {
    pub atoms: Vec<WeightedAtom>,
    pub source: Point,
    pub receiver: Point,
    /// Source and receiver coincide: the excitation is added undelayed.
    pub collocated: bool,
}

impl SourceMeasure {
    /// Collects atoms, fills in their absorption and directivity factors and
    /// enforces the exclusion ball of radius `collocation_eps` around `r`.
    ///
    /// When `s` itself is inside the ball, any direct atom is replaced by
    /// the collocated unit tap.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        atoms: Vec<WeightedAtom>,
        boundary: &Boundary,
        source: Point,
        receiver: Point,
        d_s: &DirectivityPattern,
        d_r: &DirectivityPattern,
        model: &dyn AbsorptionModel,
        collocation_eps: f64,
    ) -> Result<Self> {
        let collocated = source.distance(&receiver) < collocation_eps;
        let atoms = atoms
            .into_par_iter()
            .filter(|a| !(collocated && a.order() == 0))
            .map(|mut a| {
                a.absorption = absorption_coeff_with(&a, boundary, model)?;
                a.directivity = directivity_coeff(&a, d_s, d_r);
                Ok(a)
            })
            .collect::<Result<Vec<_>>>()?;
        let m = SourceMeasure {
            atoms,
            source,
            receiver,
            collocated,
        };
        m.check_collocation(collocation_eps)?;
        Ok(m)
    }

    pub fn check_collocation(&self, eps: f64) -> Result<()> {
        match self
            .atoms
            .iter()
            .find(|a| a.position.distance(&self.receiver) < eps)
        {
            Some(a) => Err(Error::CollocatedAtom {
                order: a.order(),
                eps,
            }),
            None => Ok(()),
        }
    }

    /// Number of atoms per stratum dimension, index = dimension.
    pub fn stratum_counts(&self) -> Vec<usize> {
        let max = self.atoms.iter().map(|a| a.stratum_dim).max().unwrap_or(0);
        let mut counts = vec![0; max + 1];
        for a in &self.atoms {
            counts[a.stratum_dim] += 1;
        }
        if self.collocated {
            counts[0] += 1;
        }
        counts
    }
}

/// One arrival: `amplitude` at `delay` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay: f64,
    pub amplitude: f64,
    pub order: usize,
    pub stratum_dim: usize,
}

/// Taps sorted by delay (ties keep atom order). Amplitude is
/// `weight * absorption * directivity / distance`.
pub fn tap_list(measure: &SourceMeasure, c: f64) -> Result<Vec<Tap>> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!(
            "speed of sound must be positive, got {c}"
        )));
    }
    let mut taps: Vec<Tap> = measure
        .atoms
        .par_iter()
        .map(|a| {
            let dist = a.position.distance(&measure.receiver);
            Tap {
                delay: dist / c,
                amplitude: a.weight * a.absorption * a.directivity / dist,
                order: a.order(),
                stratum_dim: a.stratum_dim,
            }
        })
        .collect();
    if measure.collocated {
        taps.insert(
            0,
            Tap {
                delay: 0.0,
                amplitude: 1.0,
                order: 0,
                stratum_dim: 0,
            },
        );
    }
    taps.sort_by(|a, b| a.delay.total_cmp(&b.delay));
    Ok(taps)
}

/// A uniformly sampled real signal starting at `t0` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub t0: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64, t0: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) || !t0.is_finite() {
            return Err(Error::Config("signal samples must be finite".into()));
        }
        Ok(Signal {
            samples,
            sample_rate,
            t0,
        })
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.sample_rate
    }
}

/// What the room is driven with.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Excitation {
    #[default]
    Impulse,
    Signal(Signal),
}

/// How a tap at a fractional sample position is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Whole amplitude on the nearest sample.
    #[default]
    Nearest,
    /// Hann-windowed sinc over `half_width` samples on each side.
    WindowedSinc { half_width: usize },
}

/// Samples `duration` seconds of the response at `out_rate`.
///
/// A signal excitation is added, shifted and scaled, once per tap; it must be
/// sampled at `out_rate`. Taps are accumulated in delay order, so the result
/// does not depend on thread count.
pub fn render_rir(
    measure: &SourceMeasure,
    excitation: &Excitation,
    c: f64,
    out_rate: f64,
    duration: f64,
    interpolation: Interpolation,
) -> Result<Signal> {
    let taps = tap_list(measure, c)?;
    render_taps(&taps, excitation, out_rate, duration, interpolation)
}

/// [`render_rir`] for a precomputed tap list.
pub fn render_taps(
    taps: &[Tap],
    excitation: &Excitation,
    out_rate: f64,
    duration: f64,
    interpolation: Interpolation,
) -> Result<Signal> {
    if !(out_rate > 0.0 && out_rate.is_finite()) {
        return Err(Error::Config(format!(
            "output rate must be positive, got {out_rate}"
        )));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Config(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let n = (duration * out_rate).round() as usize;
    let mut out = vec![0.0; n];
    let (shape, shift): (&[f64], f64) = match excitation {
        Excitation::Impulse => (&[1.0], 0.0),
        Excitation::Signal(f) => {
            if f.sample_rate != out_rate {
                return Err(Error::Config(format!(
                    "excitation is sampled at {} Hz but the output rate is {out_rate} Hz",
                    f.sample_rate
                )));
            }
            (&f.samples, f.t0)
        }
    };
    let mut add = |pos: i64, value: f64| {
        for (m, &x) in shape.iter().enumerate() {
            let k = pos + m as i64;
            if k >= 0 && (k as usize) < n {
                out[k as usize] += value * x;
            }
        }
    };
    for tap in taps {
        let exact = (tap.delay + shift) * out_rate;
        match interpolation {
            Interpolation::Nearest => add(exact.round() as i64, tap.amplitude),
            Interpolation::WindowedSinc { half_width } => {
                let w = half_width as i64;
                let center = exact.round() as i64;
                for k in center - w..=center + w {
                    let x = k as f64 - exact;
                    if x.abs() > w as f64 {
                        continue;
                    }
                    let sinc = if x == 0.0 {
                        1.0
                    } else {
                        (PI * x).sin() / (PI * x)
                    };
                    let hann = 0.5 * (1.0 + (PI * x / w as f64).cos());
                    add(k, tap.amplitude * sinc * hann);
                }
            }
        }
    }
    Signal::new(out, out_rate, 0.0)
}
