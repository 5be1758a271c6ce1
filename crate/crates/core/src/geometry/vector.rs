use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A coordinate tuple in R^2 or R^3.
///
/// Used both for positions and displacements. Unused trailing components are
/// kept at zero so that 2D values embed in the z = 0 plane.
#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    dim: u8,
    c: [f64; 3],
}

/// Positions are plain vectors; the alias documents intent at call sites.
pub type Point = Vector;

impl Vector {
    pub const fn new2(x: f64, y: f64) -> Self {
        Vector {
            dim: 2,
            c: [x, y, 0.0],
        }
    }

    pub const fn new3(x: f64, y: f64, z: f64) -> Self {
        Vector {
            dim: 3,
            c: [x, y, z],
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        Vector {
            dim: dim as u8,
            c: [0.0; 3],
        }
    }

    /// Builds a vector from a 2- or 3-element slice, rejecting non-finite input.
    pub fn from_slice(s: &[f64]) -> Result<Self> {
        let v = match *s {
            [x, y] => Vector::new2(x, y),
            [x, y, z] => Vector::new3(x, y, z),
            _ => {
                return Err(Error::Config(format!(
                    "expected 2 or 3 coordinates, got {}",
                    s.len()
                )))
            }
        };
        if !v.is_finite() {
            return Err(Error::Config("coordinates must be finite".into()));
        }
        Ok(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim()]
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.c[1]
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.c[2]
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.c[i]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }

    #[inline]
    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.c[0] * other.c[0] + self.c[1] * other.c[1] + self.c[2] * other.c[2]
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance(&self, other: &Vector) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Unit vector along `self`, or `None` for a (near) zero vector.
    pub fn normalize(&self) -> Option<UnitVector> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(UnitVector(*self * (1.0 / n)))
        } else {
            None
        }
    }

    pub fn cross(&self, other: &Vector) -> Vector {
        let [a1, a2, a3] = self.c;
        let [b1, b2, b3] = other.c;
        Vector::new3(a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1)
    }

    /// Counter-clockwise quarter turn of a 2D vector.
    pub fn perp(&self) -> Vector {
        Vector::new2(-self.c[1], self.c[0])
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            })
        }
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_slice())
    }
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(self, rhs: Vector) -> Vector {
        debug_assert_eq!(self.dim, rhs.dim);
        Vector {
            dim: self.dim,
            c: [
                self.c[0] + rhs.c[0],
                self.c[1] + rhs.c[1],
                self.c[2] + rhs.c[2],
            ],
        }
    }
}

impl AddAssign for Vector {
    fn add_assign(&mut self, rhs: Vector) {
        *self = *self + rhs;
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(self, rhs: Vector) -> Vector {
        debug_assert_eq!(self.dim, rhs.dim);
        Vector {
            dim: self.dim,
            c: [
                self.c[0] - rhs.c[0],
                self.c[1] - rhs.c[1],
                self.c[2] - rhs.c[2],
            ],
        }
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    #[inline]
    fn mul(self, k: f64) -> Vector {
        Vector {
            dim: self.dim,
            c: [self.c[0] * k, self.c[1] * k, self.c[2] * k],
        }
    }
}

impl Neg for Vector {
    type Output = Vector;
    #[inline]
    fn neg(self) -> Vector {
        Vector {
            dim: self.dim,
            c: [-self.c[0], -self.c[1], -self.c[2]],
        }
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Vector::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// Tolerance on `||v|| - 1` accepted by [`UnitVector::new`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// A direction with unit Euclidean norm.
#[derive(Clone, Copy, PartialEq)]
pub struct UnitVector(Vector);

impl UnitVector {
    /// Wraps `v` if its norm is already within [`UNIT_NORM_TOL`] of one.
    pub fn new(v: Vector) -> Result<Self> {
        if v.is_finite() && (v.norm() - 1.0).abs() <= UNIT_NORM_TOL {
            Ok(UnitVector(v))
        } else {
            Err(Error::Config(format!("vector {v:?} is not unit-norm")))
        }
    }

    /// Normalizes `v`; errors on the zero vector.
    pub fn normalized(v: Vector) -> Result<Self> {
        v.normalize()
            .ok_or_else(|| Error::Config(format!("cannot normalize {v:?}")))
    }

    pub fn new2(x: f64, y: f64) -> Result<Self> {
        Self::normalized(Vector::new2(x, y))
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::normalized(Vector::new3(x, y, z))
    }

    #[inline]
    pub fn as_vector(&self) -> Vector {
        self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn dot(&self, v: &Vector) -> f64 {
        self.0.dot(v)
    }

    /// Whether `self` and `other` span the same line (equal up to sign).
    pub fn same_axis(&self, other: &UnitVector, tol: f64) -> bool {
        (self.0 - other.0).norm() <= tol || (self.0 + other.0).norm() <= tol
    }
}

impl std::ops::Deref for UnitVector {
    type Target = Vector;
    fn deref(&self) -> &Vector {
        &self.0
    }
}

impl Neg for UnitVector {
    type Output = UnitVector;
    fn neg(self) -> UnitVector {
        UnitVector(-self.0)
    }
}

impl fmt::Debug for UnitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Unit{:?}", self.0.as_slice())
    }
}

impl Serialize for UnitVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vector::deserialize(d)?;
        UnitVector::new(v)
            .or_else(|_| UnitVector::normalized(v))
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_vector_rejects_non_unit() {
        assert!(UnitVector::new(Vector::new2(1.0, 1.0)).is_err());
        assert!(UnitVector::new(Vector::new2(0.6, 0.8)).is_ok());
        assert!(UnitVector::normalized(Vector::zeros(3)).is_err());
    }

    #[test]
    fn from_slice_checks_arity_and_finiteness() {
        assert!(Vector::from_slice(&[1.0]).is_err());
        assert!(Vector::from_slice(&[1.0, f64::NAN]).is_err());
        assert_eq!(Vector::from_slice(&[1.0, 2.0, 3.0]).unwrap().dim(), 3);
    }

    #[test]
    fn cross_product_right_handed() {
        let z = Vector::new3(1.0, 0.0, 0.0).cross(&Vector::new3(0.0, 1.0, 0.0));
        assert_eq!(z, Vector::new3(0.0, 0.0, 1.0));
    }
}
