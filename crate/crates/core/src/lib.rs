//! Generalized image-source simulation of room impulse responses.
//!
//! Boundaries mix planar walls, curved patches and isolated point reflectors.
//! The planar engine enumerates discrete image sources, the curved engine
//! adds weighted virtual-source atoms, and [`rir`] turns the resulting
//! measure into taps and sampled signals.

mod error;
pub mod geometry;

pub use error::{Error, Result};
pub mod cli;
pub mod curved;
pub mod oracle;
pub mod paths;
pub mod pipeline;
pub mod planar;
pub mod quadrature;
pub mod rir;
pub mod scene;
