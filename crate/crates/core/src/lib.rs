//! Numerical invariants of discrete subgroups of products of SL_d(R):
//! Cartan/Jordan projections, limit cones, growth indicators, Busemann
//! cocycles, atomic Patterson-Sullivan measures, generalized Cartan
//! decompositions for symmetric pairs, and the counting experiments built on
//! top of them.

pub mod boundary;
pub mod cache;
pub mod cone;
pub mod count;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod fixtures;
pub mod group;
pub mod linalg;
pub mod schottky;
pub mod symmetric;
pub mod verify;
pub mod words;

pub use error::{Error, Result};
pub use group::{CartanVector, GroupDescriptor, GroupElement, LinearForm};
pub use words::{GeneratorSystem, OrbitTable, Word};
