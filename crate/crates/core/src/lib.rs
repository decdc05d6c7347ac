//! Unfitted two-scale finite element engine: a homogenised macro field on a
//! coarse background mesh with resolved microstructure zooms on a refined
//! mesh, glued across level-set interfaces.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod cutgeom;
pub mod error;
pub mod geom;
pub mod levelset;
pub mod locate;
pub mod materials;
pub mod mesh;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
