//! Core geometry for learned UV refinement: meshes and seams, seam token
//! codec, chart parameterization, differentiable UV losses, atlas packing and
//! dataset preparation.

pub mod atlas;
pub mod dataprep;
pub mod error;
pub mod fixtures;
pub mod geom;
pub mod losses;
pub mod mesh;
pub mod param;
pub mod seams;
pub mod sparse;

pub use error::{Error, Result};
