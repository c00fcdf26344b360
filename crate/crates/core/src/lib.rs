//! Two-phase Chan-Vese segmentation solved with linear finite elements on
//! triangular meshes adapted to the image, plus a pixel-grid finite difference
//! baseline and multi-level segmentation.

pub mod chanvese;
pub mod cli;
pub mod error;
pub mod fds;
pub mod fem;
pub mod mesh;
pub mod metric;
pub mod pipeline;
pub mod raster;
pub mod tensor;

pub use error::{Error, Result};
