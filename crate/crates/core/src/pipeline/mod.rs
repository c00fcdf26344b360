//! Represent, solve, reconstruct: the segmentation pipeline and its evaluation helpers.

pub mod fixtures;
pub mod output;
mod reconstruct;
mod represent;
mod segment;

pub use reconstruct::{
    dice, extract_contour, extract_grid_contour, interpolate_to_grid, mask_count, reconstruct, segmented_image, sign_mask, Mask, Polyline,
    Reconstruction,
};
pub use represent::{ama_represent, project_lumped, MetricKind, RepresentParams, Representation, Sampling};
pub use segment::{
    initial_levelset, masked_image, segment_multilevel, segment_one_level, Branch, BranchStatus, LevelResult,
    MultilevelParams, MultilevelResult, SegmentParams, Timings,
};
