//! Bone-age modelling from segmented hand-bone outlines.
//!
//! Outlines are turned into one of three representations (a radial 1-D
//! series, a shapelet transform of that series, or 25 summary shape
//! features) and used either to classify Tanner-Whitehouse stages or to
//! regress chronological age.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod data;
pub mod elastic;
pub mod error;
pub mod evalkit;
pub mod features;
pub mod geometry;
pub mod learners;
pub mod outline;
pub mod regress;
pub mod shapelets;

pub use error::{Error, Result};
