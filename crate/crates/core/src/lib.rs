//! Numerical auditing of reported binary-segmentation scores.
//!
//! Given reported accuracy, sensitivity and specificity figures, the crate
//! decides whether they can have been computed under a hypothesized
//! evaluation region (exactly, with rational arithmetic), and maps figures
//! computed on all pixels of an image into the field-of-view domain with
//! interval error bounds.

pub mod adjust;
pub mod consistency;
pub mod dataset;
pub mod error;
pub mod lp;
pub mod rational;
pub mod score;
pub mod survey;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
