//! Reflection-axis post-processing, localized symmetry search and rotational
//! symmetry classification from pairs of reflection axes.
//!
//! The pipeline takes scored reflection axes (from the built-in
//! [`detector::VotingDetector`] or any external detector via an axis file),
//! filters and de-duplicates them ([`refine`]), recursively re-runs detection
//! on sub-images to find localized axes ([`localizer`]), and infers
//! rotational symmetries from axis pairs either with a fixed rule or with a
//! random forest trained on line-pair features ([`rotation`], [`forest`]).
//! [`evaluation`] scores detections against ground truth with max-F1, and
//! [`synthgen`] produces patterns with known symmetries.

pub mod cli;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod forest;
pub mod geometry;
pub mod interchange;
pub mod localizer;
pub mod overlay;
pub mod refine;
pub mod rotation;
pub mod synthgen;

pub use error::{Error, ErrorKind, Result};
