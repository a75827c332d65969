//! Random optical scattering simulated as a fixed feature extractor, with a
//! closed-form ridge-regression output layer on top.
//!
//! The pipeline mirrors an extreme learning machine whose hidden layer is a
//! scattering medium:
//!
//! 1. images are preprocessed to 48×48 RGB tensors ([`dataset::preprocess`]),
//! 2. each wavelength channel is pushed through its own complex transmission
//!    matrix and detected as an 80×80 intensity speckle ([`scattering`]),
//! 3. the flattened speckles are classified by ridge regression on one-hot
//!    targets ([`ridge`]).
//!
//! [`bench`] wires these into repeatable experiments (RSS+RC, SC+RC and the
//! raw-pixel RC baseline) and writes reports.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod features;
pub mod ridge;
pub mod scattering;

pub use error::{Error, Result};
pub use features::{Element, FeatureMatrix};
