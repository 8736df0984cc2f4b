//! Cluster-tendency analysis for audio collections.
//!
//! The pipeline turns recordings into one log-mel feature vector each
//! ([`audio`]), builds the pairwise Euclidean [`DissimilarityMatrix`], reorders
//! it with VAT ([`vat`]) or its spectral variant ([`specvat`]), renders the
//! ordered dissimilarity image and counts dark diagonal blocks ([`cce`]).
//! [`synth`] generates data with known cluster structure for testing.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod cce;
pub mod eigen;
mod error;
pub mod image;
pub mod matrix;
pub mod specvat;
pub mod store;
pub mod synth;
pub mod vat;

pub use cce::{cce_count, otsu_threshold, CceConfig, CceReport, ThresholdMode};
pub use error::{Error, Result};
pub use image::OdImage;
pub use matrix::{
    euclidean_dissim, permute_matrix, validate_dissim, DissimilarityMatrix, FeatureMatrix,
    Permutation, Violation,
};
pub use specvat::{a_specvat_select_k, specvat, SpecVatConfig, SpecVatResult};
pub use vat::{odi_from, vat_order, VatOrdering};
