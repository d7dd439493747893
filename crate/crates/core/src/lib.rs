//! Classification of randomized-trial results from their reported confidence
//! interval and pre-specified clinical thresholds.
//!
//! The crate is organised around five pieces:
//!
//! - [`measures`]: effect scales, reported estimates, and the normal likelihood
//!   recovered from a published interval.
//! - [`classifier`]: the interval-versus-threshold verdict, conditional
//!   equivalence testing, and non-inferiority / equivalence rules.
//! - [`bayes`]: prior grids, conjugate normal posteriors, posterior metric
//!   bundles, the posterior verdict rule table, and prior sensitivity.
//! - [`design`]: power, the observed-power fallacy, Type S / Type M
//!   retrodesign, and the winner's-curse replication chain.
//! - [`report`]: analysis records, narrative templates, and SVG plots.
//!
//! All analysis is carried out on the natural-log scale for ratio measures
//! (HR, RR, OR) and on the raw scale for additive measures.

pub mod bayes;
pub mod classifier;
pub mod design;
mod error;
pub mod measures;
pub mod normal;
pub mod report;

pub use error::{Error, Result};
