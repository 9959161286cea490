//! Scoring toolkit for event annotations in BRAT standoff format.
//!
//! - [`standoff`]: `.ann` parsing, serialization and corpus I/O
//! - [`schema`]: event schemes and structural validation
//! - [`scoring`]: event alignment and slot-filling precision/recall/F1
//! - [`significance`]: paired bootstrap comparison of two systems
//! - [`analytics`]: corpus statistics, subtype and density breakdowns
//! - [`report`]: delimited and JSON report writers
//! - [`testkit`]: synthetic corpora, perturbation and matching oracles

pub mod analytics;
pub mod report;
pub mod schema;
pub mod scoring;
pub mod significance;
pub mod standoff;
pub mod testkit;
