//! Deterministic material-classification benchmark harness.
//!
//! The pipeline: split a dataset manifest into positive/negative train and
//! test sets, extract a feature per image at a network's tap point (or
//! ingest precomputed features), train a linear SVM, rank images by score
//! and report average precision. Batches of such runs aggregate into
//! per-category, mAP and timing tables.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example` lists them.

pub mod dataset;
pub mod features;
pub mod network;
pub mod rng;
pub mod svm;
pub mod evaluation;
pub mod harness;
