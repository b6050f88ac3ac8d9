//! Multi-modal remote-sensing VQA toolkit.
//!
//! Builds paired optical/SAR QA corpora, trains the two answering pipelines
//! (end-to-end feature fusion and a two-stage prompt pipeline) over five
//! visual models (optical-only, SAR-only, early/halfway/late fusion), and
//! evaluates classification, VQA and dataset-bias metrics.

pub mod corpus;
pub mod error;
pub mod util;

pub use error::{Error, Result};
