//! Spatial-reasoning QA synthesis and verifiable-reward RL toolkit.
//!
//! The crate is organized around a data path and a scoring path:
//!
//! * [`scene`] — neutral indoor-scene metadata schema, validation, and
//!   ground-truth cognitive grid maps.
//! * [`geometry`] — distance / size / area / direction kernels used to
//!   compute QA ground truths.
//! * [`qa`] — the six spatial QA generators, question templates, and
//!   corpus filtering.
//! * [`response`] — parsing of tagged model responses into think / map /
//!   answer segments plus answer extraction.
//! * [`text_metrics`] — word error rate and ROUGE kernels for OCR and
//!   free-form scoring.
//! * [`reward`] — the verifiable reward functions (format, task, map,
//!   length) and their combination into a single scalar.
//! * [`grpo`] — group-relative advantage standardization, the clipped
//!   surrogate objective, and a softmax toy policy trainer that runs the
//!   whole loop at desk scale.
//! * [`pipeline`] — JSONL import/export, corpus statistics, and
//!   difficulty-based sample selection.

// `!(x > 0.0)`-style validation is deliberate throughout: unlike the
// suggested `x <= 0.0`, it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod geometry;
pub mod grpo;
pub mod pipeline;
pub mod qa;
pub mod response;
pub mod reward;
pub mod scene;
pub mod text_metrics;
pub(crate) mod util;

pub use scene::{BoundingBox, GridMap, ObjectInstance, SceneMeta};

/// Stable seed derivation for pipeline fan-out; the same inputs yield
/// the same stream on every platform and build.
pub mod seed {
    pub fn derive(base: u64, label: &str, extra: u64) -> u64 {
        crate::util::derive_seed(base, label, extra)
    }
}
