//! Evaluation tooling for per-subject prediction on multi-subject
//! longitudinal wellbeing data.
//!
//! The crate covers the full pipeline:
//!
//! - [`data`]: self-report and GPS record types, CSV ingestion, day bucketing
//! - [`baselines`]: population-mode vs personal-mode baseline accuracies
//! - [`features`]: daily location/mobility features and the behavioral
//!   variance screening metric
//! - [`labels`]: the "energy above personal average" daily prediction target
//! - [`models`]: majority-class, decision-tree, and random-forest classifiers
//!   with vote-fraction confidence
//! - [`evaluation`]: cross-validation splitters (within-subject stratified,
//!   forward chaining, subject-wise, record-wise), per-participant
//!   improvement over the personal label baseline, variance-threshold
//!   screening sweeps, and correlation with significance
//! - [`synth`]: a deterministic synthetic cohort generator with planted
//!   ground truth
//! - [`cli`]: the `longbase` command-line surface
//!
//! Everything downstream of loading operates on an immutable
//! [`data::CohortDataset`] and is safe to call concurrently. Seeded
//! computations derive per-participant and per-tree substreams from the
//! run seed, so results do not depend on thread count.

pub mod baselines;
pub mod cli;
pub mod data;
pub mod evaluation;
pub mod features;
pub mod labels;
pub mod models;
pub mod synth;
