//! Toolkit for analysing interpersonal-conflict judgements mined from
//! discussion threads.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! * [`corpus`] parses JSONL post exports and mines YTA/NTA verdicts.
//! * [`embedding`] loads EMB1 sentence-vector files and builds normalized
//!   cosine similarity matrices.
//! * [`cluster`] prunes similarity graphs, runs Louvain, and picks a
//!   persistent pruning cutoff with an adjusted-Rand-index sweep.
//! * [`annotation`] merges six-aspect conflict labels and measures
//!   annotator agreement.
//! * [`classifier`] builds leakage-free splits and trains a focal-loss
//!   probe over frozen embeddings.
//! * [`stats`] computes accuracy/F1 reports, permutation tests and Fisher's
//!   exact test.
//! * [`pipeline`] ties everything together behind the `conflictctl` CLI.

pub mod annotation;
pub mod classifier;
pub mod cluster;
pub mod config;
pub mod corpus;
pub mod embedding;
mod error;
pub mod pipeline;
pub mod stats;
pub mod tsv;

pub use error::{Error, Result};
