//! Library for switching LLM answer style between professional and
//! non-professional registers, and for measuring how well a model does it.
//!
//! The pieces fit together as a pipeline:
//!
//! * [`lexicon`] builds a domain term lexicon (MeSH qualifier XML or a
//!   plain list) and counts whole-word term occurrences in text.
//! * [`data`] ingests QA corpora, classifies question types, augments
//!   style twins, balances the 2x4 style/type grid, and emits
//!   instruction-tuning JSON Lines plus a held-out test split.
//! * [`prompts`] renders the three instruction levels (basic, type based,
//!   knowledge enriched), restrictive suffixes, and the classification,
//!   augmentation and reasoning-decomposition prompt templates.
//! * [`gateway`] is a synchronous LLM client with retries, a
//!   content-addressed response cache, a concurrency cap, and a scripted
//!   mock for tests.
//! * [`style`] holds the professionalism indicators: term-hit and
//!   reasoning-step gaps, threshold classification with Pro F1, reasoning
//!   density, threshold fitting and human-rating stats.
//! * [`quality`] scores reference quality: a length-penalized n-gram
//!   overlap score and a greedy embedding-matching score.
//! * [`runner`] orchestrates evaluation runs and [`report`] renders the
//!   aggregate as JSON, CSV, or a fixed-width table.

pub mod data;
pub mod error;
pub mod gateway;
pub mod lexicon;
pub mod prompts;
pub mod quality;
pub mod report;
pub mod runner;
pub mod style;
pub mod text;

pub use error::{Error, Result};
