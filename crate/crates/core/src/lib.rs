//! Classifies each location word found in a news article as a correct or
//! incorrect event location.
//!
//! The pipeline: dictionary-driven preprocessing (cleaning, stopword removal,
//! stemming, location homogenization, category generalization), collocation
//! pattern features, and supervised classifiers trained from scratch, with a
//! repeated cross-validation harness.

pub mod eval;
pub mod features;
pub mod io;
pub mod learn;
pub mod lexicon;
pub mod preprocess;
pub mod rng;
pub mod stem;
pub mod synthetic;
