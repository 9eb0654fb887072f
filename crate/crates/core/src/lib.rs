//! Check-worthy claim detection and evidence-based veracity prediction for
//! news articles.
//!
//! Sentences are ranked by closeness to an internal signal (headline or
//! summary), the top claims drive a bounded web query, filtered evidence is
//! ranked against the claims, and a classifier predicts one of four labels.

pub mod claimrank;
pub mod corpus;
pub mod encode;
pub mod evidence;
pub mod pipeline;
pub mod summarize;
pub mod textproc;
pub mod veracity;
