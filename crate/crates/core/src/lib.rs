//! Non-neural core of an image-to-HTML table recognition pipeline: the
//! structure-token grammar, text-line to cell assignment, HTML assembly,
//! and TEDS scoring, plus a synthetic data harness.

pub mod assemble;
pub mod assignment;
pub mod dataset;
pub mod geometry;
pub mod pipeline;
pub mod structure;
pub mod synth;
pub mod table;
pub mod teds;
