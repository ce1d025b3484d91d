//! Interpretable additive image classification and utility scoring.

pub mod cli;
pub mod data;
pub mod harness;
pub mod ius;
pub mod neural;
pub mod pfm;
pub mod plane;
