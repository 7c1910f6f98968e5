//! One-bit total-variation denoising of node signals on contact graphs, with
//! networked SIS/SIR simulation, forecasting, parameter recovery and an
//! experiment harness.

pub mod denoise;
pub mod epidemic;
pub mod estimation;
pub mod graph;
pub mod harness;
pub mod rng;
