//! Simulation laboratory for bias, variance and prediction error of linear
//! smoothers under fixed (in-sample) and random (out-of-sample) designs.
//!
//! The crate is layered bottom-up:
//!
//! * [`matrix`], [`data`], [`rng`]: dense matrices, the dataset container and
//!   reproducible random streams;
//! * [`dgp`]: ground-truth functions and samplers;
//! * [`smoothers`]: k-NN and (minimum-norm) least squares as weight vectors;
//! * [`analysis`]: exact bias/variance functionals, the neighbor-matching /
//!   averaging bias split, and Monte Carlo oracles;
//! * [`experiments`]: seeded, replicated sweeps producing long-format tables.

pub mod analysis;
pub mod data;
pub mod dgp;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod smoothers;

pub use analysis::{BiasReport, ErrorSummary, McEstimate, Setting};
pub use data::{Dataset, NoiseModel};
pub use dgp::{DgpSpec, InputLaw, Truth};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use rng::{make_rng, SeedSpec, SimRng};
pub use smoothers::{SmootherSpec, WeightVector};
