// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod comparable;
pub mod corpus;
pub mod cutoff;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod grid;
pub mod lorentz;
pub mod snapshot;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Grid, ScalarField, SpectralField, VectorField2};
pub use spectral::{Axis, Spectral};
