//! Analysis of linear circuits coupled to semi-infinite quantum transmission lines.
//!
//! The crate covers the whole chain from a lumped component description to
//! its scattering behaviour and its weak-coupling Markov model:
//!
//! * [`circuit`] validates the component (inductance / capacitor matrices and
//!   per-line spectral densities), builds the ohmic state matrices and the
//!   normal modes.
//! * [`spectral`] evaluates spectral densities, memory kernels, the
//!   frequency-dependent resistance and the commutator kernels of the line
//!   fields.
//! * [`freq`] holds the Laplace and frequency domain objects (susceptibility,
//!   scattering matrix, Cayley transform) and the lossless bounded-real /
//!   positive-real checks.
//! * [`timedomain`] propagates the Langevin equation with and without memory
//!   and maps time-zero field data to input and output fields.
//! * [`markov`] performs the van Hove reduction to an A-B-C linear
//!   input-state-output model.
//!
//! Everything is generic over the scalar type (see [`Real`]); the aliases
//! below fix it to `f64`, which is what the tolerances in the tests assume.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod error;
pub mod freq;
pub mod markov;
pub mod quad;
pub mod scalar;
pub mod spectral;
pub mod timedomain;

pub use error::{Error, Result};
pub use scalar::Real;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

/// Dense complex matrix over the scalar `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;

pub type CircuitSpec = circuit::CircuitSpec<f64>;
pub type StateMatrices = circuit::StateMatrices<f64>;
pub type NormalModes = circuit::NormalModes<f64>;
pub type SpectralDensity = spectral::SpectralDensity<f64>;
pub type KernelSamples = spectral::KernelSamples<f64>;
pub type AnalyticTransfer = freq::AnalyticTransfer<f64>;
pub type LbrVerdict = freq::LbrVerdict<f64>;
pub type FieldData = timedomain::FieldData<f64>;
pub type SampledSeries = timedomain::SampledSeries<f64>;
pub type Trajectory = timedomain::Trajectory<f64>;
pub type MarkovModel = markov::MarkovModel<f64>;
pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type Complex64 = Complex<f64>;
