//! Simulation and verification toolkit for certifying that an unknown
//! unitary channel is the identity or at least ε away from it in diamond
//! distance.
//!
//! * [`linalg`]: small dense complex matrices, unitaries and their spectra.
//! * [`ensembles`]: Haar sampling, single-basis rotations, ε-CUE and ε-uniform eigenangles.
//! * [`certify`]: diamond distance, random-state testing and the Hadamard-test certifier.
//! * [`qsvt`]: the coherent certifier built on a rescaled Chebyshev polynomial.
//! * [`bounds`]: closed-form lower and upper bounds on query counts.
//! * [`experiment`]: batch runs and CSV output.

pub mod bounds;
pub mod certify;
pub mod ensembles;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod qsvt;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, EigenangleSet, StateVector, UnitaryMatrix, C64};
