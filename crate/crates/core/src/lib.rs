//! Separability eigenvalues and optimal entanglement witnesses for
//! distinguishable particles, bosons and fermions.

pub mod decomp;
pub mod error;
pub mod io;
pub mod linalg;
pub mod solver;
pub mod states;
pub mod tensor;
pub mod witness;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use solver::{Observable, Partition, SEProblem, SESolution};
pub use tensor::{DensityOperator, SpaceConfig, StateVector, Statistics};
pub use witness::{build_witness, detect, expectation, BoundSource, Verdict, Witness, WitnessForm};
