//! Numerical solver for a string coupled to two boundary point masses.
//!
//! The boundary particles turn the string's eigenproblem into one with
//! eigenvalue-dependent boundary conditions. Rewriting it on the measure
//! `alpha_0 delta_0 + dx + alpha_1 delta_1` makes it self-adjoint; this crate
//! calibrates that measure ([`model`]), provides the calculus on it
//! ([`mufunc`]), solves the spectrum ([`spectrum`]), evolves Cauchy data
//! ([`dynamics`]) and computes one-particle quantities ([`fock`]).

pub mod dynamics;
pub mod error;
pub mod fit;
pub mod fock;
pub mod grid;
pub mod model;
pub mod mufunc;
pub mod oracle;
pub mod roots;
pub mod spectrum;

pub use dynamics::{Basis, CauchyData, ModeCoefficients};
pub use error::{Error, Result};
pub use fock::{FockReport, OneParticleVector, Verdict};
pub use grid::{GridSpec, Quadrature};
pub use model::{calibrate, BranchSign, CalibratedMeasure, ModelParams, Selection, CUBIC_TOL};
pub use mufunc::{Jet, MuFunction};
pub use spectrum::{Mode, ModeClass, Spectrum};
