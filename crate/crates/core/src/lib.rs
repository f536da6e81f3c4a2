//! Random transpositions on contingency tables.
//!
//! Tables with fixed margins λ, μ index the double cosets S_λ\S_n/S_μ. Random
//! transpositions on S_n lump to a reversible chain on these tables with
//! Fisher-Yates stationary law. This crate enumerates the tables, builds that
//! chain and its companions exactly, computes closed-form spectra with a
//! brute-force oracle beside them, and provides the mixing bounds and χ²
//! analysis that follow from the spectral picture.

pub mod chains;
pub mod eigenfunctions;
pub mod error;
pub mod mixing;
pub mod partitions;
pub mod rational;
pub mod spectral;
pub mod stats;
pub mod tables;

pub use chains::{ChainKernel, KernelKind};
pub use error::{Error, Result};
pub use partitions::Partition;
pub use rational::Rational;
pub use spectral::{Spectrum, SpectrumEntry};
pub use tables::{ContingencyTable, Permutation, ThreeWayTable};
