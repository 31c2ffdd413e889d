//! Up-right lattice paths in a random environment.
//!
//! This crate holds the pure algorithmic core: environments of independent
//! weights, exact path counting for three path ensembles (the full rectangle,
//! paths forced through ordered waypoints, and paths avoiding a central hole),
//! uniform path sampling, the quenched law of normalized path energies and its
//! distance to the standard Gaussian, the scaling statistics that control
//! quenched Gaussian behaviour, and last-passage / polymer comparators.
//!
//! The crate is `no_std` and only needs `alloc`. IO, file formats, the
//! parallel experiment harness and the CLI live in the `qclt` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod environment;
pub mod error;
pub mod lattice_paths;
pub mod lpp_polymer;
pub mod math;
pub mod quenched;
pub mod rng;
pub mod scaling;

pub use environment::{Environment, Family, RawSampler, WeightDistribution};
pub use error::{Error, Result};
pub use lattice_paths::{
    Cell, Constraint, CountOptions, CountTable, EnsembleFamily, HoleSpec, PathEnsemble, Step,
    UpRightPath,
};
