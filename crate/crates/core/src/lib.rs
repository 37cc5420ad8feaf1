#![no_std]
extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod bvpsolver;
pub mod coefficients;
pub mod counterexample;
pub mod error;
pub mod funcestim;
pub mod geometry;
pub mod greenfn;
pub mod linalg;
pub mod potentials;
pub mod quad;
pub mod stats;
pub mod sunrise;
