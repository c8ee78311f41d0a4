//! Loop-erased random walks on lattice approximations of finitely connected
//! domains in the upper half-plane, the continuous LERW Loewner evolution
//! with its computed drift, and Monte Carlo checks tying the two together.

pub mod cli;
pub mod continuous;
pub mod domain;
pub mod error;
pub mod field;
pub mod geom;
pub mod grid;
pub mod harmonic;
pub mod io;
pub mod linalg;
pub mod loewner;
pub mod rng;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
