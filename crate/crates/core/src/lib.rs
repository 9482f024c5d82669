//! Discretizable distance geometry: instance model, Euclidean distance
//! matrices, trilateration, Branch-and-Prune enumeration and solution
//! counting.

pub mod bp;
pub mod counting;
pub mod edm;
pub mod experiments;
pub mod generator;
pub mod instance;
pub mod sidecar;
pub mod trilateration;

mod util;
