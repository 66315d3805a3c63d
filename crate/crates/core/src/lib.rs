//! Spectral convolutions on directed graphs through the holomorphic
//! functional calculus.
//!
//! Matrix convention throughout: `W[i][j]` is the weight of the edge `j → i`,
//! so in-degrees are row sums and out-degrees are column sums.

pub mod cmat;
pub mod digraph;
pub mod holocalc;
pub mod coarse;
pub mod network;
pub mod experiments;
pub mod io;

pub use nalgebra;
