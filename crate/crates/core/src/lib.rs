//! Limit metric graphs of maximally degenerating families of flat surfaces,
//! plumbed flat fibers at concrete parameters, and the numerical machinery that
//! checks the fibers converge to the limit graph in the Gromov-Hausdorff sense.

pub mod asymptotics;
pub mod degeneration;
pub mod error;
pub mod export;
pub mod fiber;
pub mod gh;
pub mod graph;
pub mod number;
pub mod selftest;
pub mod specfile;

pub use error::{Error, Result};
pub use number::{Rational, Valuation};
