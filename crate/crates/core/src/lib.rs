//! Numerical laboratory for graphons with geometric structure.
//!
//! The crate builds graphons from closed-form sphere kernels and from heat
//! kernels on the two Gordon–Webb–Wolpert isospectral drums, and checks their
//! spectral, metric and combinatorial properties together with the stability
//! of synchronized states in the graphon Kuramoto model.
//!
//! Module map:
//!
//! * [`geometry`]: drum polygons, structured triangle meshes, inscribed circles.
//! * [`fem`]: P1 stiffness/mass assembly, shift-invert Lanczos eigensolver,
//!   eigenfunction evaluation and heat content.
//! * [`graphon`]: discretized graphons and their analyses.
//! * [`dynamics`]: graphon Kuramoto integration and linear stability.
//! * [`cli`]: the `graphonlab` command-line front end.
//!
//! All inner products use the uniform probability measure `dμ = dx / |Ω|`, so
//! the heat kernel used throughout is `|Ω|` times the Lebesgue heat kernel.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod graphon;
pub mod linalg;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
