//! Unfitted boundary algebraic equations on Cartesian grids.
//!
//! Solves `-Δu + σu = f` with Dirichlet data on implicitly defined 3D domains.
//! The volumetric 7-point finite-difference system is reduced to dense
//! boundary equations whose kernels are free-space lattice Green's functions.
//! Those equations are solved with GMRES and the volume solution is rebuilt
//! with two sine-transform solves on an auxiliary box.
//!
//! Module map:
//!
//! * [`lgf`]: lattice Green's function evaluation and symmetry-reduced tables.
//! * [`geometry`]: level sets, auxiliary box, point classification and collocation.
//! * [`lattice_ops`]: 7-point operator, masked sources, hat-basis closure rows.
//! * [`potentials`]: matrix-free single, double and direct layer operators.
//! * [`boxsolver`]: zero-Dirichlet box solver via type-I sine transforms.
//! * [`krylov`]: full GMRES.
//! * [`pipeline`]: end-to-end solve, convergence studies and output files.

pub mod boxsolver;
pub mod error;
pub mod geometry;
pub mod krylov;
pub mod lattice_ops;
pub mod lgf;
pub mod pipeline;
pub mod potentials;

pub use error::{Error, Result};

/// A point in physical space.
pub type Point3 = [f64; 3];
