//! Numerical bifurcation toolkit for one-dimensional cross-diffusion systems.

pub mod discretization;
pub mod eigen;
pub mod functions;
pub mod linalg;
pub mod quadrature;
pub mod semitrivial;
pub mod models;
pub mod system;
pub mod curves;
