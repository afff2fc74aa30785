//! Local-measurement estimation of a spatially varying diffusivity in the
//! one-dimensional stochastic heat equation.

pub mod asymptotics;
pub mod estimators;
pub mod fd;
pub mod harness;
pub mod kernels;
pub mod measurements;
pub mod quadrature;
pub mod spectral;
