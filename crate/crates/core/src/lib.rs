//! Penalized fractional magnetic Choquard problems on periodic grids.
//!
//! The rescaled equation
//! `(-Δ)^s_{A_ε} u + V(εx) u = (|x|^{-μ} ∗ G(εx, |u|²)) g(εx, |u|²) u`
//! is discretized on `[-L, L)^N` and its mountain-pass solution is found by
//! minimizing the energy over the Nehari manifold.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod nonlinearity;
pub mod operators;
pub mod problem;
pub mod sampling;
pub mod solver;
pub mod special;

pub use config::{
    rescaled_grid, validate_config, ElectricPotential, MagneticMode, MagneticPotential, PotentialSpec, ProblemConfig,
    Region, RescaledGrid, ValidationReport,
};
pub use diagnostics::{CheckResult, Status};
pub use energy::{EnergyReport, Functional, LinearPart, NehariScalar};
pub use error::{Error, Result};
pub use field::Field;
pub use grid::{GridSpec, Point};
pub use io::{load_field, save_field, FieldMeta, RunConfig, RunManifest};
pub use nonlinearity::{calibrate_ell0, PenalizationParams, PowerNonlinearity};
pub use operators::{riesz_convolve, spectral_frac_laplacian, HartreeCache, NonlocalQuadrature, QuadratureOptions};
pub use problem::{LimitDiscretization, PenalizationSetup, Problem};
pub use solver::{solve_limit, solve_penalized, sweep_epsilon, SolveReport, SolverOptions, SweepReport};
