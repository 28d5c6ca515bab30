//! Meshless-methods laboratory: sampling inequalities, fractional Sobolev
//! norms and unsymmetric kernel collocation for Poisson problems.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod function;
pub mod geometry;
pub mod jet;
pub mod kernels;
pub mod lab;
pub mod linalg;
pub mod quadrature;
pub mod poisson;
pub mod solver;
pub mod sobolev;
pub mod testing;
pub mod trial;
pub mod verifier;

pub use error::{Error, Result};
pub use function::{Analytic, FunctionSample};
pub use geometry::{ComponentId, Domain, Face, PointSet, Region, Strategy};
pub use kernels::{Kernel, KernelConfig, KernelFamily};
pub use quadrature::QuadSpec;
pub use sobolev::{SamplingParameters, SobolevOrder};
pub use trial::{TrialFunction, TrialSpace};
pub use poisson::{manufactured, PoissonProblem};
pub use testing::{discrete_norm, discretize, TestDiscretization};
pub use solver::{assemble, solve_least_squares, CollocationSystem, SolveReport};
pub use lab::{fit_rate, predicted_order, run_study, ConvergenceReport, StudyConfig};
