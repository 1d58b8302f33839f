//! Scaled boundary finite element solver for the Poisson equation on a
//! circular sector of opening angle `theta_max`.
//!
//! The boundary (angular) direction is discretized with nodal Lagrange
//! elements on `(0, theta_max)`; the radial direction is resolved exactly by
//! solving the resulting matrix Euler-Cauchy system. Solutions come out as
//! finite sums of separable terms `c * r^beta * (log r)^k * phi(theta)`, which
//! makes pointwise evaluation, weighted Sobolev norms, and convergence studies
//! against singular exact solutions cheap and robust.
//!
//! The crate is generic over the floating-point scalar (see [`Scalar`]);
//! concrete `f64` aliases for the main types live at the crate root.
//!
//! ```
//! use sbfem::assembly::SeparableLoad;
//! use sbfem::mesh::AngularMesh;
//! use sbfem::solver::{solve, SbfemProblem};
//!
//! // Laplace problem on the reentrant sector of angle 3*pi/2 with the
//! // boundary trace of the singular corner mode r^(2/3) sin(2 theta / 3).
//! let theta_max = 1.5 * std::f64::consts::PI;
//! let mesh = AngularMesh::uniform(theta_max, 16, 2)?;
//! let problem = SbfemProblem::new(mesh, SeparableLoad::empty(), |t: f64| {
//!     (2.0 * t / 3.0).sin()
//! })?;
//! let u = solve(&problem)?;
//!
//! // The singular exponent is recovered by the smallest modal eigenvalue,
//! // and the solution approximates the corner mode in the interior.
//! assert!((u.lambda_min() - 2.0 / 3.0).abs() < 1e-4);
//! let exact = 0.5_f64.powf(2.0 / 3.0) * (0.5 * std::f64::consts::PI).sin();
//! assert!((u.evaluate(0.5, 0.75 * std::f64::consts::PI)? - exact).abs() < 1e-5);
//! # Ok::<(), sbfem::SbfemError>(())
//! ```

// Indexed loops throughout the numerical kernels mirror the matrix notation.
#![allow(clippy::needless_range_loop)]

pub mod assembly;
pub mod error;
pub mod field;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod problems;
pub mod quadrature;
mod scalar;
pub mod solver;
pub mod spectral;

pub use error::{Result, SbfemError};
pub use scalar::Scalar;

/// Angular mesh with `f64` scalars.
pub type AngularMesh64 = mesh::AngularMesh<f64>;
/// Mass/stiffness pair with `f64` scalars.
pub type OperatorPair64 = assembly::OperatorPair<f64>;
/// Modal decomposition with `f64` scalars.
pub type ModalDecomposition64 = spectral::ModalDecomposition<f64>;
/// Problem description with `f64` scalars.
pub type SbfemProblem64 = solver::SbfemProblem<f64>;
/// Semi-discrete solution with `f64` scalars.
pub type SemiDiscreteSolution64 = solver::SemiDiscreteSolution<f64>;
/// Scalar field on the sector with `f64` scalars.
pub type ScalarField64 = field::ScalarField<f64>;
