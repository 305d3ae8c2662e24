//! Accelerated mirror descent.
//!
//! This crate implements a family of first-order methods built on a mirror
//! function `φ`: plain mirror descent, forward and backward accelerated
//! mirror descent (Acc-MD), a perturbed variant with a homotopy schedule for
//! merely convex objectives, and a composite variant for objectives of the
//! form `f + g` with a proximable `g`.
//!
//! Next to the solvers sits a certification layer ([`certify`]) that
//! evaluates the Lyapunov energies driving the convergence proofs and checks
//! the exact algebraic identities they satisfy, the relative smoothness and
//! generalized Cauchy–Schwarz bounds, and the rate laws of the iterates.
//!
//! ## Layout
//!
//! * [`linalg`] – vectors, dense/diagonal matrices, norms, power iteration.
//! * [`mirror`] – quadratic, entropy and quartic mirror functions and the
//!   closed-form prox steps.
//! * [`objective`] – smooth objectives, nonsmooth terms, problem generators,
//!   GCS constant estimators and dataset ingestion.
//! * [`solver`] – the iteration schemes, stopping rules and [`Trace`].
//! * [`certify`] – Lyapunov evaluators, identity checks and rate fits.
//! * [`cli`] – the `accmd` command line (`run`, `verify`, `bench`, `gen`).
//!
//! ## Example
//!
//! ```
//! use accmd::{objective, solver::{Algorithm, SolverConfig, run}, linalg::Vector};
//!
//! let problem = objective::make_log_linear(&Vector::from(vec![3.0, 4.0])).unwrap();
//! let config = SolverConfig::new(Algorithm::AccMdForward).with_max_iters(2000);
//! let trace = run(&problem, &config, None).unwrap();
//! assert!(trace.converged());
//! ```

// `!(a > b)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod mirror;
pub mod objective;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use solver::Trace;
