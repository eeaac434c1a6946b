//! Numerical engine for open-loop Stackelberg strategies in linear-quadratic
//! stochastic differential games whose dynamics and costs remember the whole
//! state path ("elephant memory": the running integral of the state enters
//! drift, diffusion and running cost).
//!
//! Pipeline, in dependency order:
//!
//! 1. [`riccati`] - backward value kernels of both players and the control
//!    weight denominators;
//! 2. [`leader`] - coefficients of the reduced leader problem after the
//!    follower's response is absorbed, and their stacked two-block form;
//! 3. [`gamma`] - the coupled kernel pair `(Gamma, Lambda)` that represents
//!    the backward adjoint states as functions of the forward stacked state;
//! 4. [`adjoint`] - deterministic reduction of the anticipated backward
//!    equations for the affine offsets;
//! 5. [`sim`] - feedback-gain synthesis and Euler-Maruyama simulation of the
//!    closed loop;
//! 6. [`cost`] - Monte Carlo cost evaluation against the closed-form optimal
//!    values, plus stationarity diagnostics;
//! 7. [`advertising`] - the dynamic cooperative-advertising scenario and its
//!    figure-data export.
//!
//! Everything is sampled on one uniform grid over the doubled horizon
//! `[0, 2T]` (see [`grid`]); anticipated terms read coefficient functions
//! through the two window transforms in [`memory`].

pub mod advertising;
pub mod adjoint;
pub mod coeffs;
pub mod config;
pub mod cost;
pub mod csvout;
pub mod error;
pub mod gamma;
pub mod grid;
pub mod leader;
pub mod linalg;
pub mod memory;
pub mod riccati;
pub mod sim;
pub mod verify;

pub use coeffs::{CoefficientFunctions, ConstantCoefficients, GameCoefficients};
pub use error::{Error, Result};
pub use grid::{MatrixFunction, Span, TimeGrid};
pub use memory::{MemoryKind, PathSample, StarVariant};
pub use riccati::{AssumptionReport, RiccatiSolution};
