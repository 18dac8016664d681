//! Stochastic Bregman subgradient optimization over Legendre kernels.
//!
//! The crate provides:
//!
//! - blockwise and coordinatewise polynomial Legendre kernels next to the
//!   Euclidean one, with exact value / gradient / conjugate-gradient /
//!   Bregman-distance / Hessian computations ([`kernel`]);
//! - finite-sum objectives exposing conservative-field elements with
//!   deterministic tie-breaking, plus reshuffling and iid samplers over a
//!   fixed, documented PRNG ([`oracle`], [`rng`]);
//! - a certified Bregman forward-backward solver for separable composite
//!   subproblems ([`prox`]);
//! - the subgradient-method family: exact and preconditioned plain steps,
//!   single-timescale momentum in exact and preconditioned forms, and the
//!   proximal variant, driven by a reproducible trace-writing run loop
//!   ([`optim`], [`schedule`], [`trace`]);
//! - dual-path interpolation, time-axis bookkeeping, and trace summaries
//!   ([`diagnostics`]);
//! - desk-scale nonsmooth test problems with independent ground-truth
//!   oracles ([`problems`]), and straight-line reference loops for
//!   equivalence checks ([`check`]).
//!
//! With the default `parallel` feature, full-sum evaluation, the grid
//! oracle, and sweep-style workloads fan out over rayon with fixed chunk
//! boundaries, so results are bitwise identical to the sequential build.

// Guards written as `!(x > 0.0)` intentionally reject NaN along with the
// wrong sign.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blocked;
pub mod check;
pub mod diagnostics;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod optim;
pub mod oracle;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod root;
pub mod schedule;
pub mod trace;

pub use blocked::BlockedVector;
pub use error::{Error, Result};
pub use kernel::{BlockPolynomialKernel, CoordPolynomialKernel, EuclideanKernel, Kernel};
pub use optim::{run, Method, OptimizerState, RunConfig};
pub use oracle::{ConservativeOracle, FiniteSumObjective, Sampler, SamplerMode};
pub use prox::{Certificate, ConstraintSet, Regularizer};
pub use schedule::Schedule;
pub use trace::{TraceRecord, TraceSink};
