//! First-order convex optimization toolkit: accelerated proximal gradient,
//! linearized augmented Lagrangian and linearized ADMM solvers with
//! extrapolation, their classical baselines, and a certificate engine that
//! checks rate bounds against live iterates.

// NaN must fail parameter checks, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod error;
pub mod gladmm;
pub mod glalm;
pub mod gpgm;
pub mod io;
pub mod linalg;
pub mod problems;
pub mod prox;
pub mod schedules;
pub mod stopping;
pub mod subproblem;
pub mod trace;

pub use error::{Error, Result};
