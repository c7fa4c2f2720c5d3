//! Non-conforming least-squares spectral element solver for the stationary
//! Stokes equations with non-standard boundary conditions.
//!
//! The solver minimizes one quadratic functional: squared residuals of the
//! momentum and continuity equations on each element, squared jumps of the
//! unknowns and their first derivatives across interelement faces, and
//! squared boundary-condition residuals in trace norms matched to the
//! regularity of each condition. Eighteen boundary-condition families share
//! the interior machinery; switching families only swaps the boundary terms.

pub mod bench;
pub mod catalog;
pub mod config;
pub mod data;
pub mod eval;
pub mod expr;
pub mod geometry;
pub mod norms;
pub mod operators;
pub mod runner;
pub mod solver;
pub mod spectral;
