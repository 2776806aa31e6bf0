//! Reversal potentials and reversal permanent charges for two-ion
//! Poisson–Nernst–Planck channel flow in the singular limit.
//!
//! The [`reduced`] module holds the algebraic zero-current system, [`solvers`]
//! its root finders and closed forms, [`profile`] the reconstruction of the
//! full singular orbit together with the matching-residual check, and [`bvp`]
//! a finite-ε boundary-value solver used as ground truth.

pub mod bvp;
pub mod error;
pub mod geometry;
pub mod profile;
pub mod quadrature;
pub mod reduced;
pub mod solvers;

pub use error::{Error, Result};
pub use geometry::{resistance_integral, ChannelGeometry, Profile};
pub use reduced::{
    b_of_a, g1, g2, partials, BathConditions, Partials, ReducedSetup, ReducedState, Transport,
};
pub use solvers::{
    ghk_reversal, reversal_charge, reversal_charge_exists, reversal_potential, solve, solve_a,
    solve_state, sweep, vrev_small_q0, zero_current_flux, ReversalChargeResult,
    SmallChargeExpansion, SolveResult, SweepInputs, SweepOutcome, SweepParameter, SweepRow,
};
