//! Covariance numerics: phase propagation, algebraic steady states, the
//! periodic steady state of a visit pattern and the revisit lower bound.

mod periodic;
mod propagate;
mod steady;
pub mod transfer;

pub use periodic::{
    periodic_steady_state, propagate_phase, scalar_visit_peaks, PeakSet, PeriodicConfig, TargetTimeline,
};
pub use propagate::{
    propagate_observed, propagate_observed_with, propagate_unobserved, LyapunovStep,
    OdeTolerances,
};
pub use steady::{
    lyapunov_residual, riccati_residual, solve_steady_states, SteadyStates, SteadyTable,
    STEADY_TOLERANCE,
};

use crate::model::TargetNetwork;

/// `L_i(t̄) = g_i(‖propagate_unobserved(Ω_ss, t̄)‖)`: the smallest peak any
/// schedule can achieve if target `i` is ever left alone for `t̄`.
pub fn lower_bound_l(network: &TargetNetwork, steady: &SteadyTable, i: usize, t_bar: f64) -> f64 {
    let t = &network.targets[i];
    let w = propagate_unobserved(&steady.get(i).omega_ss, &t.a, &t.q, t_bar.max(0.0));
    network.cost(i, &w)
}

/// Cost of a target that is never observed: `g_i(‖Ω^∞‖)`, or `+∞` when the
/// drift is not Hurwitz.
pub fn never_observed_cost(network: &TargetNetwork, steady: &SteadyTable, i: usize) -> f64 {
    match &steady.get(i).omega_inf {
        Some(w) => network.cost(i, w),
        None => f64::INFINITY,
    }
}
