//! Travelling waves of the degenerate Fisher-KPP equation
//! `∂t I = (1-I) ΔI + I(1-I)`.
//!
//! The planar wave profiles `u(z)`, `z = x·e - ct`, solve the singular
//! second-order problem `(1-u)u'' + cu' + u(1-u) = 0`. Through the
//! transformation `h = (u')² ∘ u⁻¹` this becomes a first-order Cauchy
//! problem for `h` on `(0, 1)`, which this crate integrates, classifies by
//! the shooting value `α = h(1/2)`, and inverts back into wave profiles
//! with certified tail behavior.
//!
//! Module map:
//!
//! * [`speed`] — admissible speeds and the roots `λ∓` of `λ² - cλ + 1 = 0`,
//! * [`ode`] — the singular right-hand side and its chart-based adaptive
//!   integrator,
//! * [`shooting`] — the distinguished solutions `h₀` and `H`, all
//!   `α`-thresholds, and the wave classification,
//! * [`wave`] — reconstruction of `u(z)`, tails, convexity and the speed
//!   identity,
//! * [`verify`] — numerical certificates for the comparison functions,
//!   bootstrap recursions and residual identities,
//! * [`kernel`] — the contact-kernel focusing check connecting the epidemic
//!   model to the local equation,
//! * [`cli`] — reproducible commands with CSV/JSON/SVG outputs.

pub mod cli;
pub mod error;
pub mod kernel;
pub mod ode;
pub mod output;
pub mod shooting;
pub mod speed;
pub mod tolerance;
pub mod verify;
pub mod wave;

pub use error::{Error, Result};
pub use ode::{integrate, rhs, Direction, EndBehavior, HTrace, TraceEvent, TraceSample};
pub use shooting::{
    alpha_max, alpha_switch, classify, decay_exponent, small_speed_scan, solve_large_iteration,
    solve_small, ThresholdTable, WaveClass, WaveTag,
};
pub use speed::{bell, lambda_pm, Speed};
pub use tolerance::ToleranceSet;
pub use verify::{
    bootstrap_kn, bootstrap_mn, check_subsolution, check_supersolution, epsilon_recursion,
    tw_residual, weak_residual, Bump, CandidateFunction, Certificate, TestFunction,
};
pub use wave::{
    convexity_pattern, evaluate_u, left_tail, reconstruct, right_tail_rate, speed_identity,
    LeftTailResult, WaveProfile, ZStar,
};

/// Crate version string embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
