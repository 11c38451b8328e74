//! Kuramoto oscillators with inertia and Hebbian coupling.
//!
//! * [`pair`]: the reduced two-oscillator system and its closed-form analysis.
//! * [`orbit`]: first-harmonic approximation of the rotating solution.
//! * [`regions`]: revolution-count classification of the `(alpha, omega)` plane.
//! * [`ensemble`]: the full N-oscillator system and order parameters.
//! * [`ode`]: the Runge-Kutta integrators and crossing detection underneath.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` aliases below fix the common double-precision case.

// `!(x > 0)` style checks are kept because they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cubic;
pub mod ensemble;
pub mod error;
pub mod ode;
pub mod orbit;
pub mod pair;
pub mod regions;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type CubicF64 = cubic::Cubic<f64>;
pub type IntegratorConfigF64 = ode::IntegratorConfig<f64>;
pub type TrajectoryF64 = ode::Trajectory<f64>;
pub type RawPairParamsF64 = pair::RawPairParams<f64>;
pub type PairParamsF64 = pair::PairParams<f64>;
pub type PairStateF64 = pair::PairState<f64>;
pub type PairSystemF64 = pair::PairSystem<f64>;
pub type EquilibriumF64 = pair::Equilibrium<f64>;
pub type StabilityReportF64 = pair::StabilityReport<f64>;
pub type PeriodicApproximationF64 = orbit::PeriodicApproximation<f64>;
pub type SweepConfigF64 = regions::SweepConfig<f64>;
pub type SweepResultF64 = regions::SweepResult<f64>;
pub type EnsembleParamsF64 = ensemble::EnsembleParams<f64>;
pub type EnsembleSystemF64 = ensemble::EnsembleSystem<f64>;
pub type EnsembleStateF64 = ensemble::EnsembleState<f64>;
