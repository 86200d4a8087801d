//! Newton–Krylov solver for the singular Toda system on a flat (or
//! conformally flat) torus, with the diagnostics that go with it.

mod fit;
mod identities;
mod newton;
mod noise;
mod problem;
mod uniqueness;

pub use fit::{asymptotic_fit, convergence_gap, AsymptoticFit};
pub use identities::{verify_identities, IdentityReport};
pub use newton::{newton_solve, IterationLog, SolveStatus, TodaState};
pub use noise::band_limited_noise;
pub use problem::{
    DivergenceThresholds, Epsilon, SolverOptions, TodaProblem,
};
pub use uniqueness::{uniqueness_probe, UniquenessReport};
