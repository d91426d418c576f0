//! Scenario objects: functionals, correlations, strategies and games.

mod correlation;
mod functional;
mod game;
pub mod json;
mod strategy;

pub use correlation::{bias_of_correlation, evaluate_functional, Correlation, JointDistribution};
pub use functional::{
    AsymmetricBellFunctional, CoefficientOracle, Coefficients, FunctionalKind, DENSE_LIMIT,
};
pub use game::{game_value_of_distribution, NonlocalGame, WeightOracle};
pub use strategy::{
    correlation_from_deterministic, correlation_from_quantum, joint_from_deterministic,
    joint_from_quantum, validate_observable, validate_povm, BobResponse, BobSide,
    DeterministicLocalStrategy, LocalModel, Measured, QuantumStrategy, SharedState, Verdict,
    HERMITIAN_TOL, IMAGINARY_RESIDUE_TOL, NEGATIVE_CLIP_TOL,
};
