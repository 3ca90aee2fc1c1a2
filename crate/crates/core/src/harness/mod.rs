//! Randomized ensembles and ratio experiments.

mod ensemble;
mod experiment;
mod ratios;
mod thm_b;

pub use ensemble::{
    band_limited_scalar, localization_window, random_field, random_field_of_kind, EnsembleSpec, FieldKind, RandomField,
};
pub use experiment::{
    run_experiment, Assertion, BallConfig, CrossCheck, ExcludedTrial, ExperimentConfig, ExperimentReport, RatioSummary,
    Refinement, RefinementRow, TheoremId, ThmBSummary, TrialRecord, CALDERON_REFINEMENT_TOL, CROSS_CHECK_TOL,
    PAIRING_CONSTANT_REFINEMENT_TOL, REFINEMENT_TOL,
};
pub use ratios::{
    calderon_oracle_bound, div_residual, ratio_calderon, ratio_theorem_12, ratio_theorem_13, ratio_theorem_a, Ratio,
    RatioSetup, DEGENERATE_FLOOR,
};
pub use thm_b::{thm_b_lower, witness_family, FamilyMember, ThmBLower, WitnessLayout};
