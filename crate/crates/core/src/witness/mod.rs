//! Explicit witness pairs `(V, W)` whose products reproduce prescribed
//! functions under certified norm and vanishing constraints.

mod constructions;
mod cutoff;
mod pair;
mod rescale;

pub use constructions::{
    factorize_phi, gradient_norm, normalize_gradient, witness_large_p, witness_small_p, witness_unit_ball, FactorSide,
};
pub use cutoff::{cutoff_gradient_norm, gaussian_bump, make_cutoff, mollifier_bump, odd_gaussian_bump, CutoffSpec};
pub use pair::{
    certify, conjugate_exponent, Budget, Certificate, CertificateEntry, DcFamily, Generator, NormTarget, WitnessKind,
    WitnessPair, BUDGET_TOL, FACTOR_PRODUCT_TOL, PRODUCT_TOL, VANISHING_TOL,
};
pub use rescale::rescale_to_ball;
