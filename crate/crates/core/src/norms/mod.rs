//! Discrete estimators of L^p, maximal functions, h1 and bmo norms.

mod balls;
pub(crate) mod lp;
mod mollifier;

pub use balls::{ball_volume, bmo_norm, hl_maximal, BallFamily, BallSpec, BmoEstimate};
pub use lp::{lp_norm, pair, PointwiseModulus};
pub use mollifier::{
    bump_normalization, bump_profile, grand_maximal, h1_norm, mollify, unit_ball_volume, MollifierSpec,
};
