//! Hodge splitting `V = V1 + V2` with `div_{L*} V1 = 0` and `V2 = grad_L phi2`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{ScalarField, VectorField};
use crate::norms::lp_norm;
use crate::operators::{div_l_adjoint, grad_l};
use crate::spectral::inverse_laplacian;
use crate::system::EllipticSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRatio {
    pub p: f64,
    /// `||V1||_p / ||V||_p`
    pub div_free: f64,
    /// `||V2||_p / ||V||_p`
    pub exact: f64,
}

#[derive(Clone, Debug)]
pub struct HodgeResult {
    pub div_free: VectorField,
    pub exact: VectorField,
    pub potential: ScalarField,
    /// `||div_{L*} V1||_2 / ||V||_2`
    pub residual_div: f64,
    pub norm_ratios: Vec<NormRatio>,
}

/// Splits `v`. The potential solves `Delta_L phi2 = div_{L*} V` with the
/// mean (and the modes with vanishing wavenumber) projected out.
pub fn hodge_decompose(sys: &EllipticSystem, v: &VectorField, p_list: &[f64]) -> Result<HodgeResult> {
    let div = div_l_adjoint(sys, v)?;
    let potential = inverse_laplacian(sys, &div)?;
    let exact = grad_l(sys, &potential)?;
    let div_free = v.sub(&exact)?;
    let norm = v.l2_norm();
    let residual_div = if norm > 0.0 { div_l_adjoint(sys, &div_free)?.l2_norm() / norm } else { 0.0 };
    let norm_ratios = p_list
        .iter()
        .map(|&p| {
            let base = lp_norm(v, p)?;
            let ratio = |x: f64| if base > 0.0 { x / base } else { 0.0 };
            Ok(NormRatio { p, div_free: ratio(lp_norm(&div_free, p)?), exact: ratio(lp_norm(&exact, p)?) })
        })
        .collect::<Result<_>>()?;
    Ok(HodgeResult { div_free, exact, potential, residual_div, norm_ratios })
}
