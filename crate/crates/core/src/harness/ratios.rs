use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::norms::{h1_norm, lp_norm, MollifierSpec};
use crate::operators::{apply_l_adjoint, curl_l, div_l_adjoint, dot, grad_l, gradient, PairingConvention};
use crate::spectral::check_system_grid;
use crate::system::EllipticSystem;
use crate::witness::{conjugate_exponent, VANISHING_TOL};

/// Denominators below this multiple of `sup|V| sup|W| |box|` are degenerate.
pub const DEGENERATE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl Ratio {
    fn checked(lhs: f64, rhs: f64, floor: f64) -> Result<Self> {
        if rhs.is_nan() || rhs <= floor {
            return Err(Error::Degenerate { denominator: rhs, floor });
        }
        Ok(Self { lhs, rhs, ratio: lhs / rhs })
    }
}

/// Shared inputs of the h1 ratios.
#[derive(Clone, Debug)]
pub struct RatioSetup<'a> {
    pub sys: &'a EllipticSystem,
    pub p: f64,
    pub mollifier: &'a MollifierSpec,
    pub pairing: PairingConvention,
}

impl RatioSetup<'_> {
    fn q(&self) -> Result<f64> {
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(Error::InvalidExponent(self.p));
        }
        Ok(conjugate_exponent(self.p))
    }

    fn floor(&self, v: &VectorField, w: &VectorField) -> f64 {
        DEGENERATE_FLOOR * v.sup_norm() * w.sup_norm() * v.grid().volume()
    }

    fn product_h1(&self, v: &VectorField, w: &VectorField) -> Result<f64> {
        h1_norm(&dot(v, w, self.pairing)?, self.mollifier)
    }
}

/// `||div_{L*} V||_2 / sum_j ||L_j* V_j||_2`, zero for `V = 0`.
pub fn div_residual(sys: &EllipticSystem, v: &VectorField) -> Result<f64> {
    let div = div_l_adjoint(sys, v)?.l2_norm();
    let scale: f64 =
        (0..sys.n()).map(|j| apply_l_adjoint(sys, j, v.component(j)).map(|f| f.l2_norm())).sum::<Result<f64>>()?;
    Ok(if scale > 0.0 { div / scale } else { div })
}

/// `||V.W||_h1 / (||V||_p ||W||_p' + ||div_{L*} V||_p ||W||_p' + ||V||_p ||curl_L W||_p')`.
pub fn ratio_theorem_a(setup: &RatioSetup, v: &VectorField, w: &VectorField) -> Result<Ratio> {
    let (p, q) = (setup.p, setup.q()?);
    let vp = lp_norm(v, p)?;
    let wq = lp_norm(w, q)?;
    let div = lp_norm(&div_l_adjoint(setup.sys, v)?, p)?;
    let curl = lp_norm(&curl_l(setup.sys, w)?, q)?;
    let rhs = vp * wq + div * wq + vp * curl;
    Ratio::checked(setup.product_h1(v, w)?, rhs, setup.floor(v, w))
}

/// `||V.grad_L phi||_h1 / ((||V||_p + ||div_{L*} V||_p) ||grad_L phi||_p')`.
pub fn ratio_theorem_12(setup: &RatioSetup, v: &VectorField, phi: &ScalarField) -> Result<Ratio> {
    let (p, q) = (setup.p, setup.q()?);
    let w = grad_l(setup.sys, phi)?;
    let vp = lp_norm(v, p)?;
    let div = lp_norm(&div_l_adjoint(setup.sys, v)?, p)?;
    let rhs = (vp + div) * lp_norm(&w, q)?;
    Ratio::checked(setup.product_h1(v, &w)?, rhs, setup.floor(v, &w))
}

/// `||V.W||_h1 / (||V||_p (||W||_p' + ||curl_L W||_p'))` for `div_{L*} V = 0`.
pub fn ratio_theorem_13(setup: &RatioSetup, v: &VectorField, w: &VectorField) -> Result<Ratio> {
    let (p, q) = (setup.p, setup.q()?);
    let residual = div_residual(setup.sys, v)?;
    if residual > VANISHING_TOL {
        return Err(Error::Hypothesis(format!(
            "V is not div_L*-free: relative residual {residual:e} exceeds {VANISHING_TOL:e}"
        )));
    }
    let vp = lp_norm(v, p)?;
    let rhs = vp * (lp_norm(w, q)? + lp_norm(&curl_l(setup.sys, w)?, q)?);
    Ratio::checked(setup.product_h1(v, w)?, rhs, setup.floor(v, w))
}

/// `||grad phi||_p / ||grad_L phi||_p` with the plain gradient upstairs.
pub fn ratio_calderon(sys: &EllipticSystem, phi: &ScalarField, p: f64) -> Result<Ratio> {
    check_system_grid(sys, phi.grid())?;
    let lhs = lp_norm(&gradient(phi)?, p)?;
    let rhs = lp_norm(&grad_l(sys, phi)?, p)?;
    let floor = DEGENERATE_FLOOR * lhs;
    if rhs.is_nan() || rhs <= floor {
        return Err(Error::Degenerate { denominator: rhs, floor });
    }
    Ok(Ratio { lhs, rhs, ratio: lhs / rhs })
}

/// `max |xi| / sqrt(sum_j |lambda_j(xi)|^2)` over the wave vectors
/// `0 < |k| <= band` of the box. For band-limited fields this bounds the
/// `p = 2` Calderon ratio.
pub fn calderon_oracle_bound(sys: &EllipticSystem, grid: &GridSpec, band: usize) -> Result<f64> {
    check_system_grid(sys, grid)?;
    let dim = grid.dim();
    let b = band as i64;
    let mut k = vec![-b; dim];
    let mut xi = vec![0.0; dim];
    let mut best: f64 = 0.0;
    loop {
        let k2: i64 = k.iter().map(|x| x * x).sum();
        if k2 > 0 && k2 <= b * b {
            for a in 0..dim {
                xi[a] = std::f64::consts::TAU * k[a] as f64 / grid.box_lengths()[a];
            }
            let xi2: f64 = xi.iter().map(|x| x * x).sum();
            best = best.max((xi2 / sys.laplacian_symbol(&xi)?).sqrt());
        }
        let Some(axis) = (0..dim).rev().find(|&a| k[a] < b) else { break };
        k[axis] += 1;
        k[axis + 1..].iter_mut().for_each(|x| *x = -b);
    }
    Ok(best)
}
