use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::norms::PointwiseModulus;
use crate::norms::{ball_volume, lp_norm, BallSpec};
use crate::operators::{apply_l_adjoint, grad_l, grad_l_adjoint, gradient};
use crate::spectral::check_system_grid;
use crate::system::EllipticSystem;
use crate::witness::cutoff::{cutoff_gradient_norm, CutoffSpec};
use crate::witness::pair::{
    certify, conjugate_exponent, zero_entry_certificate, Budget, Generator, NormTarget, WitnessKind, WitnessPair,
};

/// Slack on the gradient-norm hypotheses of the generating bump.
const HYPOTHESIS_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorSide {
    Grad,
    Div,
}

fn check_exponent(p: f64, lo: f64, hi: f64, hi_inclusive: bool, range: &'static str) -> Result<()> {
    let upper_ok = if hi_inclusive { p <= hi } else { p < hi };
    if !(p.is_finite() && p > lo && upper_ok) {
        return Err(Error::ExponentRange { p, range });
    }
    Ok(())
}

fn check_pair_indices(sys: &EllipticSystem, i: usize, j: usize) -> Result<()> {
    for index in [i, j] {
        if index >= sys.n() {
            return Err(Error::IndexOutOfRange { index, len: sys.n() });
        }
    }
    if i == j {
        return Err(Error::Hypothesis(format!("indices must differ, got i = j = {i}")));
    }
    Ok(())
}

fn check_support(f: &ScalarField, ball: &BallSpec, name: &str) -> Result<()> {
    let outside = f.sup_where(|x| !ball.contains(x));
    if outside > 0.0 {
        return Err(Error::Hypothesis(format!("{name} is not supported in the ball (|{name}| = {outside:e} outside)")));
    }
    Ok(())
}

/// `||grad u||_{L^q(region)}` with the plain spectral gradient; `None` is the whole box.
pub fn gradient_norm(u: &ScalarField, q: f64, region: Option<&BallSpec>) -> Result<f64> {
    let grad = gradient(u)?;
    let grid = u.grid();
    let mut moduli = grad.modulus_values().into_owned();
    if let Some(ball) = region {
        let mut x = vec![0.0; grid.dim()];
        for (flat, m) in moduli.iter_mut().enumerate() {
            grid.point(flat, &mut x);
            if !ball.contains(&x) {
                *m = 0.0;
            }
        }
    }
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::InvalidExponent(q));
    }
    Ok(crate::norms::lp::lp_of_moduli(&moduli, q, grid.cell_volume()))
}

/// Rescales `u` so that `||grad u||_{L^q(region)} = 1` (zero stays zero).
pub fn normalize_gradient(u: &ScalarField, q: f64, region: Option<&BallSpec>) -> Result<ScalarField> {
    let norm = gradient_norm(u, q, region)?;
    Ok(if norm > 0.0 { u.scale_real(1.0 / norm) } else { u.clone() })
}

fn check_gradient_hypothesis(u: &ScalarField, q: f64, region: Option<&BallSpec>) -> Result<f64> {
    let norm = gradient_norm(u, q, region)?;
    if norm > 1.0 + HYPOTHESIS_SLACK {
        return Err(Error::Hypothesis(format!("||grad u||_{{L^{q}}} = {norm} exceeds 1")));
    }
    Ok(norm)
}

fn basis_pair(grid: &GridSpec, n: usize, entries: Vec<(usize, ScalarField)>) -> Result<VectorField> {
    let mut components: Vec<ScalarField> = (0..n).map(|_| ScalarField::zeros(grid)).collect();
    for (k, f) in entries {
        components[k] = f;
    }
    VectorField::new(components)
}

fn budget(name: &str, target: NormTarget, exponent: f64, bound: f64, derivative_order: i32) -> Budget {
    Budget { name: name.to_string(), target, exponent, bound, derivative_order }
}

fn finish(sys: &EllipticSystem, mut pair: WitnessPair) -> Result<WitnessPair> {
    pair.certificate = certify(sys, &pair)?;
    Ok(pair)
}

struct BallSetup {
    cutoff: CutoffSpec,
    eta_grad: f64,
    volume: f64,
    dim: f64,
}

fn ball_setup(sys: &EllipticSystem, grid: &GridSpec, ball: &BallSpec) -> Result<BallSetup> {
    check_system_grid(sys, grid)?;
    if !(ball.radius.is_finite() && ball.radius > 0.0) {
        return Err(Error::Hypothesis(format!("ball radius {} must be positive", ball.radius)));
    }
    ball.check_fits(grid, 2.0)?;
    let cutoff = CutoffSpec::new(ball.center.clone(), ball.radius);
    let eta_grad = cutoff_gradient_norm(sys, grid, &cutoff)?;
    Ok(BallSetup { cutoff, eta_grad, volume: ball.volume(), dim: grid.dim() as f64 })
}

/// `V = |B|^{1/2-1/p}/(2C) (conj(L_i u) e_j - conj(L_j u) e_i)`,
/// `W = gamma |B|^{-1/p'} grad_L((x_j - x0_j) eta_B)` for `1 < p <= 2`.
pub fn witness_small_p(
    sys: &EllipticSystem,
    u: &ScalarField,
    ball: &BallSpec,
    i: usize,
    j: usize,
    p: f64,
) -> Result<WitnessPair> {
    check_exponent(p, 1.0, 2.0, true, "(1, 2]")?;
    check_pair_indices(sys, i, j)?;
    let grid = u.grid();
    let setup = ball_setup(sys, grid, ball)?;
    check_support(u, ball, "u")?;
    check_gradient_hypothesis(u, 2.0, Some(ball))?;
    let q = conjugate_exponent(p);
    let c = sys.coefficient_bound();
    let gamma = 2f64.powf(-setup.dim / q) / (2.0 * setup.eta_grad + sys.n() as f64 * c);
    let lu = grad_l(sys, u)?;
    let k = setup.volume.powf(0.5 - 1.0 / p) / (2.0 * c);
    let v = basis_pair(
        grid,
        sys.n(),
        vec![(j, lu.component(i).conj().scale_real(k)), (i, lu.component(j).conj().scale_real(-k))],
    )?;
    let w = grad_l(sys, &setup.cutoff.sample_coordinate(grid, j))?.scale_real(gamma * setup.volume.powf(-1.0 / q));
    let expected = lu.component(i).conj().scale_real(gamma / (2.0 * c) * setup.volume.powf(-0.5));
    let constants = BTreeMap::from([
        ("C".to_string(), c),
        ("gamma".to_string(), gamma),
        ("eta_grad_norm".to_string(), setup.eta_grad),
        ("ball_volume".to_string(), setup.volume),
    ]);
    finish(
        sys,
        WitnessPair {
            kind: WitnessKind::SmallP,
            p,
            indices: (i, j),
            v,
            w,
            expected,
            identity_region: Some(ball.clone()),
            support: setup.cutoff.support(),
            constants,
            budgets: vec![budget("v_p", NormTarget::V, p, 1.0, 0), budget("w_q", NormTarget::W, q, 1.0, 0)],
            generators: vec![
                Generator { name: "u".into(), field: u.clone(), support: ball.clone() },
                Generator { name: "eta".into(), field: setup.cutoff.sample(grid), support: setup.cutoff.support() },
            ],
            certificate: zero_entry_certificate(WitnessKind::SmallP, p),
        },
    )
}

/// `V = gamma' |B|^{-1/p} (L_i*(x~_j eta_B) e_j - L_j*(x~_j eta_B) e_i)` built
/// from the cutoff of `ball`.
fn adjoint_coordinate_field(
    sys: &EllipticSystem,
    grid: &GridSpec,
    cutoff: &CutoffSpec,
    i: usize,
    j: usize,
    factor: f64,
) -> Result<VectorField> {
    let xeta = cutoff.sample_coordinate(grid, j);
    basis_pair(
        grid,
        sys.n(),
        vec![
            (j, apply_l_adjoint(sys, i, &xeta)?.scale_real(factor)),
            (i, apply_l_adjoint(sys, j, &xeta)?.scale_real(-factor)),
        ],
    )
}

/// The `p > 2` construction: V from L*-derivatives of the cutoff coordinate,
/// `W = |B|^{1/2-1/p'}/C grad_L u` with `C = N sqrt(n) max{1, |a_jk|}`.
pub fn witness_large_p(
    sys: &EllipticSystem,
    u: &ScalarField,
    ball: &BallSpec,
    i: usize,
    j: usize,
    p: f64,
) -> Result<WitnessPair> {
    check_exponent(p, 2.0, f64::INFINITY, false, "(2, inf)")?;
    check_pair_indices(sys, i, j)?;
    let grid = u.grid();
    let setup = ball_setup(sys, grid, ball)?;
    check_support(u, ball, "u")?;
    check_gradient_hypothesis(u, 2.0, Some(ball))?;
    let q = conjugate_exponent(p);
    let c = sys.gradient_comparison_constant();
    let gamma = 2f64.powf(-setup.dim / p) / (1.0 + 4.0 * setup.eta_grad);
    let v = adjoint_coordinate_field(sys, grid, &setup.cutoff, i, j, gamma * setup.volume.powf(-1.0 / p))?;
    let lu = grad_l(sys, u)?;
    let w = lu.scale_real(setup.volume.powf(0.5 - 1.0 / q) / c);
    let expected = lu.component(i).conj().scale_real(gamma / c * setup.volume.powf(-0.5));
    let constants = BTreeMap::from([
        ("C".to_string(), c),
        ("gamma_prime".to_string(), gamma),
        ("eta_grad_norm".to_string(), setup.eta_grad),
        ("ball_volume".to_string(), setup.volume),
    ]);
    finish(
        sys,
        WitnessPair {
            kind: WitnessKind::LargeP,
            p,
            indices: (i, j),
            v,
            w,
            expected,
            identity_region: Some(ball.clone()),
            support: setup.cutoff.support(),
            constants,
            budgets: vec![budget("v_p", NormTarget::V, p, 1.0, 0), budget("w_q", NormTarget::W, q, 1.0, 0)],
            generators: vec![
                Generator { name: "u".into(), field: u.clone(), support: ball.clone() },
                Generator { name: "eta".into(), field: setup.cutoff.sample(grid), support: setup.cutoff.support() },
            ],
            certificate: zero_entry_certificate(WitnessKind::LargeP, p),
        },
    )
}

/// Unit-ball variant: `B_1 = B(0, 1)`, `W = C^{-1} grad_L u` with `||grad u||_{p'} <= 1`.
pub fn witness_unit_ball(sys: &EllipticSystem, u: &ScalarField, i: usize, j: usize, p: f64) -> Result<WitnessPair> {
    check_exponent(p, 1.0, f64::INFINITY, false, "(1, inf)")?;
    check_pair_indices(sys, i, j)?;
    let grid = u.grid();
    let ball = BallSpec::new(vec![0.0; grid.dim()], 1.0);
    let setup = ball_setup(sys, grid, &ball)?;
    check_support(u, &ball, "u")?;
    let q = conjugate_exponent(p);
    check_gradient_hypothesis(u, q, None)?;
    let c = sys.gradient_comparison_constant();
    let gamma = 2f64.powf(-setup.dim / p) / (1.0 + 4.0 * setup.eta_grad);
    let v = adjoint_coordinate_field(sys, grid, &setup.cutoff, i, j, gamma * setup.volume.powf(-1.0 / p))?;
    let lu = grad_l(sys, u)?;
    let w = lu.scale_real(1.0 / c);
    let expected = lu.component(i).conj().scale_real(gamma / c * setup.volume.powf(-1.0 / p));
    let constants = BTreeMap::from([
        ("C".to_string(), c),
        ("gamma_prime".to_string(), gamma),
        ("eta_grad_norm".to_string(), setup.eta_grad),
        ("ball_volume".to_string(), setup.volume),
    ]);
    finish(
        sys,
        WitnessPair {
            kind: WitnessKind::UnitBall,
            p,
            indices: (i, j),
            v,
            w,
            expected,
            identity_region: Some(ball.clone()),
            support: setup.cutoff.support(),
            constants,
            budgets: vec![budget("v_p", NormTarget::V, p, 1.0, 0), budget("w_q", NormTarget::W, q, 1.0, 0)],
            generators: vec![
                Generator { name: "u".into(), field: u.clone(), support: ball },
                Generator { name: "eta".into(), field: setup.cutoff.sample(grid), support: setup.cutoff.support() },
            ],
            certificate: zero_entry_certificate(WitnessKind::UnitBall, p),
        },
    )
}

/// Writes `phi = V . W` for `phi` supported in `ball`.
///
/// `Grad`: `V = phi e_1`, `W = grad_L(x~_1 eta_B)`.
/// `Div`: `V = L_2*(x~_1 eta_B) e_1 - L_1*(x~_1 eta_B) e_2`, `W = conj(phi) e_2`,
/// so that `div_{L*} V = 0` and the sesquilinear product is `phi`.
pub fn factorize_phi(
    sys: &EllipticSystem,
    phi: &ScalarField,
    ball: &BallSpec,
    side: FactorSide,
    p: f64,
) -> Result<WitnessPair> {
    check_exponent(p, 1.0, f64::INFINITY, false, "(1, inf)")?;
    let grid = phi.grid();
    let setup = ball_setup(sys, grid, ball)?;
    check_support(phi, ball, "phi")?;
    let q = conjugate_exponent(p);
    let star_volume = ball_volume(grid.dim(), 2.0 * ball.radius);
    let xeta = setup.cutoff.sample_coordinate(grid, 0);
    let n = sys.n();
    let (kind, v, w, budgets, constant) = match side {
        FactorSide::Grad => {
            let c1 = star_volume.powf(1.0 / q) * (1.0 + 2.0 * setup.eta_grad);
            let v = basis_pair(grid, n, vec![(0, phi.clone())])?;
            let w = grad_l(sys, &xeta)?;
            let budgets = vec![
                budget("v_p", NormTarget::V, p, lp_norm(phi, p)?, 0),
                budget("div_v_p", NormTarget::DivV, p, lp_norm(&grad_l_adjoint(sys, phi)?, p)?, 1),
                budget("w_q", NormTarget::W, q, c1, 0),
            ];
            (WitnessKind::FactorGrad, v, w, budgets, ("C1", c1))
        }
        FactorSide::Div => {
            let c2 = (2.0 * setup.eta_grad + 1.0) * star_volume.powf(1.0 / p);
            let v = basis_pair(
                grid,
                n,
                vec![(0, apply_l_adjoint(sys, 1, &xeta)?), (1, apply_l_adjoint(sys, 0, &xeta)?.scale_real(-1.0))],
            )?;
            let w = basis_pair(grid, n, vec![(1, phi.conj())])?;
            let budgets = vec![
                budget("w_q", NormTarget::W, q, lp_norm(phi, q)?, 0),
                budget("curl_w_q", NormTarget::CurlW, q, 2.0 * lp_norm(&grad_l(sys, &phi.conj())?, q)?, 1),
                budget("v_p", NormTarget::V, p, c2, 0),
            ];
            (WitnessKind::FactorDiv, v, w, budgets, ("C2", c2))
        }
    };
    let constants = BTreeMap::from([
        (constant.0.to_string(), constant.1),
        ("eta_grad_norm".to_string(), setup.eta_grad),
        ("ball_volume".to_string(), setup.volume),
    ]);
    finish(
        sys,
        WitnessPair {
            kind,
            p,
            indices: (0, 1),
            v,
            w,
            expected: phi.clone(),
            identity_region: None,
            support: setup.cutoff.support(),
            constants,
            budgets,
            generators: vec![
                Generator { name: "phi".into(), field: phi.clone(), support: ball.clone() },
                Generator { name: "eta".into(), field: setup.cutoff.sample(grid), support: setup.cutoff.support() },
            ],
            certificate: zero_entry_certificate(kind, p),
        },
    )
}
