//! First-order calculus of a system: grad_L, div_{L*}, curl_L, commutators
//! and the pointwise pairing V.W.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MatrixField, ScalarField, VectorField};
use crate::spectral::{check_system_grid, forward_values, inverse_values, visit_modes};
use crate::system::EllipticSystem;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How V.W is formed pointwise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingConvention {
    /// `sum_i V_i W_i`
    Bilinear,
    /// `sum_i V_i conj(W_i)`
    #[default]
    Sesquilinear,
}

impl std::str::FromStr for PairingConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sesq" | "sesquilinear" => Ok(Self::Sesquilinear),
            "bilin" | "bilinear" => Ok(Self::Bilinear),
            other => Err(Error::Config(format!("unknown pairing convention {other:?}"))),
        }
    }
}

/// Multiplier of `L_j`: `i lambda_j(xi)`.
pub fn l_multiplier(sys: &EllipticSystem, j: usize, xi: &[f64]) -> Complex64 {
    I * sys.symbol_component(j, xi)
}

/// Multiplier of `L_j*`: `-i conj(lambda_j(xi))`.
pub fn l_adjoint_multiplier(sys: &EllipticSystem, j: usize, xi: &[f64]) -> Complex64 {
    -I * sys.symbol_component(j, xi).conj()
}

fn check_index(sys: &EllipticSystem, j: usize) -> Result<()> {
    if j >= sys.n() {
        return Err(Error::IndexOutOfRange { index: j, len: sys.n() });
    }
    Ok(())
}

fn check_components(sys: &EllipticSystem, v: &VectorField) -> Result<()> {
    check_system_grid(sys, v.grid())?;
    if v.n_components() != sys.n() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} components, system has n = {}",
            v.n_components(),
            sys.n()
        )));
    }
    Ok(())
}

/// Spectral multiplier per mode applied to a precomputed spectrum.
fn multiply(field: &ScalarField, coeffs: &[Complex64], mult: impl Fn(&[f64]) -> Complex64 + Sync) -> ScalarField {
    let mut out = coeffs.to_vec();
    visit_modes(field.grid(), &mut out, |mode, c| {
        *c *= mult(mode.xi);
        true
    });
    inverse_values(field.grid(), out)
}

/// `L_j u` for a single index.
pub fn apply_l(sys: &EllipticSystem, j: usize, u: &ScalarField) -> Result<ScalarField> {
    check_index(sys, j)?;
    check_system_grid(sys, u.grid())?;
    Ok(multiply(u, &forward_values(u), |xi| l_multiplier(sys, j, xi)))
}

/// `L_j* u` for a single index.
pub fn apply_l_adjoint(sys: &EllipticSystem, j: usize, u: &ScalarField) -> Result<ScalarField> {
    check_index(sys, j)?;
    check_system_grid(sys, u.grid())?;
    Ok(multiply(u, &forward_values(u), |xi| l_adjoint_multiplier(sys, j, xi)))
}

/// `grad_L u = (L_1 u, ..., L_n u)`.
pub fn grad_l(sys: &EllipticSystem, u: &ScalarField) -> Result<VectorField> {
    check_system_grid(sys, u.grid())?;
    let coeffs = forward_values(u);
    VectorField::new((0..sys.n()).map(|j| multiply(u, &coeffs, |xi| l_multiplier(sys, j, xi))).collect())
}

/// `grad_{L*} u = (L_1* u, ..., L_n* u)`.
pub fn grad_l_adjoint(sys: &EllipticSystem, u: &ScalarField) -> Result<VectorField> {
    check_system_grid(sys, u.grid())?;
    let coeffs = forward_values(u);
    VectorField::new((0..sys.n()).map(|j| multiply(u, &coeffs, |xi| l_adjoint_multiplier(sys, j, xi))).collect())
}

/// Plain spectral gradient `(d_1 u, ..., d_N u)`.
pub fn gradient(u: &ScalarField) -> Result<VectorField> {
    let coeffs = forward_values(u);
    VectorField::new((0..u.grid().dim()).map(|a| multiply(u, &coeffs, |xi| I * xi[a])).collect())
}

/// `div_{L*} V = sum_j L_j* V_j`.
pub fn div_l_adjoint(sys: &EllipticSystem, v: &VectorField) -> Result<ScalarField> {
    check_components(sys, v)?;
    let grid = v.grid();
    let spectra: Vec<Vec<Complex64>> = v.components().iter().map(forward_values).collect();
    let mut acc = vec![ZERO; grid.len()];
    let mut tmp = vec![ZERO; grid.len()];
    for (j, spec) in spectra.iter().enumerate() {
        tmp.copy_from_slice(spec);
        visit_modes(grid, &mut tmp, |mode, c| {
            *c *= l_adjoint_multiplier(sys, j, mode.xi);
            true
        });
        acc.iter_mut().zip(&tmp).for_each(|(a, t)| *a += t);
    }
    Ok(inverse_values(grid, acc))
}

/// `curl_L W` with entries `L_i W_j - L_j W_i`; the lower triangle is the
/// exact negation of the upper one.
pub fn curl_l(sys: &EllipticSystem, w: &VectorField) -> Result<MatrixField> {
    check_components(sys, w)?;
    let grid = w.grid();
    let n = sys.n();
    let spectra: Vec<Vec<Complex64>> = w.components().iter().map(forward_values).collect();
    let mut entries: Vec<Option<ScalarField>> = vec![None; n * n];
    for i in 0..n {
        entries[i * n + i] = Some(ScalarField::zeros(grid));
        for j in i + 1..n {
            // i lambda_i W_j - i lambda_j W_i
            let mut coeffs = spectra[j].clone();
            let mut scratch = spectra[i].clone();
            visit_modes(grid, &mut coeffs, |mode, c| {
                *c *= l_multiplier(sys, i, mode.xi);
                true
            });
            visit_modes(grid, &mut scratch, |mode, c| {
                *c *= l_multiplier(sys, j, mode.xi);
                true
            });
            coeffs.iter_mut().zip(&scratch).for_each(|(a, b)| *a -= b);
            let upper = inverse_values(grid, coeffs);
            let lower = upper.map(|v| -v);
            entries[i * n + j] = Some(upper);
            entries[j * n + i] = Some(lower);
        }
    }
    MatrixField::new(n, entries.into_iter().map(|e| e.expect("filled")).collect(), true)
}

/// The symbol of `[L_i, L_j]`, i.e. `(i lambda_i)(i lambda_j) - (i lambda_j)(i lambda_i)`.
pub fn commutator_symbol(sys: &EllipticSystem, i: usize, j: usize) -> Result<impl Fn(&[f64]) -> Complex64 + '_> {
    check_index(sys, i)?;
    check_index(sys, j)?;
    Ok(move |xi: &[f64]| {
        let (a, b) = (l_multiplier(sys, i, xi), l_multiplier(sys, j, xi));
        a * b - b * a
    })
}

/// `L_i L_j u - L_j L_i u`, composing the first-order operators in both orders.
pub fn apply_commutator(sys: &EllipticSystem, i: usize, j: usize, u: &ScalarField) -> Result<ScalarField> {
    let ij = apply_l(sys, i, &apply_l(sys, j, u)?)?;
    let ji = apply_l(sys, j, &apply_l(sys, i, u)?)?;
    ij.sub(&ji)
}

/// Pointwise pairing of two fields with the same component count.
pub fn dot(v: &VectorField, w: &VectorField, conv: PairingConvention) -> Result<ScalarField> {
    v.ensure_compatible(w)?;
    let mut acc = ScalarField::zeros(v.grid());
    for (a, b) in v.components().iter().zip(w.components()) {
        let vals = acc.values_mut();
        match conv {
            PairingConvention::Bilinear => {
                vals.iter_mut().zip(a.values().iter().zip(b.values())).for_each(|(o, (x, y))| *o += x * y)
            }
            PairingConvention::Sesquilinear => {
                vals.iter_mut().zip(a.values().iter().zip(b.values())).for_each(|(o, (x, y))| *o += x * y.conj())
            }
        }
    }
    Ok(acc)
}

/// Sesquilinear inner product `int u conj(v)` of two scalar fields.
pub fn inner(u: &ScalarField, v: &ScalarField) -> Result<Complex64> {
    u.grid().ensure_same(v.grid())?;
    let sum: Complex64 = u.values().iter().zip(v.values()).map(|(a, b)| a * b.conj()).sum();
    Ok(sum * u.grid().cell_volume())
}

/// Sesquilinear inner product of vector fields.
pub fn inner_vector(v: &VectorField, w: &VectorField) -> Result<Complex64> {
    v.ensure_compatible(w)?;
    v.components().iter().zip(w.components()).map(|(a, b)| inner(a, b)).sum()
}
