use std::borrow::Cow;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MatrixField, ScalarField, VectorField};

/// Fields with a pointwise modulus: |f| for scalars, the Euclidean norm of
/// the component vector for vector fields, Frobenius for matrix fields.
pub trait PointwiseModulus {
    fn grid(&self) -> &GridSpec;
    fn modulus_values(&self) -> Cow<'_, [f64]>;
}

impl PointwiseModulus for ScalarField {
    fn grid(&self) -> &GridSpec {
        ScalarField::grid(self)
    }

    fn modulus_values(&self) -> Cow<'_, [f64]> {
        Cow::Owned(self.values().iter().map(|v| v.norm()).collect())
    }
}

impl PointwiseModulus for VectorField {
    fn grid(&self) -> &GridSpec {
        VectorField::grid(self)
    }

    fn modulus_values(&self) -> Cow<'_, [f64]> {
        Cow::Owned(self.modulus())
    }
}

impl PointwiseModulus for MatrixField {
    fn grid(&self) -> &GridSpec {
        MatrixField::grid(self)
    }

    fn modulus_values(&self) -> Cow<'_, [f64]> {
        Cow::Owned(self.modulus())
    }
}

/// `(sum |f|^p dV)^(1/p)`, scaled by the sup to avoid overflow.
pub(crate) fn lp_of_moduli(moduli: &[f64], p: f64, cell_volume: f64) -> f64 {
    let sup = moduli.iter().copied().fold(0.0, f64::max);
    if sup == 0.0 {
        return 0.0;
    }
    let sum: f64 = moduli.iter().map(|m| (m / sup).powf(p)).sum();
    sup * (sum * cell_volume).powf(1.0 / p)
}

/// Midpoint-rule L^p norm for `1 < p < inf`.
pub fn lp_norm<F: PointwiseModulus + ?Sized>(f: &F, p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(lp_of_moduli(&f.modulus_values(), p, f.grid().cell_volume()))
}

/// Box integral of `g conj(f)`.
pub fn pair(g: &ScalarField, f: &ScalarField) -> Result<Complex64> {
    g.grid().ensure_same(f.grid())?;
    let sum: Complex64 = g.values().iter().zip(f.values()).map(|(a, b)| a * b.conj()).sum();
    Ok(sum * g.grid().cell_volume())
}
