use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::hodge::hodge_decompose;
use crate::operators::grad_l;
use crate::spectral::{check_system_grid, inverse_values};
use crate::system::EllipticSystem;

/// Width of the localization window as a fraction of the box side.
const WINDOW_WIDTH: f64 = 1.0 / 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Scalar,
    Vector,
    GradExact,
    DivFree,
}

fn default_count() -> usize {
    100
}

fn default_band() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub seed: u64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_band")]
    pub band_limit: usize,
    #[serde(default = "EnsembleSpec::default_kind")]
    pub kind: FieldKind,
    /// Multiply every draw by a Gaussian window concentrated on the central half-box.
    #[serde(default)]
    pub localize: bool,
}

impl EnsembleSpec {
    pub fn new(seed: u64, count: usize, band_limit: usize, kind: FieldKind) -> Self {
        Self { seed, count, band_limit, kind, localize: false }
    }

    pub fn localized(mut self) -> Self {
        self.localize = true;
        self
    }

    fn default_kind() -> FieldKind {
        FieldKind::Vector
    }
}

/// A draw: scalar kinds give a scalar field, the others a vector field.
#[derive(Clone, Debug, PartialEq)]
pub enum RandomField {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl RandomField {
    pub fn into_scalar(self) -> Result<ScalarField> {
        match self {
            Self::Scalar(f) => Ok(f),
            Self::Vector(_) => Err(Error::DimensionMismatch("expected a scalar draw".into())),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        match self {
            Self::Vector(v) => Ok(v),
            Self::Scalar(_) => Err(Error::DimensionMismatch("expected a vector draw".into())),
        }
    }
}

/// Integer wave vectors with `|k| <= band`, in lexicographic order.
fn band_modes(dim: usize, band: usize) -> Vec<Vec<i64>> {
    let b = band as i64;
    let mut out = Vec::new();
    let mut k = vec![-b; dim];
    loop {
        if k.iter().map(|x| x * x).sum::<i64>() <= b * b {
            out.push(k.clone());
        }
        let Some(axis) = (0..dim).rev().find(|&a| k[a] < b) else { break };
        k[axis] += 1;
        k[axis + 1..].iter_mut().for_each(|x| *x = -b);
    }
    out
}

fn check_band(grid: &GridSpec, band: usize) -> Result<()> {
    if grid.dims().iter().any(|&n| 2 * band >= n) {
        return Err(Error::BandLimit { band, dims: grid.dims().to_vec() });
    }
    Ok(())
}

/// Sum of `c_k exp(2 pi i k.x / L)` over `|k| <= band` with standard complex
/// Gaussian `c_k`, divided by the square root of the mode count. The
/// coefficients depend only on `(seed, stream, band)`, so the same continuous
/// field is sampled on every grid of the box.
pub fn band_limited_scalar(grid: &GridSpec, seed: u64, stream: u64, band: usize) -> Result<ScalarField> {
    check_band(grid, band)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let modes = band_modes(grid.dim(), band);
    let total = grid.len() as f64;
    let amplitude = total / (2.0 * modes.len() as f64).sqrt();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for k in &modes {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        // coordinates are centered, x = (idx - n/2) h, which shifts the phase by (-1)^k
        let sign = if k.iter().sum::<i64>().rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let flat = k.iter().zip(grid.dims()).fold(0usize, |acc, (&ka, &n)| acc * n + ka.rem_euclid(n as i64) as usize);
        coeffs[flat] = Complex64::new(re, im) * (amplitude * sign);
    }
    Ok(inverse_values(grid, coeffs))
}

/// `exp(-|x|^2 / (2 s^2))` with `s` a sixteenth of the shortest side.
pub fn localization_window(grid: &GridSpec) -> ScalarField {
    let s = WINDOW_WIDTH * grid.box_lengths().iter().copied().fold(f64::INFINITY, f64::min);
    ScalarField::from_real_fn(grid, |x| (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * s * s)).exp())
}

/// Stream of component `component` of the `role`-th draw of trial `index`.
fn stream_id(index: usize, role: u8, component: usize) -> u64 {
    ((index as u64) << 16) | ((role as u64) << 8) | component as u64
}

fn draw(grid: &GridSpec, spec: &EnsembleSpec, index: usize, role: u8, component: usize) -> Result<ScalarField> {
    let f = band_limited_scalar(grid, spec.seed, stream_id(index, role, component), spec.band_limit)?;
    Ok(if spec.localize { f.mul(&localization_window(grid))? } else { f })
}

fn draw_vector(
    sys: &EllipticSystem,
    grid: &GridSpec,
    spec: &EnsembleSpec,
    index: usize,
    role: u8,
) -> Result<VectorField> {
    VectorField::new((0..sys.n()).map(|c| draw(grid, spec, index, role, c)).collect::<Result<_>>()?)
}

/// Member `index` of the ensemble, post-processed by `kind`.
pub fn random_field_of_kind(
    sys: &EllipticSystem,
    grid: &GridSpec,
    spec: &EnsembleSpec,
    kind: FieldKind,
    index: usize,
    role: u8,
) -> Result<RandomField> {
    check_system_grid(sys, grid)?;
    Ok(match kind {
        FieldKind::Scalar => RandomField::Scalar(draw(grid, spec, index, role, 0)?),
        FieldKind::Vector => RandomField::Vector(draw_vector(sys, grid, spec, index, role)?),
        FieldKind::GradExact => RandomField::Vector(grad_l(sys, &draw(grid, spec, index, role, 0)?)?),
        FieldKind::DivFree => {
            RandomField::Vector(hodge_decompose(sys, &draw_vector(sys, grid, spec, index, role)?, &[])?.div_free)
        }
    })
}

/// Member `index` of the ensemble described by `spec`.
pub fn random_field(sys: &EllipticSystem, grid: &GridSpec, spec: &EnsembleSpec, index: usize) -> Result<RandomField> {
    random_field_of_kind(sys, grid, spec, spec.kind, index, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::div_l_adjoint;

    fn grid() -> GridSpec {
        GridSpec::new(vec![32, 32], vec![2.0, 2.0]).unwrap()
    }

    #[test]
    fn modes_in_ball() {
        assert_eq!(band_modes(2, 0), vec![vec![0, 0]]);
        assert_eq!(band_modes(2, 1).len(), 5);
        assert_eq!(band_modes(3, 1).len(), 7);
    }

    #[test]
    fn deterministic_and_grid_independent() {
        let spec = EnsembleSpec::new(7, 4, 3, FieldKind::Scalar);
        let sys = EllipticSystem::gradient(2).unwrap();
        let a = random_field(&sys, &grid(), &spec, 2).unwrap();
        let b = random_field(&sys, &grid(), &spec, 2).unwrap();
        assert_eq!(a, b);
        let c = random_field(&sys, &grid(), &spec, 3).unwrap();
        assert_ne!(a, c);
        // the same continuous field on a finer grid agrees at shared points
        let fine = random_field(&sys, &grid().refined(2).unwrap(), &spec, 2).unwrap().into_scalar().unwrap();
        let coarse = a.into_scalar().unwrap();
        let g = grid();
        let fg = grid().refined(2).unwrap();
        for idx in [[0, 0], [5, 9], [16, 16], [31, 2]] {
            let cv = coarse.values()[g.flat_index(&idx)];
            let fv = fine.values()[fg.flat_index(&[2 * idx[0], 2 * idx[1]])];
            assert!((cv - fv).norm() < 1e-12);
        }
    }

    #[test]
    fn band_zero_is_constant() {
        let spec = EnsembleSpec::new(1, 1, 0, FieldKind::Scalar);
        let sys = EllipticSystem::gradient(2).unwrap();
        let f = random_field(&sys, &grid(), &spec, 0).unwrap().into_scalar().unwrap();
        let first = f.values()[0];
        assert!(f.values().iter().all(|v| (v - first).norm() < 1e-14));
    }

    #[test]
    fn band_at_nyquist_rejected() {
        let spec = EnsembleSpec::new(1, 1, 16, FieldKind::Scalar);
        let sys = EllipticSystem::gradient(2).unwrap();
        assert!(matches!(random_field(&sys, &grid(), &spec, 0), Err(Error::BandLimit { .. })));
    }

    #[test]
    fn div_free_kind() {
        let spec = EnsembleSpec::new(3, 1, 4, FieldKind::DivFree).localized();
        let sys = EllipticSystem::gradient(2).unwrap();
        let v = random_field(&sys, &grid(), &spec, 0).unwrap().into_vector().unwrap();
        assert!(div_l_adjoint(&sys, &v).unwrap().sup_norm() <= 1e-10);
    }
}
