//! Spectral calculus on a periodic grid: transforms, Fourier multipliers,
//! inversion of Delta_L and circular convolution.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::grid::{GridSpec, ScalarField};
use crate::system::EllipticSystem;

/// One Fourier mode: integer frequency `k` and the angular wavenumber
/// `xi = 2 pi k / L` used for derivatives (Nyquist bins carry `xi = 0`).
#[derive(Debug)]
pub struct Mode<'a> {
    pub k: &'a [i64],
    pub xi: &'a [f64],
}

impl Mode<'_> {
    pub fn is_zero_frequency(&self) -> bool {
        self.k.iter().all(|&k| k == 0)
    }
}

/// Unnormalized DFT coefficients of a field, indexed like the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient at integer frequency `k` (taken modulo the grid).
    pub fn coefficient(&self, k: &[i64]) -> Complex64 {
        let idx: Vec<usize> = k.iter().zip(self.grid.dims()).map(|(&k, &n)| k.rem_euclid(n as i64) as usize).collect();
        self.coeffs[self.grid.flat_index(&idx)]
    }

    /// Discrete L2 norm computed from the coefficients (Parseval).
    pub fn l2_norm(&self) -> f64 {
        let total = self.grid.len() as f64;
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / total * self.grid.cell_volume()).sqrt()
    }
}

pub fn forward_transform(f: &ScalarField) -> Spectrum {
    Spectrum { grid: f.grid().clone(), coeffs: forward_values(f) }
}

pub fn inverse_transform(s: &Spectrum) -> ScalarField {
    inverse_values(s.grid(), s.coeffs.clone())
}

pub(crate) fn forward_values(f: &ScalarField) -> Vec<Complex64> {
    let mut data = f.values().to_vec();
    fft_nd(&mut data, f.grid().dims(), false);
    data
}

pub(crate) fn inverse_values(grid: &GridSpec, mut data: Vec<Complex64>) -> ScalarField {
    fft_nd(&mut data, grid.dims(), true);
    ScalarField::new(grid.clone(), data).expect("length preserved by the transform")
}

/// Per-axis tables of integer frequencies and wavenumbers.
struct ModeTables {
    k: Vec<Vec<i64>>,
    xi: Vec<Vec<f64>>,
}

impl ModeTables {
    fn new(grid: &GridSpec) -> Self {
        let k = (0..grid.dim()).map(|a| (0..grid.dims()[a]).map(|i| grid.frequency(a, i)).collect()).collect();
        let xi = (0..grid.dim()).map(|a| (0..grid.dims()[a]).map(|i| grid.wavenumber(a, i)).collect()).collect();
        Self { k, xi }
    }
}

/// Visits every mode in parallel (rows along the last axis), passing the
/// mode and its coefficient slot. The visitor may return an error marker.
pub(crate) fn visit_modes<F>(grid: &GridSpec, coeffs: &mut [Complex64], visit: F) -> Option<Vec<i64>>
where
    F: Fn(&Mode, &mut Complex64) -> bool + Sync,
{
    let tables = ModeTables::new(grid);
    let dim = grid.dim();
    let row = grid.dims()[dim - 1];
    let failures: Vec<Option<Vec<i64>>> = coeffs
        .par_chunks_mut(row)
        .enumerate()
        .map(|(r, chunk)| {
            let mut multi = vec![0; dim];
            grid.multi_index(r * row, &mut multi);
            let mut k: Vec<i64> = (0..dim).map(|a| tables.k[a][multi[a]]).collect();
            let mut xi: Vec<f64> = (0..dim).map(|a| tables.xi[a][multi[a]]).collect();
            let mut failed = None;
            for (i, slot) in chunk.iter_mut().enumerate() {
                k[dim - 1] = tables.k[dim - 1][i];
                xi[dim - 1] = tables.xi[dim - 1][i];
                if !visit(&Mode { k: &k, xi: &xi }, slot) && failed.is_none() {
                    failed = Some(k.clone());
                }
            }
            failed
        })
        .collect();
    failures.into_iter().flatten().next()
}

/// Multiplies the spectrum of `f` by `mult(mode)`. A non-finite multiplier
/// on a mode where `f` has a nonzero coefficient is an error.
pub fn apply_multiplier<M>(f: &ScalarField, mult: M) -> Result<ScalarField>
where
    M: Fn(&Mode) -> Complex64 + Sync,
{
    let mut coeffs = forward_values(f);
    let bad = visit_modes(f.grid(), &mut coeffs, |mode, c| {
        if *c == Complex64::new(0.0, 0.0) {
            return true;
        }
        let m = mult(mode);
        *c *= m;
        m.re.is_finite() && m.im.is_finite()
    });
    match bad {
        Some(k) => Err(Error::NonFiniteMultiplier(k)),
        None => Ok(inverse_values(f.grid(), coeffs)),
    }
}

/// Relative threshold below which the Delta_L symbol counts as vanishing.
const SYMBOL_FLOOR: f64 = 1e-14;

/// Solves `Delta_L u = f - mean(f)` with `mean(u) = 0`. Modes whose
/// derivative wavenumber is zero (the mean and pure Nyquist modes) are
/// projected out.
pub fn inverse_laplacian(sys: &EllipticSystem, f: &ScalarField) -> Result<ScalarField> {
    check_system_grid(sys, f.grid())?;
    let mut coeffs = forward_values(f);
    let mut worst = None;
    let bad = visit_modes(f.grid(), &mut coeffs, |mode, c| {
        let xi2: f64 = mode.xi.iter().map(|x| x * x).sum();
        if xi2 == 0.0 {
            *c = Complex64::new(0.0, 0.0);
            return true;
        }
        let sym = sys.laplacian_symbol_unchecked(mode.xi);
        if sym <= SYMBOL_FLOOR * xi2 {
            return false;
        }
        *c /= sym;
        true
    });
    if let Some(k) = bad {
        let xi: Vec<f64> =
            k.iter().zip(f.grid().box_lengths()).map(|(&k, &l)| std::f64::consts::TAU * k as f64 / l).collect();
        let xi2: f64 = xi.iter().map(|x| x * x).sum();
        worst = Some(sys.laplacian_symbol_unchecked(&xi) / xi2);
    }
    match worst {
        Some(v) => Err(Error::NotElliptic(v)),
        None => Ok(inverse_values(f.grid(), coeffs)),
    }
}

pub(crate) fn check_system_grid(sys: &EllipticSystem, grid: &GridSpec) -> Result<()> {
    if sys.ambient_dim() != grid.dim() {
        return Err(Error::DimensionMismatch(format!(
            "system acts on R^{} but the grid is {}-dimensional",
            sys.ambient_dim(),
            grid.dim()
        )));
    }
    Ok(())
}

/// A sampled convolution kernel, stored as its spectrum times the cell volume.
#[derive(Clone, Debug)]
pub struct KernelSpectrum {
    grid: GridSpec,
    spectrum: Vec<Complex64>,
}

/// Samples `kernel` at the minimum-image displacement of every grid offset
/// (offset 0 at flat index 0).
pub fn sample_kernel(grid: &GridSpec, kernel: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let dim = grid.dim();
    let mut multi = vec![0; dim];
    let mut d = vec![0.0; dim];
    (0..grid.len())
        .map(|flat| {
            grid.multi_index(flat, &mut multi);
            for a in 0..dim {
                d[a] = grid.frequency(a, multi[a]) as f64 * grid.spacing(a);
            }
            kernel(&d)
        })
        .collect()
}

impl KernelSpectrum {
    pub fn from_samples(grid: &GridSpec, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch("kernel sample count differs from grid".into()));
        }
        let dv = grid.cell_volume();
        let mut data: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s * dv, 0.0)).collect();
        fft_nd(&mut data, grid.dims(), false);
        Ok(Self { grid: grid.clone(), spectrum: data })
    }

    /// Circular convolution `(f * K)(x) = sum_y f(y) K(x - y) dV`.
    pub fn convolve(&self, f: &ScalarField) -> Result<ScalarField> {
        self.grid.ensure_same(f.grid())?;
        Ok(self.convolve_coefficients(forward_values(f)))
    }

    /// Convolution given the forward transform of the input.
    pub(crate) fn convolve_coefficients(&self, mut coeffs: Vec<Complex64>) -> ScalarField {
        coeffs.par_iter_mut().zip(&self.spectrum).for_each(|(c, k)| *c *= k);
        inverse_values(&self.grid, coeffs)
    }
}
