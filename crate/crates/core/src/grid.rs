//! Periodic boxes and sampled complex fields on them.
//!
//! Coordinates are box-centered: sample `idx` on an axis of `n` points with
//! spacing `h` sits at `(idx - n/2) * h`, so the origin is a grid point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of samples per field (2^24, 256 MiB of complex data).
pub const DEFAULT_MAX_POINTS: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dims: Vec<usize>,
    #[serde(rename = "box")]
    box_lengths: Vec<f64>,
}

impl GridSpec {
    pub fn new(dims: Vec<usize>, box_lengths: Vec<f64>) -> Result<Self> {
        Self::with_cap(dims, box_lengths, DEFAULT_MAX_POINTS)
    }

    pub fn with_cap(dims: Vec<usize>, box_lengths: Vec<f64>, max_points: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidGrid("no axes".into()));
        }
        if dims.len() != box_lengths.len() {
            return Err(Error::InvalidGrid(format!("{} dims but {} box lengths", dims.len(), box_lengths.len())));
        }
        if let Some((axis, d)) = dims.iter().enumerate().find(|(_, &d)| d < 4) {
            return Err(Error::InvalidGrid(format!("dims[{axis}] = {d} is below 4")));
        }
        if let Some((axis, l)) = box_lengths.iter().enumerate().find(|(_, l)| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidGrid(format!("box[{axis}] = {l} is not a positive length")));
        }
        let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        match total {
            Some(t) if t <= max_points => Ok(Self { dims, box_lengths }),
            _ => Err(Error::InvalidGrid(format!("grid {dims:?} exceeds the cap of {max_points} points"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn box_lengths(&self) -> &[f64] {
        &self.box_lengths
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.box_lengths[axis] / self.dims[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.box_lengths.iter().product()
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.dims[a + 1];
        }
        strides
    }

    pub fn coordinate(&self, axis: usize, idx: usize) -> f64 {
        (idx as f64 - (self.dims[axis] / 2) as f64) * self.spacing(axis)
    }

    /// Multi-index of a flat (row-major) index.
    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dim()).rev() {
            out[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    /// Physical coordinates of a flat index.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut rest = flat;
        for a in (0..self.dim()).rev() {
            out[a] = self.coordinate(a, rest % self.dims[a]);
            rest /= self.dims[a];
        }
    }

    /// Signed integer frequency of FFT bin `idx` on `axis`, in `[-n/2, n/2)`.
    pub fn frequency(&self, axis: usize, idx: usize) -> i64 {
        let n = self.dims[axis];
        if idx < n.div_ceil(2) {
            idx as i64
        } else {
            idx as i64 - n as i64
        }
    }

    /// Angular wavenumber `2 pi k / L` used by first-order derivatives. The
    /// Nyquist bin maps to 0 so that derivatives of real fields stay real.
    pub fn wavenumber(&self, axis: usize, idx: usize) -> f64 {
        let n = self.dims[axis];
        if n.is_multiple_of(2) && idx == n / 2 {
            return 0.0;
        }
        std::f64::consts::TAU * self.frequency(axis, idx) as f64 / self.box_lengths[axis]
    }

    /// Grid with every axis refined by `factor`, same box.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.dims.iter().map(|d| d * factor).collect(), self.box_lengths.clone())
    }

    /// Same sample counts on a box scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dims.clone(), self.box_lengths.iter().map(|l| l * factor).collect())
    }

    /// Largest radius of a ball centered at the origin that stays inside the box.
    pub fn half_width(&self) -> f64 {
        self.box_lengths.iter().fold(f64::INFINITY, |acc, l| acc.min(l / 2.0))
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// A sampled complex scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn constant(grid: &GridSpec, value: Complex64) -> Self {
        Self { grid: grid.clone(), values: vec![value; grid.len()] }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|flat| {
                grid.point(flat, &mut x);
                f(&x)
            })
            .collect();
        Self { grid: grid.clone(), values }
    }

    pub fn from_real_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    /// Integral over the box, `mean * volume`.
    pub fn integral(&self) -> Complex64 {
        self.mean() * self.grid.volume()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Sup of |f| over samples where `mask(x)` holds.
    pub fn sup_where(&self, mask: impl Fn(&[f64]) -> bool) -> f64 {
        let mut x = vec![0.0; self.grid.dim()];
        self.values
            .iter()
            .enumerate()
            .filter_map(|(flat, v)| {
                self.grid.point(flat, &mut x);
                mask(&x).then(|| v.norm())
            })
            .fold(0.0, f64::max)
    }

    /// Discrete L2 norm, `(sum |f|^2 dV)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }
}

/// An n-component field; all components share one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::DimensionMismatch("vector field needs at least one component".into()))?;
        for c in &components[1..] {
            first.grid.ensure_same(&c.grid)?;
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: &GridSpec, n: usize) -> Self {
        Self { components: (0..n.max(1)).map(|_| ScalarField::zeros(grid)).collect() }
    }

    /// `value * e_index` with n components.
    pub fn basis(field: ScalarField, index: usize, n: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, len: n });
        }
        let grid = field.grid.clone();
        let mut components: Vec<ScalarField> = (0..n).map(|_| ScalarField::zeros(&grid)).collect();
        components[index] = field;
        Ok(Self { components })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.components[0].grid
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self { components: self.components.iter().map(f).collect() }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map_components(|c| c.scale(factor))
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.map_components(|c| c.scale_real(factor))
    }

    pub fn conj(&self) -> Self {
        self.map_components(ScalarField::conj)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&ScalarField, &ScalarField) -> Result<ScalarField>) -> Result<Self> {
        self.ensure_compatible(other)?;
        let components = self.components.iter().zip(&other.components).map(|(a, b)| f(a, b)).collect::<Result<_>>()?;
        Ok(Self { components })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, ScalarField::add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, ScalarField::sub)
    }

    pub fn ensure_compatible(&self, other: &Self) -> Result<()> {
        self.grid().ensure_same(other.grid())?;
        if self.n_components() != other.n_components() {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {} components",
                self.n_components(),
                other.n_components()
            )));
        }
        Ok(())
    }

    /// Pointwise Euclidean modulus `|V(x)|`.
    pub fn modulus(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid().len()];
        for c in &self.components {
            out.iter_mut().zip(c.values()).for_each(|(o, v)| *o += v.norm_sqr());
        }
        out.iter_mut().for_each(|o| *o = o.sqrt());
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.modulus().into_iter().fold(0.0, f64::max)
    }

    /// Sup of |V| over samples where `mask(x)` holds.
    pub fn sup_where(&self, mask: impl Fn(&[f64]) -> bool) -> f64 {
        let grid = self.grid();
        let mut x = vec![0.0; grid.dim()];
        self.modulus()
            .into_iter()
            .enumerate()
            .filter_map(|(flat, v)| {
                grid.point(flat, &mut x);
                mask(&x).then_some(v)
            })
            .fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.components.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>().sqrt()
    }
}

/// An n x n matrix of fields, as produced by curl.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    n: usize,
    entries: Vec<ScalarField>,
    antisymmetric: bool,
}

impl MatrixField {
    /// Row-major entries.
    pub fn new(n: usize, entries: Vec<ScalarField>, antisymmetric: bool) -> Result<Self> {
        if entries.len() != n * n || n == 0 {
            return Err(Error::DimensionMismatch(format!("{} entries for a {n}x{n} matrix", entries.len())));
        }
        for e in &entries[1..] {
            entries[0].grid.ensure_same(&e.grid)?;
        }
        Ok(Self { n, entries, antisymmetric })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.entries[0].grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[ScalarField] {
        &self.entries
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.antisymmetric
    }

    /// Pointwise Frobenius modulus.
    pub fn modulus(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid().len()];
        for e in &self.entries {
            out.iter_mut().zip(e.values()).for_each(|(o, v)| *o += v.norm_sqr());
        }
        out.iter_mut().for_each(|o| *o = o.sqrt());
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.modulus().into_iter().fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_grid_examples() {
        assert!(GridSpec::new(vec![64, 64], vec![1.0, 1.0]).is_ok());
        assert!(GridSpec::new(vec![64, 64, 64], vec![4.0; 3]).is_ok());
        assert!(GridSpec::new(vec![2, 64], vec![1.0, 1.0]).is_err());
        assert!(GridSpec::new(vec![8, 8], vec![1.0, 0.0]).is_err());
        assert!(GridSpec::with_cap(vec![64, 64], vec![1.0, 1.0], 1000).is_err());
    }

    #[test]
    fn indexing_roundtrip() {
        let g = GridSpec::new(vec![4, 6, 8], vec![1.0, 2.0, 3.0]).unwrap();
        let mut m = [0; 3];
        for flat in 0..g.len() {
            g.multi_index(flat, &mut m);
            assert_eq!(g.flat_index(&m), flat);
        }
        assert_eq!(g.strides(), vec![48, 8, 1]);
        assert_eq!(g.coordinate(1, 3), 0.0);
        assert_eq!(g.frequency(2, 4), -4);
        assert_eq!(g.wavenumber(2, 4), 0.0);
        assert_eq!(g.frequency(2, 3), 3);
    }

    #[test]
    fn integral_of_constant() {
        let g = GridSpec::new(vec![8, 8], vec![2.0, 3.0]).unwrap();
        let f = ScalarField::constant(&g, Complex64::new(2.0, 0.0));
        assert!((f.integral().re - 12.0).abs() < 1e-14);
    }
}
