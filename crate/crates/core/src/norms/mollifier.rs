use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::norms::lp::lp_of_moduli;
use crate::spectral::{forward_values, sample_kernel, KernelSpectrum};

/// Smallest admissible scale in grid cells.
const MIN_SCALE_CELLS: f64 = 2.0;
/// Cells spanned by the smallest scale of [`MollifierSpec::for_grid`].
const DEFAULT_SCALE_CELLS: f64 = 4.0;

/// `exp(-1/(1 - r^2))` on `r < 1`, zero elsewhere.
pub fn bump_profile(r: f64) -> f64 {
    if r < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

pub fn unit_ball_volume(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    std::f64::consts::PI.powf(half) / gamma(half + 1.0)
}

/// The constant c with `int c * bump_profile(|x|) dx = 1` over R^dim.
pub fn bump_normalization(dim: usize) -> f64 {
    // composite Simpson in the radius; the integrand is flat at both ends
    let intervals = 20_000;
    let h = 1.0 / intervals as f64;
    let f = |r: f64| bump_profile(r) * r.powi(dim as i32 - 1);
    let interior: f64 = (1..intervals).map(|i| f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    let radial = (f(0.0) + interior + f(1.0)) * h / 3.0;
    let sphere = dim as f64 * unit_ball_volume(dim);
    1.0 / (sphere * radial)
}

/// The fixed radial mollifier and a finite decreasing set of dilation scales.
#[derive(Clone, Debug, PartialEq)]
pub struct MollifierSpec {
    scales: Vec<f64>,
}

impl MollifierSpec {
    pub fn new(scales: Vec<f64>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidScales("empty scale set".into()));
        }
        if let Some(t) = scales.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::InvalidScales(format!("scale {t} is outside (0, 1)")));
        }
        if scales.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidScales("scales must be strictly decreasing".into()));
        }
        Ok(Self { scales })
    }

    /// `{2^-1, ..., 2^-count}`.
    pub fn dyadic(count: usize) -> Result<Self> {
        Self::new((1..=count).map(|k| 0.5f64.powi(k as i32)).collect())
    }

    /// Dyadic scales down to the smallest one spanning at least four cells
    /// of the coarsest axis.
    pub fn for_grid(grid: &GridSpec) -> Result<Self> {
        let h = (0..grid.dim()).map(|a| grid.spacing(a)).fold(0.0, f64::max);
        let mut count = 0;
        while 0.5f64.powi(count as i32 + 1) >= DEFAULT_SCALE_CELLS * h
            && 0.5f64.powi(count as i32 + 1) <= grid.half_width()
        {
            count += 1;
        }
        if count == 0 {
            return Err(Error::ScaleBelowResolution { scale: 0.5, cells: 0.5 / h, min: DEFAULT_SCALE_CELLS });
        }
        Self::dyadic(count)
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// The same set with one more scale inserted.
    pub fn with_scale(&self, t: f64) -> Result<Self> {
        let mut scales = self.scales.clone();
        scales.push(t);
        scales.sort_by(|a, b| b.total_cmp(a));
        scales.dedup();
        Self::new(scales)
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        let h = (0..grid.dim()).map(|a| grid.spacing(a)).fold(0.0, f64::max);
        let smallest = *self.scales.last().expect("nonempty");
        if smallest < MIN_SCALE_CELLS * h {
            return Err(Error::ScaleBelowResolution { scale: smallest, cells: smallest / h, min: MIN_SCALE_CELLS });
        }
        if self.scales[0] > grid.half_width() {
            return Err(Error::SupportOverflow(format!(
                "mollifier scale {} exceeds the box half-width {}",
                self.scales[0],
                grid.half_width()
            )));
        }
        Ok(())
    }
}

type KernelKey = (Vec<usize>, Vec<u64>, u64);

static KERNELS: LazyLock<Mutex<HashMap<KernelKey, Arc<KernelSpectrum>>>> = LazyLock::new(|| Mutex::new(HashMap::new()));

/// The sampled kernel `phi_t`, renormalized so its discrete integral is 1.
/// Spectra are cached per grid and scale.
fn kernel(grid: &GridSpec, t: f64) -> Result<Arc<KernelSpectrum>> {
    let key = (grid.dims().to_vec(), grid.box_lengths().iter().map(|l| l.to_bits()).collect(), t.to_bits());
    if let Some(k) = KERNELS.lock().expect("kernel cache poisoned").get(&key) {
        return Ok(Arc::clone(k));
    }
    let mut samples = sample_kernel(grid, |d| {
        let r2: f64 = d.iter().map(|x| x * x).sum();
        bump_profile(r2.sqrt() / t)
    });
    let mass: f64 = samples.iter().sum::<f64>() * grid.cell_volume();
    samples.iter_mut().for_each(|s| *s /= mass);
    let spectrum = Arc::new(KernelSpectrum::from_samples(grid, &samples)?);
    KERNELS.lock().expect("kernel cache poisoned").insert(key, Arc::clone(&spectrum));
    Ok(spectrum)
}

/// `phi_t * f` by circular convolution.
pub fn mollify(f: &ScalarField, t: f64) -> Result<ScalarField> {
    MollifierSpec::new(vec![t])?.check_grid(f.grid())?;
    kernel(f.grid(), t)?.convolve(f)
}

/// `max_t |phi_t * f|(x)` over the scale set, returned as a real field.
pub fn grand_maximal(f: &ScalarField, m: &MollifierSpec) -> Result<ScalarField> {
    m.check_grid(f.grid())?;
    let coeffs = forward_values(f);
    let mut best = vec![0.0f64; f.grid().len()];
    for &t in m.scales() {
        let smoothed = kernel(f.grid(), t)?.convolve_coefficients(coeffs.clone());
        best.par_iter_mut().zip(smoothed.values()).for_each(|(b, v)| *b = b.max(v.norm()));
    }
    ScalarField::new(f.grid().clone(), best.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
}

/// `|| m_phi f ||_{L^1}`.
pub fn h1_norm(f: &ScalarField, m: &MollifierSpec) -> Result<f64> {
    let mf = grand_maximal(f, m)?;
    let moduli: Vec<f64> = mf.values().iter().map(|v| v.re).collect();
    Ok(lp_of_moduli(&moduli, 1.0, f.grid().cell_volume()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn normalization_integrates_to_one() {
        for dim in 1..=4 {
            let c = bump_normalization(dim);
            // independent check by a fine grid in 2D
            if dim == 2 {
                let n = 800;
                let h = 2.0 / n as f64;
                let mut sum = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let x = -1.0 + (i as f64 + 0.5) * h;
                        let y = -1.0 + (j as f64 + 0.5) * h;
                        sum += c * bump_profile((x * x + y * y).sqrt()) * h * h;
                    }
                }
                assert!((sum - 1.0).abs() < 1e-6, "{sum}");
            }
            assert!(c.is_finite() && c > 0.0);
        }
    }

    #[test]
    fn constant_is_fixed() {
        let g = GridSpec::new(vec![32, 32], vec![1.0, 1.0]).unwrap();
        let f = ScalarField::constant(&g, Complex64::new(0.0, -3.0));
        let m = MollifierSpec::dyadic(3).unwrap();
        let mf = grand_maximal(&f, &m).unwrap();
        assert!(mf.values().iter().all(|v| (v.re - 3.0).abs() < 1e-12));
    }

    #[test]
    fn scale_validation() {
        let g = GridSpec::new(vec![64, 64], vec![1.0, 1.0]).unwrap();
        assert!(MollifierSpec::new(vec![0.5, 0.5]).is_err());
        assert!(MollifierSpec::new(vec![1.0]).is_err());
        let f = ScalarField::zeros(&g);
        assert!(matches!(
            grand_maximal(&f, &MollifierSpec::dyadic(6).unwrap()),
            Err(Error::ScaleBelowResolution { .. })
        ));
        assert_eq!(MollifierSpec::for_grid(&g).unwrap().scales().len(), 4);
        assert_eq!(h1_norm(&f, &MollifierSpec::dyadic(5).unwrap()).unwrap(), 0.0);
    }
}
