use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::norms::BallSpec;
use crate::operators::grad_l;
use crate::system::EllipticSystem;

/// Ramp width as a fraction of the inner radius.
const RAMP_WIDTH: f64 = 1.0 / 13.0;
/// Truncation radius of the Gaussian bump in units of its width.
const GAUSSIAN_CUT: f64 = 8.6;

/// Radial cutoff: 1 on `B(center, r)`, 0 outside `B(center, 2r)`, with an
/// erf ramp centered at `1.5 r`. The ramp tails are clamped at both radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub center: Vec<f64>,
    pub inner_radius: f64,
}

impl CutoffSpec {
    pub fn new(center: Vec<f64>, inner_radius: f64) -> Self {
        Self { center, inner_radius }
    }

    pub fn outer_radius(&self) -> f64 {
        2.0 * self.inner_radius
    }

    pub fn profile(&self, dist: f64) -> f64 {
        let r = self.inner_radius;
        if dist <= r {
            1.0
        } else if dist >= 2.0 * r {
            0.0
        } else {
            0.5 * erfc((dist - 1.5 * r) / (std::f64::consts::SQRT_2 * RAMP_WIDTH * r))
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        self.profile(d2.sqrt())
    }

    pub fn sample(&self, grid: &GridSpec) -> ScalarField {
        ScalarField::from_real_fn(grid, |x| self.value(x))
    }

    /// `(x_axis - center_axis) * eta(x)`.
    pub fn sample_coordinate(&self, grid: &GridSpec, axis: usize) -> ScalarField {
        ScalarField::from_real_fn(grid, |x| (x[axis] - self.center[axis]) * self.value(x))
    }

    pub fn support(&self) -> BallSpec {
        BallSpec::new(self.center.clone(), self.outer_radius())
    }

    pub fn plateau(&self) -> BallSpec {
        BallSpec::new(self.center.clone(), self.inner_radius)
    }
}

/// Samples the cutoff of `B(center, r)` after checking that `B(center, 2r)` fits.
pub fn make_cutoff(grid: &GridSpec, center: &[f64], r: f64) -> Result<ScalarField> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Hypothesis(format!("cutoff radius {r} must be positive")));
    }
    let spec = CutoffSpec::new(center.to_vec(), r);
    spec.plateau().check_fits(grid, 2.0)?;
    Ok(spec.sample(grid))
}

/// `||grad_L eta||_inf` for the unit-scale profile: `R * sup_x sum_k |L_k eta_B(x)|`
/// evaluated with spectral derivatives on the grid.
pub fn cutoff_gradient_norm(sys: &EllipticSystem, grid: &GridSpec, spec: &CutoffSpec) -> Result<f64> {
    let grad = grad_l(sys, &spec.sample(grid))?;
    let mut sums = vec![0.0; grid.len()];
    for c in grad.components() {
        sums.iter_mut().zip(c.values()).for_each(|(s, v)| *s += v.norm());
    }
    Ok(spec.inner_radius * sums.into_iter().fold(0.0, f64::max))
}

/// Gaussian `exp(-|x-c|^2 / (2 s^2))` with `s = radius / 8.6`, set to zero
/// outside the ball (where it is already below 1e-16).
pub fn gaussian_bump(grid: &GridSpec, center: &[f64], radius: f64) -> ScalarField {
    let s = radius / GAUSSIAN_CUT;
    ScalarField::from_real_fn(grid, |x| {
        let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 < radius * radius {
            (-d2 / (2.0 * s * s)).exp()
        } else {
            0.0
        }
    })
}

/// The Gaussian bump times `(x_axis - c_axis) / s`, a sign-changing profile.
pub fn odd_gaussian_bump(grid: &GridSpec, center: &[f64], radius: f64, axis: usize) -> ScalarField {
    let s = radius / GAUSSIAN_CUT;
    let even = gaussian_bump(grid, center, radius);
    let odd = ScalarField::from_real_fn(grid, |x| (x[axis] - center[axis]) / s);
    even.mul(&odd).expect("same grid")
}

/// `c exp(-1/(1 - |x-c|^2/r^2))` with `c` chosen so the grid integral is
/// `mass`. Falls back to the continuum constant when no sample is inside.
pub fn mollifier_bump(grid: &GridSpec, center: &[f64], radius: f64, mass: f64) -> ScalarField {
    let shape = ScalarField::from_fn(grid, |x| {
        let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        Complex64::new(crate::norms::bump_profile(d2.sqrt() / radius), 0.0)
    });
    let discrete = shape.integral().re;
    let norm = if discrete > 0.0 {
        mass / discrete
    } else {
        crate::norms::bump_normalization(grid.dim()) * radius.powi(-(grid.dim() as i32)) * mass
    };
    shape.scale_real(norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_examples() {
        let g = GridSpec::new(vec![64, 64], vec![1.0, 1.0]).unwrap();
        let eta = make_cutoff(&g, &[0.0, 0.0], 0.125).unwrap();
        let spec = CutoffSpec::new(vec![0.0, 0.0], 0.125);
        assert_eq!(eta.values()[g.flat_index(&[32, 32])].re, 1.0);
        for (flat, v) in eta.values().iter().enumerate() {
            let mut x = [0.0; 2];
            g.point(flat, &mut x);
            let d = (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert!((0.0..=1.0).contains(&v.re));
            if d <= 0.125 {
                assert_eq!(v.re, 1.0);
            }
            if d >= 0.25 {
                assert_eq!(v.re, 0.0);
            }
        }
        assert!(spec.profile(0.1875) == 0.5);
        assert!(make_cutoff(&g, &[0.3, 0.0], 0.125).is_err());
    }

    #[test]
    fn ramp_clamp_is_tiny() {
        let spec = CutoffSpec::new(vec![0.0], 1.0);
        assert!(1.0 - spec.profile(1.0 + 1e-12) < 1e-10);
        assert!(spec.profile(2.0 - 1e-12) < 1e-10);
    }

    #[test]
    fn mollifier_bump_mass() {
        let g = GridSpec::new(vec![64, 64], vec![1.0, 1.0]).unwrap();
        let b = mollifier_bump(&g, &[0.0, 0.0], 0.3, 2.5);
        assert!((b.integral().re - 2.5).abs() < 1e-12);
        // the continuum constant agrees to quadrature accuracy
        let c = crate::norms::bump_normalization(2) / 0.09 * 2.5;
        assert!((b.values()[g.flat_index(&[32, 32])].re / (-1.0f64).exp() / c - 1.0).abs() < 1e-4);
    }
}
