//! Systems of constant-coefficient complex vector fields in normal form
//! `L_j = d/dx_j + sum_k a_jk d/dx_{n+k}` and their symbols.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for the elliptic verdict.
pub const DEFAULT_ELLIPTIC_TOL: f64 = 1e-9;
/// Default number of sphere samples for [`certify_ellipticity`].
pub const DEFAULT_SPHERE_SAMPLES: usize = 10_000;
/// Smallest accepted sphere sample count.
pub const MIN_SPHERE_SAMPLES: usize = 64;

/// A validated elliptic-candidate system. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticSystem {
    n: usize,
    ambient: usize,
    /// Row-major n x m coefficient matrix.
    coeffs: Vec<Complex64>,
}

impl EllipticSystem {
    /// Validates `n`, the ambient dimension and the coefficient shape.
    /// `coeffs` holds `n` rows of `ambient - n` entries each.
    pub fn new(n: usize, ambient: usize, coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewFields(n));
        }
        let m = ambient.saturating_sub(n);
        let cols = coeffs.first().map_or(0, Vec::len);
        let shape_ok = if m == 0 {
            coeffs.iter().all(Vec::is_empty) && (coeffs.is_empty() || coeffs.len() == n)
        } else {
            coeffs.len() == n && coeffs.iter().all(|row| row.len() == m)
        };
        if !shape_ok {
            return Err(Error::ShapeMismatch { rows: coeffs.len(), cols, n, m });
        }
        if n > ambient || 2 * n < ambient {
            return Err(Error::DimensionConstraint { n, ambient });
        }
        for (j, row) in coeffs.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                if !(c.re.is_finite() && c.im.is_finite()) {
                    return Err(Error::NonFiniteCoefficient(j, k));
                }
            }
        }
        Ok(Self { n, ambient, coeffs: coeffs.into_iter().flatten().collect() })
    }

    /// The standard gradient `(d_1, ..., d_N)`.
    pub fn gradient(dim: usize) -> Result<Self> {
        Self::new(dim, dim, Vec::new())
    }

    /// `L_1 = d_1 + i d_3`, `L_2 = d_2` on R^3.
    pub fn cauchy_riemann_type() -> Self {
        let i = Complex64::new(0.0, 1.0);
        Self::new(2, 3, vec![vec![i], vec![Complex64::new(0.0, 0.0)]]).expect("valid system")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Ambient dimension N.
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// Number of extra coordinates m = N - n.
    pub fn m(&self) -> usize {
        self.ambient - self.n
    }

    pub fn coeff(&self, j: usize, k: usize) -> Complex64 {
        self.coeffs[j * self.m() + k]
    }

    /// max{1, |a_jk|} over all coefficients.
    pub fn coefficient_bound(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max)
    }

    /// Comparison constant between |grad_L u| and |grad u|: N sqrt(n) max{1, |a_jk|}.
    pub fn gradient_comparison_constant(&self) -> f64 {
        self.ambient as f64 * (self.n as f64).sqrt() * self.coefficient_bound()
    }

    fn check_len(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.ambient {
            return Err(Error::DimensionMismatch(format!(
                "frequency has length {}, system lives in dimension {}",
                xi.len(),
                self.ambient
            )));
        }
        Ok(())
    }

    /// `lambda_j(xi) = xi_j + sum_k a_jk xi_{n+k}` without length checks.
    pub(crate) fn symbol_component(&self, j: usize, xi: &[f64]) -> Complex64 {
        let m = self.m();
        let row = &self.coeffs[j * m..(j + 1) * m];
        row.iter().zip(&xi[self.n..]).fold(Complex64::new(xi[j], 0.0), |acc, (a, x)| acc + a * x)
    }

    /// The symbol vector `lambda(xi)`.
    pub fn symbol(&self, xi: &[f64]) -> Result<Vec<Complex64>> {
        self.check_len(xi)?;
        Ok((0..self.n).map(|j| self.symbol_component(j, xi)).collect())
    }

    pub(crate) fn laplacian_symbol_unchecked(&self, xi: &[f64]) -> f64 {
        (0..self.n).map(|j| self.symbol_component(j, xi).norm_sqr()).sum()
    }

    /// `sum_j |lambda_j(xi)|^2`, the symbol of Delta_L.
    pub fn laplacian_symbol(&self, xi: &[f64]) -> Result<f64> {
        self.check_len(xi)?;
        Ok(self.laplacian_symbol_unchecked(xi))
    }

    /// Real symmetric matrix Q with `laplacian_symbol(xi) = xi^T Q xi`.
    pub fn quadratic_form(&self) -> Vec<Vec<f64>> {
        let dim = self.ambient;
        // column a of the n x N matrix A with lambda = A xi
        let column = |a: usize| -> Vec<Complex64> {
            (0..self.n)
                .map(|j| {
                    if a < self.n {
                        Complex64::new(if a == j { 1.0 } else { 0.0 }, 0.0)
                    } else {
                        self.coeff(j, a - self.n)
                    }
                })
                .collect()
        };
        let cols: Vec<Vec<Complex64>> = (0..dim).map(column).collect();
        (0..dim)
            .map(|a| (0..dim).map(|b| cols[a].iter().zip(&cols[b]).map(|(x, y)| (x.conj() * y).re).sum()).collect())
            .collect()
    }

    /// JSON-facing representation.
    pub fn to_file(&self) -> SystemFile {
        SystemFile { n: self.n, ambient: self.ambient, coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect() }
    }
}

/// On-disk form: `{"n":..,"N":..,"coeffs":[[re,im],...]}` with row-major coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub n: usize,
    #[serde(rename = "N")]
    pub ambient: usize,
    #[serde(default)]
    pub coeffs: Vec<[f64; 2]>,
}

impl TryFrom<SystemFile> for EllipticSystem {
    type Error = Error;

    fn try_from(file: SystemFile) -> Result<Self> {
        let m = file.ambient.saturating_sub(file.n);
        if file.coeffs.len() != file.n * m {
            return Err(Error::ShapeMismatch {
                rows: file.coeffs.len().checked_div(m).unwrap_or(file.coeffs.len()),
                cols: m,
                n: file.n,
                m,
            });
        }
        let rows = if m == 0 {
            Vec::new()
        } else {
            file.coeffs.chunks(m).map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)).collect()).collect()
        };
        EllipticSystem::new(file.n, file.ambient, rows)
    }
}

/// Outcome of [`certify_ellipticity`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityCertificate {
    /// Minimum of the Delta_L symbol over the sampled unit sphere, after refinement.
    pub constant: f64,
    pub sphere_samples: usize,
    pub elliptic: bool,
    pub witness_direction: Vec<f64>,
    pub tolerance: f64,
}

/// Deterministic, roughly uniform points on the unit sphere S^{N-1}.
pub fn sphere_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * (k as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci lattice
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![rho * t.cos(), rho * t.sin(), z]
                })
                .collect()
        }
        _ => {
            // Halton points pushed through Box-Muller, then normalized.
            let primes = first_primes(dim + dim % 2);
            (1..=count)
                .filter_map(|k| {
                    let u: Vec<f64> = primes.iter().map(|&b| radical_inverse(k, b)).collect();
                    let mut x: Vec<f64> = u
                        .chunks(2)
                        .flat_map(|pair| {
                            let r = (-2.0 * pair[0].ln()).sqrt();
                            let t = std::f64::consts::TAU * pair[1];
                            [r * t.cos(), r * t.sin()]
                        })
                        .take(dim)
                        .collect();
                    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    (norm > 0.0).then(|| {
                        x.iter_mut().for_each(|v| *v /= norm);
                        x
                    })
                })
                .collect()
        }
    }
}

fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

fn first_primes(count: usize) -> Vec<usize> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2;
    while primes.len() < count {
        if primes.iter().all(|p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn rayleigh(q: &[Vec<f64>], x: &[f64]) -> f64 {
    q.iter().zip(x).map(|(row, xa)| xa * row.iter().zip(x).map(|(qab, xb)| qab * xb).sum::<f64>()).sum()
}

/// Minimizes the Delta_L symbol over a deterministic sphere sample, then
/// refines around the best sample by projected gradient descent.
pub fn certify_ellipticity(sys: &EllipticSystem, sphere_resolution: usize, tol: f64) -> Result<EllipticityCertificate> {
    if sphere_resolution < MIN_SPHERE_SAMPLES {
        return Err(Error::Config(format!(
            "sphere resolution {sphere_resolution} is below the minimum {MIN_SPHERE_SAMPLES}"
        )));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Config(format!("tolerance {tol} must be finite and nonnegative")));
    }
    let dim = sys.ambient_dim();
    let q = sys.quadratic_form();
    let points = sphere_points(dim, sphere_resolution);
    let (mut best, mut best_val) = points
        .iter()
        .map(|x| (x.clone(), sys.laplacian_symbol_unchecked(x)))
        .fold((vec![0.0; dim], f64::INFINITY), |acc, (x, v)| if v < acc.1 { (x, v) } else { acc });

    // Step 1/trace(Q) is below 1/lambda_max, so each step decreases the quotient.
    let trace: f64 = (0..dim).map(|a| q[a][a]).sum();
    if trace > 0.0 {
        let step = 1.0 / trace;
        for _ in 0..20_000 {
            let qx: Vec<f64> = q.iter().map(|row| row.iter().zip(&best).map(|(a, b)| a * b).sum()).collect();
            let mut next: Vec<f64> = best.iter().zip(&qx).map(|(x, g)| x - step * (g - best_val * x)).collect();
            let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
            next.iter_mut().for_each(|v| *v /= norm);
            let val = rayleigh(&q, &next);
            if val.is_nan() || val >= best_val {
                break;
            }
            let gain = best_val - val;
            best = next;
            best_val = val;
            if gain <= 1e-17 * trace {
                break;
            }
        }
    }
    let constant = best_val.max(0.0);
    Ok(EllipticityCertificate {
        constant,
        sphere_samples: points.len(),
        elliptic: constant > tol,
        witness_direction: best,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(EllipticSystem::new(1, 2, vec![vec![c(1.0, 0.0)]]), Err(Error::TooFewFields(1))));
        assert!(matches!(EllipticSystem::new(2, 3, vec![vec![c(0.0, 1.0)]]), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(
            EllipticSystem::new(2, 5, vec![vec![c(0.0, 0.0); 3]; 2]),
            Err(Error::DimensionConstraint { n: 2, ambient: 5 })
        ));
        assert!(EllipticSystem::gradient(2).is_ok());
    }

    #[test]
    fn symbol_examples() {
        let g = EllipticSystem::gradient(2).unwrap();
        assert_eq!(g.symbol(&[3.0, 4.0]).unwrap(), vec![c(3.0, 0.0), c(4.0, 0.0)]);
        let cr = EllipticSystem::cauchy_riemann_type();
        assert_eq!(cr.symbol(&[1.0, 0.0, 2.0]).unwrap(), vec![c(1.0, 2.0), c(0.0, 0.0)]);
        assert_eq!(cr.laplacian_symbol(&[1.0, 0.0, 2.0]).unwrap(), 5.0);
        assert_eq!(cr.symbol(&[0.0; 3]).unwrap(), vec![c(0.0, 0.0); 2]);
        assert!(cr.symbol(&[1.0, 2.0]).is_err());
        let degenerate = EllipticSystem::new(2, 3, vec![vec![c(0.0, 0.0)]; 2]).unwrap();
        assert_eq!(degenerate.laplacian_symbol(&[0.0, 0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_form_matches_symbol() {
        let sys = EllipticSystem::new(2, 3, vec![vec![c(0.3, -1.2)], vec![c(2.0, 0.5)]]).unwrap();
        let q = sys.quadratic_form();
        let xi = [0.7, -1.1, 0.4];
        let direct = sys.laplacian_symbol(&xi).unwrap();
        assert!((rayleigh(&q, &xi) - direct).abs() < 1e-13 * direct);
    }

    #[test]
    fn certificates() {
        let g = certify_ellipticity(&EllipticSystem::gradient(2).unwrap(), 10_000, 1e-9).unwrap();
        assert!((g.constant - 1.0).abs() < 1e-12 && g.elliptic);
        let cr = certify_ellipticity(&EllipticSystem::cauchy_riemann_type(), 10_000, 1e-9).unwrap();
        assert!((cr.constant - 1.0).abs() < 1e-6 && cr.elliptic);
        let degenerate = EllipticSystem::new(2, 3, vec![vec![c(0.0, 0.0)]; 2]).unwrap();
        let d = certify_ellipticity(&degenerate, 10_000, 1e-9).unwrap();
        assert!(!d.elliptic);
        assert!(d.witness_direction[2].abs() > 1.0 - 1e-9);
        assert!(certify_ellipticity(&degenerate, 10, 1e-9).is_err());
    }

    #[test]
    fn sphere_points_are_unit() {
        for dim in 2..=5 {
            let pts = sphere_points(dim, 500);
            assert!(pts.len() >= 499);
            for p in pts {
                let n: f64 = p.iter().map(|v| v * v).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let cr = EllipticSystem::cauchy_riemann_type();
        let text = serde_json::to_string(&cr.to_file()).unwrap();
        assert!(text.contains("\"N\":3"));
        let back: SystemFile = serde_json::from_str(&text).unwrap();
        assert_eq!(EllipticSystem::try_from(back).unwrap(), cr);
    }
}
