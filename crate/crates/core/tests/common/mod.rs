#![allow(dead_code)]

use divcurl::harness::{band_limited_scalar, random_field_of_kind, EnsembleSpec, FieldKind};
use divcurl::norms::BallSpec;
use divcurl::witness::{
    conjugate_exponent, factorize_phi, gaussian_bump, mollifier_bump, normalize_gradient, odd_gaussian_bump,
    witness_large_p, witness_small_p, witness_unit_ball, FactorSide, WitnessPair,
};
use divcurl::{Complex64, EllipticSystem, GridSpec, ScalarField, VectorField};

/// Samples per ball radius used by every witness grid.
pub const CELLS_PER_RADIUS: f64 = 28.0;

pub const EXPONENTS: [f64; 3] = [4.0 / 3.0, 2.0, 4.0];

pub fn gradient_system() -> EllipticSystem {
    EllipticSystem::gradient(2).unwrap()
}

pub fn cr_system() -> EllipticSystem {
    EllipticSystem::cauchy_riemann_type()
}

pub fn grid(dims: &[usize], side: f64) -> GridSpec {
    GridSpec::new(dims.to_vec(), vec![side; dims.len()]).unwrap()
}

/// A grid with `n` samples per axis on which a ball of `radius` spans the
/// standard number of cells.
pub fn witness_grid(dim: usize, n: usize, radius: f64) -> GridSpec {
    grid(&vec![n; dim], n as f64 * radius / CELLS_PER_RADIUS)
}

pub fn scalar(grid: &GridSpec, seed: u64, band: usize) -> ScalarField {
    band_limited_scalar(grid, seed, 0, band).unwrap()
}

pub fn vector(sys: &EllipticSystem, grid: &GridSpec, seed: u64, band: usize, kind: FieldKind) -> VectorField {
    let spec = EnsembleSpec::new(seed, 1, band, kind);
    random_field_of_kind(sys, grid, &spec, kind, 0, 0).unwrap().into_vector().unwrap()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bump {
    Even,
    Odd,
}

/// One witness construction, built on demand so large grids hold a single
/// pair at a time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessSpec {
    /// The small-p construction for `p <= 2`, the large-p one otherwise.
    Ball {
        bump: Bump,
        i: usize,
        j: usize,
    },
    Unit,
    FactorGrad,
    FactorDiv,
}

impl WitnessSpec {
    /// Every construction at one exponent. With `full` set, both bump shapes
    /// and every ordered index pair are included.
    pub fn all(sys: &EllipticSystem, full: bool) -> Vec<Self> {
        let n = sys.n();
        let mut out = Vec::new();
        let bumps: &[Bump] = if full { &[Bump::Even, Bump::Odd] } else { &[Bump::Even] };
        for &bump in bumps {
            for i in 0..n {
                for j in 0..n {
                    if i != j && (full || (i, j) == (0, 1)) {
                        out.push(Self::Ball { bump, i, j });
                    }
                }
            }
        }
        out.extend([Self::Unit, Self::FactorGrad, Self::FactorDiv]);
        out
    }

    pub fn label(&self, p: f64) -> String {
        match self {
            Self::Ball { bump, i, j } => {
                let kind = if p <= 2.0 { "small-p" } else { "large-p" };
                format!("{kind}/{bump:?}/({i},{j}) p={p:.4}")
            }
            other => format!("{other:?} p={p:.4}"),
        }
    }

    /// Builds the pair on the ball of `radius` at the origin of `grid`.
    pub fn build(&self, sys: &EllipticSystem, grid: &GridSpec, radius: f64, p: f64) -> WitnessPair {
        let origin = vec![0.0; grid.dim()];
        let ball = BallSpec::new(origin.clone(), radius);
        let phi = || mollifier_bump(grid, &origin, radius / 2.0, 1.0);
        match *self {
            Self::Ball { bump, i, j } => {
                let raw = match bump {
                    Bump::Even => gaussian_bump(grid, &origin, radius),
                    Bump::Odd => odd_gaussian_bump(grid, &origin, radius, 0),
                };
                let u = normalize_gradient(&raw, 2.0, Some(&ball)).unwrap();
                if p <= 2.0 {
                    witness_small_p(sys, &u, &ball, i, j, p).unwrap()
                } else {
                    witness_large_p(sys, &u, &ball, i, j, p).unwrap()
                }
            }
            Self::Unit => {
                let u = normalize_gradient(&gaussian_bump(grid, &origin, 1.0), conjugate_exponent(p), None).unwrap();
                witness_unit_ball(sys, &u, 0, 1, p).unwrap()
            }
            Self::FactorGrad => factorize_phi(sys, &phi(), &ball, FactorSide::Grad, p).unwrap(),
            Self::FactorDiv => factorize_phi(sys, &phi(), &ball, FactorSide::Div, p).unwrap(),
        }
    }
}

pub fn describe_failures(pair: &WitnessPair) -> String {
    pair.certificate
        .failures()
        .iter()
        .map(|e| format!("{} = {:e} > {:e}", e.name, e.value, e.tolerance))
        .collect::<Vec<_>>()
        .join("; ")
}
