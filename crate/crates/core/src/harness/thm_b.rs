use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::norms::{pair, BallSpec};
use crate::system::EllipticSystem;
use crate::witness::{
    conjugate_exponent, factorize_phi, gaussian_bump, mollifier_bump, normalize_gradient, odd_gaussian_bump,
    witness_large_p, witness_small_p, witness_unit_ball, DcFamily, FactorSide, WitnessPair,
};

fn yes() -> bool {
    true
}

/// Where the witness family is built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessLayout {
    /// Radius of the balls carrying the small-p / large-p constructions.
    pub radius: f64,
    pub centers: Vec<Vec<f64>>,
    /// Adds the unit-ball construction, which needs `B(0, 2)` inside the box.
    #[serde(default = "yes")]
    pub unit_ball: bool,
    /// Ball of the two factorizations.
    pub factor_radius: f64,
    /// Radius of the unit-mass bump that is factorized.
    pub bump_radius: f64,
}

impl WitnessLayout {
    /// Balls of radius `3L/20` on a 3^N lattice of spacing `L/10`, the
    /// factorization on `B(0, L/5)` with a bump of radius `L/10`.
    pub fn for_grid(grid: &GridSpec) -> Self {
        let side = grid.box_lengths().iter().copied().fold(f64::INFINITY, f64::min);
        let step = side / 10.0;
        let mut centers = vec![Vec::new()];
        for _ in 0..grid.dim() {
            centers = centers
                .into_iter()
                .flat_map(|c| {
                    [-step, 0.0, step].into_iter().map(move |x| {
                        let mut c = c.clone();
                        c.push(x);
                        c
                    })
                })
                .collect();
        }
        Self {
            radius: 0.75 * side / 5.0,
            centers,
            unit_ball: BallSpec::new(vec![0.0; grid.dim()], 1.0).check_fits(grid, 2.0).is_ok(),
            factor_radius: side / 5.0,
            bump_radius: side / 10.0,
        }
    }
}

/// One normalized element `f = V.W / (v_scale w_scale)` of a DC family.
#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub label: String,
    pub family: DcFamily,
    pub f: ScalarField,
    pub v_scale: f64,
    pub w_scale: f64,
}

/// Entries a witness must pass to be a member of its families. The product
/// identity is not needed for membership, only for reproducing a target.
fn check_membership(pair: &WitnessPair, label: &str) -> Result<()> {
    let failed: Vec<String> = pair
        .certificate
        .entries
        .iter()
        .filter(|e| {
            (e.name.starts_with("div_") || e.name.starts_with("curl_residual") || e.name.starts_with("support_"))
                && !e.passed
        })
        .map(|e| format!("{} = {:e}", e.name, e.value))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Hypothesis(format!("witness {label} is not certified: {}", failed.join(", "))))
    }
}

fn push_members(sys: &EllipticSystem, pair: &WitnessPair, label: String, out: &mut Vec<FamilyMember>) -> Result<()> {
    check_membership(pair, &label)?;
    for family in pair.families() {
        let (f, v_scale, w_scale) = pair.membership_product(sys, family)?;
        out.push(FamilyMember { label: label.clone(), family, f, v_scale, w_scale });
    }
    Ok(())
}

fn index_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
}

/// Builds the witness family used for the bmo lower bound at exponent `p`.
pub fn witness_family(
    sys: &EllipticSystem,
    grid: &GridSpec,
    p: f64,
    layout: &WitnessLayout,
) -> Result<Vec<FamilyMember>> {
    let dim = grid.dim();
    let mut out = Vec::new();
    for center in &layout.centers {
        let ball = BallSpec::new(center.clone(), layout.radius);
        let bumps = [
            ("even", gaussian_bump(grid, center, layout.radius)),
            ("odd", odd_gaussian_bump(grid, center, layout.radius, 0)),
        ];
        for (name, u) in bumps {
            let u = normalize_gradient(&u, 2.0, Some(&ball))?;
            for (i, j) in index_pairs(sys.n()) {
                let pair = if p <= 2.0 {
                    witness_small_p(sys, &u, &ball, i, j, p)?
                } else {
                    witness_large_p(sys, &u, &ball, i, j, p)?
                };
                push_members(sys, &pair, format!("{:?}({i},{j}) {name} u at {center:?}", pair.kind), &mut out)?;
            }
        }
    }
    if layout.unit_ball {
        let origin = vec![0.0; dim];
        let u = normalize_gradient(&gaussian_bump(grid, &origin, 1.0), conjugate_exponent(p), None)?;
        for (i, j) in index_pairs(sys.n()) {
            let pair = witness_unit_ball(sys, &u, i, j, p)?;
            push_members(sys, &pair, format!("UnitBall({i},{j})"), &mut out)?;
        }
    }
    let origin = vec![0.0; dim];
    let phi = mollifier_bump(grid, &origin, layout.bump_radius, 1.0);
    let ball = BallSpec::new(origin, layout.factor_radius);
    for side in [FactorSide::Grad, FactorSide::Div] {
        let pair = factorize_phi(sys, &phi, &ball, side, p)?;
        push_members(sys, &pair, format!("{:?} of unit-mass bump", pair.kind), &mut out)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThmBLower {
    /// `max |pair(g, f)|` over the family.
    pub value: f64,
    pub best: String,
    pub best_family: DcFamily,
}

/// Lower bound for the bmo norm of `g` from the witness family.
pub fn thm_b_lower(g: &ScalarField, family: &[FamilyMember]) -> Result<ThmBLower> {
    let mut best: Option<(f64, &FamilyMember)> = None;
    for member in family {
        let value = pair(g, &member.f)?.norm();
        if best.is_none_or(|(b, _)| value > b) {
            best = Some((value, member));
        }
    }
    let (value, member) = best.ok_or_else(|| Error::Hypothesis("empty witness family".into()))?;
    Ok(ThmBLower { value, best: member.label.clone(), best_family: member.family })
}
