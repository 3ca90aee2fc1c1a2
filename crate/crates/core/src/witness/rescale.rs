use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::norms::BallSpec;
use crate::system::EllipticSystem;
use crate::witness::pair::{certify, conjugate_exponent, Generator, WitnessPair};

/// Relabels samples for `x -> x0 + R x`: the same sample counts on a box
/// scaled by R, cyclically shifted so the old origin lands on `x0`.
struct Relabel {
    grid: GridSpec,
    shift: Vec<usize>,
}

impl Relabel {
    fn new(old: &GridSpec, x0: &[f64], radius: f64) -> Result<Self> {
        let grid = old.scaled(radius)?;
        let shift = x0
            .iter()
            .enumerate()
            .map(|(a, &c)| {
                let cells = c / grid.spacing(a);
                if (cells - cells.round()).abs() > 1e-9 {
                    return Err(Error::Hypothesis(format!(
                        "center coordinate {c} is not a grid point of the rescaled box (spacing {})",
                        grid.spacing(a)
                    )));
                }
                let n = grid.dims()[a] as i64;
                Ok((cells.round() as i64).rem_euclid(n) as usize)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, shift })
    }

    fn scalar(&self, f: &ScalarField, factor: f64) -> ScalarField {
        let grid = &self.grid;
        let dims = grid.dims();
        let mut multi = vec![0; grid.dim()];
        let values = (0..grid.len())
            .map(|flat| {
                grid.multi_index(flat, &mut multi);
                for a in 0..multi.len() {
                    multi[a] = (multi[a] + dims[a] - self.shift[a]) % dims[a];
                }
                f.values()[grid.flat_index(&multi)] * factor
            })
            .collect();
        ScalarField::new(grid.clone(), values).expect("same sample count")
    }

    fn vector(&self, v: &VectorField, factor: f64) -> VectorField {
        VectorField::new(v.components().iter().map(|c| self.scalar(c, factor)).collect()).expect("shared grid")
    }
}

fn map_ball(ball: &BallSpec, x0: &[f64], radius: f64) -> BallSpec {
    BallSpec::new(ball.center.iter().zip(x0).map(|(c, x)| x + radius * c).collect(), ball.radius * radius)
}

/// `V(x) = R^{-N/p} V~((x - x0)/R)`, `W(x) = R^{-N/p'} W~((x - x0)/R)`.
///
/// The result lives on the box scaled by `R` with the same sample counts, so
/// norms are preserved and the product picks up exactly `R^{-N}`. `x0` must
/// be a grid point of the scaled box.
pub fn rescale_to_ball(sys: &EllipticSystem, pair: &WitnessPair, x0: &[f64], radius: f64) -> Result<WitnessPair> {
    if !(radius.is_finite() && radius >= 1.0) {
        return Err(Error::Hypothesis(format!("rescaling radius {radius} must be at least 1")));
    }
    let old = pair.v.grid();
    if x0.len() != old.dim() {
        return Err(Error::DimensionMismatch(format!("center has {} coordinates", x0.len())));
    }
    let relabel = Relabel::new(old, x0, radius)?;
    let support = map_ball(&pair.support, x0, radius);
    support.check_fits(&relabel.grid, 1.0)?;
    let dim = old.dim() as f64;
    let p = pair.p;
    let q = conjugate_exponent(p);
    let mut constants = pair.constants.clone();
    constants.insert("rescale_radius".into(), radius);
    let budgets = pair
        .budgets
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.bound *= radius.powi(-b.derivative_order);
            b
        })
        .collect();
    let generators = pair
        .generators
        .iter()
        .map(|g| Generator {
            name: g.name.clone(),
            field: relabel.scalar(&g.field, 1.0),
            support: map_ball(&g.support, x0, radius),
        })
        .collect();
    let mut out = WitnessPair {
        kind: pair.kind,
        p,
        indices: pair.indices,
        v: relabel.vector(&pair.v, radius.powf(-dim / p)),
        w: relabel.vector(&pair.w, radius.powf(-dim / q)),
        expected: relabel.scalar(&pair.expected, radius.powf(-dim)),
        identity_region: pair.identity_region.as_ref().map(|b| map_ball(b, x0, radius)),
        support,
        constants,
        budgets,
        generators,
        certificate: pair.certificate.clone(),
    };
    out.certificate = certify(sys, &out)?;
    Ok(out)
}
