use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::norms::mollifier::unit_ball_volume;

pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    unit_ball_volume(dim) * radius.powi(dim as i32)
}

/// A Euclidean ball in physical coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.center.len(), self.radius)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.distance2(x) <= self.radius * self.radius
    }

    pub fn distance2(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Checks that the concentric ball of radius `factor * radius` lies
    /// inside the box without wrapping.
    pub fn check_fits(&self, grid: &GridSpec, factor: f64) -> Result<()> {
        if self.center.len() != grid.dim() {
            return Err(Error::DimensionMismatch(format!(
                "ball center has {} coordinates on a {}-dimensional grid",
                self.center.len(),
                grid.dim()
            )));
        }
        for (a, c) in self.center.iter().enumerate() {
            let reach = c.abs() + factor * self.radius;
            // keep one cell of clearance from the periodic seam
            let limit = grid.box_lengths()[a] / 2.0 - grid.spacing(a);
            if reach > limit + 1e-12 * grid.box_lengths()[a] {
                return Err(Error::SupportOverflow(format!(
                    "ball of radius {} x {factor} at {:?} reaches {reach} on axis {a}, box half-width is {}",
                    self.radius,
                    self.center,
                    grid.box_lengths()[a] / 2.0
                )));
            }
        }
        Ok(())
    }
}

/// Balls centered on a strided subgrid with a common set of radii. Balls
/// use the torus metric; every radius is at most half the shortest box side.
#[derive(Clone, Debug)]
pub struct BallFamily {
    grid: GridSpec,
    stride: usize,
    radii: Vec<f64>,
    /// Per radius: integer offsets (flattened, `dim` per offset) inside the ball.
    offsets: Vec<Vec<isize>>,
    centers: Vec<usize>,
}

impl BallFamily {
    pub fn new(grid: &GridSpec, stride: usize, mut radii: Vec<f64>) -> Result<Self> {
        if stride == 0 {
            return Err(Error::BallFamily("stride must be positive".into()));
        }
        if radii.is_empty() {
            return Err(Error::BallFamily("no radii".into()));
        }
        if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::BallFamily(format!("radius {r} is not positive")));
        }
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let half = grid.half_width();
        if let Some(r) = radii.iter().find(|&&r| r > half * (1.0 + 1e-12)) {
            return Err(Error::BallFamily(format!("radius {r} exceeds the box half-width {half}")));
        }
        let offsets = radii.iter().map(|&r| ball_offsets(grid, r)).collect();
        let mut multi = vec![0; grid.dim()];
        let centers = (0..grid.len())
            .filter(|&flat| {
                grid.multi_index(flat, &mut multi);
                multi.iter().all(|i| i % stride == 0)
            })
            .collect();
        Ok(Self { grid: grid.clone(), stride, radii, offsets, centers })
    }

    /// Dyadic radii from two cells up to half the box.
    pub fn dyadic(grid: &GridSpec, stride: usize) -> Result<Self> {
        let mut radii = Vec::new();
        let mut r = 2.0 * grid.min_spacing();
        while r <= grid.half_width() * (1.0 + 1e-12) {
            radii.push(r);
            r *= 2.0;
        }
        Self::new(grid, stride, radii)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    /// Sample count of balls with the given radius index.
    pub fn ball_size(&self, radius_index: usize) -> usize {
        self.offsets[radius_index].len() / self.grid.dim()
    }

    /// Radii indices with `|B| <= 1` and with `|B| > 1`.
    pub fn split(&self) -> (Vec<usize>, Vec<usize>) {
        let dim = self.grid.dim();
        (0..self.radii.len()).partition(|&r| ball_volume(dim, self.radii[r]) <= 1.0)
    }

    /// Flat indices of the samples in the ball `(center, radius_index)`.
    pub fn members(&self, center: usize, radius_index: usize) -> impl Iterator<Item = usize> + '_ {
        let dim = self.grid.dim();
        let dims = self.grid.dims();
        let mut base = vec![0; dim];
        self.grid.multi_index(center, &mut base);
        self.offsets[radius_index].chunks(dim).map(move |off| {
            off.iter()
                .zip(&base)
                .zip(dims)
                .fold(0, |acc, ((&o, &b), &n)| acc * n + (b as isize + o).rem_euclid(n as isize) as usize)
        })
    }

    fn check_grid(&self, f: &ScalarField) -> Result<()> {
        self.grid.ensure_same(f.grid())
    }
}

/// Integer offsets `d` (one representative per torus class) with `|d h| <= r`.
fn ball_offsets(grid: &GridSpec, r: f64) -> Vec<isize> {
    let dim = grid.dim();
    let ranges: Vec<(isize, isize)> = (0..dim)
        .map(|a| {
            let n = grid.dims()[a] as isize;
            let lo = -n / 2;
            (lo, lo + n - 1)
        })
        .collect();
    let h: Vec<f64> = (0..dim).map(|a| grid.spacing(a)).collect();
    let mut out = Vec::new();
    let mut cur: Vec<isize> = ranges.iter().map(|r| r.0).collect();
    let r2 = r * r;
    'outer: loop {
        let d2: f64 = cur.iter().zip(&h).map(|(&d, &h)| (d as f64 * h).powi(2)).sum();
        if d2 <= r2 {
            out.extend_from_slice(&cur);
        }
        for a in (0..dim).rev() {
            if cur[a] < ranges[a].1 {
                cur[a] += 1;
                continue 'outer;
            }
            cur[a] = ranges[a].0;
        }
        break;
    }
    out
}

/// Hardy-Littlewood maximal function over the family: at each point, the
/// largest average of |f| over sampled balls containing it.
pub fn hl_maximal(f: &ScalarField, balls: &BallFamily) -> Result<ScalarField> {
    balls.check_grid(f)?;
    let moduli: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    let grid = balls.grid();
    let dim = grid.dim();
    let dims = grid.dims();
    let stride = balls.stride;
    let mut out = vec![0.0f64; grid.len()];
    for r in 0..balls.radii.len() {
        let size = balls.ball_size(r) as f64;
        let averages: Vec<f64> =
            balls.centers.par_iter().map(|&c| balls.members(c, r).map(|i| moduli[i]).sum::<f64>() / size).collect();
        // centers form a product lattice: index of lattice point by multi-index / stride
        let lattice: Vec<usize> = dims.iter().map(|n| n.div_ceil(stride)).collect();
        let offsets = &balls.offsets[r];
        out.par_iter_mut().enumerate().for_each(|(x, o)| {
            let mut base = vec![0; dim];
            grid.multi_index(x, &mut base);
            for off in offsets.chunks(dim) {
                // center c = x - off must lie on the lattice
                let mut lat = 0;
                let mut on_lattice = true;
                for a in 0..dim {
                    let c = (base[a] as isize - off[a]).rem_euclid(dims[a] as isize) as usize;
                    if !c.is_multiple_of(stride) {
                        on_lattice = false;
                        break;
                    }
                    lat = lat * lattice[a] + c / stride;
                }
                if on_lattice {
                    *o = o.max(averages[lat]);
                }
            }
        });
    }
    Ok(ScalarField::new(grid.clone(), out.into_iter().map(|v| Complex64::new(v, 0.0)).collect()).expect("grid sized"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmoEstimate {
    pub value: f64,
    /// sup over |B| <= 1 of the mean oscillation
    pub oscillation: f64,
    /// sup over |B| > 1 of the mean of |g|
    pub large_average: f64,
}

/// Local bmo norm over the sampled family.
pub fn bmo_norm(g: &ScalarField, balls: &BallFamily) -> Result<BmoEstimate> {
    balls.check_grid(g)?;
    let (small, large) = balls.split();
    if small.is_empty() {
        return Err(Error::BallFamily("no balls with |B| <= 1".into()));
    }
    if large.is_empty() {
        return Err(Error::BallFamily("no balls with |B| > 1".into()));
    }
    let vals = g.values();
    let sup = |f: &(dyn Fn(usize, usize) -> f64 + Sync), radii: &[usize]| -> f64 {
        radii
            .iter()
            .map(|&r| balls.centers.par_iter().map(|&c| f(c, r)).collect::<Vec<f64>>().into_iter().fold(0.0, f64::max))
            .fold(0.0, f64::max)
    };
    let oscillation = sup(
        &|c, r| {
            let size = balls.ball_size(r) as f64;
            let mean = balls.members(c, r).map(|i| vals[i]).sum::<Complex64>() / size;
            balls.members(c, r).map(|i| (vals[i] - mean).norm()).sum::<f64>() / size
        },
        &small,
    );
    let large_average =
        sup(&|c, r| balls.members(c, r).map(|i| vals[i].norm()).sum::<f64>() / balls.ball_size(r) as f64, &large);
    Ok(BmoEstimate { value: oscillation + large_average, oscillation, large_average })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_cover_half_box() {
        let g = GridSpec::new(vec![8, 8], vec![1.0, 1.0]).unwrap();
        let all = ball_offsets(&g, 10.0);
        assert_eq!(all.len() / 2, 64);
        let tiny = ball_offsets(&g, 0.01);
        assert_eq!(tiny, vec![0, 0]);
        let axis = ball_offsets(&g, 0.125);
        assert_eq!(axis.len() / 2, 5);
    }

    #[test]
    fn constant_field() {
        let g = GridSpec::new(vec![16, 16, 16], vec![4.0; 3]).unwrap();
        let balls = BallFamily::dyadic(&g, 2).unwrap();
        let c = ScalarField::constant(&g, Complex64::new(3.0, 0.0));
        let b = bmo_norm(&c, &balls).unwrap();
        assert!((b.value - 3.0).abs() < 1e-12 && b.oscillation < 1e-13);
        let m = hl_maximal(&c, &balls).unwrap();
        assert!(m.values().iter().all(|v| (v.re - 3.0).abs() < 1e-12));
    }

    #[test]
    fn missing_regime() {
        let g = GridSpec::new(vec![16, 16], vec![1.0, 1.0]).unwrap();
        let balls = BallFamily::dyadic(&g, 2).unwrap();
        let c = ScalarField::constant(&g, Complex64::new(1.0, 0.0));
        assert!(matches!(bmo_norm(&c, &balls), Err(Error::BallFamily(_))));
        assert!(BallFamily::new(&g, 1, vec![0.75]).is_err());
    }
}
