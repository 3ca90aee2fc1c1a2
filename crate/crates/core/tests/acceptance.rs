//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p divcurl --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use divcurl::harness::{
    random_field_of_kind, run_experiment, witness_family, ExperimentConfig, ExperimentReport, FieldKind, TheoremId,
};
use divcurl::hodge::hodge_decompose;
use divcurl::norms::{
    bmo_norm, bump_profile, grand_maximal, h1_norm, hl_maximal, lp_norm, pair, BallFamily, MollifierSpec,
};
use divcurl::operators::{curl_l, div_l_adjoint, grad_l, inner, inner_vector};
use divcurl::system::{certify_ellipticity, DEFAULT_ELLIPTIC_TOL, DEFAULT_SPHERE_SAMPLES};
use divcurl::witness::rescale_to_ball;
use divcurl::{Complex64, EllipticSystem, GridSpec, ScalarField, VectorField};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sup_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).unwrap().sup_norm()
}

fn ellipticity() -> Outcome {
    let constant = |sys: &EllipticSystem| {
        let cert = certify_ellipticity(sys, DEFAULT_SPHERE_SAMPLES, DEFAULT_ELLIPTIC_TOL).unwrap();
        (cert.elliptic, cert.constant)
    };
    let (ok_grad, c_grad) = constant(&gradient_system());
    let (ok_cr, c_cr) = constant(&cr_system());
    let zero = EllipticSystem::new(2, 3, vec![vec![c(0.0, 0.0)], vec![c(0.0, 0.0)]]).unwrap();
    let (ok_zero, c_zero) = constant(&zero);
    ensure(ok_grad && (c_grad - 1.0).abs() <= 1e-6, || format!("gradient system: constant {c_grad}"))?;
    ensure(ok_cr && (c_cr - 1.0).abs() <= 1e-6, || format!("CR-type system: constant {c_cr}"))?;
    ensure(!ok_zero, || format!("zero coefficients certified elliptic with constant {c_zero}"))?;
    Ok(format!("constants {c_grad:.9}, {c_cr:.9}; degenerate system rejected ({c_zero:e})"))
}

/// The two example systems on the grids the field-level criteria use.
fn systems() -> Vec<(&'static str, EllipticSystem, GridSpec, usize)> {
    vec![
        ("gradient", gradient_system(), grid(&[64, 64], 2.0), 8),
        ("cr-type", cr_system(), grid(&[32, 32, 32], 2.0), 6),
    ]
}

fn calculus() -> Outcome {
    let (mut worst_curl, mut worst_adj) = (0.0f64, 0.0f64);
    for (name, sys, g, band) in systems() {
        for trial in 0..20 {
            let u = scalar(&g, 1000 + trial, band);
            let v = vector(&sys, &g, 2000 + trial, band, FieldKind::Vector);
            let grad = grad_l(&sys, &u).unwrap();
            let curl = curl_l(&sys, &grad).unwrap();
            let rel = curl.sup_norm() / grad.sup_norm();
            worst_curl = worst_curl.max(rel);
            ensure(rel <= 1e-10, || format!("{name} trial {trial}: curl grad residual {rel:e}"))?;

            let lhs = inner_vector(&grad, &v).unwrap();
            let rhs = inner(&u, &div_l_adjoint(&sys, &v).unwrap()).unwrap();
            let rel = (lhs - rhs).norm() / lhs.norm();
            worst_adj = worst_adj.max(rel);
            ensure(rel <= 1e-10, || format!("{name} trial {trial}: adjointness mismatch {rel:e}"))?;

            let curl_v = curl_l(&sys, &v).unwrap();
            for i in 0..sys.n() {
                ensure(curl_v.entry(i, i).values().iter().all(|z| *z == Complex64::new(0.0, 0.0)), || {
                    format!("{name} trial {trial}: nonzero diagonal")
                })?;
                for j in (0..sys.n()).filter(|&j| j != i) {
                    let exact = curl_v
                        .entry(i, j)
                        .values()
                        .iter()
                        .zip(curl_v.entry(j, i).values())
                        .all(|(a, b)| a.re.to_bits() == (-b.re).to_bits() && a.im.to_bits() == (-b.im).to_bits());
                    ensure(exact, || format!("{name} trial {trial}: curl entries ({i},{j}) not antisymmetric"))?;
                }
            }
        }
    }
    Ok(format!("40 fields; worst curl-grad residual {worst_curl:.2e}, worst adjointness gap {worst_adj:.2e}"))
}

fn hodge() -> Outcome {
    let (mut sum, mut div, mut idem, mut lin) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (a, b) = (c(0.7, -1.3), c(-0.4, 0.25));
    for (name, sys, g, band) in systems() {
        for trial in 0..100 {
            let v = vector(&sys, &g, 5000 + trial, band, FieldKind::Vector);
            let w = vector(&sys, &g, 9000 + trial, band, FieldKind::Vector);
            let scale = v.sup_norm();
            let hv = hodge_decompose(&sys, &v, &[]).unwrap();
            let e = sup_diff(&hv.div_free.add(&hv.exact).unwrap(), &v) / scale;
            sum = sum.max(e);
            ensure(e <= 1e-12, || format!("{name} trial {trial}: reconstruction error {e:e}"))?;
            div = div.max(hv.residual_div);
            ensure(hv.residual_div <= 1e-9, || format!("{name} trial {trial}: div residual {:e}", hv.residual_div))?;

            let again = hodge_decompose(&sys, &hv.div_free, &[]).unwrap();
            let e = sup_diff(&again.div_free, &hv.div_free) / scale;
            idem = idem.max(e);
            ensure(e <= 1e-9, || format!("{name} trial {trial}: idempotence error {e:e}"))?;

            let hw = hodge_decompose(&sys, &w, &[]).unwrap();
            let combo = v.scale(a).add(&w.scale(b)).unwrap();
            let hc = hodge_decompose(&sys, &combo, &[]).unwrap();
            let expected = hv.div_free.scale(a).add(&hw.div_free.scale(b)).unwrap();
            let e = sup_diff(&hc.div_free, &expected) / combo.sup_norm();
            lin = lin.max(e);
            ensure(e <= 1e-10, || format!("{name} trial {trial}: linearity error {e:e}"))?;
        }
    }
    Ok(format!(
        "200 trials; reconstruction {sum:.1e}, div residual {div:.1e}, idempotence {idem:.1e}, linearity {lin:.1e}"
    ))
}

fn check_pair(label: &str, pair: &divcurl::witness::WitnessPair) -> Result<(), String> {
    ensure(pair.certificate.passed(), || format!("{label}: {}", describe_failures(pair)))
}

fn witnesses() -> Outcome {
    let mut count = 0;
    // planar gradient system: every construction, both bumps, every index pair
    let sys = gradient_system();
    let g = witness_grid(2, 128, 1.0);
    for p in EXPONENTS {
        for spec in WitnessSpec::all(&sys, true) {
            let label = format!("gradient {}", spec.label(p));
            let pair = spec.build(&sys, &g, 1.0, p);
            check_pair(&label, &pair)?;
            for r in [1.0, 2.0] {
                let moved = rescale_to_ball(&sys, &pair, &[0.0, 0.0], r).map_err(|e| format!("{label}: {e}"))?;
                check_pair(&format!("{label} rescaled R={r}"), &moved)?;
            }
            count += 3;
        }
    }
    // CR-type system in three dimensions, one pair in memory at a time
    let sys = cr_system();
    let g = witness_grid(3, 128, 1.0);
    for p in EXPONENTS {
        for spec in WitnessSpec::all(&sys, false) {
            let label = format!("cr-type {}", spec.label(p));
            let pair = spec.build(&sys, &g, 1.0, p);
            check_pair(&label, &pair)?;
            count += 1;
            if p == 2.0 && matches!(spec, WitnessSpec::Ball { .. } | WitnessSpec::FactorDiv) {
                for r in [1.0, 2.0] {
                    let moved = rescale_to_ball(&sys, &pair, &[0.0; 3], r).map_err(|e| format!("{label}: {e}"))?;
                    check_pair(&format!("{label} rescaled R={r}"), &moved)?;
                    count += 1;
                }
            }
        }
    }
    Ok(format!("{count} certificates passed (128^2 and 128^3)"))
}

/// Index offset along one axis mapped to the representative in [-n/2, n/2).
fn wrap(d: isize, n: usize) -> isize {
    let n = n as isize;
    let r = d.rem_euclid(n);
    if r >= n / 2 {
        r - n
    } else {
        r
    }
}

/// Brute-force list of the balls of `balls`: for each (center, radius) the
/// flat indices of all samples within torus distance `radius`.
fn brute_balls(g: &GridSpec, balls: &BallFamily) -> Vec<(usize, f64, Vec<usize>)> {
    let dims = g.dims();
    let mut out = Vec::new();
    let (mut cm, mut xm) = (vec![0; g.dim()], vec![0; g.dim()]);
    for &r in balls.radii() {
        for flat_c in 0..g.len() {
            g.multi_index(flat_c, &mut cm);
            if cm.iter().any(|i| i % balls.stride() != 0) {
                continue;
            }
            let members = (0..g.len())
                .filter(|&x| {
                    g.multi_index(x, &mut xm);
                    let d2: f64 = (0..g.dim())
                        .map(|a| (wrap(xm[a] as isize - cm[a] as isize, dims[a]) as f64 * g.spacing(a)).powi(2))
                        .sum();
                    d2 <= r * r
                })
                .collect();
            out.push((flat_c, r, members));
        }
    }
    out
}

/// Largest relative gap seen so far against a brute-force oracle.
#[derive(Default)]
struct Worst(f64);

impl Worst {
    fn check(&mut self, name: &str, got: f64, want: f64, scale: f64) -> Result<(), String> {
        let e = (got - want).abs() / scale.max(f64::MIN_POSITIVE);
        self.0 = self.0.max(e);
        ensure(e <= 1e-12, || format!("{name}: {got:e} vs brute force {want:e}"))
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Direct circular convolution with the renormalized sampled mollifier.
fn brute_mollify(f: &ScalarField, t: f64) -> Vec<Complex64> {
    let g = f.grid();
    let dims = g.dims();
    let dim = g.dim();
    let (mut xm, mut ym) = (vec![0; dim], vec![0; dim]);
    let weight = |xm: &[usize], ym: &[usize]| {
        let d2: f64 =
            (0..dim).map(|a| (wrap(xm[a] as isize - ym[a] as isize, dims[a]) as f64 * g.spacing(a)).powi(2)).sum();
        bump_profile(d2.sqrt() / t)
    };
    xm.iter_mut().for_each(|v| *v = 0);
    let mass: f64 = (0..g.len())
        .map(|y| {
            g.multi_index(y, &mut ym);
            weight(&xm, &ym)
        })
        .sum();
    (0..g.len())
        .map(|x| {
            g.multi_index(x, &mut xm);
            (0..g.len())
                .map(|y| {
                    g.multi_index(y, &mut ym);
                    f.values()[y] * weight(&xm, &ym)
                })
                .sum::<Complex64>()
                / mass
        })
        .collect()
}

fn norm_oracles() -> Outcome {
    let g = grid(&[16, 16, 16], 4.0);
    let balls = BallFamily::dyadic(&g, 2).unwrap();
    let listing = brute_balls(&g, &balls);
    let dv = g.cell_volume();
    let mut worst = Worst::default();
    let mut track = |name: &str, got: f64, want: f64| worst.check(name, got, want, want.abs());
    for trial in 0..3 {
        let f = scalar(&g, 300 + trial, 5);
        let h = scalar(&g, 400 + trial, 3);
        let vals = f.values();

        let maximal = hl_maximal(&f, &balls).unwrap();
        let mut brute = vec![0.0f64; g.len()];
        for (_, _, members) in &listing {
            let avg = members.iter().map(|&i| vals[i].norm()).sum::<f64>() / members.len() as f64;
            members.iter().for_each(|&i| brute[i] = brute[i].max(avg));
        }
        for (x, want) in brute.iter().enumerate() {
            track("hl_maximal", maximal.values()[x].re, *want)?;
        }

        let (mut osc, mut large) = (0.0f64, 0.0f64);
        for (_, r, members) in &listing {
            let size = members.len() as f64;
            if 4.0 / 3.0 * std::f64::consts::PI * r.powi(3) <= 1.0 {
                let mean = members.iter().map(|&i| vals[i]).sum::<Complex64>() / size;
                osc = osc.max(members.iter().map(|&i| (vals[i] - mean).norm()).sum::<f64>() / size);
            } else {
                large = large.max(members.iter().map(|&i| vals[i].norm()).sum::<f64>() / size);
            }
        }
        let est = bmo_norm(&f, &balls).unwrap();
        track("bmo oscillation", est.oscillation, osc)?;
        track("bmo large-ball average", est.large_average, large)?;
        track("bmo", est.value, osc + large)?;

        let integral: Complex64 = vals.iter().sum::<Complex64>() * dv;
        track("integral (re)", f.integral().re, integral.re)?;
        track("integral (im)", f.integral().im, integral.im)?;
        let paired: Complex64 = vals.iter().zip(h.values()).map(|(a, b)| a * b.conj()).sum::<Complex64>() * dv;
        for (name, got) in [("pair", pair(&f, &h).unwrap()), ("inner", inner(&f, &h).unwrap())] {
            track(&format!("{name} (re)"), got.re, paired.re)?;
            track(&format!("{name} (im)"), got.im, paired.im)?;
        }
        let v = VectorField::new(vec![f.clone(), h.clone()]).unwrap();
        for p in EXPONENTS {
            let scalar_p = vals.iter().map(|z| z.norm().powf(p)).sum::<f64>() * dv;
            track("scalar L^p", lp_norm(&f, p).unwrap(), scalar_p.powf(1.0 / p))?;
            let vector_p =
                vals.iter().zip(h.values()).map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt().powf(p)).sum::<f64>()
                    * dv;
            track("vector L^p", lp_norm(&v, p).unwrap(), vector_p.powf(1.0 / p))?;
        }
    }

    // h1 through direct convolution on a box where three dyadic scales resolve
    let gh = grid(&[16, 16, 16], 1.0);
    let m = MollifierSpec::dyadic(3).unwrap();
    let f = scalar(&gh, 77, 4);
    let mut best = vec![0.0f64; gh.len()];
    for &t in m.scales() {
        for (b, z) in best.iter_mut().zip(brute_mollify(&f, t)) {
            *b = b.max(z.norm());
        }
    }
    let gm = grand_maximal(&f, &m).unwrap();
    let peak = best.iter().copied().fold(0.0, f64::max);
    for (got, want) in gm.values().iter().zip(&best) {
        worst.check("grand maximal", got.re, *want, peak)?;
    }
    let h1 = best.iter().sum::<f64>() * gh.cell_volume();
    worst.check("h1", h1_norm(&f, &m).unwrap(), h1, h1)?;

    let g64 = grid(&[16, 16, 16], 4.0);
    ensure((g64.volume() - 64.0).abs() < 1e-12, || "box volume is not 64".into())?;
    let three = ScalarField::constant(&g64, c(3.0, 0.0));
    let b3 = bmo_norm(&three, &BallFamily::dyadic(&g64, 2).unwrap()).unwrap().value;
    ensure((b3 - 3.0).abs() <= 1e-12, || format!("bmo(3) = {b3}"))?;

    let gm2 = grid(&[64, 64], 1.0);
    let coarse = MollifierSpec::dyadic(2).unwrap();
    let fine = MollifierSpec::dyadic(4).unwrap();
    for trial in 0..20 {
        let f = scalar(&gm2, 600 + trial, 10);
        let lo = grand_maximal(&f, &coarse).unwrap();
        let hi = grand_maximal(&f, &fine).unwrap();
        let ok = lo.values().iter().zip(hi.values()).all(|(a, b)| a.re <= b.re);
        ensure(ok, || format!("trial {trial}: adding scales decreased the grand maximal function"))?;
    }
    Ok(format!("worst relative gap {:.1e}; bmo(3) = {b3}; monotone on 20 trials", worst.0))
}

fn experiment(theorem: TheoremId, sys: &EllipticSystem, config: &str) -> Result<ExperimentReport, String> {
    let config = ExperimentConfig::from_json(config).map_err(|e| e.to_string())?;
    run_experiment(theorem, sys, &config).map_err(|e| format!("{theorem}: {e}"))
}

fn failed_assertions(report: &ExperimentReport) -> String {
    report.failures().map(|a| format!("{}: {}", a.name, a.detail)).collect::<Vec<_>>().join("; ")
}

const RATIO_CONFIG: &str = r#"{
    "grid": {"dims": [64, 64], "box": [2.0, 2.0]},
    "ensemble": {"seed": 42, "count": 100, "band_limit": 8, "localize": true},
    "p_list": [1.3333333333333333, 2.0, 4.0],
    "refine": true
}"#;

fn ratio_stability() -> Outcome {
    let sys = gradient_system();
    let mut details = Vec::new();
    for theorem in [TheoremId::ThmA, TheoremId::Thm12, TheoremId::Thm13] {
        let report = experiment(theorem, &sys, RATIO_CONFIG)?;
        ensure(report.passed, || format!("{theorem}: {}", failed_assertions(&report)))?;
        for s in &report.summary {
            ensure(s.max_ratio.is_finite() && s.retained == 100, || {
                format!("{theorem} {} p={}: max {} over {} trials", s.grid, s.p, s.max_ratio, s.retained)
            })?;
        }
        let cross = report.cross_check.as_ref().ok_or(format!("{theorem}: no cross-check"))?;
        ensure(cross.compared > 0 && cross.max_relative_difference <= 1e-9, || {
            format!("{theorem}: cross-check gap {:e}", cross.max_relative_difference)
        })?;
        let refinement = report.refinement.as_ref().ok_or(format!("{theorem}: no refinement"))?;
        let change = refinement.rows.iter().map(|r| r.relative_change).fold(0.0, f64::max);
        ensure(change <= 0.25, || format!("{theorem}: max ratio moved by {change:.3} under refinement"))?;
        details.push(format!("{theorem} change {change:.3}, cross {:.0e}", cross.max_relative_difference));
    }
    Ok(details.join("; "))
}

fn calderon() -> Outcome {
    let grad = experiment(
        TheoremId::Lemma21,
        &gradient_system(),
        r#"{"grid": {"dims": [64, 64], "box": [2.0, 2.0]},
            "ensemble": {"seed": 42, "count": 100, "band_limit": 8, "localize": true}}"#,
    )?;
    ensure(grad.passed, || failed_assertions(&grad))?;
    let worst = grad.trials.iter().map(|t| (t.ratio - 1.0).abs()).fold(0.0, f64::max);
    ensure(!grad.trials.is_empty() && worst <= 1e-10, || format!("gradient system: |ratio - 1| up to {worst:e}"))?;

    let cr = experiment(
        TheoremId::Lemma21,
        &cr_system(),
        r#"{"grid": {"dims": [32, 32, 32], "box": [2.0, 2.0, 2.0]},
            "ensemble": {"seed": 42, "count": 40, "band_limit": 6}}"#,
    )?;
    ensure(cr.passed, || failed_assertions(&cr))?;
    let bound = cr.oracle_bound.ok_or("cr-type: no oracle bound")?;
    // the oracle is a Plancherel bound, so it speaks to p = 2 only
    let l2: Vec<f64> = cr.trials.iter().filter(|t| t.p == 2.0).map(|t| t.ratio).collect();
    let max = l2.iter().copied().fold(0.0, f64::max);
    ensure(!l2.is_empty() && l2.iter().all(|&r| r <= bound * (1.0 + 1e-12)), || {
        format!("cr-type: ratio {max} exceeds the oracle bound {bound}")
    })?;
    Ok(format!(
        "gradient: {} trials within {worst:.1e} of 1; cr-type: max {max:.4} <= oracle {bound:.4} at p = 2",
        grad.trials.len()
    ))
}

const THM_B_CONFIG: &str = r#"{
    "grid": {"dims": [64, 64], "box": [5.0, 5.0]},
    "ensemble": {"seed": 42, "count": 10, "band_limit": 4, "kind": "scalar"},
    "refine": true
}"#;

fn two_sided() -> Outcome {
    let sys = gradient_system();
    let report = experiment(TheoremId::ThmB, &sys, THM_B_CONFIG)?;
    ensure(report.passed, || failed_assertions(&report))?;
    let config = report.config.clone();
    let coarse_label = "64x64";
    let (coarse, fine): (Vec<_>, Vec<_>) = report.thm_b.iter().partition(|s| s.grid == coarse_label);
    ensure(!coarse.is_empty() && coarse.len() == fine.len(), || "missing refined summaries".into())?;
    let mut details = Vec::new();
    for (c, f) in coarse.iter().zip(&fine) {
        let drift = (f.pairing_constant / c.pairing_constant - 1.0).abs();
        ensure(drift <= 0.20, || format!("p={}: pairing constant moved by {drift:.3}", c.p))?;
        let (lo, hi) = (c.band[0] / 1.25, c.band[1] * 1.25);
        ensure(f.band[0] >= lo && f.band[1] <= hi, || {
            format!("p={}: refined band {:?} leaves [{lo}, {hi}]", c.p, f.band)
        })?;
        details.push(format!("p={:.3}: C {:.3}, band [{:.3}, {:.3}]", c.p, c.pairing_constant, c.band[0], c.band[1]));
    }

    // independent recomputation of |pair(g, f)| <= C bmo(g) on the base grid
    let grid = &config.grid;
    let ball = config.ball.as_ref().ok_or("unresolved ball family")?;
    let balls = BallFamily::new(grid, ball.stride, ball.radii.clone()).map_err(|e| e.to_string())?;
    let layout = config.witnesses.as_ref().ok_or("unresolved witness layout")?;
    for c in &coarse {
        let family = witness_family(&sys, grid, c.p, layout).map_err(|e| e.to_string())?;
        for trial in 0..config.ensemble.count {
            let g = random_field_of_kind(&sys, grid, &config.ensemble, FieldKind::Scalar, trial, 0)
                .and_then(|f| f.into_scalar())
                .map_err(|e| e.to_string())?;
            let bmo = bmo_norm(&g, &balls).map_err(|e| e.to_string())?.value;
            let mut lower = 0.0f64;
            for member in &family {
                let paired = pair(&g, &member.f).map_err(|e| e.to_string())?.norm();
                lower = lower.max(paired);
                ensure(paired <= c.pairing_constant * bmo * (1.0 + 1e-12), || {
                    format!("p={} trial {trial}: |pair| {paired} > C bmo {}", c.p, c.pairing_constant * bmo)
                })?;
            }
            let recorded = report
                .trials
                .iter()
                .find(|t| t.grid == coarse_label && t.trial == trial && t.p == c.p)
                .ok_or(format!("trial {trial} missing from the report"))?;
            ensure(relative(lower, recorded.lhs) <= 1e-12, || {
                format!("trial {trial}: recomputed lower bound {lower} vs reported {}", recorded.lhs)
            })?;
        }
    }
    Ok(details.join("; "))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool").install(f)
}

fn reproducibility() -> Outcome {
    let cases = [
        (
            TheoremId::ThmA,
            gradient_system(),
            r#"{"grid": {"dims": [32, 32], "box": [2.0, 2.0]},
                "ensemble": {"seed": 42, "count": 12, "band_limit": 6, "localize": true}, "refine": true}"#,
        ),
        (
            TheoremId::Thm13,
            cr_system(),
            r#"{"grid": {"dims": [16, 16, 16], "box": [2.0, 2.0, 2.0]},
                "ensemble": {"seed": 7, "count": 6, "band_limit": 3, "localize": true},
                "scales": [0.5, 0.25]}"#,
        ),
        (
            TheoremId::ThmB,
            gradient_system(),
            r#"{"grid": {"dims": [64, 64], "box": [5.0, 5.0]},
                "ensemble": {"seed": 42, "count": 3, "band_limit": 4, "kind": "scalar"}, "p_list": [2.0]}"#,
        ),
    ];
    let mut bytes = 0;
    for (theorem, sys, config) in &cases {
        let run = |threads| {
            in_pool(threads, || experiment(*theorem, sys, config)).and_then(|r| r.to_json().map_err(|e| e.to_string()))
        };
        let one = run(1)?;
        let four = run(4)?;
        ensure(one == four, || format!("{theorem}: reports differ between 1 and 4 threads"))?;
        ensure(run(4)? == four, || format!("{theorem}: rerun differs"))?;
        bytes += one.len();
    }
    Ok(format!("3 experiments byte-identical at 1 and 4 threads ({bytes} bytes)"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("ellipticity oracle", ellipticity),
        ("calculus identities", calculus),
        ("hodge decomposition", hodge),
        ("witness certificates", witnesses),
        ("norm estimators vs brute force", norm_oracles),
        ("ratio stability", ratio_stability),
        ("calderon ratio", calderon),
        ("two-sided pairing bound", two_sided),
        ("reproducibility", reproducibility),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (index, (name, check)) in criteria.iter().enumerate() {
        let number = index + 1;
        if !only.is_empty() && !only.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {number} {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {number} {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
