use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use divcurl::cvf::FieldFile;
use divcurl::harness::{
    random_field_of_kind, run_experiment, EnsembleSpec, ExperimentConfig, FieldKind, RandomField, TheoremId,
};
use divcurl::hodge::hodge_decompose;
use divcurl::norms::{bmo_norm, h1_norm, lp_norm, BallFamily, BallSpec, MollifierSpec};
use divcurl::operators::{curl_l, div_l_adjoint, dot, grad_l};
use divcurl::system::{certify_ellipticity, SystemFile};
use divcurl::witness::{
    conjugate_exponent, factorize_phi, gaussian_bump, make_cutoff, mollifier_bump, normalize_gradient,
    odd_gaussian_bump, rescale_to_ball, witness_large_p, witness_small_p, witness_unit_ball, FactorSide, VANISHING_TOL,
};
use divcurl::{Complex64, EllipticSystem, GridSpec, PairingConvention, ScalarField};
use serde_json::json;

use crate::output::{read_field, Outputs};
use crate::{
    BumpShape, Cli, Command, EllipticCmd, Experiment, FieldCmd, FieldGenArgs, FieldShape, HodgeArgs, NormArgs,
    NormKind, OpArgs, OpKind, Pairing, RandomKind, VerifyArgs, WitnessArgs, WitnessChoice,
};

/// Samples across the witness ball radius in the default box.
const DEFAULT_CELLS_PER_RADIUS: f64 = 28.0;
/// Reconstruction tolerance of `V1 + V2 = V`, relative to `sup |V|`.
const HODGE_RECONSTRUCTION_TOL: f64 = 1e-12;

struct Ui {
    quiet: bool,
    tol_report: bool,
}

impl Ui {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn check(&self, name: &str, value: f64, tolerance: f64, passed: bool) {
        if self.tol_report && !self.quiet {
            println!("  [{}] {name}: {value:e} (tolerance {tolerance:e})", if passed { "ok" } else { "FAIL" });
        }
    }
}

/// Runs the command. `Ok(false)` means a declared check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let ui = Ui { quiet: cli.global.quiet, tol_report: cli.global.tol_report };
    let mut out = Outputs::default();
    let passed = match &cli.command {
        Command::Elliptic(EllipticCmd::Check { system, samples, tol, json }) => {
            let sys = load_system(system)?;
            let cert = certify_ellipticity(&sys, *samples, *tol)?;
            ui.say(format!(
                "{} system (N = {}, n = {}): ellipticity constant {:.12}",
                if cert.elliptic { "elliptic" } else { "NON-ELLIPTIC" },
                sys.ambient_dim(),
                sys.n(),
                cert.constant
            ));
            ui.check("ellipticity constant (lower bound)", cert.constant, *tol, cert.elliptic);
            out.add_json(json.as_deref(), &json!({ "invocation": cli, "system": sys.to_file(), "certificate": cert }))?;
            cert.elliptic
        }
        Command::Field(FieldCmd::Gen(args)) => field_gen(cli, args, &ui, &mut out)?,
        Command::Op(args) => op(args, &ui, &mut out)?,
        Command::Hodge(args) => hodge(cli, args, &ui, &mut out)?,
        Command::Norm(args) => norm(cli, args, &ui, &mut out)?,
        Command::Witness(args) => witness(cli, args, &ui, &mut out)?,
        Command::Verify(args) => verify(cli, args, &ui, &mut out)?,
    };
    out.commit(cli.global.force)?;
    Ok(passed)
}

fn load_system(path: &Path) -> Result<EllipticSystem> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: SystemFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    EllipticSystem::try_from(file).with_context(|| format!("system in {}", path.display()))
}

fn origin_or(center: &[f64], dim: usize) -> Result<Vec<f64>> {
    match center.len() {
        0 => Ok(vec![0.0; dim]),
        n if n == dim => Ok(center.to_vec()),
        n => bail!("expected {dim} coordinates, got {n}"),
    }
}

fn field_gen(cli: &Cli, args: &FieldGenArgs, ui: &Ui, out: &mut Outputs) -> Result<bool> {
    let grid = GridSpec::new(args.grid.clone(), args.box_lengths.clone())?;
    let dim = grid.dim();
    let center = origin_or(&args.center, dim)?;
    let file = match args.shape {
        FieldShape::PlaneWave => {
            let k = match args.k.len() {
                0 => (0..dim).map(|a| i64::from(a == 0)).collect(),
                n if n == dim => args.k.clone(),
                n => bail!("--k needs {dim} entries, got {n}"),
            };
            let lengths = grid.box_lengths().to_vec();
            let f = ScalarField::from_fn(&grid, |x| {
                let phase: f64 = x
                    .iter()
                    .zip(&k)
                    .zip(&lengths)
                    .fold(0.0, |acc, ((x, &k), l)| acc + std::f64::consts::TAU * k as f64 * x / l);
                Complex64::from_polar(1.0, phase)
            });
            ui.say(format!("plane wave k = {k:?} on {:?}", grid.dims()));
            FieldFile::from_scalar(&f)
        }
        FieldShape::Bump => {
            let f = mollifier_bump(&grid, &center, args.radius, args.mass);
            ui.say(format!("bump of radius {} at {center:?}, integral {:.12}", args.radius, f.integral().re));
            FieldFile::from_scalar(&f)
        }
        FieldShape::Cutoff => {
            let f = make_cutoff(&grid, &center, args.radius)?;
            ui.say(format!("cutoff of B({center:?}, {})", args.radius));
            FieldFile::from_scalar(&f)
        }
        FieldShape::Random => {
            let sys = match &args.system {
                Some(p) => load_system(p)?,
                None => EllipticSystem::gradient(dim)?,
            };
            let kind = match args.kind {
                RandomKind::Scalar => FieldKind::Scalar,
                RandomKind::Vector => FieldKind::Vector,
                RandomKind::GradExact => FieldKind::GradExact,
                RandomKind::DivFree => FieldKind::DivFree,
            };
            let mut spec = EnsembleSpec::new(cli.global.seed, args.index + 1, args.band, kind);
            spec.localize = args.localize;
            ui.say(format!("ensemble member {} (seed {}, band {}, {kind:?})", args.index, spec.seed, args.band));
            match random_field_of_kind(&sys, &grid, &spec, kind, args.index, 0)? {
                RandomField::Scalar(f) => FieldFile::from_scalar(&f),
                RandomField::Vector(v) => FieldFile::from_vector(&v),
            }
        }
    };
    out.add_field(Some(&args.out), &file)?;
    Ok(true)
}

fn op(args: &OpArgs, ui: &Ui, out: &mut Outputs) -> Result<bool> {
    let sys = load_system(&args.system)?;
    let input = read_field(&args.input)?;
    let file = match args.op {
        OpKind::Grad => FieldFile::from_vector(&grad_l(&sys, &input.into_scalar()?)?),
        OpKind::Div => FieldFile::from_scalar(&div_l_adjoint(&sys, &input.into_vector()?)?),
        OpKind::Curl => FieldFile::from_matrix(&curl_l(&sys, &input.into_vector()?)?),
        OpKind::Dot => {
            let with = args.with.as_deref().ok_or_else(|| anyhow!("dot needs --with W.cvf"))?;
            let pairing = match args.pairing {
                Pairing::Sesq => PairingConvention::Sesquilinear,
                Pairing::Bilin => PairingConvention::Bilinear,
            };
            FieldFile::from_scalar(&dot(&input.into_vector()?, &read_field(with)?.into_vector()?, pairing)?)
        }
    };
    ui.say(format!("{:?}: {} component(s) on {:?}", args.op, file.components.len(), file.grid.dims()));
    out.add_field(Some(&args.out), &file)?;
    Ok(true)
}

fn hodge(cli: &Cli, args: &HodgeArgs, ui: &Ui, out: &mut Outputs) -> Result<bool> {
    let sys = load_system(&args.system)?;
    let v = read_field(&args.input)?.into_vector()?;
    let h = hodge_decompose(&sys, &v, &args.p)?;
    let scale = v.sup_norm();
    let rebuilt = h.div_free.add(&h.exact)?.sub(&v)?.sup_norm();
    let reconstruction = if scale > 0.0 { rebuilt / scale } else { rebuilt };
    let residual_ok = h.residual_div <= VANISHING_TOL;
    let rebuilt_ok = reconstruction <= HODGE_RECONSTRUCTION_TOL;
    ui.say(format!("div residual of V1: {:e}; reconstruction error {:e}", h.residual_div, reconstruction));
    for r in &h.norm_ratios {
        ui.say(format!("  p = {:.4}: |V1|/|V| = {:.6}, |V2|/|V| = {:.6}", r.p, r.div_free, r.exact));
    }
    ui.check("div residual", h.residual_div, VANISHING_TOL, residual_ok);
    ui.check("reconstruction", reconstruction, HODGE_RECONSTRUCTION_TOL, rebuilt_ok);
    out.add_field(args.out1.as_deref(), &FieldFile::from_vector(&h.div_free))?;
    out.add_field(args.out2.as_deref(), &FieldFile::from_vector(&h.exact))?;
    out.add_json(
        args.report.as_deref(),
        &json!({
            "invocation": cli,
            "residual_div": h.residual_div,
            "reconstruction_error": reconstruction,
            "norm_ratios": h.norm_ratios,
            "passed": residual_ok && rebuilt_ok,
        }),
    )?;
    Ok(residual_ok && rebuilt_ok)
}

fn norm(cli: &Cli, args: &NormArgs, ui: &Ui, out: &mut Outputs) -> Result<bool> {
    let file = read_field(&args.input)?;
    let report = match args.norm {
        NormKind::Lp => {
            let value = if file.components.len() == 1 {
                lp_norm(&file.into_scalar()?, args.p)?
            } else {
                lp_norm(&file.into_vector()?, args.p)?
            };
            ui.say(format!("L^{} norm: {value:.12e}", args.p));
            json!({ "norm": "lp", "p": args.p, "value": value })
        }
        NormKind::H1 => {
            let m = MollifierSpec::dyadic(args.scales)?;
            let value = h1_norm(&file.into_scalar()?, &m)?;
            ui.say(format!("h1 norm ({} scales): {value:.12e}", args.scales));
            json!({ "norm": "h1", "scales": m.scales(), "value": value })
        }
        NormKind::Bmo => {
            let f = file.into_scalar()?;
            let balls = BallFamily::dyadic(f.grid(), args.stride)?;
            let est = bmo_norm(&f, &balls)?;
            ui.say(format!(
                "bmo norm: {:.12e} (oscillation {:.6e}, large-ball average {:.6e})",
                est.value, est.oscillation, est.large_average
            ));
            json!({ "norm": "bmo", "radii": balls.radii(), "stride": args.stride, "value": est.value, "estimate": est })
        }
    };
    let mut report = report;
    report["invocation"] = serde_json::to_value(cli)?;
    out.add_json(args.json.as_deref(), &report)?;
    Ok(true)
}

fn zero_based(index: usize, name: &str) -> Result<usize> {
    index.checked_sub(1).ok_or_else(|| anyhow!("--{name} is one-based"))
}

fn witness(cli: &Cli, args: &WitnessArgs, ui: &Ui, out: &mut Outputs) -> Result<bool> {
    let sys = load_system(&args.system)?;
    let dim = sys.ambient_dim();
    let radius = if args.kind == WitnessChoice::Unit { 1.0 } else { args.radius };
    let dims = if args.grid.is_empty() { vec![128; dim] } else { args.grid.clone() };
    let lengths = if args.box_lengths.is_empty() {
        dims.iter().map(|&n| n as f64 * radius / DEFAULT_CELLS_PER_RADIUS).collect()
    } else {
        args.box_lengths.clone()
    };
    let grid = GridSpec::new(dims, lengths)?;
    let center = origin_or(&args.center, dim)?;
    let ball = BallSpec::new(center.clone(), radius);
    let (i, j) = (zero_based(args.i, "i")?, zero_based(args.j, "j")?);
    let bump = |c: &[f64], r: f64| match args.bump {
        BumpShape::Even => gaussian_bump(&grid, c, r),
        BumpShape::Odd => odd_gaussian_bump(&grid, c, r, 0),
    };
    let phi = || mollifier_bump(&grid, &center, args.phi_radius.unwrap_or(radius / 2.0), 1.0);
    let pair = match args.kind {
        WitnessChoice::SmallP => {
            witness_small_p(&sys, &normalize_gradient(&bump(&center, radius), 2.0, Some(&ball))?, &ball, i, j, args.p)?
        }
        WitnessChoice::LargeP => {
            witness_large_p(&sys, &normalize_gradient(&bump(&center, radius), 2.0, Some(&ball))?, &ball, i, j, args.p)?
        }
        WitnessChoice::Unit => {
            let origin = vec![0.0; dim];
            let u = normalize_gradient(&bump(&origin, 1.0), conjugate_exponent(args.p), None)?;
            witness_unit_ball(&sys, &u, i, j, args.p)?
        }
        WitnessChoice::FactorGrad => factorize_phi(&sys, &phi(), &ball, FactorSide::Grad, args.p)?,
        WitnessChoice::FactorDiv => factorize_phi(&sys, &phi(), &ball, FactorSide::Div, args.p)?,
    };
    let pair = match args.rescale {
        Some(r) => rescale_to_ball(&sys, &pair, &origin_or(&args.at, dim)?, r)?,
        None => pair,
    };
    let cert = &pair.certificate;
    ui.say(format!(
        "{:?} witness, p = {}, on {:?}: certificate {}",
        pair.kind,
        args.p,
        pair.v.grid().dims(),
        if cert.passed() { "passed" } else { "FAILED" }
    ));
    for e in &cert.entries {
        ui.check(&e.name, e.value, e.tolerance, e.passed);
    }
    out.add_field(args.out_v.as_deref(), &FieldFile::from_vector(&pair.v))?;
    out.add_field(args.out_w.as_deref(), &FieldFile::from_vector(&pair.w))?;
    out.add_json(args.cert.as_deref(), &json!({ "invocation": cli, "certificate": cert, "budgets": pair.budgets }))?;
    Ok(cert.passed())
}

fn verify(cli: &Cli, args: &VerifyArgs, ui: &Ui, out: &mut Outputs) -> Result<bool> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    // flags fill in what the config leaves out
    if let Some(ensemble) = value.get_mut("ensemble").and_then(|e| e.as_object_mut()) {
        ensemble.entry("seed").or_insert(json!(cli.global.seed));
    }
    if args.refine {
        if let Some(obj) = value.as_object_mut() {
            obj.entry("refine").or_insert(json!(true));
        }
    }
    let config = ExperimentConfig::from_json(&value.to_string())?;
    let sys = match (&config.system, &args.system) {
        (Some(file), _) => EllipticSystem::try_from(file.clone())?,
        (None, Some(path)) => load_system(path)?,
        (None, None) => bail!("no system: pass --system or set \"system\" in the config"),
    };
    let theorem = match args.experiment {
        Experiment::ThmA => TheoremId::ThmA,
        Experiment::Thm12 => TheoremId::Thm12,
        Experiment::Thm13 => TheoremId::Thm13,
        Experiment::Lemma21 => TheoremId::Lemma21,
        Experiment::ThmB => TheoremId::ThmB,
    };
    let mut report = run_experiment(theorem, &sys, &config)?;
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    report.generated_at = Some(format!("unix:{secs}"));
    ui.say(format!("{theorem} on {:?}, {} trials", report.grid.dims(), report.trials.len()));
    for s in &report.summary {
        ui.say(format!(
            "  {} p = {:.4}: max ratio {:.6e}, median {:.6e} ({} retained, {} excluded)",
            s.grid, s.p, s.max_ratio, s.median_ratio, s.retained, s.excluded
        ));
    }
    for a in &report.assertions {
        ui.say(format!("  {} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail));
    }
    out.add_json(args.json.as_deref(), &report)?;
    out.add(args.csv.as_deref(), || {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        Ok(buf)
    })?;
    Ok(report.passed)
}
