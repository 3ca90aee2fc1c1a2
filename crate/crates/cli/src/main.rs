use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod output;

/// Div-curl, h1 and bmo lab for elliptic systems of complex vector fields.
#[derive(Parser, Debug, Serialize)]
#[command(name = "divcurl", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Serialize)]
pub struct Global {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print every checked quantity next to its tolerance.
    #[arg(long, global = true)]
    pub tol_report: bool,
    /// Suppress the summary on standard output.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Elliptic system utilities.
    #[command(subcommand)]
    Elliptic(EllipticCmd),
    /// Field generation.
    #[command(subcommand)]
    Field(FieldCmd),
    /// Apply an operator to a field file.
    Op(OpArgs),
    /// Split a vector field into its div-free and exact parts.
    Hodge(HodgeArgs),
    /// Norms of a field file.
    Norm(NormArgs),
    /// Build and certify a witness pair.
    Witness(WitnessArgs),
    /// Run a ratio experiment.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug, Serialize)]
pub enum EllipticCmd {
    /// Certify ellipticity and report the constant.
    Check {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = divcurl::system::DEFAULT_SPHERE_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = divcurl::system::DEFAULT_ELLIPTIC_TOL)]
        tol: f64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug, Serialize)]
pub enum FieldCmd {
    /// Write a named analytic field or an ensemble member to a CVF1 file.
    Gen(FieldGenArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FieldShape {
    PlaneWave,
    Bump,
    Cutoff,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RandomKind {
    Scalar,
    Vector,
    GradExact,
    DivFree,
}

#[derive(Args, Debug, Serialize)]
pub struct FieldGenArgs {
    #[arg(value_enum)]
    pub shape: FieldShape,
    /// Samples per axis, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<usize>,
    /// Box side lengths, comma separated.
    #[arg(long = "box", value_delimiter = ',', required = true)]
    pub box_lengths: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Integer wave vector of the plane wave.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub k: Vec<i64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub center: Vec<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub radius: f64,
    /// Integral of the bump.
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    /// System for vector-valued random kinds (defaults to the plain gradient).
    #[arg(long)]
    pub system: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RandomKind::Scalar)]
    pub kind: RandomKind,
    #[arg(long, default_value_t = 8)]
    pub band: usize,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long)]
    pub localize: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OpKind {
    Grad,
    Div,
    Curl,
    Dot,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Pairing {
    Sesq,
    Bilin,
}

#[derive(Args, Debug, Serialize)]
pub struct OpArgs {
    #[arg(value_enum)]
    pub op: OpKind,
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Second operand of `dot`.
    #[arg(long)]
    pub with: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Pairing::Sesq)]
    pub pairing: Pairing,
}

#[derive(Args, Debug, Serialize)]
pub struct HodgeArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out1: Option<PathBuf>,
    #[arg(long)]
    pub out2: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Exponents of the reported norm ratios.
    #[arg(long, value_delimiter = ',', default_values_t = [4.0 / 3.0, 2.0, 4.0])]
    pub p: Vec<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NormKind {
    Lp,
    H1,
    Bmo,
}

#[derive(Args, Debug, Serialize)]
pub struct NormArgs {
    #[arg(value_enum)]
    pub norm: NormKind,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Number of dyadic mollifier scales 1/2, 1/4, ...
    #[arg(long, default_value_t = 5)]
    pub scales: usize,
    /// Ball-center stride in samples.
    #[arg(long, default_value_t = 2)]
    pub stride: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WitnessChoice {
    SmallP,
    LargeP,
    Unit,
    FactorGrad,
    FactorDiv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BumpShape {
    Even,
    Odd,
}

#[derive(Args, Debug, Serialize)]
pub struct WitnessArgs {
    #[arg(value_enum)]
    pub kind: WitnessChoice,
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// One-based index pair (i, j).
    #[arg(long, default_value_t = 1)]
    pub i: usize,
    #[arg(long, default_value_t = 2)]
    pub j: usize,
    /// Samples per axis (default 128 on every axis).
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<usize>,
    /// Box side lengths (default: the ball radius spans 28 samples).
    #[arg(long = "box", value_delimiter = ',')]
    pub box_lengths: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub center: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, value_enum, default_value_t = BumpShape::Even)]
    pub bump: BumpShape,
    /// Radius of the unit-mass bump the factorizations reproduce.
    #[arg(long)]
    pub phi_radius: Option<f64>,
    /// Transplant the pair to B(at, R) with R >= 1.
    #[arg(long)]
    pub rescale: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub at: Vec<f64>,
    #[arg(long)]
    pub out_v: Option<PathBuf>,
    #[arg(long)]
    pub out_w: Option<PathBuf>,
    #[arg(long)]
    pub cert: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Experiment {
    #[value(name = "thm-a")]
    ThmA,
    #[value(name = "thm-12")]
    Thm12,
    #[value(name = "thm-13")]
    Thm13,
    #[value(name = "lemma-21")]
    Lemma21,
    #[value(name = "thm-b")]
    ThmB,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,
    /// System file; a `system` entry in the config takes precedence.
    #[arg(long)]
    pub system: Option<PathBuf>,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub refine: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(threads) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
