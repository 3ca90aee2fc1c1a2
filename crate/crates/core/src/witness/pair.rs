use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{ScalarField, VectorField};
use crate::norms::{lp_norm, BallSpec};
use crate::operators::{apply_l, apply_l_adjoint, curl_l, div_l_adjoint, dot, PairingConvention};
use crate::system::EllipticSystem;

/// Tolerance for the vanishing side (div or curl) relative residual.
pub const VANISHING_TOL: f64 = 1e-9;
/// Norm budgets may exceed their bound by this relative slack.
pub const BUDGET_TOL: f64 = 1.0 + 1e-6;
/// Product identity tolerance for the ball constructions.
pub const PRODUCT_TOL: f64 = 1e-8;
/// Product identity tolerance for the factorizations.
pub const FACTOR_PRODUCT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    SmallP,
    LargeP,
    UnitBall,
    FactorGrad,
    FactorDiv,
}

impl WitnessKind {
    /// Whether `div_{L*} V = 0` is part of the construction.
    pub fn div_free_v(self) -> bool {
        !matches!(self, Self::FactorGrad)
    }

    /// Whether `W` is an L-gradient (so `curl_L W = 0`).
    pub fn gradient_w(self) -> bool {
        !matches!(self, Self::FactorDiv)
    }
}

/// The two dual families: `OneZero` asks `W = grad_L phi` and bounds
/// `div_{L*} V`; `ZeroOne` asks `div_{L*} V = 0` and bounds `curl_L W`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DcFamily {
    OneZero,
    ZeroOne,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTarget {
    V,
    W,
    DivV,
    CurlW,
}

/// `||target||_{exponent} <= bound`. Bounds on derivatives carry order 1 so
/// rescaling by R divides them by R.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub name: String,
    pub target: NormTarget,
    pub exponent: f64,
    pub bound: f64,
    pub derivative_order: i32,
}

/// A field that must vanish outside a ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub name: String,
    pub field: ScalarField,
    pub support: BallSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CertificateEntry {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: WitnessKind,
    pub p: f64,
    pub pairing: PairingConvention,
    pub entries: Vec<CertificateEntry>,
    pub constants: BTreeMap<String, f64>,
    /// Sup of |V| and |W| outside the cutoff support (spectral leakage), not gated.
    pub leakage: BTreeMap<String, f64>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> Vec<&CertificateEntry> {
        self.entries.iter().filter(|e| !e.passed).collect()
    }
}

/// A witness `(V, W)` with everything needed to re-certify it.
#[derive(Clone, Debug)]
pub struct WitnessPair {
    pub kind: WitnessKind,
    pub p: f64,
    /// Zero-based index pair `(i, j)` of the construction (`(0, 1)` for factorizations).
    pub indices: (usize, usize),
    pub v: VectorField,
    pub w: VectorField,
    /// The function the product must reproduce on `identity_region`.
    pub expected: ScalarField,
    /// `None` means the whole grid.
    pub identity_region: Option<BallSpec>,
    /// Ball outside which V and W are expected to vanish.
    pub support: BallSpec,
    pub constants: BTreeMap<String, f64>,
    pub budgets: Vec<Budget>,
    pub generators: Vec<Generator>,
    pub certificate: Certificate,
}

pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

fn relative(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

impl WitnessPair {
    /// The pointwise product `V . W` (sesquilinear, as in all certificates).
    pub fn product(&self) -> Result<ScalarField> {
        dot(&self.v, &self.w, PairingConvention::Sesquilinear)
    }

    pub fn families(&self) -> Vec<DcFamily> {
        let mut out = Vec::new();
        if self.kind.gradient_w() {
            out.push(DcFamily::OneZero);
        }
        if self.kind.div_free_v() {
            out.push(DcFamily::ZeroOne);
        }
        out
    }

    /// Product of V and W divided by the smallest factors that make every
    /// budget of `family` at most 1. Returns the product and the two factors.
    pub fn membership_product(&self, sys: &EllipticSystem, family: DcFamily) -> Result<(ScalarField, f64, f64)> {
        let p = self.p;
        let q = conjugate_exponent(p);
        let mut v_scale = lp_norm(&self.v, p)?.max(1.0);
        let mut w_scale = lp_norm(&self.w, q)?.max(1.0);
        match family {
            DcFamily::OneZero => v_scale = v_scale.max(lp_norm(&div_l_adjoint(sys, &self.v)?, p)?),
            DcFamily::ZeroOne => w_scale = w_scale.max(lp_norm(&curl_l(sys, &self.w)?, q)?),
        }
        let f = self.product()?.scale_real(1.0 / (v_scale * w_scale));
        Ok((f, v_scale, w_scale))
    }
}

/// Recomputes every certificate entry of `pair` from its fields.
pub fn certify(sys: &EllipticSystem, pair: &WitnessPair) -> Result<Certificate> {
    let mut entries = Vec::new();
    let n = sys.n();
    if pair.kind.div_free_v() {
        let div = div_l_adjoint(sys, &pair.v)?;
        let scale: f64 =
            (0..n).map(|j| apply_l_adjoint(sys, j, pair.v.component(j)).map(|f| f.l2_norm())).sum::<Result<f64>>()?;
        entries.push(CertificateEntry::new("div_residual", relative(div.l2_norm(), scale), VANISHING_TOL));
    }
    if pair.kind.gradient_w() {
        let curl = curl_l(sys, &pair.w)?;
        let mut scale = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    scale += apply_l(sys, i, pair.w.component(j))?.l2_norm();
                }
            }
        }
        entries.push(CertificateEntry::new("curl_residual", relative(curl.l2_norm(), scale), VANISHING_TOL));
    }
    for b in &pair.budgets {
        let value = match b.target {
            NormTarget::V => lp_norm(&pair.v, b.exponent)?,
            NormTarget::W => lp_norm(&pair.w, b.exponent)?,
            NormTarget::DivV => lp_norm(&div_l_adjoint(sys, &pair.v)?, b.exponent)?,
            NormTarget::CurlW => lp_norm(&curl_l(sys, &pair.w)?, b.exponent)?,
        };
        let ratio = if b.bound > 0.0 {
            value / b.bound
        } else if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        entries.push(CertificateEntry::new(format!("budget_{}", b.name), ratio, BUDGET_TOL));
    }
    for g in &pair.generators {
        let outside = g.field.sup_where(|x| !g.support.contains(x));
        entries.push(CertificateEntry::new(format!("support_{}", g.name), outside, 0.0));
    }
    let product = pair.product()?;
    let (diff, scale) = match &pair.identity_region {
        Some(ball) => (
            product.sub(&pair.expected)?.sup_where(|x| ball.contains(x)),
            pair.expected.sup_where(|x| ball.contains(x)),
        ),
        None => (product.sub(&pair.expected)?.sup_norm(), pair.expected.sup_norm()),
    };
    let tol = match pair.kind {
        WitnessKind::FactorGrad | WitnessKind::FactorDiv => FACTOR_PRODUCT_TOL,
        _ => PRODUCT_TOL,
    };
    entries.push(CertificateEntry::new("product_identity", relative(diff, scale), tol));

    let mut leakage = BTreeMap::new();
    let support = &pair.support;
    leakage.insert("v".to_string(), pair.v.sup_where(|x| !support.contains(x)));
    leakage.insert("w".to_string(), pair.w.sup_where(|x| !support.contains(x)));
    Ok(Certificate {
        kind: pair.kind,
        p: pair.p,
        pairing: PairingConvention::Sesquilinear,
        entries,
        constants: pair.constants.clone(),
        leakage,
    })
}

pub(crate) fn zero_entry_certificate(kind: WitnessKind, p: f64) -> Certificate {
    Certificate {
        kind,
        p,
        pairing: PairingConvention::Sesquilinear,
        entries: Vec::new(),
        constants: BTreeMap::new(),
        leakage: BTreeMap::new(),
    }
}
