mod common;

use common::*;
use divcurl::hodge::hodge_decompose;
use divcurl::norms::{lp_norm, BallSpec};
use divcurl::operators::{curl_l, div_l_adjoint};
use divcurl::witness::{
    certify, conjugate_exponent, gaussian_bump, normalize_gradient, rescale_to_ball, witness_large_p, witness_small_p,
    DcFamily, WitnessKind,
};
use divcurl::{Error, GridSpec};

fn planar() -> GridSpec {
    witness_grid(2, 128, 1.0)
}

#[test]
fn every_planar_construction_certifies() {
    let sys = gradient_system();
    let g = planar();
    for p in EXPONENTS {
        for spec in WitnessSpec::all(&sys, true) {
            let pair = spec.build(&sys, &g, 1.0, p);
            assert!(pair.certificate.passed(), "{}: {}", spec.label(p), describe_failures(&pair));
        }
    }
}

#[test]
fn construction_matches_exponent_range() {
    let sys = gradient_system();
    let g = planar();
    let ball = BallSpec::new(vec![0.0, 0.0], 1.0);
    let u = normalize_gradient(&gaussian_bump(&g, &[0.0, 0.0], 1.0), 2.0, Some(&ball)).unwrap();
    assert!(matches!(witness_small_p(&sys, &u, &ball, 0, 1, 3.0), Err(Error::ExponentRange { .. })));
    assert!(matches!(witness_large_p(&sys, &u, &ball, 0, 1, 2.0), Err(Error::ExponentRange { .. })));
    assert!(matches!(witness_small_p(&sys, &u, &ball, 1, 1, 1.5), Err(Error::Hypothesis(_))));
    assert!(matches!(witness_small_p(&sys, &u, &ball, 0, 2, 1.5), Err(Error::IndexOutOfRange { .. })));
    let wide = BallSpec::new(vec![0.0, 0.0], 1.5);
    assert!(matches!(witness_small_p(&sys, &u, &wide, 0, 1, 1.5), Err(Error::SupportOverflow(_))));
}

#[test]
fn vanishing_sides_hold() {
    let sys = gradient_system();
    let g = planar();
    for p in EXPONENTS {
        for spec in WitnessSpec::all(&sys, false) {
            let pair = spec.build(&sys, &g, 1.0, p);
            let scale = lp_norm(&pair.v, p).unwrap().max(lp_norm(&pair.w, conjugate_exponent(p)).unwrap());
            if pair.kind.div_free_v() {
                let div = div_l_adjoint(&sys, &pair.v).unwrap().sup_norm();
                assert!(div <= 1e-9 * scale.max(1.0), "{}: div {div:e}", spec.label(p));
            }
            if pair.kind.gradient_w() {
                let curl = curl_l(&sys, &pair.w).unwrap().sup_norm();
                assert!(curl <= 1e-9 * scale.max(1.0), "{}: curl {curl:e}", spec.label(p));
            }
        }
    }
}

#[test]
fn rescaling_preserves_norms_and_scales_the_product() {
    let sys = gradient_system();
    let g = planar();
    for p in [4.0 / 3.0, 4.0] {
        let pair = WitnessSpec::Ball { bump: Bump::Odd, i: 1, j: 0 }.build(&sys, &g, 1.0, p);
        let q = conjugate_exponent(p);
        for r in [1.0, 2.0, 3.0] {
            let moved = rescale_to_ball(&sys, &pair, &[0.0, 0.0], r).unwrap();
            assert!(moved.certificate.passed(), "R={r}: {}", describe_failures(&moved));
            assert_eq!(moved.support.radius, pair.support.radius * r);
            let rel = |a: f64, b: f64| (a - b).abs() / b;
            assert!(rel(lp_norm(&moved.v, p).unwrap(), lp_norm(&pair.v, p).unwrap()) < 1e-12);
            assert!(rel(lp_norm(&moved.w, q).unwrap(), lp_norm(&pair.w, q).unwrap()) < 1e-12);
            // same samples, so the product is the old one times R^-N
            let before = pair.product().unwrap();
            let after = moved.product().unwrap();
            let err = after
                .values()
                .iter()
                .zip(before.values())
                .map(|(a, b)| (a - b * r.powi(-2)).norm())
                .fold(0.0, f64::max);
            assert!(err <= 1e-14 * before.sup_norm(), "R={r}: {err:e}");
        }
    }
    assert!(matches!(
        rescale_to_ball(&sys, &WitnessSpec::FactorGrad.build(&sys, &g, 1.0, 2.0), &[0.0, 0.0], 0.5),
        Err(Error::Hypothesis(_))
    ));
}

#[test]
fn tampering_is_detected() {
    let sys = gradient_system();
    let g = planar();
    let mut pair = WitnessSpec::Ball { bump: Bump::Even, i: 0, j: 1 }.build(&sys, &g, 1.0, 2.0);
    pair.v = pair.v.scale_real(3.0);
    let cert = certify(&sys, &pair).unwrap();
    assert!(!cert.passed());
    assert!(cert.failures().iter().any(|e| e.name.starts_with("budget")));

    // an exact gradient component added to V breaks the vanishing divergence
    let mut pair = WitnessSpec::FactorDiv.build(&sys, &g, 1.0, 2.0);
    let bump = gaussian_bump(&g, &[0.0, 0.0], 0.3);
    let kick = divcurl::operators::grad_l(&sys, &bump).unwrap();
    pair.v = pair.v.add(&kick).unwrap();
    let cert = certify(&sys, &pair).unwrap();
    assert!(cert.failures().iter().any(|e| e.name == "div_residual"));
}

#[test]
fn membership_normalization_meets_every_budget() {
    let sys = gradient_system();
    let g = planar();
    for p in EXPONENTS {
        let q = conjugate_exponent(p);
        for spec in WitnessSpec::all(&sys, false) {
            let pair = spec.build(&sys, &g, 1.0, p);
            for family in pair.families() {
                let (_, vs, ws) = pair.membership_product(&sys, family).unwrap();
                let v = pair.v.scale_real(1.0 / vs);
                let w = pair.w.scale_real(1.0 / ws);
                let tight = 1.0 + 1e-12;
                assert!(lp_norm(&v, p).unwrap() <= tight && lp_norm(&w, q).unwrap() <= tight);
                match family {
                    DcFamily::OneZero => {
                        assert!(lp_norm(&div_l_adjoint(&sys, &v).unwrap(), p).unwrap() <= tight)
                    }
                    DcFamily::ZeroOne => assert!(lp_norm(&curl_l(&sys, &w).unwrap(), q).unwrap() <= tight),
                }
            }
        }
    }
}

#[test]
fn factorizations_reproduce_the_bump() {
    let sys = gradient_system();
    let g = planar();
    for spec in [WitnessSpec::FactorGrad, WitnessSpec::FactorDiv] {
        let pair = spec.build(&sys, &g, 1.0, 2.0);
        assert_eq!(
            pair.kind,
            if spec == WitnessSpec::FactorGrad { WitnessKind::FactorGrad } else { WitnessKind::FactorDiv }
        );
        let err = pair.product().unwrap().sub(&pair.expected).unwrap().sup_norm();
        assert!(err <= 1e-9 * pair.expected.sup_norm(), "{spec:?}: {err:e}");
        assert!((pair.expected.integral().re - 1.0).abs() < 1e-12);
    }
}

#[test]
fn div_free_witness_is_a_hodge_fixed_point() {
    let sys = gradient_system();
    let g = planar();
    let pair = WitnessSpec::Ball { bump: Bump::Even, i: 0, j: 1 }.build(&sys, &g, 1.0, 4.0 / 3.0);
    let split = hodge_decompose(&sys, &pair.v, &[]).unwrap();
    assert!(split.exact.sup_norm() <= 1e-9 * pair.v.sup_norm());
}
