use std::f64::consts::PI;

use felab::error::FelabError;
use felab::spectral::{Grid2D, SpectralField};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use felab::inequalities::*;

#[test]
fn kernel_constant_cross_check() {
    // independent Gamma implementation
    for g in [0.25, 0.5, 1.0, 1.5, 1.9] {
        let reference = 2f64.powf(g) * statrs::function::gamma::gamma((2.0 + g) / 2.0)
            / (statrs::function::gamma::gamma(-g / 2.0).abs() * PI);
        assert!((kernel_constant(2, g) - reference).abs() <= 1e-12 * reference);
    }
    // γ = 1, d = 2: c = 2Γ(3/2)/(2√π·π) = 1/(2π)
    assert!((kernel_constant(2, 1.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
}

#[test]
fn poincare_constant_direct_formula() {
    // γ = 1, d = 2, diam = 2π√2
    let c = poincare_constant(2, 1.0, None).unwrap();
    let expected_inv = 0.25 * (1.0 / (2.0 * PI)) * 4.0 * PI * PI
        / (2.0 * PI + 2.0 * PI * 2f64.sqrt()).powi(3);
    assert!((c.raw - 1.0 / expected_inv).abs() <= 1e-12 / expected_inv);
    assert!(c.value >= 1.0 && !c.clamped);
}

#[test]
fn prefactor_and_monotonicity() {
    let c_free = poincare_constant(2, 0.7, None).unwrap().value;
    let c4 = poincare_constant(2, 0.7, Some(4.0)).unwrap().value;
    let c6 = poincare_constant(2, 0.7, Some(6.0)).unwrap().value;
    assert!((c4 - c_free).abs() <= 1e-14 * c_free);
    assert!(c6 <= c4);
    assert!(poincare_constant(2, 0.0, None).is_err());
    assert!(poincare_constant(2, 2.0, None).is_err());
    assert!(poincare_constant(2, 1.0, Some(5.0)).is_err());
}

#[test]
fn poincare_constant_at_least_one() {
    for i in 1..39 {
        let g = 0.05 * i as f64;
        assert!(poincare_constant(2, g, None).unwrap().value >= 1.0);
    }
}

#[test]
fn poincare_single_mode_p2() {
    let g = Grid2D::new(16).unwrap();
    let theta = SpectralField::single_mode(&g, (1, 0), 1.0, true).unwrap();
    for gamma in [0.3, 1.0, 1.7] {
        let r = check_poincare(&theta, 2.0, gamma).unwrap();
        let c = poincare_constant(2, gamma, None).unwrap().value;
        let two_pi2 = 2.0 * PI * PI;
        assert!((r.lhs - two_pi2).abs() < 1e-12);
        // θ^{1} = θ, Λ^{γ/2}θ = θ: rhs = 2π²/C + π²
        assert!((r.rhs - (two_pi2 / c + PI * PI)).abs() < 1e-12);
        assert!(r.pass);
    }
}

#[test]
fn poincare_homogeneity_p2() {
    let g = Grid2D::new(32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let theta = SpectralField::random(&g, &mut rng, 6.0, |_| 1.0);
    let a = check_poincare(&theta, 2.0, 0.5).unwrap();
    let b = check_poincare(&theta.scaled(3.0), 2.0, 0.5).unwrap();
    assert!((b.lhs - 9.0 * a.lhs).abs() < 1e-10 * b.lhs);
    assert!((b.rhs - 9.0 * a.rhs).abs() < 1e-10 * b.rhs);
    assert_eq!(a.margin.signum(), b.margin.signum());
}

#[test]
fn poincare_resolution_error() {
    let g = Grid2D::new(16).unwrap();
    let theta = SpectralField::single_mode(&g, (4, 0), 1.0, false).unwrap();
    assert!(matches!(
        check_poincare(&theta, 4.0, 1.0),
        Err(FelabError::Resolution(_))
    ));
    assert!(check_poincare(&theta, 3.0, 1.0).is_err());
}

#[test]
fn fp_examples() {
    let c = check_fp_scalar(2.0, 1.0, 4).unwrap();
    assert_eq!(c.report.lhs, 10.0);
    assert_eq!(c.report.rhs, 8.0);
    assert!(c.report.pass);
    for a in [-3.3, 0.1, 1.0, 4.75] {
        for p in [4, 6, 8] {
            let z = check_fp_scalar(a, 0.0, p).unwrap();
            assert!(z.equality, "a={a} p={p}");
        }
    }
    assert!(check_fp_scalar(1.0, 2.0, 5).is_err());
    assert!(check_fp_scalar(1.0, 2.0, 2).is_err());
}

fn rational_margin(a: f64, b: f64, p: u32) -> BigRational {
    let a = BigRational::from_float(a).unwrap();
    let b = BigRational::from_float(b).unwrap();
    let pw = |x: &BigRational, e: u32| -> BigRational { num_traits::pow(x.clone(), e as usize) };
    let pr = BigRational::from_integer(BigInt::from(p));
    let two = BigRational::from_integer(BigInt::from(2));
    let lhs = pr * (pw(&a, p - 1) - pw(&b, p - 1)) * (&a - &b)
        - two * pw(&(pw(&a, p / 2) - pw(&b, p / 2)), 2);
    let rhs = BigRational::from_integer(BigInt::from(p - 2)) * pw(&(&a - &b), 2) * pw(&a, p - 2);
    lhs - rhs
}

#[test]
fn fp_matches_rational_oracle() {
    let vals: Vec<f64> = (0..21).map(|i| -2.5 + 0.25 * i as f64).chain([0.1, -0.7, 1e-3]).collect();
    for p in [4u32, 6, 8] {
        for &a in &vals {
            for &b in &vals {
                let m = rational_margin(a, b, p);
                let c = check_fp_scalar(a, b, p).unwrap();
                assert_eq!(c.report.pass, !m.is_negative(), "a={a} b={b} p={p}");
                assert_eq!(c.equality, m.is_zero());
            }
        }
    }
}

#[test]
fn fp_sweep_structure() {
    // p = 4 holds everywhere; for p >= 6 the bound fails when a, b have opposite signs
    let s4 = sweep_fp_scalar(4, 2.0, 41).unwrap();
    assert_eq!(s4.violations, 0);
    assert!(s4.b_zero_all_equal);
    assert_eq!(s4.equality_cases_b_zero, 41);
    let c = check_fp_scalar(-2.0, 1.0, 6).unwrap();
    assert_eq!((c.report.lhs, c.report.rhs), (432.0, 576.0));
    assert!(!c.report.pass);
    for p in [6u32, 8] {
        for i in 1..20 {
            for j in 1..20 {
                let (a, b) = (0.2 * i as f64, 0.15 * j as f64);
                assert!(check_fp_scalar(a, b, p).unwrap().report.pass);
                assert!(check_fp_scalar(-a, -b, p).unwrap().report.pass);
            }
        }
    }
}

#[test]
fn q_exponent_examples() {
    // (4+2)(2+2) - 4 = 20; 4·20/(2·8) = 5
    assert!((q_exponent(2.0, 2.0).unwrap() - 5.0).abs() < 1e-15);
    assert_eq!(p_gamma(2.0).unwrap(), 6.0);
    assert_eq!(p_gamma(1.0).unwrap(), 8.0);
    assert!(q_exponent(2.0, 0.0).is_err());
    let mut last = f64::INFINITY;
    for i in 1..=40 {
        let g = 0.05 * i as f64;
        let q = q_exponent(2.5, g).unwrap();
        assert!(q < last);
        last = q;
    }
    assert_eq!(smoothing_exponent(2.5, 1.0, 1.0).unwrap(), q_exponent(3.5, 1.0).unwrap());
}

#[test]
fn commutator_trivial_cases() {
    let g = Grid2D::new(32).unwrap();
    let w = SpectralField::single_mode(&g, (1, 0), 1.0, false).unwrap();
    let r = check_commutator(&w, 2.5, 0.5, 0.25).unwrap();
    assert!(r.lhs < 1e-12);
    assert_eq!(r.ratio, 0.0);
    let z = SpectralField::zeros(&g);
    let r0 = check_commutator(&z, 2.5, 0.5, 0.25).unwrap();
    assert_eq!(r0.lhs, 0.0);
    assert_eq!(r0.ratio, 0.0);
}
