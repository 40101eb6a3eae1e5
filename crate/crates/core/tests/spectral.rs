use std::f64::consts::PI;

use felab::error::FelabError;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use felab::spectral::*;

fn grid(n: usize) -> Grid2D {
    Grid2D::new(n).unwrap()
}

fn rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = a.sub(b).unwrap();
    sobolev_norm(&d, 0.0) / sobolev_norm(b, 0.0).max(1e-300)
}

#[test]
fn grid_validation() {
    assert!(Grid2D::new(6).is_err());
    assert!(Grid2D::new(9).is_err());
    assert!(Grid2D::with_cutoff(16, 8).is_err());
    let g = grid(16);
    assert_eq!(g.dealias_cutoff(), 5);
}

#[test]
fn lowest_eigenvalue_is_one() {
    let g = grid(16);
    let min = (0..g.len())
        .map(|i| g.k_squared(i))
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(min, 1.0);
    for k in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
        assert_eq!(g.k_squared(g.index_of(k).unwrap()), 1.0);
    }
}

#[test]
fn retained_set_closed_under_negation() {
    let g = grid(32);
    for idx in 0..g.len() {
        let c = g.conjugate_index(idx);
        assert_eq!(g.is_retained(idx), g.is_retained(c));
        let (a, b) = g.wavenumber(idx);
        if g.is_retained(idx) {
            assert_eq!(g.wavenumber(c), (-a, -b));
        }
    }
}

#[test]
fn sin_round_trip() {
    let g = grid(16);
    let f = SpectralField::single_mode(&g, (1, 0), 1.0, false).unwrap();
    let p = to_physical(&f);
    for a in 0..16 {
        for b in 0..16 {
            let (x1, _) = g.point(a, b);
            assert!((p.values[a * 16 + b] - x1.sin()).abs() < 1e-14);
        }
    }
    let back = to_spectral(&p);
    assert!(rel_diff(&back, &f) < 1e-14);
    assert!((back.coeff((1, 0)).unwrap() - Complex64::new(0.0, -0.5)).norm() < 1e-15);
}

#[test]
fn zero_round_trip() {
    let g = grid(8);
    let z = SpectralField::zeros(&g);
    assert_eq!(to_spectral(&to_physical(&z)), z);
}

/// Direct synthesis `Σ c_k e^{ik·x}`.
fn direct_eval(f: &SpectralField, x: f64, y: f64) -> Complex64 {
    let g = f.grid();
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (k1, k2) = g.wavenumber(i);
            c * Complex64::from_polar(1.0, k1 as f64 * x + k2 as f64 * y)
        })
        .sum()
}

#[test]
fn random_round_trip_and_realness() {
    let g = grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let f = SpectralField::random(&g, &mut rng, 15.0, |_| 1.0);
        let phys = to_physical(&f);
        for (a, b) in [(0, 0), (3, 17), (31, 5)] {
            let (x, y) = g.point(a, b);
            let v = direct_eval(&f, x, y);
            assert!(v.im.abs() <= 1e-12 * phys.max_abs());
            assert!((v.re - phys.values[a * 32 + b]).abs() <= 1e-12 * phys.max_abs());
        }
        let back = to_spectral(&to_physical(&f));
        assert!(rel_diff(&back, &f) < 1e-12);
    }
}

#[test]
fn to_spectral_projects_out_mean() {
    let g = grid(16);
    let p = PhysicalField::from_fn(&g, |x, _| 3.0 + x.cos());
    let f = to_spectral(&p);
    assert_eq!(f.coeffs()[0], Complex64::new(0.0, 0.0));
    assert!((f.coeff((1, 0)).unwrap().re - 0.5).abs() < 1e-15);
}

#[test]
fn pair_transforms_match_single() {
    let g = grid(16);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = SpectralField::random(&g, &mut rng, 7.0, |_| 1.0);
    let b = SpectralField::random(&g, &mut rng, 7.0, |_| 1.0);
    let (pa, pb) = to_physical_pair(&a, &b).unwrap();
    let (sa, sb) = to_spectral_pair(&pa, &pb).unwrap();
    assert!(rel_diff(&sa, &a) < 1e-13);
    assert!(rel_diff(&sb, &b) < 1e-13);
    let pa1 = to_physical(&a);
    for (x, y) in pa.values.iter().zip(&pa1.values) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn multiplier_on_unit_mode() {
    let g = grid(16);
    let f = SpectralField::single_mode(&g, (1, 0), 1.0, false).unwrap();
    let h = apply_multiplier(&f, MultiplierSymbol::frac_laplacian(0.5));
    assert!(rel_diff(&h, &f) < 1e-15);
    let f2 = SpectralField::single_mode(&g, (3, 4), 1.0, true).unwrap();
    let h2 = apply_multiplier(&f2, MultiplierSymbol::frac_laplacian(1.0));
    assert!(rel_diff(&h2, &f2.scaled(5.0)) < 1e-15);
}

#[test]
fn heat_semigroup_and_partition() {
    let g = grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = SpectralField::random(&g, &mut rng, 10.0, |_| 1.0);
    let a = apply_multiplier(
        &apply_multiplier(&f, MultiplierSymbol::heat(0.7, 0.3)),
        MultiplierSymbol::heat(0.7, 0.45),
    );
    let b = apply_multiplier(&f, MultiplierSymbol::heat(0.7, 0.75));
    assert!(rel_diff(&a, &b) < 1e-14);

    let p = apply_multiplier(&f, MultiplierSymbol::low_pass(4.0));
    let q = apply_multiplier(&f, MultiplierSymbol::high_pass(4.0));
    assert!(rel_diff(&p.add(&q).unwrap(), &f) < 1e-14);

    let id = apply_multiplier(&f, MultiplierSymbol::frac_laplacian(0.0));
    assert!(rel_diff(&id, &f) < 1e-15);
}

#[test]
fn frac_laplacian_composes() {
    let g = grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f = SpectralField::random(&g, &mut rng, 10.0, |_| 1.0);
    for (g1, g2) in [(0.3, 0.9), (1.0, 1.0), (-1.0, 0.5)] {
        let a = apply_multiplier(
            &apply_multiplier(&f, MultiplierSymbol::frac_laplacian(g1)),
            MultiplierSymbol::frac_laplacian(g2),
        );
        let b = apply_multiplier(&f, MultiplierSymbol::frac_laplacian(g1 + g2));
        assert!(rel_diff(&a, &b) < 1e-12);
    }
}

#[test]
fn log_weight_vanishes_on_unit_shell() {
    let s = MultiplierSymbol::log_weight(1.0);
    assert_eq!(s.eval(1.0), 0.0);
    assert!((s.eval(2.0) - 2.0 * 2f64.ln().sqrt()).abs() < 1e-15);
}

#[test]
fn biot_savart_single_mode() {
    let g = grid(16);
    let w = SpectralField::single_mode(&g, (1, 0), 1.0, false).unwrap();
    let (u1, u2) = biot_savart(&w);
    assert!(sobolev_norm(&u1, 0.0) < 1e-15);
    let expected = SpectralField::single_mode(&g, (1, 0), -1.0, true).unwrap();
    assert!(rel_diff(&u2, &expected) < 1e-15);
    let back = curl(&u1, &u2).unwrap();
    assert!(rel_diff(&back, &w) < 1e-15);
}

#[test]
fn biot_savart_divergence_free_and_inverts_curl() {
    let g = grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w = SpectralField::random(&g, &mut rng, 10.0, |_| 1.0);
    let (u1, u2) = biot_savart(&w);
    let div = divergence(&u1, &u2).unwrap();
    let scale = sobolev_norm(&u1, 1.0);
    assert!(sobolev_norm(&div, 0.0) <= 1e-14 * scale);
    assert!(rel_diff(&curl(&u1, &u2).unwrap(), &w) < 1e-12);
}

#[test]
fn sobolev_norm_examples() {
    let g = grid(16);
    let f = SpectralField::single_mode(&g, (1, 0), 1.0, false).unwrap();
    for s in [-1.0, 0.0, 0.5, 3.0] {
        assert!((sobolev_norm_sq(&f, s) - 2.0 * PI * PI).abs() < 1e-12);
    }
    let f2 = SpectralField::single_mode(&g, (2, 0), 1.0, false).unwrap();
    assert!((sobolev_norm_sq(&f2, 1.0) - 4.0 * sobolev_norm_sq(&f2, 0.0)).abs() < 1e-12);
}

#[test]
fn sobolev_matches_quadrature() {
    let g = grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let f = SpectralField::random(&g, &mut rng, 10.0, |_| 1.0);
    let p = to_physical(&f);
    let quad = p.map(|v| v * v).integral();
    let spec = sobolev_norm_sq(&f, 0.0);
    assert!((quad - spec).abs() <= 1e-10 * spec);
}

#[test]
fn lp_norm_examples() {
    let g = grid(16);
    let f = SpectralField::single_mode(&g, (1, 0), 1.0, false).unwrap();
    assert!((lp_norm(&f, 2.0) - (2.0 * PI * PI).sqrt()).abs() < 1e-13);
    let f2 = f.scaled(2.0);
    assert!((lp_norm(&f2, 3.0) - 2.0 * lp_norm(&f, 3.0)).abs() < 1e-12);
}

#[test]
fn lp_norm_matches_direct_sum() {
    let g = grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let f = SpectralField::random(&g, &mut rng, 6.0, |_| 1.0);
    let p = to_physical(&f);
    let h = 2.0 * PI / 32.0;
    let direct: f64 = p.values.iter().map(|v| v.powi(4) * h * h).sum::<f64>().powf(0.25);
    let got = lp_norm(&f, 4.0);
    assert!((got - direct).abs() <= 1e-10 * direct);
}

#[test]
fn dealias_examples() {
    let g = grid(32);
    let inside = SpectralField::single_mode(&g, (3, -5), 1.0, false).unwrap();
    assert_eq!(dealias(&inside), inside);
    let outside = SpectralField::single_mode(&g, (12, 1), 1.0, true).unwrap();
    assert!(dealias(&outside).coeffs().iter().all(|c| c.norm() == 0.0));
}

#[test]
fn dealiased_product_of_two_sines_is_exact() {
    // sin(3x) sin(4y) has coefficients at (±3, ±4) of magnitude 1/4
    let g = grid(32);
    let a = SpectralField::single_mode(&g, (3, 0), 1.0, false).unwrap();
    let b = SpectralField::single_mode(&g, (0, 4), 1.0, false).unwrap();
    let prod = dealiased_product(&a, &b).unwrap();
    // sin a sin b = [cos(a - b) - cos(a + b)] / 2
    let mut expected = SpectralField::single_mode(&g, (3, -4), 0.5, true).unwrap();
    expected
        .axpy(-1.0, &SpectralField::single_mode(&g, (3, 4), 0.5, true).unwrap())
        .unwrap();
    assert!(rel_diff(&prod, &expected) < 1e-14);
}

#[test]
fn grid_mismatch_errors() {
    let a = SpectralField::zeros(&grid(16));
    let b = SpectralField::zeros(&grid(32));
    assert!(matches!(a.inner(&b), Err(FelabError::GridMismatch { .. })));
}

#[test]
fn translation_phase() {
    let g = grid(16);
    let f = SpectralField::single_mode(&g, (1, 0), 1.0, false).unwrap();
    let t = f.translated((PI / 2.0, 0.0));
    // sin(x - π/2) = -cos x
    let expected = SpectralField::single_mode(&g, (1, 0), -1.0, true).unwrap();
    assert!(rel_diff(&t, &expected) < 1e-15);
}
