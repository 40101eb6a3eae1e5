use std::f64::consts::PI;

use felab::error::FelabError;
use felab::rng::StreamId;
use felab::spectral::{apply_multiplier, sobolev_norm, sobolev_norm_sq, Grid2D, MultiplierSymbol, SpectralField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use felab::forcing::*;

fn grid(n: usize) -> Grid2D {
    Grid2D::new(n).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn basis_sin_and_cos() {
    let g = grid(16);
    let cfg = ForcingConfig::explicit(vec![
        ForcedMode { k: (1, 0), q: 1.0 },
        ForcedMode { k: (-1, 0), q: 1.0 },
    ])
    .unwrap();
    let basis = build_basis(&cfg, &g).unwrap();
    // config order is sorted: (-1,0) then (1,0)
    let cos = felab::spectral::to_physical(&basis[0]);
    let sin = felab::spectral::to_physical(&basis[1]);
    for a in 0..16 {
        let (x, _) = g.point(a, 0);
        assert!((cos.values[a * 16] - x.cos()).abs() < 1e-14);
        assert!((sin.values[a * 16] - x.sin()).abs() < 1e-14);
    }
}

/// Independent lattice-point count.
fn count_lattice(r: f64) -> usize {
    let mut c = 0;
    let ri = r.ceil() as i64 + 1;
    for a in -ri..=ri {
        for b in -ri..=ri {
            let d = ((a * a + b * b) as f64).sqrt();
            if d > 0.0 && d <= r {
                c += 1;
            }
        }
    }
    c
}

#[test]
fn ball_mode_count() {
    assert_eq!(count_lattice(2.0), 12);
    assert_eq!(ForcingConfig::ball(2.0, 1.0, 1.0).unwrap().len(), 12);
    for r in [1.0, 3.0, 4.5, 8.0] {
        assert_eq!(ForcingConfig::ball(r, 1.0, 1.0).unwrap().len(), count_lattice(r));
    }
    assert!(ForcingConfig::ball(8.0, 1.0, 1.0).unwrap().contains_ball(8.0));
}

#[test]
fn validation_errors() {
    let asym = ForcingConfig::explicit(vec![ForcedMode { k: (1, 0), q: 1.0 }]);
    assert!(matches!(asym, Err(FelabError::AsymmetricModes(1, 0))));
    let zero = ForcingConfig::explicit(vec![
        ForcedMode { k: (1, 0), q: 0.0 },
        ForcedMode { k: (-1, 0), q: 1.0 },
    ]);
    assert!(matches!(zero, Err(FelabError::ZeroAmplitude(1, 0))));
    let cfg = ForcingConfig::ball(8.0, 1.0, 1.0).unwrap();
    assert!(matches!(
        build_basis(&cfg, &grid(16)),
        Err(FelabError::ModeOutsideGrid(..))
    ));
}

#[test]
fn hs_norm_examples() {
    let cfg = ForcingConfig::explicit(vec![
        ForcedMode { k: (1, 0), q: 1.0 },
        ForcedMode { k: (-1, 0), q: 1.0 },
    ])
    .unwrap();
    // two modes sin and cos, each 2π²
    for s in [0.0, 1.0, 2.5] {
        assert!(close(sigma_hs_norm_sq(&cfg, s), 4.0 * PI * PI, 1e-14));
    }
    let big = ForcingConfig::ball(3.0, 1.0, 1.0).unwrap();
    let g = grid(32);
    let basis = build_basis(&big, &g).unwrap();
    for s in [0.0, 1.5, 3.0] {
        let direct: f64 = basis.iter().map(|b| sobolev_norm_sq(b, s)).sum();
        assert!(close(sigma_hs_norm_sq(&big, s), direct, 1e-12));
    }
}

#[test]
fn lp_norm_examples() {
    let cfg = ForcingConfig::explicit(vec![
        ForcedMode { k: (1, 0), q: 1.0 },
        ForcedMode { k: (-1, 0), q: 1.0 },
    ])
    .unwrap();
    // Σσ² = sin² + cos² ≡ 1, so ∫(Σσ²)² = (2π)²
    let l4 = sigma_lp_norm(&cfg, 4.0).unwrap();
    assert!(close(l4.powi(4), 4.0 * PI * PI, 1e-12));
    let l2 = sigma_lp_norm(&cfg, 2.0).unwrap();
    assert!(close(l2 * l2, 4.0 * PI * PI, 1e-12));
    // consistency: 𝕃² norm squared equals the H⁰ norm squared
    let big = ForcingConfig::ball(4.0, 1.0, 1.0).unwrap();
    let l2b = sigma_lp_norm(&big, 2.0).unwrap();
    assert!(close(l2b * l2b, sigma_hs_norm_sq(&big, 0.0), 1e-12));
}

#[test]
fn single_mode_lp_norm() {
    let cfg = ForcingConfig::explicit(vec![
        ForcedMode { k: (1, 0), q: 1.0 },
        ForcedMode { k: (-1, 0), q: 1.0 },
    ])
    .unwrap();
    let g = grid(16);
    let b = build_basis(&cfg, &g).unwrap();
    assert!(close(sobolev_norm_sq(&b[1], 0.0), 2.0 * PI * PI, 1e-14));
}

#[test]
fn noise_field_examples() {
    let g = grid(16);
    let cfg = ForcingConfig::ball(2.0, 1.0, 1.0).unwrap();
    let basis = build_basis(&cfg, &g).unwrap();
    let zero = NoiseRealization::zero(cfg.len(), 0.1);
    assert_eq!(sobolev_norm(&noise_field(&basis, &zero).unwrap(), 0.0), 0.0);
    let mut one = NoiseRealization::zero(cfg.len(), 0.3);
    one.increments[4] = 1.0;
    assert_eq!(noise_field(&basis, &one).unwrap(), basis[4]);
    let inc = sample_increments(StreamId::new(1, 0), 0, cfg.len(), 0.01).unwrap();
    let f = noise_field(&basis, &inc).unwrap();
    assert!(f.hermitian_defect() < 1e-15);
}

#[test]
fn increments_variance_monte_carlo() {
    let g = grid(8);
    let cfg = ForcingConfig::explicit(vec![
        ForcedMode { k: (1, 0), q: 1.0 },
        ForcedMode { k: (-1, 0), q: 1.0 },
    ])
    .unwrap();
    let basis = build_basis(&cfg, &g).unwrap();
    let dt = 0.01;
    let n = 100_000;
    let stream = StreamId::new(2024, 0);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for step in 0..n {
        let inc = sample_increments(stream, step, cfg.len(), dt).unwrap();
        let f = noise_field(&basis, &inc).unwrap();
        let c = sigma_star(&f, &cfg).unwrap()[1];
        sum += c;
        sum2 += c * c;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = sum2 / nf - mean * mean;
    let se = dt * (2.0 / (nf - 1.0)).sqrt();
    assert!((var - dt).abs() < 3.0 * se, "var {var} vs {dt}");
    assert!(mean.abs() < 3.0 * (dt / nf).sqrt());
}

#[test]
fn sigma_star_examples() {
    let g = grid(16);
    let cfg = ForcingConfig::ball(2.0, 1.0, 1.0).unwrap();
    let w = SpectralField::single_mode(&g, (1, 0), 3.0, false).unwrap();
    let q10 = cfg.modes().iter().find(|m| m.k == (1, 0)).unwrap().q;
    let coords = sigma_star(&w, &cfg).unwrap();
    for (m, c) in cfg.modes().iter().zip(&coords) {
        if m.k == (1, 0) {
            assert!(close(*c, 3.0 / q10, 1e-15));
        } else {
            assert_eq!(*c, 0.0);
        }
    }
    let orth = SpectralField::single_mode(&g, (3, 1), 1.0, true).unwrap();
    assert!(sigma_star(&orth, &cfg).unwrap().iter().all(|&c| c == 0.0));
}

#[test]
fn sigma_sigma_star_is_projection() {
    let g = grid(32);
    let cfg = ForcingConfig::ball(3.0, 1.0, 0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w = SpectralField::random(&g, &mut rng, 10.0, |_| 1.0);
    let coords = sigma_star(&w, &cfg).unwrap();
    let rec = sigma_apply(&coords, &cfg, &g).unwrap();
    let proj = apply_multiplier(&w, MultiplierSymbol::low_pass(3.0));
    let err = sobolev_norm(&rec.sub(&proj).unwrap(), 0.0) / sobolev_norm(&proj, 0.0);
    assert!(err < 1e-12);
}

#[test]
fn ou_halving() {
    let g = grid(16);
    let cfg = ForcingConfig::none();
    let basis = ForcingBasis::new(&cfg, &g, 1.0, true).unwrap();
    let z = SpectralField::single_mode(&g, (1, 0), 1.0, false).unwrap();
    let inc = NoiseRealization::zero(0, 2f64.ln());
    let z1 = ou_exact_step(&z, &inc, 1.0, &basis).unwrap();
    assert!(close(sobolev_norm(&z1, 0.0), 0.5 * sobolev_norm(&z, 0.0), 1e-14));
}

#[test]
fn ou_stationary_variance() {
    let g = grid(8);
    let q = 0.8;
    let gamma = 1.0;
    let cfg = ForcingConfig::explicit(vec![
        ForcedMode { k: (1, 1), q },
        ForcedMode { k: (-1, -1), q },
    ])
    .unwrap();
    let basis = ForcingBasis::new(&cfg, &g, gamma, true).unwrap();
    let rate = 2f64.sqrt().powf(gamma);
    let expected = q * q / (2.0 * rate);
    let dt = 0.5;
    let stream = StreamId::new(77, 0);
    let mut z = SpectralField::zeros(&g);
    let (mut s, mut s2, mut count) = (0.0, 0.0, 0.0);
    for step in 0..100_000u64 {
        let inc = sample_increments(stream, step, cfg.len(), dt).unwrap();
        z = ou_exact_step(&z, &inc, gamma, &basis).unwrap();
        if step >= 100 {
            let c = basis_coordinate(z.coeff((1, 1)).unwrap(), (1, 1));
            s += c;
            s2 += c * c;
            count += 1.0;
        }
    }
    let var = s2 / count - (s / count).powi(2);
    assert!((var - expected).abs() < 0.05 * expected, "{var} vs {expected}");
}

#[test]
fn ou_determinism() {
    let g = grid(16);
    let cfg = ForcingConfig::ball(2.0, 1.0, 1.0).unwrap();
    let basis = ForcingBasis::new(&cfg, &g, 0.5, true).unwrap();
    let run = |seed| {
        let mut z = SpectralField::zeros(&g);
        for step in 0..50 {
            let inc = sample_increments(StreamId::new(seed, 0), step, cfg.len(), 0.01).unwrap();
            z = ou_exact_step(&z, &inc, 0.5, &basis).unwrap();
        }
        z
    };
    assert_eq!(run(1), run(1));
    assert_ne!(run(1), run(2));
}

#[test]
fn spec_round_trips_through_toml() {
    let spec = ForcingSpec::Ball {
        n_force: 3.0,
        exponent: 1.0,
        amplitude: 0.5,
    };
    let text = toml::to_string(&spec).unwrap();
    let back: ForcingSpec = toml::from_str(&text).unwrap();
    assert_eq!(back, spec);
    let ex: ForcingSpec =
        toml::from_str("kind = \"explicit\"\nmodes = [[1, 0, 1.0], [-1, 0, 2.0]]").unwrap();
    assert_eq!(ex.build().unwrap().len(), 2);
}
