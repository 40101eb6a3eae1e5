//! Small statistics toolkit: ensemble moments, least squares, model
//! selection and bootstrap intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

pub fn std_error(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (variance(values) / values.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub rss: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len(), "linear_fit: length mismatch");
    let mx = mean(x);
    let my = mean(y);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        r2,
        rss,
    }
}

/// Least-squares quadratic `y ≈ c0 + c1 x + c2 x²`; returns `([c0, c1, c2], rss)`.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> ([f64; 3], f64) {
    assert_eq!(x.len(), y.len(), "quadratic_fit: length mismatch");
    // centre and scale x for conditioning, then map back
    let mx = mean(x);
    let sx = x.iter().fold(0.0f64, |m, &v| m.max((v - mx).abs())).max(1e-300);
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let z = (xi - mx) / sx;
        let row = [1.0, z, z * z];
        for r in 0..3 {
            aty[r] += row[r] * yi;
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
        }
    }
    let b = solve3(ata, aty);
    // y = b0 + b1 (x - mx)/sx + b2 (x - mx)²/sx²
    let c2 = b[2] / (sx * sx);
    let c1 = b[1] / sx - 2.0 * mx * c2;
    let c0 = b[0] - b[1] * mx / sx + b[2] * mx * mx / (sx * sx);
    let rss = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let z = (xi - mx) / sx;
            (yi - (b[0] + b[1] * z + b[2] * z * z)).powi(2)
        })
        .sum();
    ([c0, c1, c2], rss)
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        if d.abs() < 1e-300 {
            return [f64::NAN; 3];
        }
        for row in (col + 1)..3 {
            let f = a[row][col] / d;
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in (row + 1)..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Bayesian information criterion of a Gaussian least-squares fit with `k`
/// parameters.
pub fn bic(n: usize, rss: f64, k: usize) -> f64 {
    let nf = n as f64;
    nf * (rss.max(1e-300) / nf).ln() + k as f64 * nf.ln()
}

/// Linear-versus-quadratic model comparison by BIC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthModelComparison {
    pub linear: LinearFit,
    pub quadratic: [f64; 3],
    pub bic_linear: f64,
    pub bic_quadratic: f64,
    /// True when BIC does not favour the quadratic model.
    pub linear_preferred: bool,
}

pub fn compare_linear_quadratic(x: &[f64], y: &[f64]) -> GrowthModelComparison {
    let lin = linear_fit(x, y);
    let (quad, rss_q) = quadratic_fit(x, y);
    let n = x.len();
    let bic_linear = bic(n, lin.rss, 2);
    let bic_quadratic = bic(n, rss_q, 3);
    GrowthModelComparison {
        linear: lin,
        quadratic: quad,
        bic_linear,
        bic_quadratic,
        linear_preferred: bic_linear <= bic_quadratic,
    }
}

/// Weighted least-squares polynomial fit of degree 1 or 2 with known per-point
/// standard deviations `sigma`; returns `([c0, c1, c2], χ²)`.
pub fn weighted_poly_fit(x: &[f64], y: &[f64], sigma: &[f64], degree: usize) -> ([f64; 3], f64) {
    assert!(x.len() == y.len() && x.len() == sigma.len(), "weighted_poly_fit: length mismatch");
    assert!(degree == 1 || degree == 2, "weighted_poly_fit: degree must be 1 or 2");
    let mx = mean(x);
    let sx = x.iter().fold(0.0f64, |m, &v| m.max((v - mx).abs())).max(1e-300);
    let m = degree + 1;
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for ((&xi, &yi), &si) in x.iter().zip(y).zip(sigma) {
        let w = 1.0 / (si * si);
        let z = (xi - mx) / sx;
        let row = [1.0, z, z * z];
        for r in 0..m {
            aty[r] += w * row[r] * yi;
            for c in 0..m {
                ata[r][c] += w * row[r] * row[c];
            }
        }
    }
    if m == 2 {
        // pad to a 3x3 system with an identity row for the absent term
        ata[2][2] = 1.0;
    }
    let b = solve3(ata, aty);
    let chi2 = x
        .iter()
        .zip(y)
        .zip(sigma)
        .map(|((&xi, &yi), &si)| {
            let z = (xi - mx) / sx;
            ((yi - (b[0] + b[1] * z + b[2] * z * z)) / si).powi(2)
        })
        .sum();
    let c2 = b[2] / (sx * sx);
    let c1 = b[1] / sx - 2.0 * mx * c2;
    let c0 = b[0] - b[1] * mx / sx + b[2] * mx * mx / (sx * sx);
    ([c0, c1, c2], chi2)
}

/// Linear-versus-quadratic comparison for estimates with known standard
/// errors: `BIC = χ² + k ln n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedGrowthComparison {
    pub linear: [f64; 2],
    pub quadratic: [f64; 3],
    pub chi2_linear: f64,
    pub chi2_quadratic: f64,
    pub bic_linear: f64,
    pub bic_quadratic: f64,
    pub linear_preferred: bool,
}

pub fn compare_linear_quadratic_weighted(x: &[f64], y: &[f64], sigma: &[f64]) -> WeightedGrowthComparison {
    let ln_n = (x.len() as f64).ln();
    let (l, chi_l) = weighted_poly_fit(x, y, sigma, 1);
    let (q, chi_q) = weighted_poly_fit(x, y, sigma, 2);
    let bic_linear = chi_l + 2.0 * ln_n;
    let bic_quadratic = chi_q + 3.0 * ln_n;
    WeightedGrowthComparison {
        linear: [l[0], l[1]],
        quadratic: q,
        chi2_linear: chi_l,
        chi2_quadratic: chi_q,
        bic_linear,
        bic_quadratic,
        linear_preferred: bic_linear <= bic_quadratic,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Percentile bootstrap interval for the mean, with a fixed resampling seed.
pub fn bootstrap_mean_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> Interval {
    let n = values.len();
    if n == 0 {
        return Interval {
            lo: f64::NAN,
            hi: f64::NAN,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let s: f64 = (0..n).map(|_| values[rng.random_range(0..n)]).sum();
            s / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let pick = |q: f64| {
        let pos = (q * (resamples - 1) as f64).round() as usize;
        means[pos.min(resamples - 1)]
    };
    Interval {
        lo: pick(alpha),
        hi: pick(1.0 - alpha),
    }
}
