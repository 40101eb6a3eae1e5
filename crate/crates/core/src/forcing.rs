//! Degenerate additive noise `σ dW = Σ_k q_k e_k dW^k` on finitely many modes,
//! and the Ornstein–Uhlenbeck process it drives.
//!
//! The real basis is `e_k = sin(k·x)` for `k` in the upper half lattice
//! (`k₂ > 0`, or `k₂ = 0` and `k₁ > 0`) and `e_k = cos(k·x)` otherwise. Inner
//! products in [`sigma_star`] are normalized so that `⟨e_k, e_k⟩ = 1`; the plain
//! `L²` pairing is `2π²` times larger.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{FelabError, Result};
use crate::rng::StreamId;
use crate::spectral::{physical_lp_norm, Grid2D, PhysicalField, SpectralField};

/// `‖e_k‖²_{L²}` on the box.
pub const BASIS_NORM_SQ: f64 = 2.0 * PI * PI;

pub fn is_upper_half(k: (i64, i64)) -> bool {
    k.1 > 0 || (k.1 == 0 && k.0 > 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcedMode {
    pub k: (i64, i64),
    pub q: f64,
}

/// How the forced set is described in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingSpec {
    /// All lattice points `0 < |k| <= n_force` with `q_k = amplitude·|k|^{-exponent}`.
    Ball {
        n_force: f64,
        #[serde(default = "default_exponent")]
        exponent: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// An explicit list of `[k1, k2, q]` triples.
    Explicit { modes: Vec<(i64, i64, f64)> },
    /// No forcing.
    None,
}

fn default_exponent() -> f64 {
    1.0
}

fn default_amplitude() -> f64 {
    1.0
}

impl ForcingSpec {
    pub fn build(&self) -> Result<ForcingConfig> {
        match *self {
            ForcingSpec::Ball {
                n_force,
                exponent,
                amplitude,
            } => ForcingConfig::ball(n_force, exponent, amplitude),
            ForcingSpec::Explicit { ref modes } => ForcingConfig::explicit(
                modes.iter().map(|&(a, b, q)| ForcedMode { k: (a, b), q }).collect(),
            ),
            ForcingSpec::None => Ok(ForcingConfig::none()),
        }
    }
}

/// Validated forced-mode set `𝒵` with amplitudes `q_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForcingConfig {
    modes: Vec<ForcedMode>,
}

impl ForcingConfig {
    pub fn none() -> Self {
        Self { modes: Vec::new() }
    }

    pub fn explicit(mut modes: Vec<ForcedMode>) -> Result<Self> {
        modes.sort_by_key(|m| m.k);
        for w in modes.windows(2) {
            if w[0].k == w[1].k {
                return Err(FelabError::param(
                    "forcing.modes",
                    format!("duplicate mode {:?}", w[0].k),
                ));
            }
        }
        for m in &modes {
            if m.k == (0, 0) {
                return Err(FelabError::param("forcing.modes", "the zero mode cannot be forced"));
            }
            if m.q == 0.0 || !m.q.is_finite() {
                return Err(FelabError::ZeroAmplitude(m.k.0, m.k.1));
            }
            let neg = (-m.k.0, -m.k.1);
            if modes.binary_search_by_key(&neg, |x| x.k).is_err() {
                return Err(FelabError::AsymmetricModes(m.k.0, m.k.1));
            }
        }
        Ok(Self { modes })
    }

    /// Ball `{0 < |k| <= n_force}` with radial profile `amplitude·|k|^{-exponent}`.
    pub fn ball(n_force: f64, exponent: f64, amplitude: f64) -> Result<Self> {
        if !(n_force >= 1.0) {
            return Err(FelabError::param("n_force", format!("must be >= 1, got {n_force}")));
        }
        if amplitude == 0.0 || !amplitude.is_finite() {
            return Err(FelabError::param("amplitude", "must be finite and nonzero"));
        }
        let r = n_force.floor() as i64;
        let mut modes = Vec::new();
        for a in -r..=r {
            for b in -r..=r {
                let m2 = (a * a + b * b) as f64;
                if m2 > 0.0 && m2 <= n_force * n_force {
                    modes.push(ForcedMode {
                        k: (a, b),
                        q: amplitude * m2.sqrt().powf(-exponent),
                    });
                }
            }
        }
        Self::explicit(modes)
    }

    pub fn modes(&self) -> &[ForcedMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Same modes, amplitudes multiplied by `factor`. A zero factor yields the
    /// unforced configuration.
    pub fn scaled(&self, factor: f64) -> Self {
        if factor == 0.0 {
            return Self::none();
        }
        Self {
            modes: self
                .modes
                .iter()
                .map(|m| ForcedMode { k: m.k, q: m.q * factor })
                .collect(),
        }
    }

    /// Largest `max(|k₁|, |k₂|)` over forced modes.
    pub fn max_component(&self) -> i64 {
        self.modes
            .iter()
            .map(|m| m.k.0.abs().max(m.k.1.abs()))
            .max()
            .unwrap_or(0)
    }

    /// True if every lattice point with `0 < |k| <= radius` is forced.
    pub fn contains_ball(&self, radius: f64) -> bool {
        let r = radius.floor() as i64;
        for a in -r..=r {
            for b in -r..=r {
                let m2 = (a * a + b * b) as f64;
                if m2 > 0.0
                    && m2 <= radius * radius
                    && self.modes.binary_search_by_key(&(a, b), |x| x.k).is_err()
                {
                    return false;
                }
            }
        }
        true
    }
}

/// `σ_k = q_k e_k` as spectral fields, one per forced mode in config order.
pub fn build_basis(cfg: &ForcingConfig, grid: &Grid2D) -> Result<Vec<SpectralField>> {
    cfg.modes()
        .iter()
        .map(|m| {
            if m.q == 0.0 {
                return Err(FelabError::ZeroAmplitude(m.k.0, m.k.1));
            }
            if !grid.index_of(m.k).is_some_and(|i| grid.is_retained(i)) {
                return Err(FelabError::ModeOutsideGrid(m.k.0, m.k.1));
            }
            SpectralField::single_mode(grid, m.k, m.q, !is_upper_half(m.k))
        })
        .collect()
}

/// `‖σ‖²_{H^s} = Σ_k ‖Λ^s σ_k‖²_{L²}`.
pub fn sigma_hs_norm_sq(cfg: &ForcingConfig, s: f64) -> f64 {
    cfg.modes()
        .iter()
        .map(|m| {
            let k2 = (m.k.0 * m.k.0 + m.k.1 * m.k.1) as f64;
            m.q * m.q * k2.powf(s) * BASIS_NORM_SQ
        })
        .sum()
}

pub fn sigma_hs_norm(cfg: &ForcingConfig, s: f64) -> f64 {
    sigma_hs_norm_sq(cfg, s).sqrt()
}

/// `‖σ‖_{𝕃^p} = (∫ (Σ_k σ_k²)^{p/2} dx)^{1/p}`, evaluated on a grid that
/// resolves the integrand exactly for even `p`.
pub fn sigma_lp_norm(cfg: &ForcingConfig, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(FelabError::param("p", format!("must be >= 2, got {p}")));
    }
    if cfg.is_empty() {
        return Ok(0.0);
    }
    let kmax = cfg.max_component() as f64;
    // (Σσ²)^{p/2} has per-axis degree p·kmax; n points integrate it exactly
    // when n > p·kmax.
    let mut n = ((p * kmax).ceil() as usize + 2).max(16);
    n += n % 2;
    while n / 3 < cfg.max_component() as usize {
        n += 2;
    }
    let grid = Grid2D::new(n)?;
    let basis = build_basis(cfg, &grid)?;
    let mut sum_sq = PhysicalField::zeros(&grid);
    for s in &basis {
        let phys = crate::spectral::to_physical(s);
        for (acc, v) in sum_sq.values.iter_mut().zip(&phys.values) {
            *acc += v * v;
        }
    }
    let root = sum_sq.map(f64::sqrt);
    Ok(physical_lp_norm(&root, p))
}

/// Independent Brownian increments `ΔW^k ~ N(0, dt)`, one per forced mode in
/// config order.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub dt: f64,
    pub increments: Vec<f64>,
    pub stream: StreamId,
    pub step: u64,
}

impl NoiseRealization {
    pub fn zero(n_modes: usize, dt: f64) -> Self {
        Self {
            dt,
            increments: vec![0.0; n_modes],
            stream: StreamId::new(0, 0),
            step: 0,
        }
    }
}

/// Draws the increments of step `step` on `stream`.
pub fn sample_increments(
    stream: StreamId,
    step: u64,
    n_modes: usize,
    dt: f64,
) -> Result<NoiseRealization> {
    if !(dt > 0.0) {
        return Err(FelabError::param("dt", format!("must be > 0, got {dt}")));
    }
    let mut rng = stream.at_step(step);
    Ok(NoiseRealization {
        dt,
        increments: draw_normals(&mut rng, n_modes, dt.sqrt()),
        stream,
        step,
    })
}

fn draw_normals<R: Rng>(rng: &mut R, count: usize, scale: f64) -> Vec<f64> {
    (0..count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect()
}

/// `Σ_k σ_k ΔW^k`.
pub fn noise_field(basis: &[SpectralField], inc: &NoiseRealization) -> Result<SpectralField> {
    let Some(first) = basis.first() else {
        return Err(FelabError::param("basis", "empty forcing basis"));
    };
    if basis.len() != inc.increments.len() {
        return Err(FelabError::param(
            "increments",
            format!("{} increments for {} modes", inc.increments.len(), basis.len()),
        ));
    }
    let mut out = SpectralField::zeros(first.grid());
    for (s, &dw) in basis.iter().zip(&inc.increments) {
        out.axpy(dw, s)?;
    }
    Ok(out)
}

/// `(σ_* ω)_k = ⟨ω, e_k⟩ / q_k` with the normalized pairing.
pub fn sigma_star(omega: &SpectralField, cfg: &ForcingConfig) -> Result<Vec<f64>> {
    cfg.modes()
        .iter()
        .map(|m| {
            let c = omega
                .coeff(m.k)
                .ok_or(FelabError::ModeOutsideGrid(m.k.0, m.k.1))?;
            Ok(basis_coordinate(c, m.k) / m.q)
        })
        .collect()
}

/// Normalized coordinate `⟨f, e_k⟩` from the complex coefficient `c_k`.
pub fn basis_coordinate(c: Complex64, k: (i64, i64)) -> f64 {
    if is_upper_half(k) {
        -2.0 * c.im
    } else {
        2.0 * c.re
    }
}

/// `Σ_k (σ_* ω)_k σ_k`, i.e. the projection of `ω` onto the forced modes.
pub fn sigma_apply(coords: &[f64], cfg: &ForcingConfig, grid: &Grid2D) -> Result<SpectralField> {
    let basis = build_basis(cfg, grid)?;
    let mut out = SpectralField::zeros(grid);
    for (s, &a) in basis.iter().zip(coords) {
        out.axpy(a, s)?;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct ModeSlot {
    idx: usize,
    cidx: usize,
    upper: bool,
    q: f64,
    /// `|k|^γ`, zero when dissipation is off.
    rate: f64,
}

/// Forcing bound to a grid and dissipation exponent, ready for per-step use.
#[derive(Debug, Clone)]
pub struct ForcingBasis {
    cfg: ForcingConfig,
    grid: Grid2D,
    slots: Vec<ModeSlot>,
}

impl ForcingBasis {
    pub fn new(cfg: &ForcingConfig, grid: &Grid2D, gamma: f64, dissipation: bool) -> Result<Self> {
        let mut slots = Vec::with_capacity(cfg.len());
        for m in cfg.modes() {
            let idx = grid
                .index_of(m.k)
                .filter(|&i| grid.is_retained(i))
                .ok_or(FelabError::ModeOutsideGrid(m.k.0, m.k.1))?;
            let rate = if dissipation {
                grid.k_norm(idx).powf(gamma)
            } else {
                0.0
            };
            slots.push(ModeSlot {
                idx,
                cidx: grid.conjugate_index(idx),
                upper: is_upper_half(m.k),
                q: m.q,
                rate,
            });
        }
        Ok(Self {
            cfg: cfg.clone(),
            grid: grid.clone(),
            slots,
        })
    }

    pub fn config(&self) -> &ForcingConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        self.slots.len()
    }

    /// Adds `Σ_k q_k e_k a_k` to `f`.
    pub fn add_weighted(&self, f: &mut SpectralField, amps: &[f64]) {
        let coeffs = f.coeffs_mut();
        for (s, &a) in self.slots.iter().zip(amps) {
            let v = s.q * a;
            if s.upper {
                coeffs[s.idx] += Complex64::new(0.0, -v / 2.0);
                coeffs[s.cidx] += Complex64::new(0.0, v / 2.0);
            } else {
                coeffs[s.idx] += Complex64::new(v / 2.0, 0.0);
                coeffs[s.cidx] += Complex64::new(v / 2.0, 0.0);
            }
        }
    }

    /// Stochastic convolution `∫ e^{-|k|^γ (t+dt-s)} dW^k_s` for each mode,
    /// built from the raw increments so that its variance is
    /// `(1 - e^{-2|k|^γ dt}) / (2|k|^γ)`.
    pub fn ou_amplitudes(&self, inc: &NoiseRealization) -> Vec<f64> {
        let dt = inc.dt;
        self.slots
            .iter()
            .zip(&inc.increments)
            .map(|(s, &dw)| dw * ou_variance_factor(s.rate, dt).sqrt())
            .collect()
    }
}

/// Ratio of the exact OU convolution variance to `dt`.
fn ou_variance_factor(rate: f64, dt: f64) -> f64 {
    let x = rate * dt;
    if x < 1e-8 {
        1.0 - x
    } else {
        -(-2.0 * x).exp_m1() / (2.0 * x)
    }
}

/// Exact OU update `Z ← e^{-Λ^γ dt} Z + Σ_k q_k η_k e_k`.
pub fn ou_exact_step(
    z: &SpectralField,
    inc: &NoiseRealization,
    gamma: f64,
    forcing: &ForcingBasis,
) -> Result<SpectralField> {
    z.grid().check_same(forcing.grid())?;
    let grid = z.grid().clone();
    let mut out = z.clone();
    let dt = inc.dt;
    out.map_indexed(|idx| (-grid.k_norm(idx).powf(gamma) * dt).exp());
    let amps = forcing.ou_amplitudes(inc);
    forcing.add_weighted(&mut out, &amps);
    Ok(out)
}
