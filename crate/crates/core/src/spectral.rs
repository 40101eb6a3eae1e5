//! Fourier substrate on the periodic box `[-π, π]²`.
//!
//! Fields are stored as complex exponential coefficients `c_k`, with
//!
//! ```text
//! f(x) = Σ_k c_k exp(i k·x),     c_k = (1/n²) Σ_x f(x) exp(-i k·x)
//! ```
//!
//! so the forward transform divides by `n²` and the coefficients are the
//! analytic Fourier coefficients of a band-limited field. Grid point `(a, b)`
//! sits at `x = (2πa/n, 2πb/n)`, which is the same point set as a uniform grid
//! starting at `-π`.
//!
//! The real sin/cos basis used by the forcing maps onto this convention as
//! follows, for `k` in the upper half lattice:
//!
//! ```text
//! sin(k·x)  ->  c_k = -i/2,  c_{-k} = +i/2
//! cos(k·x)  ->  c_k = 1/2,   c_{-k} = 1/2
//! ```
//!
//! and `‖f‖²_{L²} = (2π)² Σ_k |c_k|²`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{FelabError, Result};

const TWO_PI: f64 = 2.0 * PI;
const AREA: f64 = TWO_PI * TWO_PI;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans_for(n: usize) -> Arc<Plans> {
    static REGISTRY: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let registry = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = registry.lock().expect("fft plan registry poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

struct GridTables {
    /// Signed wavenumber for each storage index along one axis.
    freq: Vec<i64>,
    /// `|k|²` per flattened index.
    k2: Vec<f64>,
    /// `|k|` per flattened index.
    kmag: Vec<f64>,
    /// True where the coefficient is retained by the dealiasing rule.
    retained: Vec<bool>,
    plans: Arc<Plans>,
}

/// Square periodic grid with integer wavenumbers.
#[derive(Clone)]
pub struct Grid2D {
    n: usize,
    cutoff: usize,
    tables: Arc<GridTables>,
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("n", &self.n)
            .field("cutoff", &self.cutoff)
            .finish()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.cutoff == other.cutoff
    }
}

impl Grid2D {
    /// Grid with the default 2/3-rule cutoff `floor(n/3)`.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_cutoff(n, n / 3)
    }

    pub fn with_cutoff(n: usize, cutoff: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(FelabError::InvalidGrid(format!(
                "n must be even and >= 8, got {n}"
            )));
        }
        if cutoff == 0 || cutoff >= n / 2 {
            return Err(FelabError::InvalidGrid(format!(
                "dealias cutoff must lie in [1, n/2), got {cutoff} for n={n}"
            )));
        }
        let freq: Vec<i64> = (0..n)
            .map(|i| if i < n / 2 { i as i64 } else { i as i64 - n as i64 })
            .collect();
        let mut k2 = vec![0.0; n * n];
        let mut kmag = vec![0.0; n * n];
        let mut retained = vec![false; n * n];
        let half = (n / 2) as i64;
        for i in 0..n {
            for j in 0..n {
                let (k1, k2i) = (freq[i], freq[j]);
                let idx = i * n + j;
                let m = (k1 * k1 + k2i * k2i) as f64;
                k2[idx] = m;
                kmag[idx] = m.sqrt();
                retained[idx] = k1.abs() <= cutoff as i64
                    && k2i.abs() <= cutoff as i64
                    && k1 != -half
                    && k2i != -half;
            }
        }
        Ok(Self {
            n,
            cutoff,
            tables: Arc::new(GridTables {
                freq,
                k2,
                kmag,
                retained,
                plans: plans_for(n),
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dealias_cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Wavenumber at a flattened storage index.
    pub fn wavenumber(&self, idx: usize) -> (i64, i64) {
        let t = &self.tables;
        (t.freq[idx / self.n], t.freq[idx % self.n])
    }

    /// Flattened storage index for wavenumber `k`, if it is representable
    /// (strictly inside the Nyquist band).
    pub fn index_of(&self, k: (i64, i64)) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k.0.abs() >= half || k.1.abs() >= half {
            return None;
        }
        let wrap = |c: i64| if c >= 0 { c as usize } else { (c + self.n as i64) as usize };
        Some(wrap(k.0) * self.n + wrap(k.1))
    }

    pub fn k_squared(&self, idx: usize) -> f64 {
        self.tables.k2[idx]
    }

    pub fn k_norm(&self, idx: usize) -> f64 {
        self.tables.kmag[idx]
    }

    pub fn is_retained(&self, idx: usize) -> bool {
        self.tables.retained[idx]
    }

    /// Index of `-k` for the wavenumber stored at `idx`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let (i, j) = (idx / n, idx % n);
        ((n - i) % n) * n + (n - j) % n
    }

    /// Largest `|k|^γ` over retained modes.
    pub fn max_retained_symbol(&self, gamma: f64) -> f64 {
        let c = self.cutoff as f64;
        (2.0 * c * c).sqrt().powf(gamma)
    }

    pub fn check_same(&self, other: &Grid2D) -> Result<()> {
        if self != other {
            return Err(FelabError::GridMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// Physical coordinates of grid point `(a, b)`.
    pub fn point(&self, a: usize, b: usize) -> (f64, f64) {
        let h = TWO_PI / self.n as f64;
        (a as f64 * h, b as f64 * h)
    }

    /// In-place unnormalized 2D FFT (forward or inverse) on a row-major buffer.
    fn fft2(&self, buf: &mut [Complex64], forward: bool) {
        let n = self.n;
        let plan = if forward {
            &self.tables.plans.forward
        } else {
            &self.tables.plans.inverse
        };
        SCRATCH.with(|cell| {
            let mut scratch = cell.borrow_mut();
            let len = plan.get_inplace_scratch_len();
            if scratch.len() < len {
                scratch.resize(len, Complex64::new(0.0, 0.0));
            }
            plan.process_with_scratch(buf, &mut scratch[..len]);
            transpose_square(buf, n);
            plan.process_with_scratch(buf, &mut scratch[..len]);
            transpose_square(buf, n);
        });
    }
}

thread_local! {
    static SCRATCH: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    const B: usize = 16;
    for ib in (0..n).step_by(B) {
        for jb in (ib..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                let j0 = if ib == jb { i + 1 } else { jb };
                for j in j0..(jb + B).min(n) {
                    buf.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Scalar Fourier multiplier evaluated on `|k|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierSymbol {
    /// `|k|^γ`, the fractional Laplacian `Λ^γ`.
    FracLaplacian(f64),
    /// `exp(-|k|^γ t)`.
    Heat { gamma: f64, t: f64 },
    /// Projection `P_N` onto `0 < |k| <= N`.
    LowPass(f64),
    /// Complementary projection `Q_N = 1 - P_N`.
    HighPass(f64),
    /// `|k|^s`.
    Sobolev(f64),
    /// `|k|^s sqrt(log|k|)` for `|k| >= 2`, zero on the unit shell.
    LogWeight(f64),
}

impl MultiplierSymbol {
    pub fn frac_laplacian(gamma: f64) -> Self {
        Self::FracLaplacian(gamma)
    }

    pub fn heat(gamma: f64, t: f64) -> Self {
        Self::Heat { gamma, t }
    }

    pub fn low_pass(n: f64) -> Self {
        Self::LowPass(n)
    }

    pub fn high_pass(n: f64) -> Self {
        Self::HighPass(n)
    }

    pub fn sobolev(s: f64) -> Self {
        Self::Sobolev(s)
    }

    pub fn log_weight(s: f64) -> Self {
        Self::LogWeight(s)
    }

    /// Symbol value at `|k| > 0`.
    pub fn eval(&self, kmag: f64) -> f64 {
        match *self {
            Self::FracLaplacian(g) | Self::Sobolev(g) => kmag.powf(g),
            Self::Heat { gamma, t } => (-kmag.powf(gamma) * t).exp(),
            Self::LowPass(n) => {
                if kmag <= n {
                    1.0
                } else {
                    0.0
                }
            }
            Self::HighPass(n) => {
                if kmag <= n {
                    0.0
                } else {
                    1.0
                }
            }
            Self::LogWeight(s) => {
                if kmag < 2.0 {
                    0.0
                } else {
                    kmag.powf(s) * kmag.ln().sqrt()
                }
            }
        }
    }
}

/// Real samples on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let (x1, x2) = grid.point(a, b);
                values.push(f(x1, x2));
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Grid-point quadrature of `∫ f dx` over the box.
    pub fn integral(&self) -> f64 {
        AREA * self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ f g dx` by grid quadrature.
    pub fn dot(&self, other: &PhysicalField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(AREA * s / self.values.len() as f64)
    }
}

/// Hermitian-symmetric, mean-zero Fourier coefficients of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Wraps raw coefficients; the mean and the Nyquist lines are cleared and
    /// the array is symmetrized so that the field is real.
    pub fn from_coeffs(grid: &Grid2D, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(FelabError::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        let mut f = Self {
            grid: grid.clone(),
            coeffs,
        };
        f.enforce_hermitian();
        Ok(f)
    }

    /// Like [`from_coeffs`](Self::from_coeffs) but trusts the input verbatim.
    /// Used by the checkpoint reader, which must be byte-exact.
    pub(crate) fn from_raw(grid: &Grid2D, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self {
            grid: grid.clone(),
            coeffs,
        }
    }

    /// Field with a single real basis element: `amp·sin(k·x)` or `amp·cos(k·x)`.
    pub fn single_mode(grid: &Grid2D, k: (i64, i64), amp: f64, cosine: bool) -> Result<Self> {
        let idx = grid
            .index_of(k)
            .ok_or(FelabError::ModeOutsideGrid(k.0, k.1))?;
        if k == (0, 0) {
            return Err(FelabError::param("k", "the zero mode is excluded"));
        }
        let cidx = grid.conjugate_index(idx);
        let mut f = Self::zeros(grid);
        if cosine {
            f.coeffs[idx] += Complex64::new(amp / 2.0, 0.0);
            f.coeffs[cidx] += Complex64::new(amp / 2.0, 0.0);
        } else {
            f.coeffs[idx] += Complex64::new(0.0, -amp / 2.0);
            f.coeffs[cidx] += Complex64::new(0.0, amp / 2.0);
        }
        Ok(f)
    }

    /// Random real field supported on retained modes with `0 < |k| <= band`,
    /// with coefficient magnitudes `envelope(|k|)` times a standard complex
    /// Gaussian.
    pub fn random<R: Rng + ?Sized>(
        grid: &Grid2D,
        rng: &mut R,
        band: f64,
        envelope: impl Fn(f64) -> f64,
    ) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let km = grid.k_norm(idx);
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            if km > 0.0 && km <= band && grid.is_retained(idx) {
                *c = Complex64::new(re, im) * envelope(km);
            }
        }
        let mut f = Self {
            grid: grid.clone(),
            coeffs,
        };
        f.enforce_hermitian();
        f
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, k: (i64, i64)) -> Option<Complex64> {
        self.grid.index_of(k).map(|i| self.coeffs[i])
    }

    /// Replaces `c_k` by the Hermitian average `(c_k + conj(c_{-k}))/2` and
    /// clears the mean and Nyquist coefficients.
    pub fn enforce_hermitian(&mut self) {
        let n = self.grid.n();
        let half = n / 2;
        for idx in 0..self.coeffs.len() {
            let c = self.grid.conjugate_index(idx);
            if c < idx {
                continue;
            }
            let avg = (self.coeffs[idx] + self.coeffs[c].conj()) * 0.5;
            self.coeffs[idx] = avg;
            self.coeffs[c] = avg.conj();
        }
        self.coeffs[0] = Complex64::new(0.0, 0.0);
        for t in 0..n {
            self.coeffs[half * n + t] = Complex64::new(0.0, 0.0);
            self.coeffs[t * n + half] = Complex64::new(0.0, 0.0);
        }
    }

    /// Largest deviation from Hermitian symmetry over all coefficients.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[i] - self.coeffs[self.grid.conjugate_index(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    pub fn scale_in_place(&mut self, a: f64) {
        for c in &mut self.coeffs {
            *c *= a;
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
        Ok(())
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// `∫ f g dx` evaluated by Parseval.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(AREA * s)
    }

    /// Multiplies each coefficient by `phi(idx)`.
    pub(crate) fn map_indexed(&mut self, phi: impl Fn(usize) -> f64) {
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            *c *= phi(idx);
        }
    }

    /// Translates the field by `shift`: `f(x) -> f(x - shift)`.
    pub fn translated(&self, shift: (f64, f64)) -> Self {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let (k1, k2) = self.grid.wavenumber(idx);
            let phase = -(k1 as f64 * shift.0 + k2 as f64 * shift.1);
            *c *= Complex64::from_polar(1.0, phase);
        }
        out
    }

    /// Sum of `|c_k|²` over `|k| > band` relative to the total; used to flag
    /// under-resolved fields.
    pub fn tail_fraction(&self, band: f64) -> f64 {
        let (mut tail, mut total) = (0.0, 0.0);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if self.grid.k_norm(idx) > band {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

pub fn to_physical(f: &SpectralField) -> PhysicalField {
    let mut buf = f.coeffs.clone();
    f.grid.fft2(&mut buf, false);
    PhysicalField {
        grid: f.grid.clone(),
        values: buf.into_iter().map(|c| c.re).collect(),
    }
}

/// Forward transform; the mean is projected out and the Nyquist lines dropped.
pub fn to_spectral(g: &PhysicalField) -> SpectralField {
    let buf: Vec<Complex64> = g.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectral_from_real_buffer(&g.grid, buf)
}

/// Forward transform of a real field stored in the real parts of `buf`.
pub(crate) fn spectral_from_real_buffer(grid: &Grid2D, mut buf: Vec<Complex64>) -> SpectralField {
    grid.fft2(&mut buf, true);
    let norm = 1.0 / grid.len() as f64;
    for c in &mut buf {
        *c *= norm;
    }
    let mut f = SpectralField {
        grid: grid.clone(),
        coeffs: buf,
    };
    f.clear_mean_and_nyquist();
    f
}

impl SpectralField {
    fn clear_mean_and_nyquist(&mut self) {
        let n = self.grid.n();
        let half = n / 2;
        self.coeffs[0] = Complex64::new(0.0, 0.0);
        for t in 0..n {
            self.coeffs[half * n + t] = Complex64::new(0.0, 0.0);
            self.coeffs[t * n + half] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Inverse-transforms two real fields with one complex FFT.
pub fn to_physical_pair(a: &SpectralField, b: &SpectralField) -> Result<(PhysicalField, PhysicalField)> {
    a.grid.check_same(&b.grid)?;
    let i = Complex64::new(0.0, 1.0);
    let mut buf: Vec<Complex64> = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x + i * y)
        .collect();
    a.grid.fft2(&mut buf, false);
    let re = buf.iter().map(|c| c.re).collect();
    let im = buf.iter().map(|c| c.im).collect();
    Ok((
        PhysicalField {
            grid: a.grid.clone(),
            values: re,
        },
        PhysicalField {
            grid: a.grid.clone(),
            values: im,
        },
    ))
}

/// Forward-transforms two real fields with one complex FFT.
pub fn to_spectral_pair(a: &PhysicalField, b: &PhysicalField) -> Result<(SpectralField, SpectralField)> {
    a.grid.check_same(&b.grid)?;
    let grid = &a.grid;
    let mut buf: Vec<Complex64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| Complex64::new(x, y))
        .collect();
    grid.fft2(&mut buf, true);
    let norm = 1.0 / grid.len() as f64;
    let mut fa = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut fb = vec![Complex64::new(0.0, 0.0); grid.len()];
    for idx in 0..grid.len() {
        let z = buf[idx] * norm;
        let zc = buf[grid.conjugate_index(idx)].conj() * norm;
        fa[idx] = (z + zc) * 0.5;
        fb[idx] = (z - zc) * Complex64::new(0.0, -0.5);
    }
    let mut fa = SpectralField {
        grid: grid.clone(),
        coeffs: fa,
    };
    let mut fb = SpectralField {
        grid: grid.clone(),
        coeffs: fb,
    };
    fa.clear_mean_and_nyquist();
    fb.clear_mean_and_nyquist();
    Ok((fa, fb))
}

pub fn apply_multiplier(f: &SpectralField, phi: MultiplierSymbol) -> SpectralField {
    let mut out = f.clone();
    let grid = f.grid.clone();
    out.map_indexed(|idx| {
        let km = grid.k_norm(idx);
        if km == 0.0 {
            0.0
        } else {
            phi.eval(km)
        }
    });
    out
}

/// Velocity `u = K * ω` with `∇^⊥·u = ω` and `∇·u = 0`, where
/// `∇^⊥ = (-∂₂, ∂₁)`. In Fourier variables `û = -i k^⊥ ω̂ / |k|²`,
/// `k^⊥ = (-k₂, k₁)`.
pub fn biot_savart(omega: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = &omega.grid;
    let mut u1 = SpectralField::zeros(grid);
    let mut u2 = SpectralField::zeros(grid);
    for (idx, w) in omega.coeffs.iter().enumerate() {
        let k2 = grid.k_squared(idx);
        if k2 == 0.0 {
            continue;
        }
        let (ka, kb) = grid.wavenumber(idx);
        let s = w / k2;
        // -i (-kb, ka) s = (i kb s, -i ka s)
        u1.coeffs[idx] = Complex64::new(0.0, kb as f64) * s;
        u2.coeffs[idx] = Complex64::new(0.0, -(ka as f64)) * s;
    }
    (u1, u2)
}

/// Physical-space velocity `u₁ + i u₂` of `f` and gradient `∂₁g + i ∂₂g` of
/// `g` packed into two complex buffers (two inverse FFTs in total). Modes
/// outside the dealiasing band are dropped when `dealias` is set.
pub(crate) fn packed_velocity_gradient(
    f: &SpectralField,
    g: &SpectralField,
    dealias: bool,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let grid = &f.grid;
    let t = &grid.tables;
    let n = grid.n;
    let mut vel = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut grad = vec![Complex64::new(0.0, 0.0); grid.len()];
    for idx in 0..grid.len() {
        if dealias && !t.retained[idx] {
            continue;
        }
        let ka = t.freq[idx / n] as f64;
        let kb = t.freq[idx % n] as f64;
        let k2 = t.k2[idx];
        if k2 > 0.0 {
            let s = f.coeffs[idx] / k2;
            // u1 = i kb s, u2 = -i ka s; packed u1 + i u2 = (i kb + ka) s
            vel[idx] = Complex64::new(ka, kb) * s;
        }
        let c = g.coeffs[idx];
        // ∂1 + i ∂2 = i ka c - kb c
        grad[idx] = Complex64::new(-kb, ka) * c;
    }
    grid.fft2(&mut vel, false);
    grid.fft2(&mut grad, false);
    (vel, grad)
}

/// Spectral gradient `(∂₁ f, ∂₂ f)`.
pub fn gradient(f: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = &f.grid;
    let mut d1 = SpectralField::zeros(grid);
    let mut d2 = SpectralField::zeros(grid);
    for (idx, c) in f.coeffs.iter().enumerate() {
        let (ka, kb) = grid.wavenumber(idx);
        d1.coeffs[idx] = Complex64::new(0.0, ka as f64) * c;
        d2.coeffs[idx] = Complex64::new(0.0, kb as f64) * c;
    }
    (d1, d2)
}

/// Spectral divergence `i k·û` of a vector field, per coefficient.
pub fn divergence(u1: &SpectralField, u2: &SpectralField) -> Result<SpectralField> {
    u1.grid.check_same(&u2.grid)?;
    let grid = &u1.grid;
    let mut out = SpectralField::zeros(grid);
    for idx in 0..grid.len() {
        let (ka, kb) = grid.wavenumber(idx);
        out.coeffs[idx] = Complex64::new(0.0, 1.0)
            * (u1.coeffs[idx] * ka as f64 + u2.coeffs[idx] * kb as f64);
    }
    Ok(out)
}

/// Spectral `∇^⊥·u = -∂₂u₁ + ∂₁u₂`.
pub fn curl(u1: &SpectralField, u2: &SpectralField) -> Result<SpectralField> {
    u1.grid.check_same(&u2.grid)?;
    let grid = &u1.grid;
    let mut out = SpectralField::zeros(grid);
    for idx in 0..grid.len() {
        let (ka, kb) = grid.wavenumber(idx);
        out.coeffs[idx] = Complex64::new(0.0, 1.0)
            * (-(u1.coeffs[idx] * kb as f64) + u2.coeffs[idx] * ka as f64);
    }
    Ok(out)
}

/// `‖Λ^s f‖_{L²}` by Parseval. The zero mode never contributes.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    sobolev_norm_sq(f, s).sqrt()
}

pub fn sobolev_norm_sq(f: &SpectralField, s: f64) -> f64 {
    let grid = &f.grid;
    let k2 = &grid.tables.k2;
    let terms = f.coeffs.iter().zip(k2.iter()).skip(1);
    let sum: f64 = if s == 0.0 {
        terms.map(|(c, _)| c.norm_sqr()).sum()
    } else if s == 1.0 {
        terms.map(|(c, &k)| k * c.norm_sqr()).sum()
    } else {
        terms
            .filter(|(c, _)| c.norm_sqr() > 0.0)
            .map(|(c, &k)| k.powf(s) * c.norm_sqr())
            .sum()
    };
    AREA * sum
}

/// `(∫ |f|^p dx)^{1/p}` by grid quadrature. Exact for band-limited
/// integrands when `p` is even and the grid resolves `p` times the band;
/// otherwise the aliasing error of `|f|^p` applies.
pub fn lp_norm(f: &SpectralField, p: f64) -> f64 {
    physical_lp_norm(&to_physical(f), p)
}

pub fn physical_lp_norm(g: &PhysicalField, p: f64) -> f64 {
    let s: f64 = if p == 2.0 {
        g.values.iter().map(|v| v * v).sum()
    } else if p == 4.0 {
        g.values.iter().map(|v| (v * v) * (v * v)).sum()
    } else {
        g.values.iter().map(|v| v.abs().powf(p)).sum()
    };
    (AREA * s / g.values.len() as f64).powf(1.0 / p)
}

/// Zeros every coefficient with `max(|k₁|, |k₂|)` above the cutoff.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

pub fn dealias_in_place(f: &mut SpectralField) {
    let grid = f.grid.clone();
    for (idx, c) in f.coeffs.iter_mut().enumerate() {
        if !grid.is_retained(idx) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Pseudo-spectral product `f·g`, dealiased.
pub fn dealiased_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let (pf, pg) = to_physical_pair(&dealias(f), &dealias(g))?;
    let prod = PhysicalField {
        grid: pf.grid.clone(),
        values: pf.values.iter().zip(&pg.values).map(|(a, b)| a * b).collect(),
    };
    let mut out = to_spectral(&prod);
    dealias_in_place(&mut out);
    Ok(out)
}
