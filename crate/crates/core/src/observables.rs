//! Norm recording, moment estimators, smoothing schedules, decay fits and
//! time-average diagnostics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::debug;
use serde::Serialize;

use crate::error::{FelabError, Result};
use crate::forcing::{sigma_lp_norm, ForcingConfig};
use crate::inequalities::poincare_constant;
use crate::spectral::{sobolev_norm, sobolev_norm_sq, SpectralField};
use crate::stats::{self, Interval};

/// Linear ramp `α(t) = m·t/T_m`, capped at `m` for `t ≥ T_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingSchedule {
    pub m: f64,
    pub t_m: f64,
}

impl SmoothingSchedule {
    pub fn new(m: f64, t_m: f64) -> Result<Self> {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(FelabError::param("m", format!("must be >= 0, got {m}")));
        }
        if !(t_m > 0.0 && t_m.is_finite()) {
            return Err(FelabError::param("t_m", format!("must be > 0, got {t_m}")));
        }
        Ok(Self { m, t_m })
    }

    pub fn alpha_at(&self, t: f64) -> f64 {
        if t >= self.t_m {
            self.m
        } else {
            self.m * t.max(0.0) / self.t_m
        }
    }

    pub fn lipschitz(&self) -> f64 {
        self.m / self.t_m
    }
}

/// Sobolev index used by the control bootstrap: `s(t) = min(r - 1 + γt, r)`,
/// reaching `r` at `T_γ = 1/γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlSchedule {
    pub r: f64,
    pub gamma: f64,
}

impl ControlSchedule {
    pub fn s_at(&self, t: f64) -> f64 {
        (self.r - 1.0 + t.max(0.0) * self.gamma).min(self.r)
    }

    pub fn t_gamma(&self) -> f64 {
        1.0 / self.gamma
    }
}

/// One scalar observable sampled on a common time grid for an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub trajectory_ids: Vec<u64>,
    /// `values[j][i]` is trajectory `trajectory_ids[j]` at `times[i]`.
    pub values: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub name: String,
    pub trajectories: usize,
    pub samples: usize,
    pub final_mean: f64,
    pub final_stderr: f64,
    pub metadata: BTreeMap<String, String>,
}

impl MomentSeries {
    pub fn new(name: impl Into<String>, times: Vec<f64>) -> Result<Self> {
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FelabError::param("times", "must be strictly increasing"));
        }
        Ok(Self {
            name: name.into(),
            times,
            trajectory_ids: Vec::new(),
            values: Vec::new(),
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// Inserts a trajectory keeping the ids sorted, so the order of insertion
    /// never changes the stored series.
    pub fn push(&mut self, id: u64, values: Vec<f64>) -> Result<()> {
        if values.len() != self.times.len() {
            return Err(FelabError::param(
                "values",
                format!("expected {} samples, got {}", self.times.len(), values.len()),
            ));
        }
        match self.trajectory_ids.binary_search(&id) {
            Ok(_) => Err(FelabError::param("id", format!("duplicate trajectory id {id}"))),
            Err(pos) => {
                self.trajectory_ids.insert(pos, id);
                self.values.insert(pos, values);
                Ok(())
            }
        }
    }

    /// Merges another ensemble sampled on the same times.
    pub fn merge(&mut self, other: MomentSeries) -> Result<()> {
        if other.times != self.times {
            return Err(FelabError::param("times", "cannot merge series with different sample times"));
        }
        for (id, v) in other.trajectory_ids.into_iter().zip(other.values) {
            self.push(id, v)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[i]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.len()).map(|i| stats::mean(&self.column(i))).collect()
    }

    pub fn variance(&self) -> Vec<f64> {
        (0..self.len()).map(|i| stats::variance(&self.column(i))).collect()
    }

    pub fn stderr(&self) -> Vec<f64> {
        (0..self.len()).map(|i| stats::std_error(&self.column(i))).collect()
    }

    /// CSV with columns `t,trajectory_id,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,trajectory_id,value\n");
        for (id, vals) in self.trajectory_ids.iter().zip(&self.values) {
            for (t, v) in self.times.iter().zip(vals) {
                let _ = writeln!(out, "{t:.12e},{id},{v:.17e}");
            }
        }
        out
    }

    pub fn summary(&self) -> SeriesSummary {
        let last = self.len().saturating_sub(1);
        let col = if self.is_empty() { Vec::new() } else { self.column(last) };
        SeriesSummary {
            name: self.name.clone(),
            trajectories: self.values.len(),
            samples: self.len(),
            final_mean: stats::mean(&col),
            final_stderr: stats::std_error(&col),
            metadata: self.metadata.clone(),
        }
    }
}

/// Running quantities of one trajectory for the smoothing moment bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingTrace {
    pub times: Vec<f64>,
    /// `sup_{s ≤ t} ‖Λ^{r+α(s)}ω(s)‖^q`, over the recorded samples.
    pub running_sup: Vec<f64>,
    /// `∫₀ᵗ ‖Λ^{r+γ/2+α}ω‖² ‖Λ^{r+α}ω‖^{q-2} ds` by the trapezoid rule.
    pub dissipation: Vec<f64>,
    /// `‖Λ^{r+α(t)}ω(t)‖` at each sample.
    pub norm: Vec<f64>,
    pub unresolved_samples: usize,
}

/// Streaming recorder for [`SmoothingTrace`].
#[derive(Debug, Clone)]
pub struct SmoothingRecorder {
    sched: SmoothingSchedule,
    r: f64,
    q: f64,
    gamma: f64,
    trace: SmoothingTrace,
    last: Option<(f64, f64)>,
}

impl SmoothingRecorder {
    pub fn new(sched: SmoothingSchedule, r: f64, q: f64, gamma: f64) -> Self {
        Self {
            sched,
            r,
            q,
            gamma,
            trace: SmoothingTrace {
                times: Vec::new(),
                running_sup: Vec::new(),
                dissipation: Vec::new(),
                norm: Vec::new(),
                unresolved_samples: 0,
            },
            last: None,
        }
    }

    pub fn observe(&mut self, t: f64, omega: &SpectralField) {
        let a = self.sched.alpha_at(t);
        let s = self.r + a;
        let norm = sobolev_norm(omega, s);
        let diss = sobolev_norm_sq(omega, s + self.gamma / 2.0) * norm.powf(self.q - 2.0);
        let band = omega.grid().dealias_cutoff() as f64;
        if omega.tail_fraction(0.9 * band) > 1e-8 {
            self.trace.unresolved_samples += 1;
        }
        let value = norm.powf(self.q);
        let tr = &mut self.trace;
        let sup = tr.running_sup.last().map_or(value, |&m: &f64| m.max(value));
        let integral = match (self.last, tr.dissipation.last()) {
            (Some((t0, d0)), Some(&acc)) => acc + 0.5 * (t - t0) * (d0 + diss),
            _ => 0.0,
        };
        tr.times.push(t);
        tr.running_sup.push(sup);
        tr.dissipation.push(integral);
        tr.norm.push(norm);
        self.last = Some((t, diss));
    }

    pub fn finish(self) -> SmoothingTrace {
        if self.trace.unresolved_samples > 0 {
            debug!(
                "smoothing moments: {} samples have spectral tail above 1e-8",
                self.trace.unresolved_samples
            );
        }
        self.trace
    }
}

/// Records the smoothing moments along one trajectory given as `(t, ω(t))`
/// samples.
pub fn record_smoothing_moments<'a>(
    samples: impl IntoIterator<Item = (f64, &'a SpectralField)>,
    sched: SmoothingSchedule,
    r: f64,
    q: f64,
    gamma: f64,
) -> SmoothingTrace {
    let mut rec = SmoothingRecorder::new(sched, r, q, gamma);
    for (t, w) in samples {
        rec.observe(t, w);
    }
    rec.finish()
}

/// Assembles the running-sup ensemble from per-trajectory traces sharing the
/// same sample times.
pub fn smoothing_series(traces: &[(u64, SmoothingTrace)], name: &str) -> Result<(MomentSeries, MomentSeries)> {
    let times = traces
        .first()
        .map(|(_, t)| t.times.clone())
        .ok_or_else(|| FelabError::param("traces", "empty ensemble"))?;
    let mut sup = MomentSeries::new(format!("{name}_sup"), times.clone())?;
    let mut diss = MomentSeries::new(format!("{name}_dissipation"), times)?;
    for (id, tr) in traces {
        sup.push(*id, tr.running_sup.clone())?;
        diss.push(*id, tr.dissipation.clone())?;
    }
    Ok((sup, diss))
}

/// Smallness condition `κ(1 + C_γ‖σ‖²_{𝕃^p}) ≤ 1/2` for exponential moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaBudget {
    pub p: f64,
    pub kappa: f64,
    pub c_gamma: f64,
    pub sigma_lp: f64,
}

impl KappaBudget {
    /// The largest admissible `κ` for given `C_γ` and `‖σ‖²_{𝕃^p}`.
    pub fn max_kappa(c_gamma: f64, sigma_lp_sq: f64) -> f64 {
        1.0 / (2.0 * (1.0 + c_gamma * sigma_lp_sq))
    }

    pub fn kappa_zero(&self) -> f64 {
        Self::max_kappa(self.c_gamma, self.sigma_lp * self.sigma_lp)
    }

    pub fn factor(&self) -> f64 {
        1.0 + self.c_gamma * self.sigma_lp * self.sigma_lp
    }

    /// Returns `Ok` iff `κ` satisfies the budget (with a relative slack of
    /// 1e-12 for rounding).
    pub fn admit(&self, kappa: f64) -> Result<f64> {
        if !(kappa >= 0.0) {
            return Err(FelabError::param("kappa", "must be >= 0"));
        }
        let max = self.kappa_zero();
        if kappa * self.factor() > 0.5 * (1.0 + 1e-12) {
            return Err(FelabError::KappaBudget { kappa, max });
        }
        Ok(kappa)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        self.admit(kappa)?;
        Ok(Self { kappa, ..*self })
    }
}

/// `κ₀` for the forcing `cfg`, using `C_γ = poincare_constant(2, γ, p)`.
pub fn kappa_zero(p: f64, cfg: &ForcingConfig, gamma: f64) -> Result<KappaBudget> {
    if !(p >= 2.0 && p.fract() == 0.0 && (p as i64) % 2 == 0) {
        return Err(FelabError::param("p", format!("must be even >= 2, got {p}")));
    }
    let c_gamma = poincare_constant(2, gamma, if p >= 4.0 { Some(p) } else { None })?.value;
    let sigma_lp = sigma_lp_norm(cfg, p)?;
    let kappa = KappaBudget::max_kappa(c_gamma, sigma_lp * sigma_lp);
    Ok(KappaBudget {
        p,
        kappa,
        c_gamma,
        sigma_lp,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpMomentEstimate {
    pub kappa: f64,
    pub mean: f64,
    pub stderr: f64,
    pub ci: Interval,
    /// CI wider than the mean itself.
    pub heavy_tail: bool,
    pub samples: usize,
}

const BOOTSTRAP_RESAMPLES: usize = 2000;

fn exp_estimate(exponents: &[f64], kappa: f64, seed: u64) -> ExpMomentEstimate {
    let vals: Vec<f64> = exponents.iter().map(|x| (kappa * x).exp()).collect();
    let mean = stats::mean(&vals);
    let ci = bootstrap_or_point(&vals, seed);
    ExpMomentEstimate {
        kappa,
        mean,
        stderr: stats::std_error(&vals),
        heavy_tail: !(ci.width() <= mean.abs()),
        ci,
        samples: vals.len(),
    }
}

fn bootstrap_or_point(vals: &[f64], seed: u64) -> Interval {
    if vals.iter().all(|v| *v == vals[0]) {
        Interval {
            lo: vals[0],
            hi: vals[0],
        }
    } else {
        stats::bootstrap_mean_ci(vals, BOOTSTRAP_RESAMPLES, 0.95, seed)
    }
}

/// Monte Carlo estimate of `𝔼 exp(κ‖ω(T)‖²_{L^p})` from per-path values of
/// `‖ω(T)‖_{L^p}`.
pub fn exp_moment_estimator(lp_norms: &[f64], kappa: f64, budget: &KappaBudget) -> Result<ExpMomentEstimate> {
    budget.admit(kappa)?;
    if lp_norms.is_empty() {
        return Err(FelabError::param("ensemble", "empty"));
    }
    let sq: Vec<f64> = lp_norms.iter().map(|v| v * v).collect();
    Ok(exp_estimate(&sq, kappa, 0x5eed_0001))
}

/// Monte Carlo estimate of `𝔼 exp(κ∫₀ᵀ‖ω‖²_{L^p} ds)` from per-path values
/// of the time integral.
pub fn exp_time_integral_estimator(
    integrals: &[f64],
    kappa: f64,
    budget: &KappaBudget,
) -> Result<ExpMomentEstimate> {
    budget.admit(kappa)?;
    if integrals.is_empty() {
        return Err(FelabError::param("ensemble", "empty"));
    }
    Ok(exp_estimate(integrals, kappa, 0x5eed_0002))
}

/// Trapezoid accumulator for `∫ f(t) dt` over irregular samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TimeIntegral {
    last: Option<(f64, f64)>,
    pub value: f64,
}

impl TimeIntegral {
    pub fn push(&mut self, t: f64, f: f64) {
        if let Some((t0, f0)) = self.last {
            self.value += 0.5 * (t - t0) * (f0 + f);
        }
        self.last = Some((t, f));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub samples: usize,
}

/// Least squares of `log(value)` against `t` over `window = [t0, t1]`, applied
/// to the ensemble mean.
pub fn fit_decay_rate(series: &MomentSeries, window: (f64, f64)) -> Result<DecayFit> {
    let mean = series.mean();
    fit_log_slope(&series.times, &mean, window)
}

pub fn fit_log_slope(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(FelabError::NonPositive { index: i, value: v });
        }
        x.push(t);
        y.push(v.ln());
    }
    if x.len() < 2 {
        return Err(FelabError::param("window", "fewer than two samples in fit window"));
    }
    let f = stats::linear_fit(&x, &y);
    Ok(DecayFit {
        slope: f.slope,
        intercept: f.intercept,
        r2: f.r2,
        samples: x.len(),
    })
}

/// Bounded functionals of the state used to compare time averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Functional {
    Constant,
    /// `tanh(‖ω‖²_{L²} / scale)`.
    TanhEnergy { scale: f64 },
    /// `tanh(‖ω‖²_{H¹} / scale)`.
    TanhEnstrophy { scale: f64 },
    /// `tanh(Re c_k / scale)` for a single low mode.
    LowMode { k: (i64, i64), scale: f64 },
    /// `tanh(Σ_{lo < |k| ≤ hi} |ĉ_k|² (2π)² / scale)`.
    SpectrumBand { lo: f64, hi: f64, scale: f64 },
}

impl Functional {
    pub fn eval(&self, omega: &SpectralField) -> f64 {
        match *self {
            Functional::Constant => 1.0,
            Functional::TanhEnergy { scale } => (sobolev_norm_sq(omega, 0.0) / scale).tanh(),
            Functional::TanhEnstrophy { scale } => (sobolev_norm_sq(omega, 1.0) / scale).tanh(),
            Functional::LowMode { k, scale } => (omega.coeff(k).map_or(0.0, |c| c.re) / scale).tanh(),
            Functional::SpectrumBand { lo, hi, scale } => {
                let grid = omega.grid();
                let e: f64 = omega
                    .coeffs()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| {
                        let k = grid.k_norm(*i);
                        k > lo && k <= hi
                    })
                    .map(|(_, c)| c.norm_sqr())
                    .sum();
                (e * (2.0 * std::f64::consts::PI).powi(2) / scale).tanh()
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Functional::Constant => "one".into(),
            Functional::TanhEnergy { .. } => "tanh_energy".into(),
            Functional::TanhEnstrophy { .. } => "tanh_enstrophy".into(),
            Functional::LowMode { k, .. } => format!("tanh_mode_{}_{}", k.0, k.1),
            Functional::SpectrumBand { lo, hi, .. } => format!("tanh_band_{lo}_{hi}"),
        }
    }
}

/// Running time averages `(1/t)∫₀ᵗ F(ω(s)) ds` for a set of functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAverager {
    functionals: Vec<Functional>,
    integrals: Vec<TimeIntegral>,
    /// Integral value at the half-window checkpoint, once passed.
    half: Vec<Option<(f64, f64)>>,
    t0: Option<f64>,
    t: f64,
    t_final: f64,
}

impl TimeAverager {
    pub fn new(functionals: Vec<Functional>, t_final: f64) -> Self {
        let n = functionals.len();
        Self {
            functionals,
            integrals: vec![TimeIntegral::default(); n],
            half: vec![None; n],
            t0: None,
            t: 0.0,
            t_final,
        }
    }

    pub fn observe(&mut self, t: f64, omega: &SpectralField) {
        self.t0.get_or_insert(t);
        for (i, f) in self.functionals.iter().enumerate() {
            self.integrals[i].push(t, f.eval(omega));
            if self.half[i].is_none() && t >= 0.5 * self.t_final {
                self.half[i] = Some((t, self.integrals[i].value));
            }
        }
        self.t = t;
    }

    /// Per functional: `(average over [0, T/2], average over [T/2, T], average over [0, T])`.
    pub fn window_averages(&self) -> Vec<(f64, f64, f64)> {
        let t0 = self.t0.unwrap_or(0.0);
        self.integrals
            .iter()
            .zip(&self.half)
            .map(|(acc, half)| {
                let total = acc.value / (self.t - t0);
                match half {
                    Some((th, ih)) if *th > t0 && self.t > *th => {
                        (ih / (th - t0), (acc.value - ih) / (self.t - th), total)
                    }
                    _ => (total, total, total),
                }
            })
            .collect()
    }

    pub fn functionals(&self) -> &[Functional] {
        &self.functionals
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalAgreement {
    pub functional: String,
    pub avg: [f64; 2],
    pub half_avg: [f64; 2],
    /// `|avg₁ − avg₂|` over `[0, T]`.
    pub difference: f64,
    /// `|avg₁ − avg₂|` over `[0, T/2]`.
    pub difference_half: f64,
    /// Per stream, `|avg over [0,T/2] − avg over [T/2,T]|`.
    pub fluctuation: [f64; 2],
    /// `difference ≤ 2·max(fluctuation)`.
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeAverageReport {
    pub t_final: f64,
    pub functionals: Vec<FunctionalAgreement>,
    pub sup_difference: f64,
    pub sup_difference_half: f64,
    pub all_agree: bool,
}

/// Compares two independent streams' time averages. Agreement for a functional
/// means `|avg₁ − avg₂|` is within twice the larger of the two streams'
/// half-window fluctuations.
pub fn time_average_diagnostic(a: &TimeAverager, b: &TimeAverager) -> Result<TimeAverageReport> {
    if a.functionals != b.functionals {
        return Err(FelabError::param("functionals", "streams track different functionals"));
    }
    let wa = a.window_averages();
    let wb = b.window_averages();
    let mut rows = Vec::new();
    for ((f, x), y) in a.functionals.iter().zip(&wa).zip(&wb) {
        let difference = (x.2 - y.2).abs();
        let fluctuation = [(x.0 - x.1).abs(), (y.0 - y.1).abs()];
        rows.push(FunctionalAgreement {
            functional: f.label(),
            avg: [x.2, y.2],
            half_avg: [x.0, y.0],
            difference,
            difference_half: (x.0 - y.0).abs(),
            fluctuation,
            agree: difference <= 2.0 * fluctuation[0].max(fluctuation[1]),
        });
    }
    Ok(TimeAverageReport {
        t_final: a.t,
        sup_difference: rows.iter().map(|r| r.difference).fold(0.0, f64::max),
        sup_difference_half: rows.iter().map(|r| r.difference_half).fold(0.0, f64::max),
        all_agree: rows.iter().all(|r| r.agree),
        functionals: rows,
    })
}
