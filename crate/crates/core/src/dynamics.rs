//! Time stepping for the forced equation and its companions: the linearized
//! equation, the low-mode damped control equation and the OU-shifted equation.
//!
//! All evolutions use the same first-order exponential integrator. With the
//! diagonal decay `E = exp(-Λ^γ dt)`,
//!
//! ```text
//! ω ← E (ω - dt B(ω, ω)) + Σ_k q_k η_k e_k
//! ```
//!
//! where `η_k` is the exact stochastic convolution of the step (see
//! [`ForcingBasis::ou_amplitudes`]). Because the OU process is advanced with
//! the same `η_k`, `ω̄ + Z` from [`Dynamics::step_shifted`] reproduces the main
//! trajectory up to rounding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FelabError, Result};
use crate::forcing::{ou_exact_step, sample_increments, ForcingBasis, ForcingConfig, NoiseRealization};
use crate::rng::StreamId;
use crate::spectral::{
    biot_savart, dealias_in_place, packed_velocity_gradient, sobolev_norm, spectral_from_real_buffer,
    to_physical_pair, Grid2D, MultiplierSymbol, SpectralField,
};

fn default_true() -> bool {
    true
}

fn default_blowup() -> f64 {
    1e6
}

/// Simulation parameters shared by every evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    /// Dissipation power in `(0, 2]`.
    pub gamma: f64,
    /// Phase-space Sobolev index; only used by observables.
    pub r: f64,
    /// Grid points per dimension.
    pub n: usize,
    pub dt: f64,
    /// Final time.
    pub t_final: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub dealias: bool,
    /// Turns `Λ^γ` off entirely (inviscid runs).
    #[serde(default = "default_true")]
    pub dissipation: bool,
    /// Turns the advection term off (linear runs).
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    #[serde(default = "default_blowup")]
    pub blowup_bound: f64,
}

impl SimParams {
    pub fn new(gamma: f64, n: usize, dt: f64, t_final: f64) -> Self {
        Self {
            gamma,
            r: 2.5,
            n,
            dt,
            t_final,
            seed: 0,
            dealias: true,
            dissipation: true,
            nonlinear: true,
            blowup_bound: default_blowup(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 2.0) {
            return Err(FelabError::param("gamma", format!("must lie in (0, 2], got {}", self.gamma)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(FelabError::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0) {
            return Err(FelabError::param("t_final", "must be nonnegative"));
        }
        if !(self.blowup_bound > 0.0) {
            return Err(FelabError::param("blowup_bound", "must be positive"));
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.t_final / self.dt).round() as u64
    }
}

/// Shell eigenvalue convention `λ_N = N²`, so `λ_N^{γ/2} = N^γ`.
pub fn lambda_n(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(FelabError::param("N", "must be >= 1"));
    }
    Ok(f64::from(n) * f64::from(n))
}

/// State of one trajectory of the forced equation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    pub step: u64,
    pub omega: SpectralField,
    pub stream: StreamId,
}

impl TrajectoryState {
    pub fn new(omega: SpectralField, stream: StreamId) -> Self {
        Self {
            t: 0.0,
            step: 0,
            omega,
            stream,
        }
    }
}

/// Physical-space velocity and vorticity gradient of a frozen field, reused
/// by every linear evolution driven by the same main-trajectory step.
#[derive(Debug, Clone)]
pub struct Advection {
    grid: Grid2D,
    /// `u₁ + i u₂`.
    vel: Vec<Complex64>,
    /// `∂₁ω + i ∂₂ω`.
    grad: Vec<Complex64>,
    dealias: bool,
}

/// `Re(a)Re(b) + Im(a)Im(b)`: the dot product of two packed vectors.
fn packed_dot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

impl Advection {
    pub fn of(omega: &SpectralField, dealias: bool) -> Result<Self> {
        let (vel, grad) = packed_velocity_gradient(omega, omega, dealias);
        Ok(Self {
            grid: omega.grid().clone(),
            vel,
            grad,
            dealias,
        })
    }

    /// `B(ω, ω)`.
    pub fn self_term(&self) -> SpectralField {
        let buf = self
            .vel
            .iter()
            .zip(&self.grad)
            .map(|(&u, &g)| Complex64::new(packed_dot(u, g), 0.0))
            .collect();
        finish(&self.grid, buf, self.dealias)
    }

    /// `B(ρ, ω) + B(ω, ρ)`.
    pub fn linearized_term(&self, rho: &SpectralField) -> Result<SpectralField> {
        self.grid.check_same(rho.grid())?;
        let (v, h) = packed_velocity_gradient(rho, rho, self.dealias);
        let buf = (0..v.len())
            .map(|i| Complex64::new(packed_dot(v[i], self.grad[i]) + packed_dot(self.vel[i], h[i]), 0.0))
            .collect();
        Ok(finish(&self.grid, buf, self.dealias))
    }
}

fn finish(grid: &Grid2D, buf: Vec<Complex64>, dealias: bool) -> SpectralField {
    let mut out = spectral_from_real_buffer(grid, buf);
    if dealias {
        dealias_in_place(&mut out);
    }
    out
}

/// `B(f, g) = (K * f)·∇g`, pseudo-spectral and dealiased.
pub fn bilinear_b(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.grid().check_same(g.grid())?;
    let (vel, grad) = packed_velocity_gradient(f, g, true);
    let buf = vel
        .iter()
        .zip(&grad)
        .map(|(&u, &d)| Complex64::new(packed_dot(u, d), 0.0))
        .collect();
    Ok(finish(f.grid(), buf, true))
}

/// Per-mode damping applied by the control equation on `0 < |k| <= N`.
#[derive(Debug, Clone)]
pub struct ControlDamping {
    n: u32,
    factors: Vec<f64>,
}

impl ControlDamping {
    pub fn cutoff(&self) -> u32 {
        self.n
    }
}

/// Integrator for one parameter set, grid and forcing.
#[derive(Debug, Clone)]
pub struct Dynamics {
    params: SimParams,
    grid: Grid2D,
    forcing: ForcingBasis,
    decay: Vec<f64>,
}

impl Dynamics {
    pub fn new(params: &SimParams, forcing: &ForcingConfig) -> Result<Self> {
        params.validate()?;
        let grid = Grid2D::new(params.n)?;
        Self::on_grid(params, forcing, &grid)
    }

    pub fn on_grid(params: &SimParams, forcing: &ForcingConfig, grid: &Grid2D) -> Result<Self> {
        params.validate()?;
        if grid.n() != params.n {
            return Err(FelabError::GridMismatch {
                left: grid.n(),
                right: params.n,
            });
        }
        let basis = ForcingBasis::new(forcing, grid, params.gamma, params.dissipation)?;
        let decay = (0..grid.len())
            .map(|idx| {
                if params.dissipation {
                    (-grid.k_norm(idx).powf(params.gamma) * params.dt).exp()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            params: params.clone(),
            grid: grid.clone(),
            forcing: basis,
            decay,
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn forcing(&self) -> &ForcingBasis {
        &self.forcing
    }

    /// Advective CFL number `dt·max|u|/dx` of a state; values above ~0.5
    /// deserve a warning.
    pub fn cfl(&self, omega: &SpectralField) -> Result<f64> {
        let (u1, u2) = biot_savart(omega);
        let (p1, p2) = to_physical_pair(&u1, &u2)?;
        let umax = p1
            .values
            .iter()
            .zip(&p2.values)
            .fold(0.0f64, |m, (a, b)| m.max((a * a + b * b).sqrt()));
        let dx = 2.0 * std::f64::consts::PI / self.grid.n() as f64;
        Ok(self.params.dt * umax / dx)
    }

    pub fn increments(&self, stream: StreamId, step: u64) -> Result<NoiseRealization> {
        sample_increments(stream, step, self.forcing.n_modes(), self.params.dt)
    }

    fn guard(&self, f: &SpectralField, step: u64) -> Result<()> {
        if !f.is_finite() {
            return Err(FelabError::BlowUp {
                step,
                time: step as f64 * self.params.dt,
                reason: "non-finite coefficient".into(),
            });
        }
        let norm = sobolev_norm(f, 0.0);
        if norm > self.params.blowup_bound {
            return Err(FelabError::BlowUp {
                step,
                time: step as f64 * self.params.dt,
                reason: format!("L2 norm {norm:e} exceeds bound {:e}", self.params.blowup_bound),
            });
        }
        Ok(())
    }

    /// `E (f - dt·rhs)`, with `rhs` optional.
    fn integrate(&self, f: &SpectralField, rhs: Option<&SpectralField>, extra: Option<&[f64]>) -> SpectralField {
        let mut out = f.clone();
        if let Some(r) = rhs {
            out.axpy(-self.params.dt, r).expect("same grid");
        }
        let decay = &self.decay;
        match extra {
            Some(x) => out.map_indexed(|i| decay[i] * x[i]),
            None => out.map_indexed(|i| decay[i]),
        }
        out
    }

    /// One step of the forced equation. Also returns the frozen advection
    /// data of the pre-step state when the nonlinearity is on, for companion
    /// linear evolutions.
    pub fn advance(&self, s: &TrajectoryState) -> Result<(TrajectoryState, Option<Advection>)> {
        let flow = if self.params.nonlinear {
            Some(Advection::of(&s.omega, self.params.dealias)?)
        } else {
            None
        };
        let rhs = flow.as_ref().map(Advection::self_term);
        let mut omega = self.integrate(&s.omega, rhs.as_ref(), None);
        if self.forcing.n_modes() > 0 {
            let inc = self.increments(s.stream, s.step)?;
            let amps = self.forcing.ou_amplitudes(&inc);
            self.forcing.add_weighted(&mut omega, &amps);
        }
        let step = s.step + 1;
        self.guard(&omega, step)?;
        Ok((
            TrajectoryState {
                t: step as f64 * self.params.dt,
                step,
                omega,
                stream: s.stream,
            },
            flow,
        ))
    }

    pub fn step_main(&self, s: &TrajectoryState) -> Result<TrajectoryState> {
        self.advance(s).map(|(next, _)| next)
    }

    /// Linearized step `∂ρ + Λ^γρ + B(ρ,ω) + B(ω,ρ) = 0` with `ω` frozen.
    pub fn step_linearized(&self, rho: &SpectralField, omega: &SpectralField) -> Result<SpectralField> {
        let flow = Advection::of(omega, self.params.dealias)?;
        self.step_linearized_with(rho, &flow)
    }

    pub fn step_linearized_with(&self, rho: &SpectralField, flow: &Advection) -> Result<SpectralField> {
        let rhs = flow.linearized_term(rho)?;
        let out = self.integrate(rho, Some(&rhs), None);
        self.guard(&out, 0)?;
        Ok(out)
    }

    /// Damping table for the control equation with cutoff `N`; `N = 0`
    /// disables the damping.
    pub fn control_damping(&self, n: u32) -> Result<ControlDamping> {
        if n as usize > self.grid.dealias_cutoff() {
            return Err(FelabError::param(
                "N",
                format!(
                    "damping cutoff {n} exceeds the grid's retained band {}",
                    self.grid.dealias_cutoff()
                ),
            ));
        }
        let rate = if n == 0 {
            0.0
        } else {
            lambda_n(n)?.powf(self.params.gamma / 2.0)
        };
        let low = MultiplierSymbol::low_pass(f64::from(n));
        let factors = (0..self.grid.len())
            .map(|idx| {
                let k = self.grid.k_norm(idx);
                if n > 0 && k > 0.0 && low.eval(k) > 0.0 {
                    (-rate * self.params.dt).exp()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(ControlDamping { n, factors })
    }

    /// Control step `∂ρ + Λ^γρ + ∇B(ω)ρ = -λ_N^{γ/2} P_N ρ` with `ω` frozen.
    pub fn step_control(&self, rho: &SpectralField, omega: &SpectralField, n: u32) -> Result<SpectralField> {
        let damping = self.control_damping(n)?;
        let flow = Advection::of(omega, self.params.dealias)?;
        self.step_control_with(rho, &flow, &damping)
    }

    pub fn step_control_with(
        &self,
        rho: &SpectralField,
        flow: &Advection,
        damping: &ControlDamping,
    ) -> Result<SpectralField> {
        let rhs = flow.linearized_term(rho)?;
        let out = if damping.n == 0 {
            self.integrate(rho, Some(&rhs), None)
        } else {
            self.integrate(rho, Some(&rhs), Some(&damping.factors))
        };
        self.guard(&out, 0)?;
        Ok(out)
    }

    /// Shifted step `∂ω̄ + Λ^γω̄ + B(ω̄+Z, ω̄) + B(ω̄+Z, Z) = 0` given the OU
    /// state `Z` at the start of the step.
    pub fn step_shifted(&self, wbar: &SpectralField, z: &SpectralField) -> Result<SpectralField> {
        let rhs = if self.params.nonlinear {
            let total = wbar.add(z)?;
            Some(Advection::of(&total, self.params.dealias)?.self_term())
        } else {
            None
        };
        let out = self.integrate(wbar, rhs.as_ref(), None);
        self.guard(&out, 0)?;
        Ok(out)
    }

    /// Advances the OU process with the increments of `(stream, step)`.
    pub fn step_ou(&self, z: &SpectralField, stream: StreamId, step: u64) -> Result<SpectralField> {
        if self.forcing.n_modes() == 0 {
            return Ok(self.integrate(z, None, None));
        }
        let inc = self.increments(stream, step)?;
        if self.params.dissipation {
            ou_exact_step(z, &inc, self.params.gamma, &self.forcing)
        } else {
            let mut out = z.clone();
            self.forcing.add_weighted(&mut out, &self.forcing.ou_amplitudes(&inc));
            Ok(out)
        }
    }
}
