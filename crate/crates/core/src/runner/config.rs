//! Experiment configuration: TOML document, profile defaults and CLI
//! overrides, resolved into a fully explicit [`ExperimentConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::SimParams;
use crate::error::{FelabError, Result};
use crate::forcing::{ForcingConfig, ForcingSpec};
use crate::rng::StreamId;
use crate::spectral::{sobolev_norm, Grid2D, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MomentGrowth,
    ExpMoment,
    Smoothing,
    ContDependence,
    ControlDecay,
    Irreducibility,
    Inequalities,
    TimeAverage,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::MomentGrowth,
        ExperimentKind::ExpMoment,
        ExperimentKind::Smoothing,
        ExperimentKind::ContDependence,
        ExperimentKind::ControlDecay,
        ExperimentKind::Irreducibility,
        ExperimentKind::Inequalities,
        ExperimentKind::TimeAverage,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::MomentGrowth => "moment-growth",
            ExperimentKind::ExpMoment => "exp-moment",
            ExperimentKind::Smoothing => "smoothing",
            ExperimentKind::ContDependence => "cont-dependence",
            ExperimentKind::ControlDecay => "control-decay",
            ExperimentKind::Irreducibility => "irreducibility",
            ExperimentKind::Inequalities => "inequalities",
            ExperimentKind::TimeAverage => "time-average",
        }
    }

    fn default_t_final(&self) -> f64 {
        match self {
            ExperimentKind::MomentGrowth => 50.0,
            ExperimentKind::ExpMoment => 20.0,
            ExperimentKind::Smoothing => 1.0,
            ExperimentKind::ContDependence => 2.0,
            ExperimentKind::ControlDecay => 20.0,
            ExperimentKind::Irreducibility => 40.0,
            ExperimentKind::Inequalities => 0.0,
            ExperimentKind::TimeAverage => 200.0,
        }
    }

    fn default_initial(&self) -> InitialCondition {
        match self {
            ExperimentKind::MomentGrowth | ExperimentKind::Smoothing => InitialCondition::Rough { hr_norm: 1.0 },
            ExperimentKind::Irreducibility => InitialCondition::Random {
                band: 4.0,
                slope: 0.0,
                hr_norm: 5.0,
            },
            ExperimentKind::ContDependence => InitialCondition::Random {
                band: 6.0,
                slope: 1.0,
                hr_norm: 1.0,
            },
            _ => InitialCondition::Zero,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = FelabError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FelabError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    #[default]
    Desk,
    Large,
}

impl Profile {
    pub fn n(&self) -> usize {
        match self {
            Profile::Desk => 128,
            Profile::Large => 256,
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            Profile::Desk => 1e-3,
            Profile::Large => 5e-4,
        }
    }

    pub fn paths(&self) -> usize {
        match self {
            Profile::Desk => 32,
            Profile::Large => 128,
        }
    }
}

impl FromStr for Profile {
    type Err = FelabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "large" => Ok(Profile::Large),
            _ => Err(FelabError::Config(format!("unknown profile `{s}` (desk|large)"))),
        }
    }
}

/// Initial vorticity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    SingleMode {
        k: (i64, i64),
        amplitude: f64,
        #[serde(default)]
        cosine: bool,
    },
    /// Gaussian coefficients on `0 < |k| ≤ band` with envelope `|k|^{-slope}`,
    /// rescaled to `‖ω₀‖_{H^r} = hr_norm`.
    Random {
        band: f64,
        #[serde(default)]
        slope: f64,
        hr_norm: f64,
    },
    /// `|ĉ_k| = |k|^{-(r+1)}` with uniform random phases on every retained
    /// mode, rescaled to `‖ω₀‖_{H^r} = hr_norm`: in `H^r` but in no `H^{r+ε}`
    /// uniformly in the resolution.
    Rough { hr_norm: f64 },
}

impl InitialCondition {
    pub fn sample(&self, grid: &Grid2D, r: f64, stream: StreamId) -> Result<SpectralField> {
        let mut rng = stream.auxiliary(1);
        let field = match *self {
            InitialCondition::Zero => return Ok(SpectralField::zeros(grid)),
            InitialCondition::SingleMode { k, amplitude, cosine } => {
                return SpectralField::single_mode(grid, k, amplitude, cosine)
            }
            InitialCondition::Random { band, slope, .. } => {
                SpectralField::random(grid, &mut rng, band, |k| k.powf(-slope))
            }
            InitialCondition::Rough { .. } => {
                let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
                for i in 0..grid.len() {
                    let j = grid.conjugate_index(i);
                    if j <= i || !grid.is_retained(i) || grid.k_squared(i) == 0.0 {
                        continue;
                    }
                    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    let c = Complex64::from_polar(grid.k_norm(i).powf(-(r + 1.0)), phase);
                    coeffs[i] = c;
                    coeffs[j] = c.conj();
                }
                SpectralField::from_coeffs(grid, coeffs)?
            }
        };
        let target = match *self {
            InitialCondition::Random { hr_norm, .. } | InitialCondition::Rough { hr_norm } => hr_norm,
            _ => unreachable!(),
        };
        let norm = sobolev_norm(&field, r);
        if !(norm > 0.0) {
            return Err(FelabError::Config("initial condition has no retained modes".into()));
        }
        Ok(field.scaled(target / norm))
    }
}

/// Optional simulation parameters; missing values come from the profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub gamma: Option<f64>,
    pub r: Option<f64>,
    pub n: Option<usize>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub dealias: Option<bool>,
    pub dissipation: Option<bool>,
    pub nonlinear: Option<bool>,
    pub blowup_bound: Option<f64>,
}

/// Experiment-specific schedule parameters. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Schedule {
    /// Smoothing gain `m` and ramp time `T_m`.
    pub m: f64,
    pub t_m: f64,
    /// Moment exponent `q`.
    pub q: f64,
    /// Spacing of recorded samples, in time units.
    pub sample_interval: f64,
    /// Number of horizons `T_j = jT/growth_points` in growth fits.
    pub growth_points: usize,
    /// Control cutoffs `N` swept by control-decay.
    pub n_control: Vec<u32>,
    /// Random directions `ξ` per path.
    pub directions: usize,
    /// Spin-up time of the base flow before control/perturbation starts.
    pub spinup: f64,
    /// Lebesgue exponent for exponential moments.
    pub p: f64,
    pub kappa_multipliers: Vec<f64>,
    pub kappa_times: Vec<f64>,
    /// Second noise amplitude factor for the rate-independence check.
    pub sigma_factor: f64,
    /// Perturbation sizes for continuous dependence.
    pub h: Vec<f64>,
    /// Noise amplitudes swept by irreducibility.
    pub eps_noise: Vec<f64>,
    /// Target ball: hitting radius is `hit_fraction · radius`, where `radius`
    /// is the `H^r` norm of the initial data.
    pub radius: f64,
    pub hit_fraction: f64,
    pub hit_probability: f64,
    pub poincare_cases: usize,
    pub fp_points: usize,
    pub fp_limit: f64,
    pub commutator_fields: usize,
    pub commutator_n: usize,
    pub commutator_s: f64,
    pub commutator_eps: f64,
    /// Write a checkpoint of every trajectory every this many steps.
    pub checkpoint_every: Option<u64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            m: 1.0,
            t_m: 0.5,
            q: 2.0,
            sample_interval: 0.1,
            growth_points: 10,
            n_control: vec![2, 4, 8],
            directions: 8,
            spinup: 5.0,
            p: 4.0,
            kappa_multipliers: vec![0.25, 0.5, 1.0],
            kappa_times: vec![5.0, 10.0, 20.0],
            sigma_factor: 2.0,
            h: vec![1e-2, 1e-3, 1e-4],
            eps_noise: vec![1.0, 0.25, 0.0625],
            radius: 5.0,
            hit_fraction: 0.1,
            hit_probability: 0.9,
            poincare_cases: 200,
            fp_points: 201,
            fp_limit: 5.0,
            commutator_fields: 100,
            commutator_n: 64,
            commutator_s: 2.5,
            commutator_eps: 0.25,
            checkpoint_every: None,
        }
    }
}

/// Config document as written by the user.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<ExperimentKind>,
    pub profile: Option<Profile>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub sim: SimSection,
    pub forcing: Option<ForcingSpec>,
    pub initial: Option<InitialCondition>,
    #[serde(default)]
    pub schedule: Schedule,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FelabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FelabError::io(path, e))?;
        Self::parse(&text)
    }
}

/// Command-line overrides; each takes precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out: Option<PathBuf>,
    pub profile: Option<Profile>,
}

/// Fully resolved configuration; echoed verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub profile: Profile,
    pub seed: u64,
    pub paths: usize,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    pub out: PathBuf,
    pub sim: SimParams,
    pub forcing: ForcingSpec,
    pub initial: InitialCondition,
    pub schedule: Schedule,
}

fn default_forcing() -> ForcingSpec {
    ForcingSpec::Ball {
        n_force: 4.0,
        exponent: 1.0,
        amplitude: 0.5,
    }
}

impl ExperimentConfig {
    pub fn resolve(kind: ExperimentKind, file: ConfigFile, ov: Overrides) -> Result<Self> {
        if let Some(k) = file.experiment {
            if k != kind {
                return Err(FelabError::Config(format!(
                    "config is for `{k}` but `{kind}` was requested"
                )));
            }
        }
        let profile = ov.profile.or(file.profile).unwrap_or_default();
        let seed = ov.seed.or(file.seed).unwrap_or(0);
        let s = &file.sim;
        let mut sim = SimParams::new(
            s.gamma.unwrap_or(1.0),
            s.n.unwrap_or(profile.n()),
            s.dt.unwrap_or(profile.dt()),
            s.t_final.unwrap_or(kind.default_t_final()),
        );
        sim.seed = seed;
        if let Some(r) = s.r {
            sim.r = r;
        }
        if let Some(v) = s.dealias {
            sim.dealias = v;
        }
        if let Some(v) = s.dissipation {
            sim.dissipation = v;
        }
        if let Some(v) = s.nonlinear {
            sim.nonlinear = v;
        }
        if let Some(v) = s.blowup_bound {
            sim.blowup_bound = v;
        }
        let cfg = Self {
            experiment: kind,
            profile,
            seed,
            paths: ov.paths.or(file.paths).unwrap_or(profile.paths()),
            threads: file.threads.unwrap_or(0),
            out: ov
                .out
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(format!("out/{kind}"))),
            sim,
            forcing: file.forcing.unwrap_or_else(default_forcing),
            initial: file.initial.unwrap_or_else(|| kind.default_initial()),
            schedule: file.schedule,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults only, as if given an empty config file.
    pub fn defaults(kind: ExperimentKind) -> Result<Self> {
        Self::resolve(kind, ConfigFile::default(), Overrides::default())
    }

    pub fn forcing_config(&self) -> Result<ForcingConfig> {
        self.forcing.build()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FelabError::Config(msg));
        if self.paths == 0 {
            return bad("ensemble size must be at least 1".into());
        }
        if self.experiment != ExperimentKind::Inequalities {
            self.sim.validate()?;
        }
        let grid = Grid2D::new(self.sim.n)?;
        let cutoff = grid.dealias_cutoff() as i64;
        let forcing = self.forcing_config()?;
        if forcing.max_component() > cutoff {
            return bad(format!(
                "forced mode component {} exceeds grid cutoff {cutoff}",
                forcing.max_component()
            ));
        }
        let sc = &self.schedule;
        if !(sc.sample_interval > 0.0) {
            return bad("schedule.sample_interval must be positive".into());
        }
        if !(sc.q >= 2.0) {
            return bad("schedule.q must be at least 2".into());
        }
        match self.experiment {
            ExperimentKind::ControlDecay => {
                if sc.n_control.is_empty() || sc.directions == 0 {
                    return bad("control-decay needs schedule.n_control and schedule.directions".into());
                }
                for &n in &sc.n_control {
                    if n == 0 || i64::from(n) > cutoff {
                        return bad(format!("control cutoff N={n} outside grid cutoff {cutoff}"));
                    }
                }
            }
            ExperimentKind::ContDependence => {
                if sc.h.is_empty() || sc.h.iter().any(|h| !(*h > 0.0)) {
                    return bad("cont-dependence needs positive schedule.h values".into());
                }
            }
            ExperimentKind::Irreducibility => {
                if sc.eps_noise.is_empty() || sc.eps_noise.iter().any(|e| !(*e >= 0.0)) {
                    return bad("irreducibility needs nonnegative schedule.eps_noise values".into());
                }
            }
            ExperimentKind::ExpMoment => {
                if sc.kappa_times.iter().any(|t| *t > self.sim.t_final) {
                    return bad("schedule.kappa_times must not exceed t_final".into());
                }
            }
            ExperimentKind::Inequalities => {
                Grid2D::new(sc.commutator_n)?;
            }
            _ => {}
        }
        Ok(())
    }
}
