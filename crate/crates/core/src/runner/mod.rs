//! Experiment orchestration: configuration, the experiment drivers, and
//! report emission.

pub mod config;
pub mod experiments;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{ConfigFile, ExperimentConfig, ExperimentKind, InitialCondition, Overrides, Profile, Schedule};
pub use experiments::{
    run_cont_dependence, run_control_decay, run_exp_moment, run_experiment, run_inequalities,
    run_irreducibility, run_moment_growth, run_smoothing, run_time_average,
};
pub use report::{emit_report, summary_text, ExperimentOutput, ExperimentReport, Verdict};

use crate::checkpoint;
use crate::dynamics::{Dynamics, TrajectoryState};
use crate::error::{FelabError, Result};

/// Runs the experiment and writes its artifacts to `cfg.out`.
pub fn run_and_emit(cfg: &ExperimentConfig) -> Result<(ExperimentOutput, PathBuf)> {
    let mut out = run_experiment(cfg)?;
    let path = emit_report(&mut out, &cfg.out)?;
    Ok((out, path))
}

/// Continues a checkpointed main trajectory up to `until_step`.
pub fn resume_trajectory(dy: &Dynamics, path: &Path, until_step: u64) -> Result<TrajectoryState> {
    let (hdr, mut state) = checkpoint::load(path, dy.grid())?;
    let p = dy.params();
    if hdr.gamma.to_bits() != p.gamma.to_bits() || hdr.dt.to_bits() != p.dt.to_bits() {
        return Err(FelabError::Checkpoint(format!(
            "checkpoint has gamma={}, dt={}; dynamics has gamma={}, dt={}",
            hdr.gamma, hdr.dt, p.gamma, p.dt
        )));
    }
    if state.step > until_step {
        return Err(FelabError::Checkpoint(format!(
            "checkpoint is at step {}, past the requested step {until_step}",
            state.step
        )));
    }
    while state.step < until_step {
        state = dy.step_main(&state)?;
    }
    Ok(state)
}

/// Path of the checkpoint written for trajectory `id` when
/// `schedule.checkpoint_every` is set.
pub fn checkpoint_file(cfg: &ExperimentConfig, id: u64) -> PathBuf {
    experiments::checkpoint_path(cfg, id)
}
