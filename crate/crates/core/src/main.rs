use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use felab::runner::{run_and_emit, summary_text, ConfigFile, ExperimentConfig, ExperimentKind, Overrides, Profile};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Experiment {
    MomentGrowth,
    ExpMoment,
    Smoothing,
    ContDependence,
    ControlDecay,
    Irreducibility,
    Inequalities,
    TimeAverage,
}

impl From<Experiment> for ExperimentKind {
    fn from(e: Experiment) -> Self {
        match e {
            Experiment::MomentGrowth => ExperimentKind::MomentGrowth,
            Experiment::ExpMoment => ExperimentKind::ExpMoment,
            Experiment::Smoothing => ExperimentKind::Smoothing,
            Experiment::ContDependence => ExperimentKind::ContDependence,
            Experiment::ControlDecay => ExperimentKind::ControlDecay,
            Experiment::Irreducibility => ExperimentKind::Irreducibility,
            Experiment::Inequalities => ExperimentKind::Inequalities,
            Experiment::TimeAverage => ExperimentKind::TimeAverage,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Large,
}

/// Run a numerical experiment on the stochastic fractional Euler equation.
///
/// Writes CSV series, SVG plots and report.json to the output directory and
/// exits with status 0 iff every verdict passes.
#[derive(Debug, Parser)]
#[command(name = "felab", version)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: out/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ensemble size.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        paths: cli.paths,
        out: cli.out,
        profile: cli.profile.map(|p| match p {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Large => Profile::Large,
        }),
    };
    let result = ConfigFile::load(&cli.config)
        .and_then(|file| ExperimentConfig::resolve(cli.experiment.into(), file, overrides))
        .and_then(|cfg| run_and_emit(&cfg));
    match result {
        Ok((out, path)) => {
            print!("{}", summary_text(&out.report));
            println!("report: {}", path.display());
            if out.report.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("felab: {e}");
            ExitCode::from(2)
        }
    }
}
