//! Command-line front end: presets, flag parsing and the run driver.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::config::{
    um_to_m, Algorithm, SimulationConfig, DEFAULT_MAX_RESAMPLE_ATTEMPTS, DEFAULT_SEED,
};
use crate::engine::{run_trials, TrialsResult};
use crate::error::{Error, Result};
use crate::output;

pub const DEFAULT_DIFFUSION: f64 = 1e-9;
pub const DEFAULT_DISTANCE_UM: f64 = 50.0;
pub const FIGURE_N: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
    Fig5,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Fig3a, Preset::Fig3b, Preset::Fig4a, Preset::Fig4b, Preset::Fig5];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
            Preset::Fig5 => "fig5",
        }
    }

    /// Receiver radius (um), time step (s), steps, molecules, trials.
    fn parameters(self) -> (f64, f64, usize, usize, usize) {
        match self {
            Preset::Fig3a => (20.0, 0.1, 100, FIGURE_N, 1),
            Preset::Fig3b => (0.5, 0.1, 100, FIGURE_N, 1),
            Preset::Fig4a => (10.0, 0.5, 100, FIGURE_N, 1),
            Preset::Fig4b => (10.0, 5.0, 100, FIGURE_N, 1),
            Preset::Fig5 => (10.0, 0.5, 10, 1000, 1000),
        }
    }

    pub fn config(self) -> SimulationConfig {
        let (radius_um, dt, steps, n, trials) = self.parameters();
        SimulationConfig {
            diffusion_coefficient: DEFAULT_DIFFUSION,
            receiver_radius: um_to_m(radius_um),
            tx_rx_distance: um_to_m(DEFAULT_DISTANCE_UM),
            num_molecules: n,
            time_step: dt,
            num_steps: steps,
            algorithm: Algorithm::Apmc,
            trials,
            seed: DEFAULT_SEED,
            max_resample_attempts: DEFAULT_MAX_RESAMPLE_ATTEMPTS,
        }
    }

    pub fn algorithms(self) -> Vec<Algorithm> {
        match self {
            Preset::Fig5 => vec![Algorithm::Rmc, Algorithm::Apmc],
            _ => Algorithm::ALL.to_vec(),
        }
    }

    pub fn experiment(self) -> ExperimentPreset {
        ExperimentPreset {
            preset: self,
            config: self.config(),
            algorithms: self.algorithms(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset '{s}' (expected fig3a, fig3b, fig4a, fig4b or fig5)"))
    }
}

/// A named preset bound to its configuration and algorithm list.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub preset: Preset,
    pub config: SimulationConfig,
    pub algorithms: Vec<Algorithm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmList(pub Vec<Algorithm>);

fn parse_algorithm_list(s: &str) -> Result<AlgorithmList, String> {
    Algorithm::parse_list(s).map(AlgorithmList)
}

#[derive(Debug, Parser)]
#[command(name = "absorb-sim", version, about = "Monte Carlo simulation of molecule absorption at a spherical receiver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a preset or a custom experiment and write CSV results.
    Run(Box<RunArgs>),
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Named experiment: fig3a, fig3b, fig4a, fig4b, fig5.
    #[arg(long, value_parser = Preset::from_str, conflicts_with = "config")]
    pub preset: Option<Preset>,

    /// JSON config file (lengths in micrometers, times in seconds).
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Comma-separated list of smc, sc, rmc, apmc.
    #[arg(long, value_parser = parse_algorithm_list)]
    pub algorithm: Option<AlgorithmList>,

    /// Diffusion coefficient in m^2/s [default: 1e-9].
    #[arg(long)]
    pub diffusion: Option<f64>,

    /// Receiver radius in micrometers.
    #[arg(long = "radius-um")]
    pub radius_um: Option<f64>,

    /// Transmitter to receiver-center distance in micrometers [default: 50].
    #[arg(long = "distance-um")]
    pub distance_um: Option<f64>,

    /// Time step in seconds.
    #[arg(long)]
    pub dt: Option<f64>,

    /// Number of time steps.
    #[arg(long)]
    pub steps: Option<usize>,

    /// Number of molecules released per trial.
    #[arg(long, conflicts_with = "scale_n")]
    pub n: Option<usize>,

    /// Override the number of molecules of a preset (e.g. 100000).
    #[arg(long = "scale-n")]
    pub scale_n: Option<usize>,

    /// Number of independent trials.
    #[arg(long)]
    pub trials: Option<usize>,

    /// Random seed [default: 42].
    #[arg(long, env = "ABSORB_SIM_SEED")]
    pub seed: Option<u64>,

    /// Cap on APMC redraws of one molecule in one step.
    #[arg(long = "max-resample-attempts")]
    pub max_resample_attempts: Option<u32>,

    /// Worker threads [default: all cores]. Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,

    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Everything needed to execute one invocation of `run`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub name: String,
    pub config: SimulationConfig,
    pub algorithms: Vec<Algorithm>,
    pub workers: Option<usize>,
    pub out_dir: PathBuf,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunPlan> {
        let (name, mut config, mut algorithms) = match (&self.preset, &self.config) {
            (Some(p), _) => (p.name().to_string(), p.config(), p.algorithms()),
            (None, Some(path)) => {
                let c = SimulationConfig::load(path)?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "custom".into());
                (name, c, vec![c.algorithm])
            }
            (None, None) => {
                let mut missing = Vec::new();
                if self.radius_um.is_none() {
                    missing.push("--radius-um");
                }
                if self.dt.is_none() {
                    missing.push("--dt");
                }
                if self.steps.is_none() {
                    missing.push("--steps");
                }
                if self.n.is_none() && self.scale_n.is_none() {
                    missing.push("--n");
                }
                if !missing.is_empty() {
                    return Err(Error::Usage(format!(
                        "a custom run needs {} (or use --preset / --config)",
                        missing.join(", ")
                    )));
                }
                let c = SimulationConfig {
                    diffusion_coefficient: DEFAULT_DIFFUSION,
                    receiver_radius: 0.0,
                    tx_rx_distance: um_to_m(DEFAULT_DISTANCE_UM),
                    num_molecules: 0,
                    time_step: 0.0,
                    num_steps: 0,
                    algorithm: Algorithm::Apmc,
                    trials: 1,
                    seed: DEFAULT_SEED,
                    max_resample_attempts: DEFAULT_MAX_RESAMPLE_ATTEMPTS,
                };
                ("custom".to_string(), c, Algorithm::ALL.to_vec())
            }
        };

        if let Some(v) = self.diffusion {
            config.diffusion_coefficient = v;
        }
        if let Some(v) = self.radius_um {
            config.receiver_radius = um_to_m(v);
        }
        if let Some(v) = self.distance_um {
            config.tx_rx_distance = um_to_m(v);
        }
        if let Some(v) = self.dt {
            config.time_step = v;
        }
        if let Some(v) = self.steps {
            config.num_steps = v;
        }
        if let Some(v) = self.n.or(self.scale_n) {
            config.num_molecules = v;
        }
        if let Some(v) = self.trials {
            config.trials = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.max_resample_attempts {
            config.max_resample_attempts = v;
        }
        if let Some(list) = &self.algorithm {
            algorithms = list.0.clone();
        }
        if algorithms.is_empty() {
            return Err(Error::Usage("empty algorithm list".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Usage("--workers must be at least 1".into()));
        }
        config.algorithm = algorithms[0];
        let config = config.validate()?;

        Ok(RunPlan {
            name,
            config,
            algorithms,
            workers: self.workers,
            out_dir: self.out.clone(),
        })
    }
}

/// Parses `argv` (including the program name) into a run plan.
pub fn parse_args<I, T>(argv: I) -> Result<RunPlan>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Usage(e.to_string()))?;
    match cli.command {
        Command::Run(args) => args.resolve(),
        Command::Presets => Err(Error::Usage("`presets` does not run anything".into())),
    }
}

#[derive(Debug)]
pub struct AlgorithmRun {
    pub algorithm: Algorithm,
    pub outcome: Result<TrialsResult>,
}

#[derive(Debug)]
pub struct PlanReport {
    pub runs: Vec<AlgorithmRun>,
    pub files: Vec<PathBuf>,
}

impl PlanReport {
    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(|r| r.outcome.is_ok())
    }
}

pub fn timeseries_path(out_dir: &Path, name: &str) -> PathBuf {
    out_dir.join(format!("{name}_timeseries.csv"))
}

pub fn distribution_path(out_dir: &Path, name: &str, algorithm: Algorithm) -> PathBuf {
    out_dir.join(format!("{name}_{algorithm}_distribution.csv"))
}

/// Runs every algorithm of the plan and writes whatever succeeded.
pub fn execute(plan: &RunPlan) -> Result<PlanReport> {
    let run_all = || -> Vec<AlgorithmRun> {
        plan.algorithms
            .iter()
            .map(|&algorithm| {
                let config = SimulationConfig {
                    algorithm,
                    ..plan.config
                };
                AlgorithmRun {
                    algorithm,
                    outcome: run_trials(&config),
                }
            })
            .collect()
    };
    let runs = match plan.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {w} workers: {e}")))?
            .install(run_all),
        None => run_all(),
    };

    std::fs::create_dir_all(&plan.out_dir).map_err(|e| Error::io(&plan.out_dir, e))?;
    let mut files = Vec::new();
    let series: Vec<_> = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .map(|r| r.mean.clone())
        .collect();
    if !series.is_empty() {
        let path = timeseries_path(&plan.out_dir, &plan.name);
        output::write_timeseries_csv(&series, &path)?;
        files.push(path);
    }
    for run in &runs {
        if let Ok(result) = &run.outcome {
            let path = distribution_path(&plan.out_dir, &plan.name, run.algorithm);
            let summary = output::write_distribution_csv(&result.distribution, &path)?;
            files.push(path);
            files.push(summary);
        }
    }
    Ok(PlanReport { runs, files })
}

fn print_presets() {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "name   r_r(um)  dt(s)  steps  N        trials  algorithms");
    for p in Preset::ALL {
        let e = p.experiment();
        let algs: Vec<&str> = e.algorithms.iter().map(|a| a.as_str()).collect();
        let _ = writeln!(
            out,
            "{:<6} {:<8} {:<6} {:<6} {:<8} {:<7} {}",
            p.name(),
            crate::config::m_to_um(e.config.receiver_radius),
            e.config.time_step,
            e.config.num_steps,
            e.config.num_molecules,
            e.config.trials,
            algs.join(",")
        );
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let args = match cli.command {
        Command::Presets => {
            print_presets();
            return 0;
        }
        Command::Run(args) => args,
    };
    let plan = match args.resolve() {
        Ok(plan) => plan,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let report = match execute(&plan) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let mut stdout = std::io::stdout().lock();
    let last = plan.config.num_steps;
    let t_end = plan.config.time_at(last);
    for run in &report.runs {
        match &run.outcome {
            Ok(r) => {
                let _ = writeln!(
                    stdout,
                    "{}/{}: fraction at t={} s = {} (analytic {})",
                    plan.name,
                    run.algorithm,
                    output::format_real(t_end),
                    output::format_real(r.mean.fraction[last - 1]),
                    output::format_real(r.mean.analytic_fraction[last - 1]),
                );
            }
            Err(e) => eprintln!("{}/{} failed: {e}", plan.name, run.algorithm),
        }
    }
    for f in &report.files {
        let _ = writeln!(stdout, "wrote {}", f.display());
    }
    if report.all_succeeded() {
        0
    } else {
        1
    }
}
