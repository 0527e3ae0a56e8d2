//! The per-step simulation loop and the four absorption criteria.
//!
//! Every free molecule is advanced independently with its own
//! [`RandomStream`], so molecules (and trials) are processed in parallel
//! with rayon and the outcome is a pure function of `(config, seed)`.
//!
//! Draws consumed by one free molecule in one step:
//!
//! | algorithm | order |
//! |-----------|-------|
//! | SMC, SC   | 3 normals (x, y, z) |
//! | RMC       | 3 normals, then 1 uniform only if both endpoints are outside |
//! | APMC      | 1 uniform, then 3 normals per resample attempt if it survives |
//!
//! Absorbed molecules consume nothing further.

use rayon::prelude::*;

use crate::config::{
    Algorithm, DistributionResult, MoleculeState, MoleculeStatus, ReceiverGeometry,
    SimulationConfig, TimeSeriesResult, Vec3,
};
use crate::error::{Error, Result};
use crate::math;
use crate::rng::{make_stream, Draws, RandomStream};

/// Molecules per rayon work item; below this the split overhead dominates.
const MIN_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Absorbed,
    Free,
}

impl Decision {
    fn from_bool(absorbed: bool) -> Self {
        if absorbed {
            Decision::Absorbed
        } else {
            Decision::Free
        }
    }
}

/// Adds an independent `N(0, 2 D dt)` displacement to each coordinate.
pub fn brownian_step<R: Draws + ?Sized>(position: Vec3, diffusion: f64, dt: f64, draws: &mut R) -> Vec3 {
    let sigma = (2.0 * diffusion * dt).sqrt();
    let dx = draws.next_normal();
    let dy = draws.next_normal();
    let dz = draws.next_normal();
    position + Vec3::new(dx, dy, dz) * sigma
}

/// Absorbed iff the end-of-step position is inside or on the sphere.
pub fn decide_smc(_p0: Vec3, p1: Vec3, geometry: &ReceiverGeometry) -> Decision {
    Decision::from_bool(geometry.contains(p1))
}

/// Absorbed iff the straight segment `p0 -> p1` touches the sphere.
pub fn decide_sc(p0: Vec3, p1: Vec3, geometry: &ReceiverGeometry) -> Decision {
    Decision::from_bool(math::segment_sphere_intersects(
        p0,
        p1,
        geometry.center,
        geometry.radius,
    ))
}

/// Inside is absorbed outright; outside-to-outside moves are absorbed with
/// the planar crossing probability using one uniform draw.
pub fn decide_rmc<R: Draws + ?Sized>(
    p0: Vec3,
    p1: Vec3,
    geometry: &ReceiverGeometry,
    diffusion: f64,
    dt: f64,
    draws: &mut R,
) -> Decision {
    let d1 = geometry.distance_to_center(p1);
    if d1 <= geometry.radius {
        return Decision::Absorbed;
    }
    let l_i = (geometry.distance_to_center(p0) - geometry.radius).max(0.0);
    let l_f = d1 - geometry.radius;
    let pr = math::pr_rmc(l_i, l_f, diffusion, dt);
    Decision::from_bool(draws.next_uniform() <= pr)
}

/// Decides absorption before the molecule moves, from its current distance
/// to the receiver center. Consumes exactly one uniform.
pub fn decide_apmc_pre<R: Draws + ?Sized>(
    p0: Vec3,
    geometry: &ReceiverGeometry,
    diffusion: f64,
    dt: f64,
    draws: &mut R,
) -> Result<Decision> {
    let d_j = geometry.distance_to_center(p0);
    let pr = math::pr_apmc(d_j, geometry.radius, diffusion, dt)?;
    Ok(Decision::from_bool(draws.next_uniform() <= pr))
}

/// Proposes Brownian steps from `p0` until one lands strictly outside the
/// sphere. Every attempt restarts from `p0`. Returns `None` once
/// `max_attempts` proposals have all landed inside.
pub fn apmc_resample<R: Draws + ?Sized>(
    p0: Vec3,
    geometry: &ReceiverGeometry,
    diffusion: f64,
    dt: f64,
    draws: &mut R,
    max_attempts: u32,
) -> Option<Vec3> {
    (0..max_attempts)
        .map(|_| brownian_step(p0, diffusion, dt, draws))
        .find(|p1| !geometry.contains(*p1))
}

/// Parameters fixed for the duration of a step.
#[derive(Debug, Clone, Copy)]
struct StepContext {
    algorithm: Algorithm,
    geometry: ReceiverGeometry,
    diffusion: f64,
    dt: f64,
    step: usize,
    max_attempts: u32,
}

impl StepContext {
    /// Advances one free molecule. Returns whether it was absorbed.
    fn advance<R: Draws>(&self, id: usize, molecule: &mut MoleculeState, draws: &mut R) -> Result<bool> {
        let p0 = molecule.position;
        let (decision, p1) = match self.algorithm {
            Algorithm::Smc => {
                let p1 = brownian_step(p0, self.diffusion, self.dt, draws);
                (decide_smc(p0, p1, &self.geometry), p1)
            }
            Algorithm::Sc => {
                let p1 = brownian_step(p0, self.diffusion, self.dt, draws);
                (decide_sc(p0, p1, &self.geometry), p1)
            }
            Algorithm::Rmc => {
                let p1 = brownian_step(p0, self.diffusion, self.dt, draws);
                let d = decide_rmc(p0, p1, &self.geometry, self.diffusion, self.dt, draws);
                (d, p1)
            }
            Algorithm::Apmc => {
                match decide_apmc_pre(p0, &self.geometry, self.diffusion, self.dt, draws)? {
                    Decision::Absorbed => (Decision::Absorbed, p0),
                    Decision::Free => {
                        let p1 = apmc_resample(
                            p0,
                            &self.geometry,
                            self.diffusion,
                            self.dt,
                            draws,
                            self.max_attempts,
                        )
                        .ok_or(Error::ResampleExhausted {
                            molecule: id,
                            step: self.step,
                            attempts: self.max_attempts,
                        })?;
                        (Decision::Free, p1)
                    }
                }
            }
        };
        molecule.position = p1;
        if decision == Decision::Absorbed {
            molecule.status = MoleculeStatus::Absorbed { step: self.step };
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

/// One trial in progress. `step` is the number of completed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialState {
    pub step: usize,
    pub molecules: Vec<MoleculeState>,
    pub streams: Vec<RandomStream>,
    pub cumulative_absorbed: u64,
    pub newly_absorbed: u64,
}

impl TrialState {
    /// All molecules at the transmitter (the origin), before the first step.
    pub fn release(config: &SimulationConfig, trial_id: u64) -> Self {
        Self::from_positions(
            std::iter::repeat_n(Vec3::ZERO, config.num_molecules),
            config.seed,
            trial_id,
        )
    }

    /// Free molecules at arbitrary starting positions.
    pub fn from_positions(positions: impl IntoIterator<Item = Vec3>, seed: u64, trial_id: u64) -> Self {
        let molecules: Vec<MoleculeState> = positions.into_iter().map(MoleculeState::released_at).collect();
        let streams = (0..molecules.len() as u64)
            .map(|id| make_stream(seed, trial_id, id))
            .collect();
        TrialState {
            step: 0,
            molecules,
            streams,
            cumulative_absorbed: 0,
            newly_absorbed: 0,
        }
    }

    pub fn free_count(&self) -> usize {
        self.molecules.iter().filter(|m| m.is_free()).count()
    }
}

/// Executes one step of `algorithm` on every free molecule.
///
/// If several molecules fail, the error of the lowest molecule index is
/// reported so the outcome does not depend on scheduling.
pub fn run_step(
    state: &mut TrialState,
    algorithm: Algorithm,
    config: &SimulationConfig,
    geometry: &ReceiverGeometry,
) -> Result<()> {
    let ctx = StepContext {
        algorithm,
        geometry: *geometry,
        diffusion: config.diffusion_coefficient,
        dt: config.time_step,
        step: state.step + 1,
        max_attempts: config.max_resample_attempts,
    };

    let outcome = state
        .molecules
        .par_iter_mut()
        .zip(state.streams.par_iter_mut())
        .enumerate()
        .with_min_len(MIN_CHUNK)
        .filter(|(_, (m, _))| m.is_free())
        .map(|(id, (m, s))| ctx.advance(id, m, s).map(u64::from).map_err(|e| (id, e)))
        .reduce(
            || Ok(0),
            |a, b| match (a, b) {
                (Ok(x), Ok(y)) => Ok(x + y),
                (Err(e), Ok(_)) | (Ok(_), Err(e)) => Err(e),
                (Err(e1), Err(e2)) => Err(if e1.0 <= e2.0 { e1 } else { e2 }),
            },
        );

    let newly = outcome.map_err(|(_, e)| e)?;
    state.step += 1;
    state.newly_absorbed = newly;
    state.cumulative_absorbed += newly;
    Ok(())
}

/// Newly-absorbed counts for steps `1..=M` of trial `trial_id`.
pub fn run_trial_increments(config: &SimulationConfig, trial_id: u64) -> Result<Vec<u64>> {
    let geometry = config.geometry();
    let mut state = TrialState::release(config, trial_id);
    let mut increments = Vec::with_capacity(config.num_steps);
    for _ in 0..config.num_steps {
        run_step(&mut state, config.algorithm, config, &geometry)?;
        increments.push(state.newly_absorbed);
    }
    Ok(increments)
}

fn distribution(config: &SimulationConfig, rows: Vec<Vec<u64>>) -> DistributionResult {
    DistributionResult {
        algorithm: config.algorithm,
        num_molecules: config.num_molecules,
        time_step: config.time_step,
        newly_absorbed: rows,
        analytic_increments: (1..=config.num_steps)
            .map(|k| math::analytic_increment(k, config))
            .collect(),
    }
}

/// Runs trial 0 and returns its cumulative curve next to the analytic one.
pub fn run_trial(config: &SimulationConfig) -> Result<TimeSeriesResult> {
    let config = config.validate()?;
    let rows = vec![run_trial_increments(&config, 0)?];
    Ok(distribution(&config, rows).mean_time_series(&config))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialsResult {
    pub distribution: DistributionResult,
    pub mean: TimeSeriesResult,
}

/// Runs `config.trials` independent trials (in parallel) and aggregates.
pub fn run_trials(config: &SimulationConfig) -> Result<TrialsResult> {
    run_trial_subset(config, 0..config.trials as u64)
}

/// Runs the given trial ids; rows of the distribution follow their order.
pub fn run_trial_subset(
    config: &SimulationConfig,
    trial_ids: impl IntoIterator<Item = u64>,
) -> Result<TrialsResult> {
    let config = config.validate()?;
    let ids: Vec<u64> = trial_ids.into_iter().collect();
    let rows = ids
        .par_iter()
        .map(|&t| run_trial_increments(&config, t))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let distribution = distribution(&config, rows);
    let mean = distribution.mean_time_series(&config);
    Ok(TrialsResult { distribution, mean })
}
