//! Domain types shared by the engine, the statistics helpers and the CLI.
//!
//! Everything here is in SI units (meters, seconds, m^2/s). Micrometers only
//! appear at the I/O boundary: the JSON config file and the CLI flags.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};
use crate::math;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MAX_RESAMPLE_ATTEMPTS: u32 = 1000;

/// Multiplies the decimal value written in `text` by `10^shift` by moving
/// its exponent, so no binary rounding happens before the final parse.
fn shift_decimal(text: &str, shift: i32) -> Option<String> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    mantissa.parse::<f64>().ok()?;
    Some(format!("{mantissa}e{}", exponent + shift))
}

/// Converts micrometers to meters (correctly rounded from the decimal value).
pub fn um_to_m(um: f64) -> f64 {
    shift_decimal(&format!("{um:e}"), -6)
        .and_then(|s| s.parse().ok())
        .unwrap_or(um * 1e-6)
}

/// Converts meters to micrometers (correctly rounded from the decimal value).
pub fn m_to_um(m: f64) -> f64 {
    shift_decimal(&format!("{m:e}"), 6)
        .and_then(|s| s.parse().ok())
        .unwrap_or(m * 1e6)
}

/// A length stored in meters and written to JSON in micrometers. The
/// micrometer text is the shortest meter representation with its exponent
/// moved by six, so reading it back yields the identical meter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Micrometers(pub f64);

impl Serialize for Micrometers {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        if !self.0.is_finite() {
            return Err(S::Error::custom(format!("non-finite length {}", self.0)));
        }
        let text = shift_decimal(&format!("{:e}", self.0), 6).expect("finite float text");
        let raw = serde_json::value::RawValue::from_string(text).map_err(S::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Micrometers {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = Box::<serde_json::value::RawValue>::deserialize(deserializer)?;
        let meters = shift_decimal(raw.get(), -6)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| D::Error::custom(format!("expected a length in micrometers, got {}", raw.get())))?;
        Ok(Micrometers(meters))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

/// Absorption criterion applied to each free molecule once per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Absorbed iff the end-of-step position is inside the receiver.
    Smc,
    /// Absorbed iff the straight segment between the sampled positions
    /// touches the receiver.
    Sc,
    /// SMC plus a planar-boundary intra-step crossing probability.
    Rmc,
    /// Absorption decided before displacement from the exact one-step
    /// hitting probability of a sphere; survivors never land inside.
    Apmc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Smc, Algorithm::Sc, Algorithm::Rmc, Algorithm::Apmc];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Smc => "smc",
            Algorithm::Sc => "sc",
            Algorithm::Rmc => "rmc",
            Algorithm::Apmc => "apmc",
        }
    }

    /// Parses a comma-separated list such as `rmc,apmc`. Duplicates are
    /// dropped, first occurrence wins.
    pub fn parse_list(s: &str) -> Result<Vec<Algorithm>, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let alg: Algorithm = part.parse()?;
            if !out.contains(&alg) {
                out.push(alg);
            }
        }
        if out.is_empty() {
            return Err("empty algorithm list".to_string());
        }
        Ok(out)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "smc" => Ok(Algorithm::Smc),
            "sc" => Ok(Algorithm::Sc),
            "rmc" => Ok(Algorithm::Rmc),
            "apmc" => Ok(Algorithm::Apmc),
            other => Err(format!(
                "unknown algorithm '{other}' (expected one of smc, sc, rmc, apmc)"
            )),
        }
    }
}

/// All physical and numerical parameters of one experiment, in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    /// m^2/s
    pub diffusion_coefficient: f64,
    /// m
    pub receiver_radius: f64,
    /// Distance from the transmitter (origin) to the receiver center, m.
    pub tx_rx_distance: f64,
    pub num_molecules: usize,
    /// s
    pub time_step: f64,
    pub num_steps: usize,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub seed: u64,
    pub max_resample_attempts: u32,
}

impl SimulationConfig {
    /// Returns the config unchanged if every invariant holds.
    pub fn validate(self) -> Result<Self, ConfigError> {
        if !(self.diffusion_coefficient.is_finite() && self.diffusion_coefficient > 0.0) {
            return Err(ConfigError::NonPositiveDiffusion(self.diffusion_coefficient));
        }
        if !(self.receiver_radius.is_finite() && self.receiver_radius > 0.0) {
            return Err(ConfigError::NonPositiveRadius(self.receiver_radius));
        }
        if !(self.tx_rx_distance.is_finite() && self.tx_rx_distance > self.receiver_radius) {
            return Err(ConfigError::TransmitterInsideReceiver {
                distance: self.tx_rx_distance,
                radius: self.receiver_radius,
            });
        }
        if !(self.time_step.is_finite() && self.time_step > 0.0) {
            return Err(ConfigError::NonPositiveTimeStep(self.time_step));
        }
        if self.num_molecules == 0 {
            return Err(ConfigError::NoMolecules);
        }
        if self.num_steps == 0 {
            return Err(ConfigError::NoSteps);
        }
        if self.trials == 0 {
            return Err(ConfigError::NoTrials);
        }
        if self.max_resample_attempts == 0 {
            return Err(ConfigError::NoResampleAttempts);
        }
        Ok(self)
    }

    pub fn geometry(&self) -> ReceiverGeometry {
        ReceiverGeometry::new(self.tx_rx_distance, self.receiver_radius)
    }

    /// Time at the end of step `k` (steps are numbered from 1).
    pub fn time_at(&self, k: usize) -> f64 {
        k as f64 * self.time_step
    }

    pub fn analytic_fraction_at(&self, t: f64) -> f64 {
        math::analytic_fraction(
            t,
            self.receiver_radius,
            self.tx_rx_distance,
            self.diffusion_coefficient,
        )
    }

    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            diffusion_coefficient: self.diffusion_coefficient,
            receiver_radius: Micrometers(self.receiver_radius),
            tx_rx_distance: Micrometers(self.tx_rx_distance),
            num_molecules: self.num_molecules,
            time_step: self.time_step,
            num_steps: self.num_steps,
            algorithm: self.algorithm,
            trials: self.trials,
            seed: self.seed,
            max_resample_attempts: self.max_resample_attempts,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        let file: ConfigFile = serde_json::from_str(s)?;
        Ok(file.into_config())
    }

    /// Reads and validates a JSON config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config = Self::from_json(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(config.validate()?)
    }
}

/// On-disk form of [`SimulationConfig`]: a flat JSON object whose keys are
/// the field names, with `receiver_radius` and `tx_rx_distance` in
/// micrometers and times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub diffusion_coefficient: f64,
    pub receiver_radius: Micrometers,
    pub tx_rx_distance: Micrometers,
    pub num_molecules: usize,
    pub time_step: f64,
    pub num_steps: usize,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_max_resample_attempts")]
    pub max_resample_attempts: u32,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Apmc
}
fn default_trials() -> usize {
    1
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_max_resample_attempts() -> u32 {
    DEFAULT_MAX_RESAMPLE_ATTEMPTS
}

impl ConfigFile {
    pub fn into_config(self) -> SimulationConfig {
        SimulationConfig {
            diffusion_coefficient: self.diffusion_coefficient,
            receiver_radius: self.receiver_radius.0,
            tx_rx_distance: self.tx_rx_distance.0,
            num_molecules: self.num_molecules,
            time_step: self.time_step,
            num_steps: self.num_steps,
            algorithm: self.algorithm,
            trials: self.trials,
            seed: self.seed,
            max_resample_attempts: self.max_resample_attempts,
        }
    }
}

/// The absorbing sphere, centered at `(r_d, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverGeometry {
    pub center: Vec3,
    pub radius: f64,
}

impl ReceiverGeometry {
    pub fn new(distance: f64, radius: f64) -> Self {
        ReceiverGeometry {
            center: Vec3::new(distance, 0.0, 0.0),
            radius,
        }
    }

    pub fn distance_to_center(&self, p: Vec3) -> f64 {
        p.distance(self.center)
    }

    /// Inside or on the boundary.
    pub fn contains(&self, p: Vec3) -> bool {
        self.distance_to_center(p) <= self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoleculeStatus {
    Free,
    /// Absorbed during step `step` (numbered from 1).
    Absorbed { step: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoleculeState {
    pub position: Vec3,
    pub status: MoleculeStatus,
}

impl MoleculeState {
    pub fn released_at(position: Vec3) -> Self {
        MoleculeState {
            position,
            status: MoleculeStatus::Free,
        }
    }

    pub fn is_free(&self) -> bool {
        self.status == MoleculeStatus::Free
    }

    pub fn absorbed_at_step(&self) -> Option<usize> {
        match self.status {
            MoleculeStatus::Free => None,
            MoleculeStatus::Absorbed { step } => Some(step),
        }
    }
}

/// Cumulative absorption curve of one algorithm, averaged over `trials`.
/// Entry `i` belongs to the end of step `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesResult {
    pub algorithm: Algorithm,
    pub num_molecules: usize,
    pub trials: usize,
    pub time: Vec<f64>,
    pub cumulative_absorbed: Vec<f64>,
    pub fraction: Vec<f64>,
    pub analytic_fraction: Vec<f64>,
}

impl TimeSeriesResult {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Simulated fraction at the recorded time closest to `t`.
    pub fn fraction_at(&self, t: f64) -> Option<f64> {
        self.index_of(t).map(|i| self.fraction[i])
    }

    pub fn analytic_at(&self, t: f64) -> Option<f64> {
        self.index_of(t).map(|i| self.analytic_fraction[i])
    }

    fn index_of(&self, t: f64) -> Option<usize> {
        self.time
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
    }
}

/// Newly-absorbed counts per step across repeated trials.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionResult {
    pub algorithm: Algorithm,
    pub num_molecules: usize,
    pub time_step: f64,
    /// `newly_absorbed[trial][k - 1]` for step `k`.
    pub newly_absorbed: Vec<Vec<u64>>,
    /// Expected newly-absorbed count per step from the closed form.
    pub analytic_increments: Vec<f64>,
}

impl DistributionResult {
    pub fn num_trials(&self) -> usize {
        self.newly_absorbed.len()
    }

    pub fn num_steps(&self) -> usize {
        self.analytic_increments.len()
    }

    pub fn time_at(&self, k: usize) -> f64 {
        k as f64 * self.time_step
    }

    fn column(&self, k: usize) -> impl Iterator<Item = u64> + '_ {
        self.newly_absorbed.iter().map(move |row| row[k - 1])
    }

    /// Mean newly-absorbed count at step `k` (numbered from 1).
    pub fn mean(&self, k: usize) -> f64 {
        let total: u64 = self.column(k).sum();
        total as f64 / self.num_trials() as f64
    }

    /// Unbiased sample variance at step `k`; zero for a single trial.
    pub fn variance(&self, k: usize) -> f64 {
        let n = self.num_trials();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean(k);
        let ss: f64 = self.column(k).map(|c| (c as f64 - mean).powi(2)).sum();
        ss / (n - 1) as f64
    }

    pub fn standard_error(&self, k: usize) -> f64 {
        (self.variance(k) / self.num_trials() as f64).sqrt()
    }

    /// Empirical probability mass over counts at step `k`, sorted by count.
    pub fn mass_function(&self, k: usize) -> Vec<(u64, f64)> {
        let mut counts = std::collections::BTreeMap::new();
        for c in self.column(k) {
            *counts.entry(c).or_insert(0usize) += 1;
        }
        let n = self.num_trials() as f64;
        counts
            .into_iter()
            .map(|(c, hits)| (c, hits as f64 / n))
            .collect()
    }

    /// Cumulative curve averaged over trials.
    pub fn mean_time_series(&self, config: &SimulationConfig) -> TimeSeriesResult {
        let steps = self.num_steps();
        let trials = self.num_trials();
        let n = self.num_molecules as f64;
        let mut running = vec![0u64; trials];
        let mut time = Vec::with_capacity(steps);
        let mut cumulative = Vec::with_capacity(steps);
        let mut fraction = Vec::with_capacity(steps);
        let mut analytic = Vec::with_capacity(steps);
        for k in 1..=steps {
            for (acc, row) in running.iter_mut().zip(&self.newly_absorbed) {
                *acc += row[k - 1];
            }
            let total: u64 = running.iter().sum();
            let mean = total as f64 / trials as f64;
            let t = config.time_at(k);
            time.push(t);
            cumulative.push(mean);
            fraction.push(mean / n);
            analytic.push(config.analytic_fraction_at(t));
        }
        TimeSeriesResult {
            algorithm: self.algorithm,
            num_molecules: self.num_molecules,
            trials,
            time,
            cumulative_absorbed: cumulative,
            fraction,
            analytic_fraction: analytic,
        }
    }
}
