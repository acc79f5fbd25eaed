//! Monte Carlo for the bounding process `sup_t (A(t) − Σ_{i≤n'} N_i(t))` and for renewal
//! and partial-sum moments.
//!
//! Replication `i` draws everything from `RngStream::new(master_seed, i)`, so results do not
//! depend on how the rayon pool schedules replications.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::dists::{DistributionSpec, Family, RngStream, Sampler};
use crate::qsim::{self, replication_mean, QsimError, StationaryEstimate, TailCurve, Weighting};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CsimError {
    #[error("nonnegative drift: arrival rate {mu_a} must be below n' x service rate = {capacity}")]
    NonNegativeDrift { mu_a: f64, capacity: f64 },
    #[error("invalid supremum config: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Tail(#[from] QsimError),
}

type Result<T> = std::result::Result<T, CsimError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupremumConfig {
    pub n_prime: u32,
    pub reps: u32,
    #[serde(default = "default_multiplier")]
    pub horizon_multiplier: f64,
    #[serde(default)]
    pub master_seed: u64,
    /// Largest tail level of interest; sets the horizon.
    #[serde(default = "default_level")]
    pub max_level: f64,
}

fn default_multiplier() -> f64 {
    20.0
}

fn default_level() -> f64 {
    20.0
}

/// Horizon doublings allowed when the truncation diagnostic is too high.
pub const MAX_DOUBLINGS: u32 = 4;
/// Truncation diagnostic level that triggers a doubling.
pub const TRUNCATION_LIMIT: f64 = 0.01;

impl SupremumConfig {
    pub fn new(n_prime: u32, reps: u32, master_seed: u64, max_level: f64) -> Self {
        SupremumConfig { n_prime, reps, horizon_multiplier: 20.0, master_seed, max_level }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_prime == 0 {
            return Err(CsimError::InvalidConfig("n' must be at least 1".into()));
        }
        if self.reps < 1000 {
            return Err(CsimError::InvalidConfig(format!("reps must be at least 1000, got {}", self.reps)));
        }
        if !(self.horizon_multiplier >= 5.0 && self.horizon_multiplier.is_finite()) {
            return Err(CsimError::InvalidConfig(format!(
                "horizon_multiplier must be at least 5, got {}",
                self.horizon_multiplier
            )));
        }
        if !(self.max_level.is_finite() && self.max_level >= 0.0) {
            return Err(CsimError::InvalidConfig("max_level must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupSamples {
    pub values: Vec<u64>,
    /// Fraction of replications whose running maximum rose in the last tenth of the horizon.
    pub truncation_diag: f64,
    pub horizon: f64,
    pub doublings: u32,
}

fn drift(arrival: &DistributionSpec, service: &DistributionSpec, n_prime: u32) -> Result<f64> {
    let mu_a = arrival.rate();
    let capacity = n_prime as f64 * service.rate();
    if !(mu_a < capacity) {
        return Err(CsimError::NonNegativeDrift { mu_a, capacity });
    }
    Ok(capacity - mu_a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Clock(f64);

impl Eq for Clock {}

impl PartialOrd for Clock {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Clock {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Pair {
    ordinary: Sampler,
    equilibrium: Sampler,
}

impl Pair {
    fn new(d: &DistributionSpec) -> Self {
        Pair { ordinary: d.sampler(), equilibrium: d.equilibrium_sampler() }
    }
}

/// One replication: `(max, max rose after 0.9·horizon)`.
fn one_supremum(
    arrival: &Pair,
    service: &Pair,
    n_prime: u32,
    horizon: f64,
    rng: &mut RngStream,
) -> (u64, bool) {
    let mut next_arrival = arrival.equilibrium.sample(rng);
    let mut clocks: BinaryHeap<Reverse<Clock>> =
        (0..n_prime).map(|_| Reverse(Clock(service.equilibrium.sample(rng)))).collect();
    let mut value: i64 = 0;
    let mut best: i64 = 0;
    let mut last_rise = 0.0;
    loop {
        let top = clocks.peek().expect("n' ≥ 1").0 .0;
        let t = next_arrival.min(top);
        if t > horizon {
            break;
        }
        while next_arrival == t {
            value += 1;
            next_arrival = t + arrival.ordinary.sample(rng);
        }
        while let Some(&Reverse(Clock(c))) = clocks.peek() {
            if c != t {
                break;
            }
            clocks.pop();
            value -= 1;
            clocks.push(Reverse(Clock(t + service.ordinary.sample(rng))));
        }
        if value > best {
            best = value;
            last_rise = t;
        }
    }
    (best as u64, last_rise > 0.9 * horizon)
}

/// Finite-horizon suprema of `A(t) − Σ N_i(t)` with all processes started in equilibrium.
///
/// The horizon is `horizon_multiplier · max(max_level, 1) / (n' μ_S − μ_A)`, doubled up to
/// [`MAX_DOUBLINGS`] times while the truncation diagnostic reaches [`TRUNCATION_LIMIT`].
pub fn simulate_supremum(arrival: &DistributionSpec, service: &DistributionSpec, cfg: &SupremumConfig) -> Result<SupSamples> {
    cfg.validate()?;
    let d = drift(arrival, service, cfg.n_prime)?;
    let a = Pair::new(arrival);
    let s = Pair::new(service);
    let mut horizon = cfg.horizon_multiplier * cfg.max_level.max(1.0) / d;
    let mut doublings = 0;
    loop {
        let runs: Vec<(u64, bool)> = (0..cfg.reps)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(cfg.master_seed, i as u64);
                one_supremum(&a, &s, cfg.n_prime, horizon, &mut rng)
            })
            .collect();
        let late = runs.iter().filter(|r| r.1).count() as f64 / runs.len() as f64;
        if late < TRUNCATION_LIMIT || doublings >= MAX_DOUBLINGS {
            return Ok(SupSamples {
                values: runs.into_iter().map(|r| r.0).collect(),
                truncation_diag: late,
                horizon,
                doublings,
            });
        }
        horizon *= 2.0;
        doublings += 1;
    }
}

/// Empirical `P(sup ≥ x)` on `grid` with binomial half-widths.
pub fn sup_tail_estimate(s: &SupSamples, grid: &[f64]) -> Result<TailCurve> {
    Ok(qsim::integer_tail(&s.values, grid, Weighting::CustomerAverage)?)
}

/// Count of renewals in `[0, t]`, boundary renewal included.
fn count_to(first: f64, ordinary: &Sampler, t: f64, rng: &mut RngStream) -> u64 {
    let mut clock = first;
    let mut n = 0;
    while clock <= t {
        n += 1;
        clock += ordinary.sample(rng);
    }
    n
}

fn check_common(t: f64, reps: u32) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(CsimError::InvalidArgument(format!("time must be positive, got {t}")));
    }
    if reps < 2 {
        return Err(CsimError::InvalidArgument("at least two replications are needed".into()));
    }
    Ok(())
}

/// Per-replication pooled counts `Σ_{i≤k} N_i(t)`.
pub fn pooled_count_samples(d: &DistributionSpec, k: u32, t: f64, equilibrium: bool, reps: u32, seed: u64) -> Result<Vec<u64>> {
    check_common(t, reps)?;
    if k == 0 {
        return Err(CsimError::InvalidArgument("k must be at least 1".into()));
    }
    let pair = Pair::new(d);
    Ok((0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            (0..k)
                .map(|_| {
                    let first = if equilibrium { pair.equilibrium.sample(&mut rng) } else { pair.ordinary.sample(&mut rng) };
                    count_to(first, &pair.ordinary, t, &mut rng)
                })
                .sum::<u64>()
        })
        .collect())
}

/// `E|Σ_{i≤k} N_i(t) − k μ_S t|^r` over `reps` replications.
pub fn estimate_pooled_moment(
    service: &DistributionSpec,
    k: u32,
    t: f64,
    r: f64,
    equilibrium: bool,
    reps: u32,
    seed: u64,
) -> Result<StationaryEstimate> {
    let centre = k as f64 * service.rate() * t;
    let counts = pooled_count_samples(service, k, t, equilibrium, reps, seed)?;
    let v: Vec<f64> = counts.iter().map(|&c| (c as f64 - centre).abs().powf(r)).collect();
    Ok(replication_mean(&v))
}

/// Per-replication normalized partial sums `μ Σ_{i≤k} X_i`.
pub fn partial_sum_samples(d: &DistributionSpec, k: u32, reps: u32, seed: u64) -> Result<Vec<f64>> {
    check_common(1.0, reps)?;
    if k == 0 {
        return Err(CsimError::InvalidArgument("k must be at least 1".into()));
    }
    let sampler = d.sampler();
    let mu = d.rate();
    Ok((0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            mu * (0..k).map(|_| sampler.sample(&mut rng)).sum::<f64>()
        })
        .collect())
}

/// `E|k − μ_A Σ_{i≤k} A_i|^r` over `reps` replications.
pub fn estimate_partial_sum_moment(d: &DistributionSpec, k: u32, r: f64, reps: u32, seed: u64) -> Result<StationaryEstimate> {
    let v: Vec<f64> = partial_sum_samples(d, k, reps, seed)?.into_iter().map(|s| (k as f64 - s).abs().powf(r)).collect();
    Ok(replication_mean(&v))
}

/// `E[N_o(t)^p]`, or `E|N_o(t) − μ t|^p` when `centered`, for the ordinary renewal process.
pub fn estimate_count_moment(
    d: &DistributionSpec,
    t: f64,
    p: f64,
    centered: bool,
    reps: u32,
    seed: u64,
) -> Result<StationaryEstimate> {
    if !(p >= 1.0) {
        return Err(CsimError::InvalidArgument(format!("p must be at least 1, got {p}")));
    }
    let centre = if centered { d.rate() * t } else { 0.0 };
    let counts = pooled_count_samples(d, 1, t, false, reps, seed)?;
    let v: Vec<f64> = counts.iter().map(|&c| (c as f64 - centre).abs().powf(p)).collect();
    Ok(replication_mean(&v))
}

/// `E[g(N_o(t))]` computed exactly from `P(N_o(t) ≥ j) = P(S_1 + … + S_j ≤ t)` for the
/// deterministic and gamma-type families; `None` otherwise.
pub fn count_moment_oracle<G: Fn(u64) -> f64>(d: &DistributionSpec, t: f64, g: G) -> Option<f64> {
    let survival: Box<dyn Fn(u64) -> f64> = match *d.family() {
        Family::Deterministic { value } => {
            let m = (t / value).floor() as u64;
            Box::new(move |j| if j <= m { 1.0 } else { 0.0 })
        }
        Family::Exponential { rate } => Box::new(move |j| gamma_lr(j as f64, rate * t)),
        Family::Erlang { k, rate } => Box::new(move |j| gamma_lr((j * k as u64) as f64, rate * t)),
        Family::Gamma { shape, scale } => Box::new(move |j| gamma_lr(j as f64 * shape, t / scale)),
        _ => return None,
    };
    let mut total = g(0);
    let mut j = 1u64;
    loop {
        let p = survival(j);
        if p < 1e-300 || j > 10_000_000 {
            break;
        }
        total += (g(j) - g(j - 1)) * p;
        if p < 1e-17 && j as f64 > 2.0 * t * d.rate() + 10.0 {
            break;
        }
        j += 1;
    }
    Some(total)
}
