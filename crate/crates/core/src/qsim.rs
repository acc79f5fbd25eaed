//! Steady-state simulation of the FCFS GI/GI/n queue, with closed-form oracles.
//!
//! Two simulators share one sample path when given the same seed: interarrival times come from
//! stream 0 and service times from stream 1, and the `k`-th arriving job always receives the
//! `k`-th service time. [`run_kw`] estimates customer-average waiting times with the
//! Kiefer–Wolfowitz recursion; [`run_event_sim`] estimates time averages of the queue length.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dists::{DistributionSpec, RngStream};

pub const ARRIVAL_STREAM: u64 = 0;
pub const SERVICE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QsimError {
    #[error("unstable queue: traffic intensity {0} must be below 1")]
    Unstable(f64),
    #[error("invalid queue: {0}")]
    InvalidSpec(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("empty sample set")]
    EmptySamples,
    #[error("tail grid must be sorted ascending and finite")]
    UnsortedGrid,
}

type Result<T> = std::result::Result<T, QsimError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueSpec {
    pub arrival: DistributionSpec,
    pub service: DistributionSpec,
    pub n: u32,
}

impl QueueSpec {
    pub fn new(arrival: DistributionSpec, service: DistributionSpec, n: u32) -> Result<Self> {
        let q = QueueSpec { arrival, service, n };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(QsimError::InvalidSpec("server count must be at least 1".into()));
        }
        let rho = self.rho();
        if !(rho < 1.0) {
            return Err(QsimError::Unstable(rho));
        }
        Ok(())
    }

    /// `μ_A / (n μ_S)`.
    pub fn rho(&self) -> f64 {
        self.service.mean() / (self.n as f64 * self.arrival.mean())
    }

    /// Offered load `μ_A / μ_S`.
    pub fn offered_load(&self) -> f64 {
        self.service.mean() / self.arrival.mean()
    }

    pub fn arrival_rate(&self) -> f64 {
        1.0 / self.arrival.mean()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub total_arrivals: u64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    #[serde(default = "default_batches")]
    pub batch_count: u32,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub tail_grid: Vec<f64>,
    /// Orders `z` of the time-average moments `E[L^z]` to report.
    #[serde(default)]
    pub moment_orders: Vec<f64>,
}

fn default_warmup() -> f64 {
    0.2
}

fn default_batches() -> u32 {
    30
}

impl SimConfig {
    /// Config with 20% warmup and 30 batches.
    pub fn new(total_arrivals: u64, master_seed: u64, tail_grid: Vec<f64>) -> Self {
        SimConfig { total_arrivals, warmup_fraction: 0.2, batch_count: 30, master_seed, tail_grid, moment_orders: vec![] }
    }

    /// Config whose post-warmup arrival count is `post_warmup` under 20% warmup.
    pub fn with_post_warmup(post_warmup: u64, master_seed: u64, tail_grid: Vec<f64>) -> Self {
        Self::new(post_warmup * 5 / 4, master_seed, tail_grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.warmup_fraction) {
            return Err(QsimError::InvalidConfig(format!(
                "warmup_fraction must lie in [0, 0.5], got {}",
                self.warmup_fraction
            )));
        }
        if self.batch_count < 30 {
            return Err(QsimError::InvalidConfig(format!("batch_count must be at least 30, got {}", self.batch_count)));
        }
        if self.total_arrivals < 10 * self.batch_count as u64 {
            return Err(QsimError::InvalidConfig(format!(
                "total_arrivals must be at least 10 x batch_count = {}",
                10 * self.batch_count
            )));
        }
        check_grid(&self.tail_grid)?;
        if self.post_warmup() < self.batch_count as u64 {
            return Err(QsimError::InvalidConfig("fewer post-warmup arrivals than batches".into()));
        }
        Ok(())
    }

    pub fn warmup(&self) -> u64 {
        (self.warmup_fraction * self.total_arrivals as f64).floor() as u64
    }

    pub fn post_warmup(&self) -> u64 {
        self.total_arrivals - self.warmup()
    }

    /// Arrival index at which batch `b` starts; `b = batch_count` gives the end index.
    fn batch_start(&self, b: u32) -> u64 {
        self.warmup() + (self.post_warmup() as u128 * b as u128 / self.batch_count as u128) as u64
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(QsimError::UnsortedGrid);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryEstimate {
    pub point: f64,
    /// 95% half-width.
    pub ci_half_width: f64,
    pub batches: u32,
    pub effective_samples: u64,
}

impl StationaryEstimate {
    pub fn upper(&self, z_over_95: f64) -> f64 {
        self.point + z_over_95 * self.ci_half_width
    }
}

/// Student-t 97.5% quantile with `dof` degrees of freedom.
pub fn t_quantile(dof: u32) -> f64 {
    StudentsT::new(0.0, 1.0, dof.max(1) as f64).expect("valid dof").inverse_cdf(0.975)
}

/// Point estimate and 95% Student-t half-width from batch means.
pub fn batch_means(point: f64, batch: &[f64], effective_samples: u64) -> StationaryEstimate {
    let b = batch.len();
    let ci = if b < 2 {
        0.0
    } else {
        let m = batch.iter().sum::<f64>() / b as f64;
        let var = batch.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64;
        t_quantile(b as u32 - 1) * (var / b as f64).sqrt()
    };
    StationaryEstimate { point, ci_half_width: ci, batches: b as u32, effective_samples }
}

/// Mean of i.i.d. replications with a 95% normal-theory half-width.
pub fn replication_mean(values: &[f64]) -> StationaryEstimate {
    let n = values.len();
    let m = values.iter().sum::<f64>() / n.max(1) as f64;
    let ci = if n < 2 {
        0.0
    } else {
        let var = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        1.959_963_984_540_054 * (var / n as f64).sqrt()
    };
    StationaryEstimate { point: m, ci_half_width: ci, batches: 0, effective_samples: n as u64 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    TimeAverage,
    CustomerAverage,
}

/// Survival estimates `P(X ≥ x)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub grid: Vec<f64>,
    pub survival: Vec<f64>,
    pub ci_half_widths: Vec<f64>,
    pub weighting: Weighting,
}

impl TailCurve {
    fn monotone(mut self) -> Self {
        for i in 1..self.survival.len() {
            if self.survival[i] > self.survival[i - 1] {
                self.survival[i] = self.survival[i - 1];
            }
        }
        self
    }
}

/// Weighted empirical survival on `grid` with binomial 95% half-widths at the Kish effective
/// sample size.
pub fn estimate_tail(samples: &[(f64, f64)], grid: &[f64], weighting: Weighting) -> Result<TailCurve> {
    check_grid(grid)?;
    let total: f64 = samples.iter().map(|s| s.1).sum();
    if samples.is_empty() || !(total > 0.0) {
        return Err(QsimError::EmptySamples);
    }
    let sq: f64 = samples.iter().map(|s| s.1 * s.1).sum();
    let n_eff = total * total / sq;
    let mut sorted: Vec<(f64, f64)> = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut suffix = vec![0.0; sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        suffix[i] = suffix[i + 1] + sorted[i].1;
    }
    let mut survival = Vec::with_capacity(grid.len());
    let mut ci = Vec::with_capacity(grid.len());
    let total = suffix[0];
    for &x in grid {
        let idx = sorted.partition_point(|s| s.0 < x);
        let p = (suffix[idx] / total).clamp(0.0, 1.0);
        survival.push(p);
        ci.push(1.959_963_984_540_054 * (p * (1.0 - p) / n_eff).sqrt());
    }
    Ok(TailCurve { grid: grid.to_vec(), survival, ci_half_widths: ci, weighting }.monotone())
}

/// Integer-sample survival with equal weights, for large replication sets.
pub(crate) fn integer_tail(values: &[u64], grid: &[f64], weighting: Weighting) -> Result<TailCurve> {
    check_grid(grid)?;
    if values.is_empty() {
        return Err(QsimError::EmptySamples);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut survival = Vec::with_capacity(grid.len());
    let mut ci = Vec::with_capacity(grid.len());
    for &x in grid {
        let idx = sorted.partition_point(|&v| (v as f64) < x);
        let p = (sorted.len() - idx) as f64 / n;
        survival.push(p);
        ci.push(1.959_963_984_540_054 * (p * (1.0 - p) / n).sqrt());
    }
    Ok(TailCurve { grid: grid.to_vec(), survival, ci_half_widths: ci, weighting }.monotone())
}

fn prepare(q: &QueueSpec, cfg: &SimConfig) -> Result<()> {
    q.validate()?;
    cfg.validate()
}

/// Waits of every job in order, including warmup, fed to `visit(index, wait)`.
fn kw_path<F: FnMut(u64, f64)>(q: &QueueSpec, cfg: &SimConfig, mut visit: F) {
    let a = q.arrival.sampler();
    let s = q.service.sampler();
    let mut ra = RngStream::new(cfg.master_seed, ARRIVAL_STREAM);
    let mut rs = RngStream::new(cfg.master_seed, SERVICE_STREAM);
    let n = q.n as usize;
    if n == 1 {
        let mut w = 0.0f64;
        for k in 0..cfg.total_arrivals {
            visit(k, w);
            w = (w + s.sample(&mut rs) - a.sample(&mut ra)).max(0.0);
        }
        return;
    }
    let mut w = vec![0.0f64; n];
    for k in 0..cfg.total_arrivals {
        visit(k, w[0]);
        let v = w[0] + s.sample(&mut rs);
        let mut i = 0;
        while i + 1 < n && w[i + 1] < v {
            w[i] = w[i + 1];
            i += 1;
        }
        w[i] = v;
        let gap = a.sample(&mut ra);
        for x in w.iter_mut() {
            *x = (*x - gap).max(0.0);
        }
    }
}

/// Post-warmup waits streamed to `visit`, for estimators that do not fit in memory.
pub fn kw_stream<F: FnMut(f64)>(q: &QueueSpec, cfg: &SimConfig, mut visit: F) -> Result<()> {
    prepare(q, cfg)?;
    let warm = cfg.warmup();
    kw_path(q, cfg, |k, w| {
        if k >= warm {
            visit(w)
        }
    });
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KwResult {
    pub wait_mean: StationaryEstimate,
    pub wait_tail: TailCurve,
    /// Customer-average `P(W > 0)`.
    pub delay_prob: StationaryEstimate,
}

/// Customer-average steady-state waiting time via the Kiefer–Wolfowitz workload vector.
pub fn run_kw(q: &QueueSpec, cfg: &SimConfig) -> Result<KwResult> {
    prepare(q, cfg)?;
    let b = cfg.batch_count as usize;
    let g = cfg.tail_grid.len();
    let mut sums = vec![0.0f64; b];
    let mut counts = vec![0u64; b];
    let mut delayed = vec![0u64; b];
    let mut exceed = vec![vec![0u64; g]; b];
    let starts: Vec<u64> = (0..=cfg.batch_count).map(|i| cfg.batch_start(i)).collect();
    let mut cur = 0usize;
    let warm = cfg.warmup();
    kw_path(q, cfg, |k, w| {
        if k < warm {
            return;
        }
        while k >= starts[cur + 1] {
            cur += 1;
        }
        sums[cur] += w;
        counts[cur] += 1;
        if w > 0.0 {
            delayed[cur] += 1;
        }
        let hits = cfg.tail_grid.partition_point(|&x| x <= w);
        for e in exceed[cur][..hits].iter_mut() {
            *e += 1;
        }
    });
    let total: u64 = counts.iter().sum();
    let point = sums.iter().sum::<f64>() / total as f64;
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let wait_mean = batch_means(point, &means, total);
    let delay_per: Vec<f64> = delayed.iter().zip(&counts).map(|(&d, &c)| d as f64 / c as f64).collect();
    let delay_prob = batch_means(delayed.iter().sum::<u64>() as f64 / total as f64, &delay_per, total);
    let mut survival = Vec::with_capacity(g);
    let mut ci = Vec::with_capacity(g);
    for j in 0..g {
        let per: Vec<f64> = (0..b).map(|i| exceed[i][j] as f64 / counts[i] as f64).collect();
        let p = (0..b).map(|i| exceed[i][j]).sum::<u64>() as f64 / total as f64;
        survival.push(p);
        ci.push(batch_means(p, &per, total).ci_half_width);
    }
    let wait_tail =
        TailCurve { grid: cfg.tail_grid.clone(), survival, ci_half_widths: ci, weighting: Weighting::CustomerAverage }
            .monotone();
    Ok(KwResult { wait_mean, wait_tail, delay_prob })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSimResult {
    /// Time-average `E[L]`, `L = max(0, Q − n)`.
    pub queue_mean: StationaryEstimate,
    /// Time-average `P(Q ≥ n)`.
    pub sspd: StationaryEstimate,
    /// `P(L ≥ x)` on the configured grid.
    pub queue_tail: TailCurve,
    /// `P(Q − n ≥ x)` on the configured grid; differs from `queue_tail` only for `x ≤ 0`.
    pub excess_tail: TailCurve,
    /// Time-average number in system.
    pub system_mean: StationaryEstimate,
    /// `E[L^z]` for each configured moment order.
    pub queue_moments: Vec<StationaryEstimate>,
}

/// Time-weighted histogram of the number in system for one batch.
#[derive(Default, Clone)]
struct Occupancy {
    time: Vec<f64>,
    total: f64,
}

impl Occupancy {
    fn add(&mut self, q: usize, dt: f64) {
        if self.time.len() <= q {
            self.time.resize(q + 1, 0.0);
        }
        self.time[q] += dt;
        self.total += dt;
    }

    /// Time fraction with `Q ≥ m`.
    fn at_least(&self, m: usize) -> f64 {
        if self.total <= 0.0 {
            return 0.0;
        }
        if m == 0 {
            return 1.0;
        }
        (self.time.iter().skip(m).sum::<f64>() / self.total).min(1.0)
    }

    /// Time-average of `f(Q)`.
    fn average<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        if self.total <= 0.0 {
            return 0.0;
        }
        self.time.iter().enumerate().map(|(q, t)| f(q) * t).sum::<f64>() / self.total
    }

    fn merge(&mut self, other: &Occupancy) {
        if self.time.len() < other.time.len() {
            self.time.resize(other.time.len(), 0.0);
        }
        for (a, b) in self.time.iter_mut().zip(&other.time) {
            *a += b;
        }
        self.total += other.total;
    }
}

/// Smallest number in system whose excess over `n` is at least `x`.
fn threshold_for_excess(n: usize, x: f64) -> usize {
    if x <= -(n as f64) {
        0
    } else {
        (n as f64 + x).ceil().max(0.0) as usize
    }
}

/// Time-average occupancy statistics from an event-driven simulation.
pub fn run_event_sim(q: &QueueSpec, cfg: &SimConfig) -> Result<EventSimResult> {
    prepare(q, cfg)?;
    let n = q.n as usize;
    let a = q.arrival.sampler();
    let s = q.service.sampler();
    let mut ra = RngStream::new(cfg.master_seed, ARRIVAL_STREAM);
    let mut rs = RngStream::new(cfg.master_seed, SERVICE_STREAM);
    let starts: Vec<u64> = (0..=cfg.batch_count).map(|i| cfg.batch_start(i)).collect();
    let mut batches = vec![Occupancy::default(); cfg.batch_count as usize];

    let mut departures: BinaryHeap<Reverse<Time>> = BinaryHeap::with_capacity(n);
    let mut waiting: VecDeque<f64> = VecDeque::new();
    let mut in_system = 0usize;
    let mut now = 0.0f64;
    let mut next_arrival = 0.0f64;
    let mut k = 0u64;
    let mut batch: Option<usize> = None;

    while k <= cfg.total_arrivals {
        let dep = departures.peek().map(|r| r.0 .0);
        let t = match dep {
            Some(d) if d <= next_arrival => d,
            _ => next_arrival,
        };
        if let Some(b) = batch {
            batches[b].add(in_system, t - now);
        }
        now = t;
        if dep.is_some_and(|d| d <= next_arrival) {
            departures.pop();
            in_system -= 1;
            if let Some(svc) = waiting.pop_front() {
                departures.push(Reverse(Time(now + svc)));
            }
            continue;
        }
        if k == cfg.total_arrivals {
            break;
        }
        if k >= starts[0] {
            let mut b = batch.unwrap_or(0);
            while k >= starts[b + 1] {
                b += 1;
            }
            batch = Some(b);
        }
        let svc = s.sample(&mut rs);
        in_system += 1;
        if departures.len() < n {
            departures.push(Reverse(Time(now + svc)));
        } else {
            waiting.push_back(svc);
        }
        k += 1;
        next_arrival = now + a.sample(&mut ra);
    }

    let mut all = Occupancy::default();
    for b in &batches {
        all.merge(b);
    }
    let post = cfg.post_warmup();
    let excess = |qq: usize| qq.saturating_sub(n) as f64;
    let queue_mean = batch_means(all.average(excess), &batches.iter().map(|b| b.average(excess)).collect::<Vec<_>>(), post);
    let system_mean = batch_means(
        all.average(|qq| qq as f64),
        &batches.iter().map(|b| b.average(|qq| qq as f64)).collect::<Vec<_>>(),
        post,
    );
    let sspd = batch_means(all.at_least(n), &batches.iter().map(|b| b.at_least(n)).collect::<Vec<_>>(), post);
    let curve = |levels: &dyn Fn(f64) -> usize| {
        let mut survival = Vec::new();
        let mut ci = Vec::new();
        for &x in &cfg.tail_grid {
            let m = levels(x);
            let per: Vec<f64> = batches.iter().map(|b| b.at_least(m)).collect();
            let est = batch_means(all.at_least(m), &per, post);
            survival.push(est.point);
            ci.push(est.ci_half_width);
        }
        TailCurve { grid: cfg.tail_grid.clone(), survival, ci_half_widths: ci, weighting: Weighting::TimeAverage }
            .monotone()
    };
    let queue_moments = cfg
        .moment_orders
        .iter()
        .map(|&z| {
            let f = |qq: usize| excess(qq).powf(z);
            batch_means(all.average(f), &batches.iter().map(|b| b.average(f)).collect::<Vec<_>>(), post)
        })
        .collect();
    let queue_tail = curve(&|x| if x <= 0.0 { 0 } else { threshold_for_excess(n, x) });
    let excess_tail = curve(&|x| threshold_for_excess(n, x));
    Ok(EventSimResult { queue_mean, sspd, queue_tail, excess_tail, system_mean, queue_moments })
}

/// Erlang-C delay probability and `E[L]` for M/M/n with offered load `a`.
pub fn erlang_c(n: u32, a: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(QsimError::InvalidSpec("server count must be at least 1".into()));
    }
    if !(a >= 0.0) || a >= n as f64 {
        return Err(QsimError::Unstable(a / n as f64));
    }
    if a == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut b = 1.0f64;
    for k in 1..=n {
        b = a * b / (k as f64 + a * b);
    }
    let nf = n as f64;
    let c = nf * b / (nf - a * (1.0 - b));
    let rho = a / nf;
    Ok((c, c * rho / (1.0 - rho)))
}

/// Pollaczek–Khinchine mean wait and mean queue length for M/G/1.
pub fn pk_formula(lambda: f64, es: f64, es2: f64) -> Result<(f64, f64)> {
    let rho = lambda * es;
    if !(lambda >= 0.0 && es > 0.0 && es2 >= 0.0) {
        return Err(QsimError::InvalidSpec("rate and moments must be nonnegative".into()));
    }
    if rho >= 1.0 {
        return Err(QsimError::Unstable(rho));
    }
    let w = lambda * es2 / (2.0 * (1.0 - rho));
    Ok((w, lambda * w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mmn(n: u32, rho: f64) -> QueueSpec {
        QueueSpec::new(
            DistributionSpec::exponential(n as f64 * rho).unwrap(),
            DistributionSpec::exponential(1.0).unwrap(),
            n,
        )
        .unwrap()
    }

    #[test]
    fn erlang_c_examples() {
        let (c, l) = erlang_c(2, 1.8).unwrap();
        assert!((c - 0.852_631_578_947).abs() < 1e-9);
        assert!((l - 7.673_684_210_526).abs() < 1e-9);
        let (c, l) = erlang_c(1, 0.9).unwrap();
        assert!((c - 0.9).abs() < 1e-12 && (l - 8.1).abs() < 1e-12);
        assert_eq!(erlang_c(5, 0.0).unwrap(), (0.0, 0.0));
        assert!(erlang_c(2, 2.0).is_err());
        let (c, _) = erlang_c(1000, 990.0).unwrap();
        assert!(c.is_finite() && c > 0.0 && c < 1.0);
    }

    #[test]
    fn erlang_c_matches_direct_sum() {
        for &(n, a) in &[(3u32, 2.1f64), (10, 9.0), (7, 0.5)] {
            let nf = n as f64;
            let mut term = 1.0;
            let mut sum = 0.0;
            for k in 0..n {
                if k > 0 {
                    term *= a / k as f64;
                }
                sum += term;
            }
            let last = term * a / nf * nf / (nf - a);
            let c_direct = last / (sum + last);
            let (c, _) = erlang_c(n, a).unwrap();
            assert!((c - c_direct).abs() < 1e-12, "n={n} a={a}");
        }
    }

    #[test]
    fn pk_examples() {
        let (w, l) = pk_formula(0.8, 1.0, 1.0).unwrap();
        assert!((w - 2.0).abs() < 1e-12 && (l - 1.6).abs() < 1e-12);
        let (w, l) = pk_formula(0.9, 1.0, 2.0).unwrap();
        assert!((w - 9.0).abs() < 1e-12 && (l - 8.1).abs() < 1e-12);
        let (w, l) = pk_formula(1e-12, 1.0, 2.0).unwrap();
        assert!(w < 1e-11 && l < 1e-23);
        assert!(pk_formula(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn estimate_tail_examples() {
        let zeros = vec![(0.0, 1.0); 100];
        let t = estimate_tail(&zeros, &[0.0, 1.0], Weighting::CustomerAverage).unwrap();
        assert_eq!(t.survival, vec![1.0, 0.0]);
        let mut rng = RngStream::new(3, 0);
        let bern: Vec<(f64, f64)> = (0..1_000_000).map(|_| (if rng.uniform() < 0.5 { 1.0 } else { 0.0 }, 1.0)).collect();
        let t = estimate_tail(&bern, &[0.5], Weighting::CustomerAverage).unwrap();
        assert!((t.survival[0] - 0.5).abs() < 0.002);
        assert!((t.ci_half_widths[0] - 0.00098).abs() < 1e-5);
        let t = estimate_tail(&[(2.0, 1.0), (3.0, 1.0)], &[1.0], Weighting::TimeAverage).unwrap();
        assert_eq!(t.survival, vec![1.0]);
        assert_eq!(estimate_tail(&[], &[1.0], Weighting::TimeAverage), Err(QsimError::EmptySamples));
        assert_eq!(estimate_tail(&zeros, &[1.0, 0.0], Weighting::TimeAverage), Err(QsimError::UnsortedGrid));
    }

    #[test]
    fn rejects_unstable_and_bad_config() {
        let e = QueueSpec::new(DistributionSpec::exponential(1.0).unwrap(), DistributionSpec::exponential(1.0).unwrap(), 1);
        assert!(matches!(e, Err(QsimError::Unstable(_))));
        let q = mmn(1, 0.5);
        let mut cfg = SimConfig::new(100, 1, vec![]);
        assert!(run_kw(&q, &cfg).is_err());
        cfg.total_arrivals = 300;
        assert!(run_kw(&q, &cfg).is_ok());
        cfg.warmup_fraction = 0.6;
        assert!(run_event_sim(&q, &cfg).is_err());
    }

    #[test]
    fn lindley_reduction() {
        let q = mmn(1, 0.7);
        let cfg = SimConfig { warmup_fraction: 0.0, ..SimConfig::new(2000, 11, vec![]) };
        let mut ra = RngStream::new(11, ARRIVAL_STREAM);
        let mut rs = RngStream::new(11, SERVICE_STREAM);
        let mut w = 0.0f64;
        let mut expected = Vec::new();
        for _ in 0..2000 {
            expected.push(w);
            w = (w + q.service.sample(&mut rs) - q.arrival.sample(&mut ra)).max(0.0);
        }
        let mut got = Vec::new();
        kw_stream(&q, &cfg, |w| got.push(w)).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn kw_vector_matches_server_free_times() {
        let q = QueueSpec::new(
            DistributionSpec::erlang(2, 2.0 * 2.7).unwrap(),
            DistributionSpec::uniform(0.0, 2.0).unwrap(),
            3,
        )
        .unwrap();
        let cfg = SimConfig { warmup_fraction: 0.0, ..SimConfig::new(5000, 5, vec![]) };
        let mut ra = RngStream::new(5, ARRIVAL_STREAM);
        let mut rs = RngStream::new(5, SERVICE_STREAM);
        let mut free = [0.0f64; 3];
        let mut t = 0.0;
        let mut expected = Vec::new();
        for _ in 0..5000 {
            let (i, &f) = free.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            let w = (f - t).max(0.0);
            expected.push(w);
            free[i] = t + w + q.service.sample(&mut rs);
            t += q.arrival.sample(&mut ra);
        }
        let mut got = Vec::new();
        kw_stream(&q, &cfg, |w| got.push(w)).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-8 * (1.0 + e), "{g} vs {e}");
        }
    }

    #[test]
    fn deterministic_light_traffic() {
        let q = QueueSpec::new(DistributionSpec::deterministic(2.0).unwrap(), DistributionSpec::deterministic(1.0).unwrap(), 1)
            .unwrap();
        let cfg = SimConfig::new(3000, 1, vec![0.0, 1.0]);
        let r = run_event_sim(&q, &cfg).unwrap();
        assert_eq!(r.queue_mean.point, 0.0);
        assert!((r.sspd.point - 0.5).abs() < 1e-9);
        assert!((r.system_mean.point - 0.5).abs() < 1e-9);
        assert_eq!(r.queue_tail.survival, vec![1.0, 0.0]);
        assert!((r.excess_tail.survival[0] - 0.5).abs() < 1e-9);
        assert_eq!(r.excess_tail.survival[1], 0.0);
        let k = run_kw(&q, &cfg).unwrap();
        assert_eq!(k.wait_mean.point, 0.0);
        assert_eq!(k.delay_prob.point, 0.0);
    }

    #[test]
    fn mm1_sspd_and_mean() {
        let q = mmn(1, 0.9);
        let r = run_event_sim(&q, &SimConfig::with_post_warmup(2_000_000, 21, vec![0.0, 1.0, 5.0])).unwrap();
        assert!((r.sspd.point - 0.9).abs() < 0.01, "{:?}", r.sspd);
        assert!((r.queue_mean.point - 8.1).abs() / 8.1 < 0.05, "{:?}", r.queue_mean);
        assert!((r.excess_tail.survival[2] - 0.9f64.powi(6)).abs() < 0.02);
        assert!(r.queue_moments.is_empty());
        let k = run_kw(&q, &SimConfig::with_post_warmup(2_000_000, 21, vec![])).unwrap();
        assert!((k.wait_mean.point - 9.0).abs() / 9.0 < 0.05, "{:?}", k.wait_mean);
    }

    #[test]
    fn queue_moments_match_geometric_law() {
        let q = mmn(1, 0.8);
        let cfg = SimConfig { moment_orders: vec![1.0, 2.0], ..SimConfig::with_post_warmup(2_000_000, 6, vec![]) };
        let r = run_event_sim(&q, &cfg).unwrap();
        assert_eq!(r.queue_moments[0].point, r.queue_mean.point);
        let exact2 = 0.8f64.powi(2) * (1.0 + 0.8) / 0.2f64.powi(2);
        assert!((r.queue_moments[1].point - exact2).abs() / exact2 < 0.08, "{:?}", r.queue_moments[1]);
    }

    #[test]
    fn mm2_examples() {
        let q = mmn(2, 0.9);
        let cfg = SimConfig::with_post_warmup(2_000_000, 8, vec![]);
        let r = run_event_sim(&q, &cfg).unwrap();
        assert!((r.queue_mean.point - 7.6737).abs() / 7.6737 < 0.05, "{:?}", r.queue_mean);
        let k = run_kw(&q, &cfg).unwrap();
        assert!((k.wait_mean.point - 4.2631).abs() / 4.2631 < 0.05, "{:?}", k.wait_mean);
    }

    #[test]
    fn littles_law_on_common_path() {
        let q = QueueSpec::new(
            DistributionSpec::uniform(0.0, 2.0 / 1.6).unwrap(),
            DistributionSpec::erlang(3, 3.0).unwrap(),
            2,
        )
        .unwrap();
        let cfg = SimConfig::with_post_warmup(400_000, 99, vec![]);
        let e = run_event_sim(&q, &cfg).unwrap();
        let k = run_kw(&q, &cfg).unwrap();
        let lhs = e.queue_mean.point;
        let rhs = q.arrival_rate() * k.wait_mean.point;
        let joint = (e.queue_mean.ci_half_width.powi(2) + (q.arrival_rate() * k.wait_mean.ci_half_width).powi(2)).sqrt();
        assert!((lhs - rhs).abs() <= joint, "{lhs} vs {rhs} ± {joint}");
    }

    #[test]
    fn kw_tail_is_monotone_and_batches_cover() {
        let q = mmn(2, 0.8);
        let cfg = SimConfig::new(100_000, 4, vec![0.0, 0.5, 1.0, 2.0, 8.0]);
        let k = run_kw(&q, &cfg).unwrap();
        assert_eq!(k.wait_mean.batches, 30);
        assert_eq!(k.wait_mean.effective_samples, 80_000);
        assert_eq!(k.wait_tail.survival[0], 1.0);
        assert!(k.wait_tail.survival.windows(2).all(|w| w[0] >= w[1]));
        let (c, _) = erlang_c(2, 1.6).unwrap();
        assert!((k.wait_tail.survival[1] - c * (-(2.0 - 1.6) * 0.5f64).exp()).abs() < 0.03);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn reproducible_and_monotone(seed in any::<u64>(), n in 1u32..4, rho in 0.3f64..0.9) {
            let q = mmn(n, rho);
            let cfg = SimConfig::new(3_000, seed, vec![0.0, 1.0, 2.0, 4.0]);
            let a = run_event_sim(&q, &cfg).unwrap();
            let b = run_event_sim(&q, &cfg).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.queue_tail.survival[0], 1.0);
            prop_assert!(a.queue_tail.survival.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(a.excess_tail.survival.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!((a.excess_tail.survival[0] - a.sspd.point).abs() < 1e-12);
            let k1 = run_kw(&q, &cfg).unwrap();
            let k2 = run_kw(&q, &cfg).unwrap();
            prop_assert_eq!(k1, k2);
        }

        #[test]
        fn weighted_tail_monotone(vals in proptest::collection::vec((0.0f64..10.0, 0.01f64..5.0), 1..200)) {
            let grid = [0.0, 1.0, 2.5, 5.0, 9.0];
            let t = estimate_tail(&vals, &grid, Weighting::TimeAverage).unwrap();
            prop_assert_eq!(t.survival[0], 1.0);
            prop_assert!(t.survival.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(t.ci_half_widths.iter().all(|&c| c >= 0.0));
        }
    }
}
