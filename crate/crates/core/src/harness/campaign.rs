use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{Diagnostic, GroupSummary, Report};
use super::{
    comparison_check, heavy_traffic_check, judge, log10_or_none, scaling_check, CheckError, HeavyTrafficRun, Quantity, Relation,
    VerificationRecord,
};
use crate::bounds::{
    self, default_theta, halfin_whitt_bounds, higher_moment_bound, kingman_single, kingman_weakened, lemma_moment_bound,
    main_sspd_bound, main_tail_bound, mean_bounds, refined_mean_bound, sspd_comparison_params, supremum_tail_explicit,
    universal_constants, BoundError, HalfinWhittParams, LaplaceTerm, MomentLemma, MomentSummary,
};
use crate::csim::{self, count_moment_oracle, simulate_supremum, sup_tail_estimate, CsimError, SupremumConfig};
use crate::dists::DistributionSpec;
use crate::qsim::{self, replication_mean, QueueSpec, SimConfig, StationaryEstimate};
use crate::xnum::LogScalar;

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{group}: {source}")]
    Check { group: String, source: CheckError },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl From<CsimError> for CheckError {
    fn from(e: CsimError) -> Self {
        CheckError::Invalid(e.to_string())
    }
}

impl From<BoundError> for CheckError {
    fn from(e: BoundError) -> Self {
        CheckError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Constants,
    Identities,
    Oracle,
    Little,
    Kingman,
    Cyclic,
    MainBounds,
    HalfinWhitt,
    Comparison,
    DelayComparison,
    Supremum,
    MomentLemmas,
    HeavyTraffic,
    Scaling,
}

impl CheckKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckKind::Constants => "constants",
            CheckKind::Identities => "identities",
            CheckKind::Oracle => "oracle",
            CheckKind::Little => "little",
            CheckKind::Kingman => "kingman",
            CheckKind::Cyclic => "cyclic",
            CheckKind::MainBounds => "main-bounds",
            CheckKind::HalfinWhitt => "halfin-whitt",
            CheckKind::Comparison => "comparison",
            CheckKind::DelayComparison => "delay-comparison",
            CheckKind::Supremum => "supremum",
            CheckKind::MomentLemmas => "moment-lemmas",
            CheckKind::HeavyTraffic => "heavy-traffic",
            CheckKind::Scaling => "scaling",
        }
    }

    fn needs_spec(&self) -> bool {
        !matches!(self, CheckKind::Constants | CheckKind::Identities)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    #[serde(default = "d_post_warmup")]
    pub post_warmup_arrivals: u64,
    #[serde(default = "d_warmup")]
    pub warmup_fraction: f64,
    #[serde(default = "d_batches")]
    pub batch_count: u32,
}

fn d_post_warmup() -> u64 {
    1_000_000
}
fn d_warmup() -> f64 {
    0.2
}
fn d_batches() -> u32 {
    30
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings { post_warmup_arrivals: d_post_warmup(), warmup_fraction: d_warmup(), batch_count: d_batches() }
    }
}

impl SimSettings {
    /// Simulator configuration for one group under these settings.
    pub fn config(&self, seed: u64, grid: Vec<f64>, moment_orders: Vec<f64>) -> SimConfig {
        let total = (self.post_warmup_arrivals as f64 / (1.0 - self.warmup_fraction)).ceil() as u64;
        SimConfig {
            total_arrivals: total,
            warmup_fraction: self.warmup_fraction,
            batch_count: self.batch_count,
            master_seed: seed,
            tail_grid: grid,
            moment_orders,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupSettings {
    #[serde(default = "d_sup_reps")]
    pub reps: u32,
    #[serde(default = "d_multiplier")]
    pub horizon_multiplier: f64,
    #[serde(default = "d_levels")]
    pub levels: Vec<f64>,
}

fn d_sup_reps() -> u32 {
    10_000
}
fn d_multiplier() -> f64 {
    20.0
}
fn d_levels() -> Vec<f64> {
    (0..=20).map(f64::from).collect()
}

impl Default for SupSettings {
    fn default() -> Self {
        SupSettings { reps: d_sup_reps(), horizon_multiplier: d_multiplier(), levels: d_levels() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSettings {
    #[serde(default = "d_moment_reps")]
    pub reps: u32,
    #[serde(default = "d_ks")]
    pub ks: Vec<u32>,
    #[serde(default = "d_times")]
    pub times: Vec<f64>,
    #[serde(default = "d_orders")]
    pub orders: Vec<f64>,
    #[serde(default = "d_slope_times")]
    pub slope_times: Vec<f64>,
    #[serde(default = "d_slope_k")]
    pub slope_k: u32,
    #[serde(default = "d_slope_tol")]
    pub slope_tolerance: f64,
}

fn d_moment_reps() -> u32 {
    10_000
}
fn d_ks() -> Vec<u32> {
    vec![1, 10, 100]
}
fn d_times() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}
fn d_orders() -> Vec<f64> {
    vec![2.0, 3.0]
}
fn d_slope_times() -> Vec<f64> {
    vec![10.0, 30.0, 100.0, 300.0, 1000.0]
}
fn d_slope_k() -> u32 {
    10
}
fn d_slope_tol() -> f64 {
    0.2
}

impl Default for MomentSettings {
    fn default() -> Self {
        MomentSettings {
            reps: d_moment_reps(),
            ks: d_ks(),
            times: d_times(),
            orders: d_orders(),
            slope_times: d_slope_times(),
            slope_k: d_slope_k(),
            slope_tolerance: d_slope_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavyTrafficSettings {
    #[serde(default = "d_ht_rhos")]
    pub rhos: Vec<f64>,
    #[serde(default = "d_gate")]
    pub gate_rho: f64,
    #[serde(default = "d_threshold")]
    pub threshold: f64,
    #[serde(default = "d_waits")]
    pub post_warmup_waits: u64,
    #[serde(default = "d_bins")]
    pub bins_log2: u32,
}

fn d_ht_rhos() -> Vec<f64> {
    vec![0.5, 0.9, 0.98]
}
fn d_gate() -> f64 {
    0.98
}
fn d_threshold() -> f64 {
    0.05
}
fn d_waits() -> u64 {
    100_000_000
}
fn d_bins() -> u32 {
    20
}

impl Default for HeavyTrafficSettings {
    fn default() -> Self {
        HeavyTrafficSettings {
            rhos: d_ht_rhos(),
            gate_rho: d_gate(),
            threshold: d_threshold(),
            post_warmup_waits: d_waits(),
            bins_log2: d_bins(),
        }
    }
}

/// A queue in a suite; `rho`, when present, rescales the arrival law to that intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecEntry {
    pub id: String,
    pub arrival: DistributionSpec,
    pub service: DistributionSpec,
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

impl SpecEntry {
    pub fn new(id: &str, arrival: DistributionSpec, service: DistributionSpec, n: u32, rho: Option<f64>) -> Self {
        SpecEntry { id: id.to_string(), arrival, service, n, rho }
    }

    pub fn queue(&self) -> Result<QueueSpec, String> {
        let arrival = match self.rho {
            Some(rho) if !(rho > 0.0 && rho < 1.0) => {
                return Err(format!("spec {}: rho must lie in (0, 1), got {rho}", self.id))
            }
            Some(rho) => self
                .arrival
                .with_mean(self.service.mean() / (self.n as f64 * rho))
                .map_err(|e| format!("spec {}: {e}", self.id))?,
            None => self.arrival.clone(),
        };
        QueueSpec::new(arrival, self.service.clone(), self.n).map_err(|e| format!("spec {}: {e}", self.id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub name: String,
    #[serde(default)]
    pub specs: Vec<SpecEntry>,
    pub checks: Vec<CheckKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supremum: Option<SupSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heavy_traffic: Option<HeavyTrafficSettings>,
}

impl Suite {
    pub fn new(name: &str, specs: Vec<SpecEntry>, checks: Vec<CheckKind>) -> Self {
        Suite { name: name.to_string(), specs, checks, sim: None, supremum: None, moments: None, heavy_traffic: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_r_values")]
    pub r_values: Vec<f64>,
    /// Levels `x` for tail bounds, read as `P(L ≥ x/(1 − ρ))` or `P(L ≥ x√n)`.
    #[serde(default = "d_tail_grid")]
    pub tail_grid: Vec<f64>,
    /// Orders `z` for higher-moment bounds; orders at or above `r/2` are skipped.
    #[serde(default = "d_moment_z")]
    pub moment_z: Vec<f64>,
    #[serde(default = "d_oracle_tol")]
    pub oracle_tolerance: f64,
    /// Absolute tolerance of the supremum tail against `ρ^k` for Markov specs.
    #[serde(default = "d_ruin_tol")]
    pub ruin_tolerance: f64,
    #[serde(default = "d_scaling_rhos")]
    pub scaling_rhos: Vec<f64>,
    #[serde(default = "d_scaling_limit")]
    pub scaling_limit: f64,
    #[serde(default)]
    pub sim: SimSettings,
    #[serde(default)]
    pub supremum: SupSettings,
    #[serde(default)]
    pub moments: MomentSettings,
    #[serde(default)]
    pub heavy_traffic: HeavyTrafficSettings,
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub output: OutputPaths,
    /// Thread count; results do not depend on it.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
}

fn d_r_values() -> Vec<f64> {
    vec![3.0]
}
fn d_tail_grid() -> Vec<f64> {
    vec![1.0, 10.0, 100.0]
}
fn d_moment_z() -> Vec<f64> {
    vec![1.0, 1.25]
}
fn d_oracle_tol() -> f64 {
    0.03
}
fn d_ruin_tol() -> f64 {
    0.01
}
fn d_scaling_rhos() -> Vec<f64> {
    vec![0.8, 0.9, 0.95]
}
fn d_scaling_limit() -> f64 {
    2.0
}

/// Built-in campaign names accepted by [`named_campaign`].
pub const CAMPAIGN_NAMES: [&str; 2] = ["default", "smoke"];

fn exp(rate: f64) -> DistributionSpec {
    DistributionSpec::exponential(rate).expect("valid")
}
fn det(v: f64) -> DistributionSpec {
    DistributionSpec::deterministic(v).expect("valid")
}
fn erl2() -> DistributionSpec {
    DistributionSpec::erlang(2, 2.0).expect("valid")
}
fn unif() -> DistributionSpec {
    DistributionSpec::uniform(0.0, 2.0).expect("valid")
}

fn mm(n: u32, rho: f64) -> SpecEntry {
    SpecEntry::new(&format!("M/M/{n} rho={rho}"), exp(1.0), exp(1.0), n, Some(rho))
}

fn mix(a: (&str, DistributionSpec), s: (&str, DistributionSpec), n: u32, rho: f64) -> SpecEntry {
    SpecEntry::new(&format!("{}/{}/{n} rho={rho}", a.0, s.0), a.1, s.1, n, Some(rho))
}

impl CampaignConfig {
    fn empty(name: &str, seed: u64) -> Self {
        CampaignConfig {
            name: name.to_string(),
            seed,
            r_values: d_r_values(),
            tail_grid: d_tail_grid(),
            moment_z: d_moment_z(),
            oracle_tolerance: d_oracle_tol(),
            ruin_tolerance: d_ruin_tol(),
            scaling_rhos: d_scaling_rhos(),
            scaling_limit: d_scaling_limit(),
            sim: SimSettings::default(),
            supremum: SupSettings::default(),
            moments: MomentSettings::default(),
            heavy_traffic: HeavyTrafficSettings::default(),
            suites: vec![],
            output: OutputPaths::default(),
            workers: None,
        }
    }

    /// Copy restricted to the named suites, in config order.
    pub fn only_suites(&self, names: &[&str]) -> Self {
        let mut c = self.clone();
        c.suites.retain(|s| names.contains(&s.name.as_str()));
        c
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        let err = |m: String| Err(CampaignError::Config(m));
        if self.suites.is_empty() {
            return err("campaign has no suites".into());
        }
        if self.r_values.iter().any(|&r| !(r > 2.0 && r.is_finite())) {
            return err("every moment order r must exceed 2".into());
        }
        if self.tail_grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return err("tail_grid levels must be positive".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for suite in &self.suites {
            if !names.insert(suite.name.as_str()) {
                return err(format!("duplicate suite name {}", suite.name));
            }
            if suite.checks.is_empty() {
                return err(format!("suite {} has no checks", suite.name));
            }
            let sim = suite.sim.as_ref().unwrap_or(&self.sim);
            sim.config(0, vec![], vec![]).validate().map_err(|e| CampaignError::Config(format!("suite {}: {e}", suite.name)))?;
            let sup = suite.supremum.as_ref().unwrap_or(&self.supremum);
            SupremumConfig { n_prime: 1, reps: sup.reps, horizon_multiplier: sup.horizon_multiplier, master_seed: 0, max_level: 1.0 }
                .validate()
                .map_err(|e| CampaignError::Config(format!("suite {}: {e}", suite.name)))?;
            for check in &suite.checks {
                if check.needs_spec() && suite.specs.is_empty() {
                    return err(format!("suite {}: check {} needs at least one spec", suite.name, check.as_str()));
                }
            }
            let mut ids = std::collections::BTreeSet::new();
            for spec in &suite.specs {
                if !ids.insert(spec.id.as_str()) {
                    return err(format!("suite {}: duplicate spec id {}", suite.name, spec.id));
                }
                let q = spec.queue().map_err(|e| CampaignError::Config(format!("suite {}: {e}", suite.name)))?;
                for check in &suite.checks {
                    applicable(*check, &q, self).map_err(|m| {
                        CampaignError::Config(format!("suite {}: spec {}: check {}: {m}", suite.name, spec.id, check.as_str()))
                    })?;
                }
            }
        }
        Ok(())
    }

    /// Record groups `(suite, spec id, check)` in execution order.
    pub fn groups(&self) -> Vec<(String, String, CheckKind)> {
        let mut out = Vec::new();
        for suite in &self.suites {
            for spec in &suite.specs {
                for check in &suite.checks {
                    out.push((suite.name.clone(), spec.id.clone(), *check));
                }
            }
            if suite.specs.is_empty() {
                for check in &suite.checks {
                    out.push((suite.name.clone(), "-".to_string(), *check));
                }
            }
        }
        out
    }
}

fn applicable(check: CheckKind, q: &QueueSpec, cfg: &CampaignConfig) -> Result<(), String> {
    let markov = q.arrival.is_exponential() && q.service.is_exponential();
    let poisson_single = q.arrival.is_exponential() && q.n == 1;
    let moments_ok = |d: &DistributionSpec| cfg.r_values.iter().all(|&r| r < d.moment_order_available());
    match check {
        CheckKind::Oracle if !(markov || poisson_single) => Err("needs M/M/n or M/G/1".into()),
        CheckKind::Kingman if q.n != 1 => Err("needs a single server".into()),
        CheckKind::Cyclic if q.n < 2 => Err("needs at least two servers".into()),
        CheckKind::HeavyTraffic if q.n != 1 => Err("needs a single server".into()),
        CheckKind::HeavyTraffic if !(q.arrival.moment_order_available() > 2.0 && q.service.moment_order_available() > 2.0) => {
            Err("needs finite variances".into())
        }
        CheckKind::MainBounds | CheckKind::HalfinWhitt | CheckKind::Supremum
            if !(moments_ok(&q.arrival) && moments_ok(&q.service)) =>
        {
            Err("moment of order r is infinite".into())
        }
        CheckKind::MomentLemmas
            if !cfg_moment_orders_ok(cfg, &q.service) || !cfg_moment_orders_ok(cfg, &q.arrival) =>
        {
            Err("lemma moment orders exceed available moments".into())
        }
        _ => Ok(()),
    }
}

fn cfg_moment_orders_ok(cfg: &CampaignConfig, d: &DistributionSpec) -> bool {
    cfg.moments.orders.iter().all(|&p| p < d.moment_order_available())
}

/// Named built-in campaign.
pub fn named_campaign(name: &str, seed: u64) -> Option<CampaignConfig> {
    match name {
        "default" => Some(default_campaign(seed)),
        "smoke" => Some(smoke_campaign(seed)),
        _ => None,
    }
}

fn kingman_specs() -> Vec<SpecEntry> {
    let mixes = [
        (("M", exp(1.0)), ("M", exp(1.0))),
        (("M", exp(1.0)), ("E2", erl2())),
        (("E2", erl2()), ("U", unif())),
        (("U", unif()), ("M", exp(1.0))),
        (("D", det(1.0)), ("E2", erl2())),
        (("E2", erl2()), ("D", det(1.0))),
    ];
    let mut out = Vec::new();
    for rho in [0.7, 0.9] {
        for (a, s) in mixes.iter().cloned() {
            out.push(mix(a, s, 1, rho));
        }
    }
    out
}

fn default_campaign(seed: u64) -> CampaignConfig {
    let mut c = CampaignConfig::empty("default", seed);
    c.suites.push(Suite::new("constants", vec![], vec![CheckKind::Constants, CheckKind::Identities]));

    let mut oracle_specs = Vec::new();
    for n in [1, 2, 10] {
        for rho in [0.5, 0.8, 0.9] {
            oracle_specs.push(mm(n, rho));
        }
    }
    oracle_specs.push(mix(("M", exp(1.0)), ("D", det(1.0)), 1, 0.8));
    oracle_specs.push(mix(("M", exp(1.0)), ("E2", erl2()), 1, 0.8));
    c.suites.push(Suite::new("oracle", oracle_specs, vec![CheckKind::Oracle, CheckKind::Little]));

    c.suites.push(Suite::new(
        "main-bounds",
        vec![mm(1, 0.9), mm(10, 0.9), mix(("E2", erl2()), ("U", unif()), 2, 0.8), mix(("M", exp(1.0)), ("D", det(1.0)), 10, 0.95)],
        vec![CheckKind::MainBounds, CheckKind::HalfinWhitt],
    ));

    let mut kingman = Suite::new("kingman", kingman_specs(), vec![CheckKind::Kingman]);
    kingman.sim = Some(SimSettings { post_warmup_arrivals: 10_000_000, ..SimSettings::default() });
    c.suites.push(kingman);

    let mut cyclic_specs = Vec::new();
    for n in [2, 10] {
        cyclic_specs.push(mm(n, 0.9));
        cyclic_specs.push(mix(("E2", erl2()), ("U", unif()), n, 0.9));
        cyclic_specs.push(mix(("U", unif()), ("E2", erl2()), n, 0.7));
        cyclic_specs.push(mix(("M", exp(1.0)), ("D", det(1.0)), n, 0.9));
    }
    c.suites.push(Suite::new("cyclic", cyclic_specs, vec![CheckKind::Cyclic]));

    c.suites.push(Suite::new(
        "comparison",
        vec![mm(10, 0.9), mix(("M", exp(1.0)), ("D", det(1.0)), 10, 0.9)],
        vec![CheckKind::Comparison, CheckKind::DelayComparison, CheckKind::Supremum],
    ));
    c.suites.push(Suite::new(
        "delay-comparison",
        vec![mm(10, 0.5), mix(("M", exp(1.0)), ("D", det(1.0)), 10, 0.6), mix(("E2", erl2()), ("M", exp(1.0)), 20, 0.7)],
        vec![CheckKind::DelayComparison],
    ));

    c.suites.push(Suite::new(
        "moment-lemmas",
        vec![
            SpecEntry::new("exponential", exp(1.0), exp(1.0), 2, Some(0.5)),
            SpecEntry::new("erlang2", erl2(), erl2(), 2, Some(0.5)),
        ],
        vec![CheckKind::MomentLemmas],
    ));

    c.suites.push(Suite::new(
        "heavy-traffic",
        vec![SpecEntry::new("M/M/1", exp(1.0), exp(1.0), 1, Some(0.5))],
        vec![CheckKind::HeavyTraffic],
    ));
    c.suites.push(Suite::new("scaling", vec![mm(10, 0.9), mm(1, 0.9)], vec![CheckKind::Scaling]));
    c
}

fn smoke_campaign(seed: u64) -> CampaignConfig {
    let mut c = CampaignConfig::empty("smoke", seed);
    c.sim = SimSettings { post_warmup_arrivals: 60_000, ..SimSettings::default() };
    c.supremum = SupSettings { reps: 2000, horizon_multiplier: 20.0, levels: (0..=10).map(f64::from).collect() };
    c.moments = MomentSettings {
        reps: 2000,
        ks: vec![1, 10],
        times: vec![0.1, 1.0, 10.0],
        orders: vec![2.0, 3.0],
        slope_times: vec![10.0, 30.0, 100.0],
        slope_k: 10,
        slope_tolerance: 0.2,
    };
    c.heavy_traffic = HeavyTrafficSettings {
        rhos: vec![0.5, 0.9],
        gate_rho: 0.9,
        threshold: 0.15,
        post_warmup_waits: 1_000_000,
        bins_log2: 16,
    };
    c.oracle_tolerance = 0.15;
    c.ruin_tolerance = 0.05;
    c.suites.push(Suite::new("constants", vec![], vec![CheckKind::Constants, CheckKind::Identities]));
    c.suites.push(Suite::new(
        "queues",
        vec![mm(1, 0.7), mm(2, 0.7)],
        vec![CheckKind::Oracle, CheckKind::Little, CheckKind::MainBounds, CheckKind::HalfinWhitt],
    ));
    c.suites.push(Suite::new("kingman", vec![mix(("E2", erl2()), ("U", unif()), 1, 0.7)], vec![CheckKind::Kingman]));
    c.suites.push(Suite::new("cyclic", vec![mix(("U", unif()), ("E2", erl2()), 3, 0.7)], vec![CheckKind::Cyclic]));
    c.suites.push(Suite::new(
        "comparison",
        vec![mm(4, 0.6)],
        vec![CheckKind::Comparison, CheckKind::DelayComparison, CheckKind::Supremum],
    ));
    c.suites.push(Suite::new(
        "moment-lemmas",
        vec![SpecEntry::new("exponential", exp(1.0), exp(1.0), 2, Some(0.5))],
        vec![CheckKind::MomentLemmas],
    ));
    c.suites.push(Suite::new(
        "heavy-traffic",
        vec![SpecEntry::new("M/M/1", exp(1.0), exp(1.0), 1, Some(0.5))],
        vec![CheckKind::HeavyTraffic],
    ));
    c.suites.push(Suite::new("scaling", vec![mm(1, 0.9)], vec![CheckKind::Scaling]));
    c
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the record group `(suite, spec, check)` under `master`.
pub fn group_seed(master: u64, suite: &str, spec: &str, check: CheckKind) -> u64 {
    splitmix(master ^ fnv1a(&format!("{suite}/{spec}/{}", check.as_str())))
}

/// Records and diagnostics produced by one group.
#[derive(Debug, Clone, Default)]
pub(crate) struct GroupOutput {
    pub records: Vec<VerificationRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

struct Ctx<'a> {
    cfg: &'a CampaignConfig,
    suite: &'a Suite,
    spec_id: String,
    check: CheckKind,
    seed: u64,
    sub: u64,
    out: GroupOutput,
}

impl<'a> Ctx<'a> {
    fn next_seed(&mut self) -> u64 {
        self.sub += 1;
        splitmix(self.seed.wrapping_add(self.sub))
    }

    fn sim(&self) -> &'a SimSettings {
        self.suite.sim.as_ref().unwrap_or(&self.cfg.sim)
    }

    fn sup(&self) -> &'a SupSettings {
        self.suite.supremum.as_ref().unwrap_or(&self.cfg.supremum)
    }

    fn moments(&self) -> &'a MomentSettings {
        self.suite.moments.as_ref().unwrap_or(&self.cfg.moments)
    }

    fn heavy(&self) -> &'a HeavyTrafficSettings {
        self.suite.heavy_traffic.as_ref().unwrap_or(&self.cfg.heavy_traffic)
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        bound_id: &str,
        param: String,
        quantity: Quantity,
        relation: Relation,
        bound_exp10: Option<f64>,
        estimate: f64,
        ci: f64,
        grid_point: Option<f64>,
    ) {
        let verdict = judge(relation, quantity, bound_exp10, estimate, ci);
        self.out.records.push(VerificationRecord {
            check_id: format!("{}.{bound_id}", self.check.as_str()),
            suite: self.suite.name.clone(),
            spec: self.spec_id.clone(),
            param,
            bound_id: bound_id.to_string(),
            quantity,
            relation,
            bound_exp10,
            estimate,
            estimate_ci: ci,
            verdict,
            seed: self.seed,
            grid_point,
        });
    }

    fn dominance(&mut self, bound_id: &str, param: String, quantity: Quantity, bound: LogScalar, est: &StationaryEstimate, grid: Option<f64>) {
        self.record(bound_id, param, quantity, Relation::AtMost, bound.exp10(), est.point, est.ci_half_width, grid);
    }

    fn diagnostic(&mut self, key: &str, value: serde_json::Value) {
        self.out.diagnostics.push(Diagnostic {
            group: format!("{}/{}/{}", self.suite.name, self.spec_id, self.check.as_str()),
            key: key.to_string(),
            value,
        });
    }
}

/// Runs one record group in isolation.
pub fn run_group(cfg: &CampaignConfig, suite: &str, spec: &str, check: CheckKind) -> Result<Vec<VerificationRecord>, CampaignError> {
    cfg.validate()?;
    Ok(run_group_inner(cfg, suite, spec, check)?.records)
}

fn run_group_inner(cfg: &CampaignConfig, suite_name: &str, spec_id: &str, check: CheckKind) -> Result<GroupOutput, CampaignError> {
    let group = format!("{suite_name}/{spec_id}/{}", check.as_str());
    let suite = cfg
        .suites
        .iter()
        .find(|s| s.name == suite_name)
        .ok_or_else(|| CampaignError::Config(format!("no suite named {suite_name}")))?;
    let q = if check.needs_spec() {
        let entry = suite
            .specs
            .iter()
            .find(|s| s.id == spec_id)
            .ok_or_else(|| CampaignError::Config(format!("suite {suite_name} has no spec {spec_id}")))?;
        Some(entry.queue().map_err(CampaignError::Config)?)
    } else {
        None
    };
    let mut ctx = Ctx {
        cfg,
        suite,
        spec_id: spec_id.to_string(),
        check,
        seed: group_seed(cfg.seed, suite_name, spec_id, check),
        sub: 0,
        out: GroupOutput::default(),
    };
    let result = match (check, q.as_ref()) {
        (CheckKind::Constants, _) => check_constants(&mut ctx),
        (CheckKind::Identities, _) => check_identities(&mut ctx),
        (CheckKind::Oracle, Some(q)) => check_oracle(&mut ctx, q),
        (CheckKind::Little, Some(q)) => check_little(&mut ctx, q),
        (CheckKind::Kingman, Some(q)) => check_kingman(&mut ctx, q),
        (CheckKind::Cyclic, Some(q)) => check_cyclic(&mut ctx, q),
        (CheckKind::MainBounds, Some(q)) => check_main(&mut ctx, q),
        (CheckKind::HalfinWhitt, Some(q)) => check_halfin_whitt(&mut ctx, q),
        (CheckKind::Comparison, Some(q)) => check_comparison(&mut ctx, q),
        (CheckKind::DelayComparison, Some(q)) => check_delay_comparison(&mut ctx, q),
        (CheckKind::Supremum, Some(q)) => check_supremum(&mut ctx, q),
        (CheckKind::MomentLemmas, Some(q)) => check_moment_lemmas(&mut ctx, q),
        (CheckKind::HeavyTraffic, Some(q)) => check_heavy_traffic(&mut ctx, q),
        (CheckKind::Scaling, Some(q)) => check_scaling(&mut ctx, q),
        (_, None) => Err(CheckError::Invalid("check needs a spec".into())),
    };
    result.map_err(|source| CampaignError::Check { group, source })?;
    Ok(ctx.out)
}

/// Validates `cfg`, runs every record group, and writes the configured outputs.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Report, CampaignError> {
    cfg.validate()?;
    let groups = cfg.groups();
    let work = || -> Result<Vec<GroupOutput>, CampaignError> {
        groups.par_iter().map(|(suite, spec, check)| run_group_inner(cfg, suite, spec, *check)).collect()
    };
    let outputs = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| CampaignError::Config(format!("cannot build thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut summaries = Vec::new();
    for ((suite, spec, check), out) in groups.iter().zip(outputs) {
        summaries.push(GroupSummary::from_records(suite, spec, check.as_str(), &out.records));
        records.extend(out.records);
        diagnostics.extend(out.diagnostics);
    }
    let report = Report::new(&cfg.name, cfg.seed, records, summaries, diagnostics);
    if let Some(path) = &cfg.output.csv {
        write(path, &report.to_csv())?;
    }
    if let Some(path) = &cfg.output.json {
        write(path, &report.to_json())?;
    }
    Ok(report)
}

fn write(path: &PathBuf, body: &str) -> Result<(), CampaignError> {
    std::fs::write(path, body).map_err(|e| CampaignError::Io { path: path.display().to_string(), message: e.to_string() })
}

const CONSTANT_REFERENCES: [(f64, f64); 2] = [(3.0, 405.8036), (4.0, 542.614)];
const CONSTANT_TOLERANCE: f64 = 0.001;
const CONSTANT_CEILING_EXP10: f64 = 450.0;

fn check_constants(ctx: &mut Ctx) -> Result<(), CheckError> {
    for (r, reference) in CONSTANT_REFERENCES {
        let (c1, _) = universal_constants(r)?;
        let e = c1.exp10().unwrap_or(f64::NEG_INFINITY);
        ctx.record(
            "c1-exp10",
            format!("r={r}"),
            Quantity::Constant,
            Relation::Within { tolerance: CONSTANT_TOLERANCE },
            Some(reference.log10()),
            e,
            0.0,
            None,
        );
    }
    let (c1, c2) = universal_constants(3.0)?;
    for (id, c) in [("c1-ceiling", c1), ("c2-ceiling", c2)] {
        let e = c.exp10().unwrap_or(f64::NEG_INFINITY);
        ctx.record(id, "r=3".into(), Quantity::Constant, Relation::AtMost, Some(CONSTANT_CEILING_EXP10.log10()), e, 0.0, None);
    }
    Ok(())
}

const IDENTITY_RHOS: [f64; 5] = [0.05, 0.3, 0.6, 0.9, 0.999];

fn e10(x: LogScalar) -> f64 {
    x.exp10().unwrap_or(f64::NEG_INFINITY)
}

fn check_identities(ctx: &mut Ctx) -> Result<(), CheckError> {
    let mut rs = ctx.cfg.r_values.clone();
    for extra in [2.5, 3.0, 4.0, 8.0] {
        if !rs.contains(&extra) {
            rs.push(extra);
        }
    }
    for r in rs {
        let mut gap_scaled = Vec::new();
        let mut worst_z1: f64 = 0.0;
        for rho in IDENTITY_RHOS {
            let m = MomentSummary::new(r, 2.0, 1.5, 4, rho, 1.0)?;
            let (mean, _) = mean_bounds(&m)?;
            worst_z1 = worst_z1.max((e10(higher_moment_bound(&m, 1.0)?) - e10(mean)).abs());
            gap_scaled.push(e10(mean) + (1.0 - rho).log10());
        }
        ctx.record(
            "moment-one-equals-mean",
            format!("r={r}"),
            Quantity::Statistic,
            Relation::Within { tolerance: 1e-12 },
            None,
            worst_z1,
            0.0,
            None,
        );
        let spread = gap_scaled.iter().cloned().fold(f64::MIN, f64::max) - gap_scaled.iter().cloned().fold(f64::MAX, f64::min);
        ctx.record(
            "mean-times-gap-constant",
            format!("r={r}"),
            Quantity::Statistic,
            Relation::Within { tolerance: 1e-9 },
            None,
            spread,
            0.0,
            None,
        );
        let m = MomentSummary::new(r, 2.0, 1.5, 4, 0.5, 1.0)?;
        let mut worst: f64 = 0.0;
        for &x in &ctx.cfg.tail_grid {
            let d = e10(main_tail_bound(&m, x)?) - e10(main_tail_bound(&m, 2.0 * x)?);
            worst = worst.max((d - r / 2.0 * 2f64.log10()).abs());
        }
        ctx.record("tail-power-law", format!("r={r}"), Quantity::Statistic, Relation::Within { tolerance: 1e-12 }, None, worst, 0.0, None);
    }
    Ok(())
}

fn check_oracle(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let tol = ctx.cfg.oracle_tolerance;
    let seed = ctx.next_seed();
    if q.arrival.is_exponential() && q.service.is_exponential() {
        let (_, l) = qsim::erlang_c(q.n, q.offered_load())?;
        let r = qsim::run_event_sim(q, &ctx.sim().config(seed, vec![], vec![]))?;
        ctx.record(
            "erlang-c-queue-mean",
            format!("n={},rho={}", q.n, q.rho()),
            Quantity::Mean,
            Relation::Relative { tolerance: tol },
            log10_or_none(l),
            r.queue_mean.point,
            r.queue_mean.ci_half_width,
            None,
        );
    }
    if q.arrival.is_exponential() && q.n == 1 {
        let (w, _) = qsim::pk_formula(q.arrival_rate(), q.service.mean(), q.service.raw_moment(2.0).map_err(BoundError::from)?)?;
        let k = qsim::run_kw(q, &ctx.sim().config(seed, vec![], vec![]))?;
        ctx.record(
            "pk-wait-mean",
            format!("rho={}", q.rho()),
            Quantity::Mean,
            Relation::Relative { tolerance: tol },
            log10_or_none(w),
            k.wait_mean.point,
            k.wait_mean.ci_half_width,
            None,
        );
    }
    Ok(())
}

fn check_little(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let cfg = ctx.sim().config(ctx.next_seed(), vec![], vec![]);
    let e = qsim::run_event_sim(q, &cfg)?;
    let k = qsim::run_kw(q, &cfg)?;
    let lambda = q.arrival_rate();
    let joint = e.queue_mean.ci_half_width.hypot(lambda * k.wait_mean.ci_half_width);
    ctx.record(
        "queue-vs-rate-times-wait",
        format!("rate={lambda}"),
        Quantity::Mean,
        Relation::Within { tolerance: joint },
        log10_or_none(lambda * k.wait_mean.point),
        e.queue_mean.point,
        joint,
        None,
    );
    Ok(())
}

fn check_kingman(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let cfg = ctx.sim().config(ctx.next_seed(), vec![], vec![]);
    let e = qsim::run_event_sim(q, &cfg)?;
    let k = qsim::run_kw(q, &cfg)?;
    let (ca2, cs2, rho) = (q.arrival.scv(), q.service.scv(), q.rho());
    let b = kingman_single(ca2, cs2, rho, q.arrival.mean())?;
    let param = format!("cA2={ca2},cS2={cs2},rho={rho}");
    ctx.dominance("queue-mean", param.clone(), Quantity::Mean, b.queue, &e.queue_mean, None);
    ctx.dominance("wait-mean", param.clone(), Quantity::Mean, b.wait, &k.wait_mean, None);
    ctx.dominance("weakened-queue-mean", param, Quantity::Mean, kingman_weakened(ca2, cs2, rho)?, &e.queue_mean, None);
    Ok(())
}

fn check_cyclic(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let cfg = ctx.sim().config(ctx.next_seed(), vec![], vec![]);
    let e = qsim::run_event_sim(q, &cfg)?;
    let (ca2, cs2, rho) = (q.arrival.scv(), q.service.scv(), q.rho());
    let b = bounds::cyclic_multiserver(ca2, cs2, q.n, rho)?;
    ctx.dominance("queue-mean", format!("n={},cA2={ca2},cS2={cs2},rho={rho}", q.n), Quantity::Mean, b, &e.queue_mean, None);
    Ok(())
}

fn usable_z(cfg: &CampaignConfig, r: f64) -> Vec<f64> {
    cfg.moment_z.iter().cloned().filter(|&z| z >= 1.0 && z < r / 2.0).collect()
}

fn all_z(cfg: &CampaignConfig) -> Vec<f64> {
    let mut zs: Vec<f64> = cfg.r_values.iter().flat_map(|&r| usable_z(cfg, r)).collect();
    zs.sort_by(f64::total_cmp);
    zs.dedup();
    zs
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn check_main(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let rho = q.rho();
    let levels = sorted(ctx.cfg.tail_grid.iter().map(|x| x / (1.0 - rho)).collect());
    let zs = all_z(ctx.cfg);
    let cfg = ctx.sim().config(ctx.next_seed(), levels.clone(), zs.clone());
    let e = qsim::run_event_sim(q, &cfg)?;
    let k = qsim::run_kw(q, &cfg)?;
    for r in ctx.cfg.r_values.clone() {
        let m = MomentSummary::from_queue(&q.arrival, &q.service, q.n, r)?;
        for (i, &x) in sorted(ctx.cfg.tail_grid.clone()).iter().enumerate() {
            let est = StationaryEstimate {
                point: e.queue_tail.survival[i],
                ci_half_width: e.queue_tail.ci_half_widths[i],
                batches: e.queue_mean.batches,
                effective_samples: e.queue_mean.effective_samples,
            };
            ctx.dominance("tail", format!("r={r},x={x}"), Quantity::Probability, main_tail_bound(&m, x)?, &est, Some(x));
        }
        ctx.dominance("delay-probability", format!("r={r}"), Quantity::Probability, main_sspd_bound(&m)?, &e.sspd, None);
        let (lq, lw) = mean_bounds(&m)?;
        ctx.dominance("queue-mean", format!("r={r}"), Quantity::Mean, lq, &e.queue_mean, None);
        ctx.dominance("wait-mean", format!("r={r}"), Quantity::Mean, lw, &k.wait_mean, None);
        ctx.dominance("refined-queue-mean", format!("r={r}"), Quantity::Mean, refined_mean_bound(&m)?, &e.queue_mean, None);
        for z in usable_z(ctx.cfg, r) {
            let idx = zs.iter().position(|&v| v == z).expect("z listed");
            let est = e.queue_moments[idx];
            ctx.dominance("queue-moment", format!("r={r},z={z}"), Quantity::Moment, higher_moment_bound(&m, z)?, &est, Some(z));
        }
    }
    Ok(())
}

fn check_halfin_whitt(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let rho = q.rho();
    let sqrt_n = (q.n as f64).sqrt();
    let b = sqrt_n * (1.0 - rho);
    let grid = sorted(ctx.cfg.tail_grid.clone());
    let levels: Vec<f64> = grid.iter().map(|x| x * sqrt_n).collect();
    let zs = all_z(ctx.cfg);
    let cfg = ctx.sim().config(ctx.next_seed(), levels, zs.clone());
    let e = qsim::run_event_sim(q, &cfg)?;
    for r in ctx.cfg.r_values.clone() {
        let p = HalfinWhittParams {
            r,
            m_s: q.service.normalized_moment(r).map_err(BoundError::from)?,
            m_a: q.arrival.normalized_moment(r).map_err(BoundError::from)?,
            b,
            n: Some(q.n),
        };
        for (i, &x) in grid.iter().enumerate() {
            let hw = halfin_whitt_bounds(&p, x, 1.0)?;
            let est = StationaryEstimate { point: e.queue_tail.survival[i], ci_half_width: e.queue_tail.ci_half_widths[i], ..e.queue_mean };
            ctx.dominance("tail", format!("r={r},B={b},x={x}"), Quantity::Probability, hw.tail, &est, Some(x));
        }
        let hw = halfin_whitt_bounds(&p, 1.0, 1.0)?;
        ctx.dominance("delay-probability", format!("r={r},B={b}"), Quantity::Probability, hw.sspd, &e.sspd, None);
        let scaled = StationaryEstimate {
            point: e.queue_mean.point / sqrt_n,
            ci_half_width: e.queue_mean.ci_half_width / sqrt_n,
            ..e.queue_mean
        };
        ctx.dominance("scaled-queue-mean", format!("r={r},B={b}"), Quantity::Mean, hw.mean, &scaled, None);
        for z in usable_z(ctx.cfg, r) {
            let idx = zs.iter().position(|&v| v == z).expect("z listed");
            let f = (q.n as f64).powf(z / 2.0);
            let raw = e.queue_moments[idx];
            let est = StationaryEstimate { point: raw.point / f, ci_half_width: raw.ci_half_width / f, ..raw };
            let bound = halfin_whitt_bounds(&p, 1.0, z)?.moment;
            ctx.dominance("scaled-queue-moment", format!("r={r},B={b},z={z}"), Quantity::Moment, bound, &est, Some(z));
        }
    }
    Ok(())
}

fn sup_config(ctx: &mut Ctx, n_prime: u32, max_level: f64) -> SupremumConfig {
    let s = ctx.sup().clone();
    SupremumConfig { n_prime, reps: s.reps, horizon_multiplier: s.horizon_multiplier, master_seed: ctx.next_seed(), max_level }
}

fn sup_diagnostics(ctx: &mut Ctx, samples: &csim::SupSamples, n_prime: u32) {
    ctx.diagnostic(
        "supremum-horizon",
        json!({
            "n_prime": n_prime,
            "horizon": samples.horizon,
            "doublings": samples.doublings,
            "truncation_diag": samples.truncation_diag,
        }),
    );
}

fn check_comparison(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let levels = sorted(ctx.sup().levels.clone());
    let max_level = levels.last().copied().unwrap_or(1.0);
    let cfg = ctx.sim().config(ctx.next_seed(), levels.clone(), vec![]);
    let e = qsim::run_event_sim(q, &cfg)?;
    let scfg = sup_config(ctx, q.n, max_level);
    let samples = simulate_supremum(&q.arrival, &q.service, &scfg)?;
    sup_diagnostics(ctx, &samples, q.n);
    let sup = sup_tail_estimate(&samples, &levels)?;
    for p in comparison_check(&e.excess_tail, &sup)? {
        ctx.record(
            "queue-vs-supremum",
            format!("k={}", p.level),
            Quantity::Probability,
            Relation::AtMostJoint { multiple: 3.0 },
            log10_or_none(p.upper),
            p.lower,
            p.joint_ci,
            Some(p.level),
        );
    }
    if q.arrival.is_exponential() && q.service.is_exponential() {
        let ratio = q.arrival_rate() / (q.n as f64 * q.service.rate());
        for (i, &k) in levels.iter().enumerate() {
            ctx.record(
                "gamblers-ruin",
                format!("k={k}"),
                Quantity::Probability,
                Relation::Within { tolerance: ctx.cfg.ruin_tolerance },
                log10_or_none(ratio.powf(k.max(0.0).ceil())),
                sup.survival[i],
                sup.ci_half_widths[i],
                Some(k),
            );
        }
    }
    Ok(())
}

fn check_delay_comparison(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let (n_prime, threshold) = sspd_comparison_params(q.n, q.offered_load())?;
    let cfg = ctx.sim().config(ctx.next_seed(), vec![], vec![]);
    let e = qsim::run_event_sim(q, &cfg)?;
    let param = format!("n'={n_prime},threshold={threshold}");
    if threshold == 0 {
        ctx.record("delay-vs-supremum", param, Quantity::Probability, Relation::AtMost, Some(0.0), e.sspd.point, e.sspd.ci_half_width, Some(0.0));
        return Ok(());
    }
    let scfg = sup_config(ctx, n_prime, threshold as f64);
    let samples = simulate_supremum(&q.arrival, &q.service, &scfg)?;
    sup_diagnostics(ctx, &samples, n_prime);
    let sup = sup_tail_estimate(&samples, &[threshold as f64])?;
    let joint = e.sspd.ci_half_width.hypot(sup.ci_half_widths[0]);
    ctx.record(
        "delay-vs-supremum",
        param,
        Quantity::Probability,
        Relation::AtMostJoint { multiple: 3.0 },
        log10_or_none(sup.survival[0]),
        e.sspd.point,
        joint,
        Some(threshold as f64),
    );
    Ok(())
}

fn check_supremum(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let levels: Vec<f64> = sorted(ctx.sup().levels.clone()).into_iter().filter(|&z| z > 0.0).collect();
    let max_level = levels.last().copied().unwrap_or(1.0);
    let scfg = sup_config(ctx, q.n, max_level);
    let samples = simulate_supremum(&q.arrival, &q.service, &scfg)?;
    sup_diagnostics(ctx, &samples, q.n);
    let sup = sup_tail_estimate(&samples, &levels)?;
    for r in ctx.cfg.r_values.clone() {
        let m_s = q.service.normalized_moment(r).map_err(BoundError::from)?;
        let m_a = q.arrival.normalized_moment(r).map_err(BoundError::from)?;
        for (i, &z) in levels.iter().enumerate() {
            let b = supremum_tail_explicit(r, m_s, m_a, q.rho(), z)?;
            let est = replicated(sup.survival[i], sup.ci_half_widths[i], samples.values.len());
            ctx.dominance("explicit-tail", format!("r={r},z={z}"), Quantity::Probability, b, &est, Some(z));
        }
    }
    Ok(())
}

fn replicated(point: f64, ci: f64, n: usize) -> StationaryEstimate {
    StationaryEstimate { point, ci_half_width: ci, batches: 0, effective_samples: n as u64 }
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn check_moment_lemmas(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let ms = ctx.moments().clone();
    let s = q.service.with_mean(1.0).map_err(BoundError::from)?;
    let a = q.arrival.clone();
    let (theta, _) = default_theta(1.0, s.raw_moment(2.0).map_err(BoundError::from)?)?;
    let lap = LaplaceTerm::exact(&s, theta)?;
    ctx.diagnostic("laplace-term", json!({ "theta": lap.theta, "inv_gap": lap.inv_gap }));
    let reps = ms.reps;
    let mom = |d: &DistributionSpec, p: f64| d.raw_moment(p).map_err(BoundError::from);

    for &r in &ms.orders {
        let es_r = mom(&s, r)?;
        for &t in &ms.times {
            for &k in &ms.ks {
                let seed = ctx.next_seed();
                let est = csim::estimate_pooled_moment(&s, k, t, r, true, reps, seed)?;
                let param = format!("r={r},k={k},t={t}");
                if t >= 1.0 && r >= 2.0 {
                    let b = lemma_moment_bound(&MomentLemma::PooledCentral { r, k, t, es_r, laplace: lap })?;
                    ctx.dominance("pooled-central", param.clone(), Quantity::Moment, b, &est, Some(t));
                }
                if t <= 1.0 && r >= 2.0 {
                    let weak = lemma_moment_bound(&MomentLemma::PooledSmallTimeWeak { p: r, k, t, laplace: lap })?;
                    ctx.dominance("pooled-small-time-weak", param.clone(), Quantity::Moment, weak, &est, Some(t));
                    let strong = lemma_moment_bound(&MomentLemma::PooledSmallTime { p: r, k, t, laplace: lap })?;
                    ctx.dominance("pooled-small-time", param, Quantity::Moment, strong, &est, Some(t));
                }
            }
            if t >= 1.0 && r >= 2.0 {
                let seed = ctx.next_seed();
                let est = csim::estimate_count_moment(&s, t, r, true, reps, seed)?;
                let b = lemma_moment_bound(&MomentLemma::RenewalCentral { r, t, es_r, laplace: lap })?;
                ctx.dominance("renewal-central", format!("r={r},t={t}"), Quantity::Moment, b, &est, Some(t));
                let seed = ctx.next_seed();
                let est = csim::estimate_pooled_moment(&s, 1, t, r, true, reps, seed)?;
                let b = lemma_moment_bound(&MomentLemma::EquilibriumCentral { r, t, es_r, laplace: lap })?;
                ctx.dominance("equilibrium-central", format!("r={r},t={t}"), Quantity::Moment, b, &est, Some(t));
            }
        }
    }

    let mut ps = vec![1.0];
    ps.extend(ms.orders.iter().cloned().filter(|&p| p != 1.0));
    for &p in &ps {
        let seed = ctx.next_seed();
        let est = csim::estimate_count_moment(&s, 1.0, p, false, reps, seed)?;
        let b = lemma_moment_bound(&MomentLemma::UnitCount { p, laplace: lap })?;
        ctx.dominance("unit-count", format!("p={p}"), Quantity::Moment, b, &est, Some(1.0));
        let shift = |v: u64| (v as f64 + 1.0).powf(p);
        let unit = match count_moment_oracle(&s, 1.0, shift) {
            Some(v) => v,
            None => {
                let seed = ctx.next_seed();
                let c = csim::pooled_count_samples(&s, 1, 1.0, false, reps, seed)?;
                replication_mean(&c.iter().map(|&v| shift(v)).collect::<Vec<_>>()).point
            }
        };
        for &t in ms.times.iter().filter(|&&t| t >= 1.0) {
            let seed = ctx.next_seed();
            let c = csim::pooled_count_samples(&s, 1, t, false, reps, seed)?;
            let est = replication_mean(&c.iter().map(|&v| shift(v)).collect::<Vec<_>>());
            let b = lemma_moment_bound(&MomentLemma::ShiftedCount { p, t, laplace: lap })?;
            ctx.dominance("shifted-count", format!("p={p},t={t}"), Quantity::Moment, b, &est, Some(t));
            let g = lemma_moment_bound(&MomentLemma::CountGrowth { p, t, unit_shifted_moment: unit })?;
            ctx.dominance("count-growth", format!("p={p},t={t}"), Quantity::Moment, g, &est, Some(t));
        }
    }

    let mu_a = a.rate();
    for &r in &ms.orders {
        let ea_r = mom(&a, r)?;
        let seed = ctx.next_seed();
        let one = csim::estimate_partial_sum_moment(&a, 1, r, reps, seed)?;
        let x_moment = one.point;
        for &k in &ms.ks {
            let seed = ctx.next_seed();
            let samples = csim::partial_sum_samples(&a, k, reps, seed)?;
            let centred = replication_mean(&samples.iter().map(|s| (k as f64 - s).abs().powf(r)).collect::<Vec<_>>());
            let raw = replication_mean(&samples.iter().map(|s| s.powf(r)).collect::<Vec<_>>());
            let param = format!("r={r},k={k}");
            let b = lemma_moment_bound(&MomentLemma::ArrivalPartialSum { r, k, ea_r, mu_a })?;
            ctx.dominance("arrival-partial-sum", param.clone(), Quantity::Moment, b, &centred, None);
            if r >= 2.0 {
                let b = lemma_moment_bound(&MomentLemma::MarcinkiewiczZygmund { p: r, k, abs_moment: x_moment })?;
                ctx.dominance("marcinkiewicz-zygmund", param.clone(), Quantity::Moment, b, &centred, None);
            }
            let b = lemma_moment_bound(&MomentLemma::NonnegativeSum {
                p: r,
                k,
                mean: 1.0,
                moment_p: a.normalized_moment(r).map_err(BoundError::from)?,
            })?;
            ctx.dominance("nonnegative-sum", param, Quantity::Moment, b, &raw, None);
        }
    }

    if s.is_exponential() {
        for &r in ms.orders.iter().filter(|&&r| r >= 2.0) {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut points = Vec::new();
            for &t in &ms.slope_times {
                let seed = ctx.next_seed();
                let est = csim::estimate_pooled_moment(&s, ms.slope_k, t, r, true, reps, seed)?;
                xs.push(t.ln());
                ys.push(est.point.ln());
                points.push(json!({ "t": t, "moment": est.point, "ci": est.ci_half_width }));
            }
            let slope = ols_slope(&xs, &ys);
            ctx.diagnostic("pooled-central-scaling", json!({ "r": r, "k": ms.slope_k, "points": points, "slope": slope }));
            ctx.record(
                "pooled-central-slope",
                format!("r={r},k={}", ms.slope_k),
                Quantity::Statistic,
                Relation::Within { tolerance: ms.slope_tolerance },
                log10_or_none(r / 2.0),
                slope,
                0.0,
                None,
            );
        }
    }
    Ok(())
}

fn check_heavy_traffic(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let h = ctx.heavy().clone();
    let run = HeavyTrafficRun {
        post_warmup_waits: h.post_warmup_waits,
        bins_log2: h.bins_log2,
        gate_rho: h.gate_rho,
        threshold: h.threshold,
        seed: ctx.next_seed(),
    };
    let points = heavy_traffic_check(&q.arrival, &q.service, &h.rhos, &run)?;
    for p in &points {
        ctx.diagnostic("heavy-traffic-ks", serde_json::to_value(p).expect("serializable"));
        if p.verdict.is_some() {
            ctx.record(
                "ks-exponential-limit",
                format!("rho={},target_mean={:.6},waits={}", p.rho, p.target_mean, p.waits),
                Quantity::Statistic,
                Relation::AtMost,
                log10_or_none(h.threshold),
                p.ks,
                0.0,
                Some(p.rho),
            );
        }
    }
    Ok(())
}

fn check_scaling(ctx: &mut Ctx, q: &QueueSpec) -> Result<(), CheckError> {
    let cfg = ctx.sim().config(ctx.next_seed(), vec![], vec![]);
    let res = scaling_check(&q.arrival, &q.service, q.n, &ctx.cfg.scaling_rhos, ctx.cfg.scaling_limit, Some(&cfg))?;
    ctx.diagnostic("scaling", serde_json::to_value(&res).expect("serializable"));
    ctx.record(
        "gap-times-queue-mean-ratio",
        format!("n={},rhos={:?},source={}", q.n, res.rhos, res.source),
        Quantity::Statistic,
        Relation::AtMost,
        log10_or_none(res.limit),
        res.ratio,
        0.0,
        None,
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_are_specs_times_checks() {
        let mut c = CampaignConfig::empty("t", 1);
        c.suites.push(Suite::new("a", vec![mm(1, 0.5), mm(2, 0.5), mm(3, 0.5)], vec![CheckKind::Oracle, CheckKind::Little]));
        assert_eq!(c.groups().len(), 6);
        c.validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut c = CampaignConfig::empty("t", 1);
        assert!(c.validate().is_err());
        c.suites.push(Suite::new("a", vec![mm(2, 0.5)], vec![CheckKind::Kingman]));
        assert!(matches!(c.validate(), Err(CampaignError::Config(_))));
        c.suites[0].checks = vec![CheckKind::Cyclic];
        c.validate().unwrap();
        c.suites[0].specs[0].rho = Some(1.2);
        assert!(c.validate().is_err());
        c.suites[0].specs[0].rho = Some(0.5);
        c.suites.push(Suite::new("a", vec![], vec![CheckKind::Constants]));
        assert!(c.validate().is_err());
    }

    #[test]
    fn seeds_differ_by_group() {
        let a = group_seed(1, "s", "x", CheckKind::Oracle);
        let b = group_seed(1, "s", "x", CheckKind::Little);
        let c = group_seed(2, "s", "x", CheckKind::Oracle);
        assert!(a != b && a != c);
        assert_eq!(a, group_seed(1, "s", "x", CheckKind::Oracle));
    }

    #[test]
    fn named_campaigns_validate() {
        for name in CAMPAIGN_NAMES {
            named_campaign(name, 7).unwrap().validate().unwrap();
        }
        assert!(named_campaign("nope", 1).is_none());
    }

    #[test]
    fn constants_and_identities_pass() {
        let c = named_campaign("default", 1).unwrap().only_suites(&["constants"]);
        let report = run_campaign(&c).unwrap();
        assert!(report.records.iter().all(|r| r.verdict == super::super::Verdict::Pass), "{:#?}", report.records);
        assert_eq!(report.summary.fail, 0);
    }

    #[test]
    fn config_json_roundtrip() {
        let c = named_campaign("smoke", 3).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        let back: CampaignConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let bad = s.replacen("\"suites\"", "\"suitez\"", 1);
        assert!(serde_json::from_str::<CampaignConfig>(&bad).is_err());
    }
}
