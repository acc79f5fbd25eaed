//! Verification records, the individual checks, and campaign orchestration.

mod campaign;
mod catalog;
mod report;

pub use campaign::{
    group_seed, named_campaign, run_campaign, run_group, CampaignConfig, CampaignError, CheckKind, HeavyTrafficSettings,
    MomentSettings, OutputPaths, SimSettings, SpecEntry, Suite, SupSettings, CAMPAIGN_NAMES,
};
pub use catalog::{evaluate_bound, BoundEvaluation, CatalogError, BOUND_NAMES};
pub use report::{Diagnostic, GroupSummary, Report, Summary, CSV_HEADER, REPORT_VERSION};

use serde::{Deserialize, Serialize};

use crate::dists::DistributionSpec;
use crate::qsim::{self, erlang_c, kw_stream, QsimError, QueueSpec, SimConfig, StationaryEstimate, TailCurve};
use crate::xnum::LogScalar;

/// One-sided 99% normal quantile applied to 95% half-widths.
pub const DOMINANCE_Z: f64 = 2.58;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Vacuous,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
        }
    }
}

/// What a bound or estimate measures; dominance is only defined between equal kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Probability,
    Mean,
    Moment,
    Statistic,
    Constant,
}

/// How `estimate` is compared with the comparand whose log10 is `bound_exp10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Relation {
    /// `estimate + 2.58 ci ≤ comparand`.
    AtMost,
    /// `estimate ≤ comparand + multiple · ci`, with `ci` a joint half-width.
    AtMostJoint { multiple: f64 },
    /// `|estimate − comparand| ≤ tolerance`.
    Within { tolerance: f64 },
    /// `|estimate − comparand| ≤ tolerance · comparand`.
    Relative { tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub check_id: String,
    pub suite: String,
    pub spec: String,
    pub param: String,
    pub bound_id: String,
    pub quantity: Quantity,
    pub relation: Relation,
    /// log10 of the comparand; `None` when the comparand is zero.
    pub bound_exp10: Option<f64>,
    pub estimate: f64,
    pub estimate_ci: f64,
    pub verdict: Verdict,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_point: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckError {
    #[error("quantity mismatch: bound measures {bound:?}, estimate measures {estimate:?}")]
    Mismatch { bound: Quantity, estimate: Quantity },
    #[error("grid mismatch between compared tail curves")]
    GridMismatch,
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("invalid check input: {0}")]
    Invalid(String),
}

/// A bound together with the kind of quantity it controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Claim {
    pub quantity: Quantity,
    pub bound: LogScalar,
}

/// An estimate with its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub quantity: Quantity,
    pub point: f64,
    pub ci: f64,
}

impl Observation {
    pub fn of(quantity: Quantity, e: &StationaryEstimate) -> Self {
        Observation { quantity, point: e.point, ci: e.ci_half_width }
    }
}

fn log10_or_none(v: f64) -> Option<f64> {
    if v > 0.0 {
        Some(v.log10())
    } else {
        None
    }
}

/// `true` iff `value ≤ comparand`, compared in log space.
fn at_most(value: f64, comparand: Option<f64>) -> bool {
    if value <= 0.0 {
        return true;
    }
    match comparand {
        None => false,
        Some(e) => value.log10() <= e,
    }
}

/// Verdict of `estimate` against a comparand under `relation`.
pub fn judge(relation: Relation, quantity: Quantity, bound_exp10: Option<f64>, estimate: f64, ci: f64) -> Verdict {
    if quantity == Quantity::Probability && matches!(relation, Relation::AtMost) && bound_exp10.is_some_and(|e| e >= 0.0) {
        return Verdict::Vacuous;
    }
    let comparand = bound_exp10.map(|e| 10f64.powf(e)).unwrap_or(0.0);
    let ok = match relation {
        Relation::AtMost => at_most(estimate + DOMINANCE_Z * ci, bound_exp10),
        Relation::AtMostJoint { multiple } => estimate <= comparand + multiple * ci,
        Relation::Within { tolerance } => (estimate - comparand).abs() <= tolerance,
        Relation::Relative { tolerance } => (estimate - comparand).abs() <= tolerance * comparand.abs(),
    };
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Verdict of an upper bound against an estimate: pass iff `point + 2.58·ci ≤ bound`, vacuous
/// when a probability bound clamps to 1.
pub fn dominance_check(claim: Claim, obs: Observation) -> Result<Verdict, CheckError> {
    if claim.quantity != obs.quantity {
        return Err(CheckError::Mismatch { bound: claim.quantity, estimate: obs.quantity });
    }
    if !(obs.ci >= 0.0 && obs.point.is_finite()) {
        return Err(CheckError::Invalid("estimate must be finite with nonnegative half-width".into()));
    }
    Ok(judge(Relation::AtMost, claim.quantity, claim.bound.exp10(), obs.point, obs.ci))
}

/// One grid level of a stochastic comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPoint {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub joint_ci: f64,
    pub verdict: Verdict,
}

/// Per level: pass iff `queue ≤ sup + 3 · sqrt(ci_q² + ci_s²)`.
pub fn comparison_check(queue_tail: &TailCurve, sup_tail: &TailCurve) -> Result<Vec<ComparisonPoint>, CheckError> {
    if queue_tail.grid != sup_tail.grid
        || queue_tail.survival.len() != queue_tail.grid.len()
        || sup_tail.survival.len() != sup_tail.grid.len()
    {
        return Err(CheckError::GridMismatch);
    }
    Ok((0..queue_tail.grid.len())
        .map(|i| {
            let joint = queue_tail.ci_half_widths[i].hypot(sup_tail.ci_half_widths[i]);
            let (q, s) = (queue_tail.survival[i], sup_tail.survival[i]);
            let verdict = if q <= s + 3.0 * joint { Verdict::Pass } else { Verdict::Fail };
            ComparisonPoint { level: queue_tail.grid[i], lower: q, upper: s, joint_ci: joint, verdict }
        })
        .collect())
}

/// Streaming Kolmogorov–Smirnov statistic against an exponential law.
///
/// Samples are mapped through the target CDF into `2^bits` equal bins; the reported statistic
/// is an upper bound on the exact one that exceeds it by at most one bin's mass plus `2^-bits`.
#[derive(Debug, Clone)]
pub struct BinnedKs {
    mean: f64,
    counts: Vec<u64>,
    n: u64,
}

impl BinnedKs {
    pub fn new(mean: f64, bits: u32) -> Self {
        BinnedKs { mean, counts: vec![0; 1usize << bits], n: 0 }
    }

    pub fn push(&mut self, x: f64) {
        let u = -(-x.max(0.0) / self.mean).exp_m1();
        let b = self.counts.len();
        let i = ((u * b as f64) as usize).min(b - 1);
        self.counts[i] += 1;
        self.n += 1;
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn statistic(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        let b = self.counts.len() as f64;
        let n = self.n as f64;
        let mut below = 0u64;
        let mut d = 0.0f64;
        for (j, &c) in self.counts.iter().enumerate() {
            let lo = j as f64 / b;
            let hi = (j + 1) as f64 / b;
            let f_lo = below as f64 / n;
            below += c;
            let f_hi = below as f64 / n;
            d = d.max(f_hi - lo).max(hi - f_lo);
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyTrafficPoint {
    pub rho: f64,
    pub ks: f64,
    pub target_mean: f64,
    pub sample_mean: f64,
    pub waits: u64,
    /// Pass/fail when this point is gated, `None` for diagnostics.
    pub verdict: Option<Verdict>,
}

/// Settings for [`heavy_traffic_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeavyTrafficRun {
    pub post_warmup_waits: u64,
    pub bins_log2: u32,
    pub gate_rho: f64,
    pub threshold: f64,
    pub seed: u64,
}

/// Target mean `E[A](c_A² + c_S²)/2` of the heavy-traffic exponential limit of `(1 − ρ)W`.
pub fn heavy_traffic_mean(arrival: &DistributionSpec, service: &DistributionSpec) -> f64 {
    arrival.mean() * (arrival.scv() + service.scv()) / 2.0
}

/// KS distance between `(1 − ρ)W` and its exponential heavy-traffic limit for GI/GI/1 queues
/// obtained by rescaling the arrival law to each `ρ`.
pub fn heavy_traffic_check(
    arrival: &DistributionSpec,
    service: &DistributionSpec,
    rhos: &[f64],
    run: &HeavyTrafficRun,
) -> Result<Vec<HeavyTrafficPoint>, CheckError> {
    rhos.iter()
        .map(|&rho| {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(CheckError::Qsim(QsimError::Unstable(rho)));
            }
            let a = arrival
                .with_mean(service.mean() / rho)
                .map_err(|e| CheckError::Invalid(e.to_string()))?;
            let q = QueueSpec::new(a.clone(), service.clone(), 1)?;
            let target = heavy_traffic_mean(&a, service);
            let cfg = SimConfig::with_post_warmup(run.post_warmup_waits, run.seed, vec![]);
            let mut ks = BinnedKs::new(target, run.bins_log2);
            let mut sum = 0.0;
            kw_stream(&q, &cfg, |w| {
                let x = (1.0 - rho) * w;
                sum += x;
                ks.push(x);
            })?;
            let stat = ks.statistic();
            let verdict = ((rho - run.gate_rho).abs() < 1e-12)
                .then(|| if stat < run.threshold { Verdict::Pass } else { Verdict::Fail });
            Ok(HeavyTrafficPoint {
                rho,
                ks: stat,
                target_mean: target,
                sample_mean: sum / ks.len() as f64,
                waits: ks.len(),
                verdict,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub rhos: Vec<f64>,
    /// `(1 − ρ)E[L]` at each `ρ`.
    pub scaled: Vec<f64>,
    pub ci: Vec<f64>,
    pub ratio: f64,
    pub limit: f64,
    pub verdict: Verdict,
    /// `"erlang-c"` or `"simulation"`.
    pub source: String,
}

/// Spread of `(1 − ρ)E[L]` across `rhos`: pass iff `max/min ≤ limit`.
///
/// M/M/n queues use Erlang C; anything else is simulated with `sim`.
pub fn scaling_check(
    arrival: &DistributionSpec,
    service: &DistributionSpec,
    n: u32,
    rhos: &[f64],
    limit: f64,
    sim: Option<&SimConfig>,
) -> Result<ScalingResult, CheckError> {
    if rhos.is_empty() {
        return Err(CheckError::Invalid("scaling check needs at least one traffic intensity".into()));
    }
    let markov = arrival.is_exponential() && service.is_exponential();
    let mut scaled = Vec::with_capacity(rhos.len());
    let mut ci = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let a = arrival
            .with_mean(service.mean() / (n as f64 * rho))
            .map_err(|e| CheckError::Invalid(e.to_string()))?;
        let q = QueueSpec::new(a, service.clone(), n)?;
        match (markov, sim) {
            (true, _) => {
                let (_, l) = erlang_c(n, q.offered_load())?;
                scaled.push((1.0 - rho) * l);
                ci.push(0.0);
            }
            (false, Some(cfg)) => {
                let r = qsim::run_event_sim(&q, cfg)?;
                scaled.push((1.0 - rho) * r.queue_mean.point);
                ci.push((1.0 - rho) * r.queue_mean.ci_half_width);
            }
            (false, None) => {
                return Err(CheckError::Invalid("non-Markovian scaling check needs a simulation config".into()))
            }
        }
    }
    let max = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let min = scaled.iter().cloned().fold(f64::MAX, f64::min);
    let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
    Ok(ScalingResult {
        rhos: rhos.to_vec(),
        scaled,
        ci,
        ratio,
        limit,
        verdict: if ratio <= limit { Verdict::Pass } else { Verdict::Fail },
        source: if markov { "erlang-c" } else { "simulation" }.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(point: f64, ci: f64) -> Observation {
        Observation { quantity: Quantity::Mean, point, ci }
    }

    fn claim(v: f64) -> Claim {
        Claim { quantity: Quantity::Mean, bound: LogScalar::from_value(v).unwrap() }
    }

    #[test]
    fn dominance_examples() {
        assert_eq!(dominance_check(claim(9.05), obs(8.10, 0.05)).unwrap(), Verdict::Pass);
        assert_eq!(dominance_check(claim(2.5), obs(2.60, 0.01)).unwrap(), Verdict::Fail);
        let huge = Claim { quantity: Quantity::Probability, bound: LogScalar::from_exp10(404.0).unwrap() };
        let any = Observation { quantity: Quantity::Probability, point: 0.7, ci: 0.1 };
        assert_eq!(dominance_check(huge, any).unwrap(), Verdict::Vacuous);
        assert!(matches!(dominance_check(huge, obs(1.0, 0.0)), Err(CheckError::Mismatch { .. })));
        assert_eq!(dominance_check(claim(0.0), obs(0.0, 0.0)).unwrap(), Verdict::Pass);
        assert_eq!(dominance_check(claim(0.0), obs(1e-3, 0.0)).unwrap(), Verdict::Fail);
        let mean_huge = Claim { quantity: Quantity::Mean, bound: LogScalar::from_exp10(411.0).unwrap() };
        assert_eq!(dominance_check(mean_huge, obs(1e6, 1.0)).unwrap(), Verdict::Pass);
        assert_eq!(dominance_check(claim(1.0), obs(0.9, 0.04)).unwrap(), Verdict::Fail);
    }

    fn curve(s: Vec<f64>, ci: Vec<f64>) -> TailCurve {
        TailCurve {
            grid: (0..s.len()).map(|i| i as f64).collect(),
            survival: s,
            ci_half_widths: ci,
            weighting: qsim::Weighting::TimeAverage,
        }
    }

    #[test]
    fn comparison_examples() {
        let (c, _) = erlang_c(10, 9.0).unwrap();
        let q = curve((0..=20).map(|k| c * 0.9f64.powi(k)).collect(), vec![0.0; 21]);
        let s = curve((0..=20).map(|k| 0.9f64.powi(k)).collect(), vec![0.0; 21]);
        assert!(comparison_check(&q, &s).unwrap().iter().all(|p| p.verdict == Verdict::Pass));
        let same = comparison_check(&s, &s).unwrap();
        assert!(same.iter().all(|p| p.verdict == Verdict::Pass && p.joint_ci == 0.0));
        let lifted = curve(vec![0.48, 0.4], vec![0.01, 0.01]);
        let base = curve(vec![0.45, 0.3], vec![0.01, 0.01]);
        let r = comparison_check(&lifted, &base).unwrap();
        assert_eq!(r[0].verdict, Verdict::Pass);
        assert_eq!(r[1].verdict, Verdict::Fail);
        let short = curve(vec![1.0], vec![0.0]);
        assert_eq!(comparison_check(&short, &s), Err(CheckError::GridMismatch));
    }

    #[test]
    fn binned_ks_matches_exact() {
        let mut rng = crate::dists::RngStream::new(4, 0);
        let d = DistributionSpec::exponential(1.0).unwrap();
        let mut xs: Vec<f64> = (0..5000).map(|_| d.sample(&mut rng) * 1.3).collect();
        let mut ks = BinnedKs::new(1.0, 16);
        xs.iter().for_each(|&x| ks.push(x));
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let exact = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let g = 1.0 - (-x).exp();
                ((i + 1) as f64 / n - g).max(g - i as f64 / n)
            })
            .fold(0.0, f64::max);
        let binned = ks.statistic();
        assert!(binned >= exact - 1e-12 && binned <= exact + 2.0 / n + 1e-4, "{binned} vs {exact}");
        let mut atom = BinnedKs::new(1.0, 10);
        (0..100).for_each(|_| atom.push(0.0));
        assert!((atom.statistic() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heavy_traffic_targets() {
        let m = DistributionSpec::exponential(1.0).unwrap();
        let a = m.with_mean(1.0 / 0.98).unwrap();
        assert!((heavy_traffic_mean(&a, &m) - 1.0204).abs() < 1e-4);
        let det = DistributionSpec::deterministic(1.0).unwrap();
        assert!((heavy_traffic_mean(&a, &det) - 0.5102).abs() < 1e-4);
        let run = HeavyTrafficRun { post_warmup_waits: 20_000, bins_log2: 12, gate_rho: 0.98, threshold: 0.05, seed: 1 };
        let pts = heavy_traffic_check(&m, &m, &[0.5], &run).unwrap();
        assert_eq!(pts[0].verdict, None);
        assert!(pts[0].ks > 0.0 && pts[0].ks < 1.0);
    }

    #[test]
    fn scaling_examples() {
        let m = DistributionSpec::exponential(1.0).unwrap();
        let one = scaling_check(&m, &m, 1, &[0.8, 0.9, 0.95], 2.0, None).unwrap();
        assert!((one.scaled[0] - 0.64).abs() < 1e-12 && (one.scaled[2] - 0.9025).abs() < 1e-12);
        assert!((one.ratio - 0.9025 / 0.64).abs() < 1e-12);
        assert_eq!(one.verdict, Verdict::Pass);
        let single = scaling_check(&m, &m, 10, &[0.9], 2.0, None).unwrap();
        assert_eq!(single.ratio, 1.0);
        let ten = scaling_check(&m, &m, 10, &[0.8, 0.9, 0.95], 2.0, None).unwrap();
        assert!((ten.scaled[0] - 0.32734).abs() < 1e-4);
        assert!((ten.scaled[1] - 0.60186).abs() < 1e-4);
        assert!((ten.scaled[2] - 0.78431).abs() < 1e-4);
        assert!(ten.ratio > 2.0);
        assert!(scaling_check(&DistributionSpec::deterministic(1.0).unwrap(), &m, 2, &[0.5], 2.0, None).is_err());
    }
}
