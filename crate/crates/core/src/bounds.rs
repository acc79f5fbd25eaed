//! Explicit bound formulas for GI/GI/n queues and their supporting lemmas, evaluated in
//! log space.
//!
//! Every function returns a [`LogScalar`]; probability-typed bounds are clamped by the caller
//! with [`LogScalar::to_probability`].

use serde::{Deserialize, Serialize};

use crate::dists::{DistError, DistributionSpec};
use crate::xnum::{LogScalar, XnumError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unstable queue: traffic intensity {0} must be below 1")]
    Unstable(f64),
    #[error("divergent bound: {0}")]
    Divergent(String),
    #[error("invalid moments: {0}")]
    InvalidMoments(String),
    #[error("{lemma}: hypothesis violated: {condition}")]
    Hypothesis { lemma: &'static str, condition: String },
    #[error(transparent)]
    Xnum(#[from] XnumError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

type Result<T> = std::result::Result<T, BoundError>;

fn lv(v: f64) -> Result<LogScalar> {
    Ok(LogScalar::from_value(v)?)
}

fn pw(base: f64, e: f64) -> Result<LogScalar> {
    Ok(lv(base)?.pow(e)?)
}

fn require(lemma: &'static str, ok: bool, condition: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(BoundError::Hypothesis { lemma, condition: condition.to_string() })
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(BoundError::Domain(format!("traffic intensity must be positive, got {rho}")));
    }
    if rho >= 1.0 {
        return Err(BoundError::Unstable(rho));
    }
    Ok(())
}

/// Moment inputs shared by the main bound family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    /// Moment order, `r > 2`.
    pub r: f64,
    /// `E[(S μ_S)^r]`.
    pub m_s: f64,
    /// `E[(A μ_A)^r]`.
    pub m_a: f64,
    pub n: u32,
    pub rho: f64,
    /// `E[A]`.
    pub mean_interarrival: f64,
}

impl MomentSummary {
    pub fn new(r: f64, m_s: f64, m_a: f64, n: u32, rho: f64, mean_interarrival: f64) -> Result<Self> {
        if !(r.is_finite() && r > 2.0) {
            return Err(BoundError::Domain(format!("moment order must exceed 2, got {r}")));
        }
        if !(m_s >= 1.0 - 1e-9 && m_a >= 1.0 - 1e-9 && m_s.is_finite() && m_a.is_finite()) {
            return Err(BoundError::InvalidMoments(format!(
                "normalized moments must be finite and at least 1, got mS={m_s}, mA={m_a}"
            )));
        }
        if n == 0 {
            return Err(BoundError::Domain("server count must be at least 1".into()));
        }
        check_rho(rho)?;
        if !(mean_interarrival.is_finite() && mean_interarrival > 0.0) {
            return Err(BoundError::Domain(format!("mean interarrival must be positive, got {mean_interarrival}")));
        }
        Ok(MomentSummary { r, m_s, m_a, n, rho, mean_interarrival })
    }

    /// Summary of a GI/GI/n queue at moment order `r`.
    pub fn from_queue(arrival: &DistributionSpec, service: &DistributionSpec, n: u32, r: f64) -> Result<Self> {
        let rho = service.mean() / (n as f64 * arrival.mean());
        Self::new(
            r,
            service.normalized_moment(r)?,
            arrival.normalized_moment(r)?,
            n,
            rho,
            arrival.mean(),
        )
    }

    fn moment_cube(&self) -> Result<LogScalar> {
        pw(self.m_s * self.m_a, 3.0)
    }

    fn excess(&self) -> f64 {
        self.n as f64 * (1.0 - self.rho).powi(2)
    }
}

/// The absolute constants `(C_{r,1}, C_{r,2})`.
pub fn universal_constants(r: f64) -> Result<(LogScalar, LogScalar)> {
    if !(r.is_finite() && r > 2.0) {
        return Err(BoundError::Domain(format!("constants require r > 2, got {r}")));
    }
    let c1 = r * (120.0 + 32.0 * r.log10() - 12.0 * (r - 2.0).log10());
    let c1 = LogScalar::from_exp10(c1)?;
    let c2 = c1 * pw(10.0 * r / (r - 2.0), r)?;
    Ok((c1, c2))
}

/// Single-server queue and wait bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KingmanBounds {
    pub queue: LogScalar,
    pub wait: LogScalar,
}

/// Kingman's bound: `E[L] ≤ (c_A² + ρ² c_S²) / (2(1 − ρ))`, and `E[W] ≤ E[A]` times that.
pub fn kingman_single(ca2: f64, cs2: f64, rho: f64, mean_interarrival: f64) -> Result<KingmanBounds> {
    check_rho(rho)?;
    if !(ca2 >= 0.0 && cs2 >= 0.0 && mean_interarrival > 0.0) {
        return Err(BoundError::Domain("variability coefficients must be nonnegative".into()));
    }
    let queue = (ca2 + rho * rho * cs2) / 2.0 / (1.0 - rho);
    let sigma_a2 = ca2 * mean_interarrival.powi(2);
    let sigma_s2 = cs2 * (rho * mean_interarrival).powi(2);
    let wait = (sigma_a2 + sigma_s2) / (2.0 * mean_interarrival) / (1.0 - rho);
    Ok(KingmanBounds { queue: lv(queue)?, wait: lv(wait)? })
}

/// Heavy-traffic form of Kingman's bound with `ρ²` dropped: `(c_A² + c_S²) / (2(1 − ρ))`.
pub fn kingman_weakened(ca2: f64, cs2: f64, rho: f64) -> Result<LogScalar> {
    check_rho(rho)?;
    lv((ca2 + cs2) / 2.0 / (1.0 - rho))
}

/// Cyclic-routing bound for FCFS GI/GI/n: `(c_A² + n c_S²) / (2(1 − ρ))`.
pub fn cyclic_multiserver(ca2: f64, cs2: f64, n: u32, rho: f64) -> Result<LogScalar> {
    check_rho(rho)?;
    if n == 0 {
        return Err(BoundError::Domain("server count must be at least 1".into()));
    }
    lv((ca2 + n as f64 * cs2) / 2.0 / (1.0 - rho))
}

/// Bound on `P(L ≥ x / (1 − ρ))`.
pub fn main_tail_bound(m: &MomentSummary, x: f64) -> Result<LogScalar> {
    if !(x.is_finite() && x > 0.0) {
        return Err(BoundError::Domain(format!("tail level must be positive, got {x}")));
    }
    let (c1, _) = universal_constants(m.r)?;
    Ok(c1 * m.moment_cube()? * pw(x, -m.r / 2.0)?)
}

/// Bound on the probability of delay `P(Q ≥ n)`.
pub fn main_sspd_bound(m: &MomentSummary) -> Result<LogScalar> {
    let (c1, _) = universal_constants(m.r)?;
    Ok(c1 * m.moment_cube()? * pw(m.excess(), -m.r / 2.0)?)
}

/// Multi-server analogue of Kingman's bound for `E[L]` and `E[W]`.
pub fn mean_bounds(m: &MomentSummary) -> Result<(LogScalar, LogScalar)> {
    let (_, c2) = universal_constants(m.r)?;
    let queue = c2 * m.moment_cube()? * pw(1.0 - m.rho, -1.0)?;
    Ok((queue, queue * lv(m.mean_interarrival)?))
}

/// Mean bound sharpened by `(n(1 − ρ)²)^{-(r/2 − 1)}`.
pub fn refined_mean_bound(m: &MomentSummary) -> Result<LogScalar> {
    let (queue, _) = mean_bounds(m)?;
    Ok(queue * pw(m.excess(), -(m.r / 2.0 - 1.0))?)
}

fn moment_coefficient(r: f64, z: f64) -> Result<LogScalar> {
    if !(z >= 1.0) {
        return Err(BoundError::Domain(format!("moment order z must be at least 1, got {z}")));
    }
    if z >= r / 2.0 {
        return Err(BoundError::Divergent(format!("z = {z} must be below r/2 = {}", r / 2.0)));
    }
    pw(10.0 * r * z / (r - 2.0 * z), r)
}

/// Bound on `E[L^z]` for `z ∈ [1, r/2)`.
pub fn higher_moment_bound(m: &MomentSummary, z: f64) -> Result<LogScalar> {
    let coef = moment_coefficient(m.r, z)?;
    let (c1, _) = universal_constants(m.r)?;
    Ok(coef * c1 * m.moment_cube()? * pw(1.0 - m.rho, -z)?)
}

/// Inputs for the Halfin–Whitt forms: unit-mean moments `E[Ŝ^r]`, `E[Â^r]` and excess `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfinWhittParams {
    pub r: f64,
    pub m_s: f64,
    pub m_a: f64,
    pub b: f64,
    /// Server count, validated against `n > B²` when present.
    pub n: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfinWhittBounds {
    /// Bound on `P(L ≥ x √n)`.
    pub tail: LogScalar,
    pub sspd: LogScalar,
    /// Bound on `E[L / √n]`.
    pub mean: LogScalar,
    /// Bound on `E[(L / √n)^z]`.
    pub moment: LogScalar,
}

pub fn halfin_whitt_bounds(p: &HalfinWhittParams, x: f64, z: f64) -> Result<HalfinWhittBounds> {
    if !(p.b.is_finite() && p.b > 0.0) {
        return Err(BoundError::Domain(format!("excess parameter B must be positive, got {}", p.b)));
    }
    if let Some(n) = p.n {
        if (n as f64) <= p.b * p.b {
            return Err(BoundError::Domain(format!("n = {n} must exceed B² = {}", p.b * p.b)));
        }
    }
    if !(x.is_finite() && x > 0.0) {
        return Err(BoundError::Domain(format!("tail level must be positive, got {x}")));
    }
    if !(p.m_s >= 1.0 - 1e-9 && p.m_a >= 1.0 - 1e-9) {
        return Err(BoundError::InvalidMoments("unit-mean moments must be at least 1".into()));
    }
    let r = p.r;
    let (c1, c2) = universal_constants(r)?;
    let cube = pw(p.m_s * p.m_a, 3.0)?;
    let coef = moment_coefficient(r, z)?;
    Ok(HalfinWhittBounds {
        tail: c1 * cube * pw(p.b, -r / 2.0)? * pw(x, -r / 2.0)?,
        sspd: c1 * cube * pw(p.b, -r)?,
        mean: c2 * cube * pw(p.b, -(r - 1.0))?,
        moment: coef * c1 * cube * pw(p.b, -r / 2.0)?,
    })
}

/// `θ = E[S]/(2E[S²])` and an upper bound `4E[S²]/E[S]²` on `1/(1 − E[e^{-θS}])`.
pub fn default_theta(es: f64, es2: f64) -> Result<(f64, f64)> {
    if !(es.is_finite() && es > 0.0 && es2.is_finite()) {
        return Err(BoundError::InvalidMoments(format!("need E[S] > 0 and finite E[S²], got {es}, {es2}")));
    }
    if es2 < es * es * (1.0 - 1e-12) {
        return Err(BoundError::InvalidMoments(format!("E[S²] = {es2} is below E[S]² = {}", es * es)));
    }
    Ok((es / (2.0 * es2), 4.0 * es2 / (es * es)))
}

/// The Laplace-transform term: `θ` and an upper bound on `1/(1 − E[e^{-θS}])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceTerm {
    pub theta: f64,
    pub inv_gap: f64,
}

impl LaplaceTerm {
    /// Exact term from the service distribution.
    pub fn exact(service: &DistributionSpec, theta: f64) -> Result<Self> {
        let gap = service.laplace_gap(theta)?;
        Ok(LaplaceTerm { theta, inv_gap: 1.0 / gap })
    }

    /// Moment surrogate from [`default_theta`].
    pub fn surrogate(es: f64, es2: f64) -> Result<Self> {
        let (theta, inv_gap) = default_theta(es, es2)?;
        Ok(LaplaceTerm { theta, inv_gap })
    }

    /// Surrogate term for a service distribution.
    pub fn surrogate_for(service: &DistributionSpec) -> Result<Self> {
        Self::surrogate(service.mean(), service.raw_moment(2.0)?)
    }

    fn check(&self, lemma: &'static str) -> Result<()> {
        require(lemma, self.theta.is_finite() && self.theta > 0.0, "theta > 0")?;
        require(lemma, self.inv_gap.is_finite() && self.inv_gap >= 1.0, "1/(1 - E[exp(-θS)]) ≥ 1")
    }

    /// `e^θ (c · inv_gap)^power`.
    fn factor(&self, c: f64, power: f64) -> Result<LogScalar> {
        Ok(LogScalar::from_exp10(self.theta / std::f64::consts::LN_10)? * pw(c * self.inv_gap, power)?)
    }
}

/// Renewal and partial-sum moment inequalities.
///
/// `N_i` are equilibrium renewal processes and `N_o` an ordinary one, all with unit-mean
/// renewal law `S` unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lemma", rename_all = "kebab-case")]
pub enum MomentLemma {
    /// `E|Σ_{i≤k} N_i(t) − kt|^r` for `t ≥ 1`, `r ≥ 2`.
    PooledCentral { r: f64, k: u32, t: f64, es_r: f64, laplace: LaplaceTerm },
    /// `E|N_o(t) − t|^r` for `t ≥ 1`, `r ≥ 2`.
    RenewalCentral { r: f64, t: f64, es_r: f64, laplace: LaplaceTerm },
    /// `E|N_1(t) − t|^r` for `t ≥ 1`, `r ≥ 2`.
    EquilibriumCentral { r: f64, t: f64, es_r: f64, laplace: LaplaceTerm },
    /// `E[N_o(1)^p]` for `p ≥ 1`; any mean.
    UnitCount { p: f64, laplace: LaplaceTerm },
    /// `E[(N_o(t) + 1)^p]` for `p ≥ 1`, `t ≥ 1`; any mean.
    ShiftedCount { p: f64, t: f64, laplace: LaplaceTerm },
    /// `E[(N_o(t) + 1)^p] ≤ (2t)^p E[(N_o(1) + 1)^p]` for `p ≥ 1`, `t ≥ 1`.
    CountGrowth { p: f64, t: f64, unit_shifted_moment: f64 },
    /// `E|Σ_{i≤k} N_i(t) − kt|^p` for `t ∈ [0, 1]`, `p ≥ 2`, with growth `max(kt, (kt)^p)`.
    PooledSmallTimeWeak { p: f64, k: u32, t: f64, laplace: LaplaceTerm },
    /// As above with growth `max(kt, (kt)^{p/2})`.
    PooledSmallTime { p: f64, k: u32, t: f64, laplace: LaplaceTerm },
    /// `E|μ_A Σ_{i≤k} A_i − k|^r` for `r ≥ 2`; `ea_r = E[A^r]`.
    ArrivalPartialSum { r: f64, k: u32, ea_r: f64, mu_a: f64 },
    /// Marcinkiewicz–Zygmund: `E|Σ_{i≤k} X_i|^p` for i.i.d. zero-mean `X`, `p ≥ 2`.
    MarcinkiewiczZygmund { p: f64, k: u32, abs_moment: f64 },
    /// `E[(Σ_{i≤k} X_i)^p]` for i.i.d. nonnegative `X`, `p ≥ 1`.
    NonnegativeSum { p: f64, k: u32, mean: f64, moment_p: f64 },
}

impl MomentLemma {
    pub fn id(&self) -> &'static str {
        match self {
            MomentLemma::PooledCentral { .. } => "pooled-central",
            MomentLemma::RenewalCentral { .. } => "renewal-central",
            MomentLemma::EquilibriumCentral { .. } => "equilibrium-central",
            MomentLemma::UnitCount { .. } => "unit-count",
            MomentLemma::ShiftedCount { .. } => "shifted-count",
            MomentLemma::CountGrowth { .. } => "count-growth",
            MomentLemma::PooledSmallTimeWeak { .. } => "pooled-small-time-weak",
            MomentLemma::PooledSmallTime { .. } => "pooled-small-time",
            MomentLemma::ArrivalPartialSum { .. } => "arrival-partial-sum",
            MomentLemma::MarcinkiewiczZygmund { .. } => "marcinkiewicz-zygmund",
            MomentLemma::NonnegativeSum { .. } => "nonnegative-sum",
        }
    }
}

fn check_k(lemma: &'static str, k: u32) -> Result<()> {
    require(lemma, k >= 1, "k ≥ 1")
}

fn check_moment(lemma: &'static str, v: f64, what: &str) -> Result<()> {
    require(lemma, v.is_finite() && v >= 0.0, &format!("{what} must be finite and nonnegative"))
}

pub fn lemma_moment_bound(lemma: &MomentLemma) -> Result<LogScalar> {
    let id = lemma.id();
    match *lemma {
        MomentLemma::PooledCentral { r, k, t, es_r, laplace } => {
            require(id, r >= 2.0, "r ≥ 2")?;
            require(id, t >= 1.0, "t ≥ 1")?;
            check_k(id, k)?;
            check_moment(id, es_r, "E[S^r]")?;
            laplace.check(id)?;
            Ok(lv(es_r)? * laplace.factor(1e8 * r.powi(3), r + 2.0)? * pw(k as f64 * t, r / 2.0)?)
        }
        MomentLemma::RenewalCentral { r, t, es_r, laplace } => {
            require(id, r >= 2.0, "r ≥ 2")?;
            require(id, t >= 1.0, "t ≥ 1")?;
            check_moment(id, es_r, "E[S^r]")?;
            laplace.check(id)?;
            Ok(lv(es_r)? * laplace.factor(1e5 * r * r, r + 1.0)? * pw(t, r / 2.0)?)
        }
        MomentLemma::EquilibriumCentral { r, t, es_r, laplace } => {
            require(id, r >= 2.0, "r ≥ 2")?;
            require(id, t >= 1.0, "t ≥ 1")?;
            check_moment(id, es_r, "E[S^r]")?;
            laplace.check(id)?;
            Ok(lv(es_r)? * laplace.factor(1e7 * r * r, r + 2.0)? * pw(t, r / 2.0)?)
        }
        MomentLemma::UnitCount { p, laplace } => {
            require(id, p >= 1.0, "p ≥ 1")?;
            laplace.check(id)?;
            laplace.factor(24.0 * p, p + 2.0)
        }
        MomentLemma::ShiftedCount { p, t, laplace } => {
            require(id, p >= 1.0, "p ≥ 1")?;
            require(id, t >= 1.0, "t ≥ 1")?;
            laplace.check(id)?;
            Ok(laplace.factor(100.0 * p, p + 2.0)? * pw(t, p)?)
        }
        MomentLemma::CountGrowth { p, t, unit_shifted_moment } => {
            require(id, p >= 1.0, "p ≥ 1")?;
            require(id, t >= 1.0, "t ≥ 1")?;
            check_moment(id, unit_shifted_moment, "E[(N_o(1)+1)^p]")?;
            Ok(pw(2.0 * t, p)? * lv(unit_shifted_moment)?)
        }
        MomentLemma::PooledSmallTimeWeak { p, k, t, laplace } => {
            require(id, p >= 2.0, "p ≥ 2")?;
            require(id, (0.0..=1.0).contains(&t), "t ∈ [0, 1]")?;
            check_k(id, k)?;
            laplace.check(id)?;
            let kt = k as f64 * t;
            Ok(laplace.factor(1e3 * p.powi(3), p + 2.0)? * lv(kt.max(kt.powf(p)))?)
        }
        MomentLemma::PooledSmallTime { p, k, t, laplace } => {
            require(id, p >= 2.0, "p ≥ 2")?;
            require(id, (0.0..=1.0).contains(&t), "t ∈ [0, 1]")?;
            check_k(id, k)?;
            laplace.check(id)?;
            let kt = k as f64 * t;
            Ok(laplace.factor(1e5 * p.powi(4), p + 2.0)? * lv(kt.max(kt.powf(p / 2.0)))?)
        }
        MomentLemma::ArrivalPartialSum { r, k, ea_r, mu_a } => {
            require(id, r >= 2.0, "r ≥ 2")?;
            check_k(id, k)?;
            check_moment(id, ea_r, "E[A^r]")?;
            require(id, mu_a.is_finite() && mu_a > 0.0, "0 < μ_A < ∞")?;
            Ok(pw(10.0 * r, r)? * lv(ea_r)? * pw(mu_a, r)? * pw(k as f64, r / 2.0)?)
        }
        MomentLemma::MarcinkiewiczZygmund { p, k, abs_moment } => {
            require(id, p >= 2.0, "p ≥ 2")?;
            check_k(id, k)?;
            check_moment(id, abs_moment, "E|X|^p")?;
            Ok(pw(5.0 * p, p)? * lv(abs_moment)? * pw(k as f64, p / 2.0)?)
        }
        MomentLemma::NonnegativeSum { p, k, mean, moment_p } => {
            require(id, p >= 1.0, "p ≥ 1")?;
            check_k(id, k)?;
            check_moment(id, mean, "E[X]")?;
            check_moment(id, moment_p, "E[X^p]")?;
            let k = k as f64;
            Ok(pw(2.0 * p, p)? * lv((k * mean).powf(p).max(k * moment_p))?)
        }
    }
}

/// Inputs to the conditional supremum bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalParams {
    pub n_prime: u32,
    /// Arrival rate with `μ_S = 1`.
    pub mu_a: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub s1: f64,
    pub s3: f64,
}

impl ConditionalParams {
    /// `μ_{A,n'} = max(n'/2, μ_A)`.
    pub fn mu_a_nprime(&self) -> f64 {
        (0.5 * self.n_prime as f64).max(self.mu_a)
    }

    pub fn validate(&self) -> Result<()> {
        let id = "conditional-sup";
        require(id, self.n_prime >= 1, "n' ≥ 1")?;
        require(id, self.mu_a > 0.0 && self.mu_a < self.n_prime as f64, "0 < μ_A < n'")?;
        require(id, self.c1 > 0.0 && self.c2 > 0.0 && self.c3 > 0.0, "C1, C2, C3 > 0")?;
        require(id, self.r1 > self.s1, "r1 > s1")?;
        require(id, self.s1 > 1.0, "s1 > 1")?;
        require(id, self.r3 > self.s3, "r3 > s3")?;
        require(id, self.s3 > 1.0, "s3 > 1")?;
        require(id, self.r2 > 2.0, "r2 > 2")
    }

    /// The three separable terms of the conditional bound at level `x`.
    pub fn terms(&self, x: f64) -> Result<[LogScalar; 3]> {
        let np = self.n_prime as f64;
        let mu = self.mu_a_nprime();
        let gap = np - mu;
        Ok([
            pw(np, self.r1 / 2.0)? * pw(gap, -self.s1)? * pw(x, -(self.r1 - self.s1))?,
            pw(np, self.r2 / 2.0)? * pw(gap, -self.r2 / 2.0)? * pw(x, -self.r2 / 2.0)?,
            pw(gap, -self.s3)? * pw(np, self.r3)? * pw(mu, -(self.r3 - self.s3))? * pw(x, -(self.r3 - self.s3))?,
        ])
    }

    pub fn prefactor(&self) -> Result<LogScalar> {
        let sum = self.r1 + self.r2 + self.r3;
        let denom = (self.s1 - 1.0) * (self.s3 - 1.0) * (self.r1 - self.s1) * (self.r3 - self.s3) * (self.r2 - 2.0);
        Ok(pw(1e6 * sum.powi(5) / denom, sum + 1.0)?
            * lv(1.0 + self.c1)?
            * lv(1.0 + self.c2)?
            * lv(1.0 + self.c3)?)
    }
}

/// Bound on `P(sup_t (A(t) − Σ_{i≤n'} N_i(t)) ≥ x)` for `x ≥ 16`, given moment conditions
/// with constants `C1..C3`.
pub fn conditional_sup_tail(p: &ConditionalParams, x: f64) -> Result<LogScalar> {
    p.validate()?;
    require("conditional-sup", x >= 16.0, "x ≥ 16")?;
    Ok(p.prefactor()? * LogScalar::sum(p.terms(x)?))
}

/// Explicit supremum tail
/// `(E[S^r])³ E[A^r] μ_A^r (10^26 r^8 (r−2)^{-3})^{4r} (z(1 − ρ_{n'}))^{-r/2}` with `μ_S = 1`.
///
/// `es_r` is `E[S^r]` (cubed here) and `ea_r_mu` is `E[A^r] μ_A^r`.
pub fn supremum_tail_explicit(r: f64, es_r: f64, ea_r_mu: f64, rho_nprime: f64, z: f64) -> Result<LogScalar> {
    if !(r.is_finite() && r > 2.0) {
        return Err(BoundError::Domain(format!("moment order must exceed 2, got {r}")));
    }
    check_rho(rho_nprime)?;
    if !(z.is_finite() && z > 0.0) {
        return Err(BoundError::Domain(format!("level must be positive, got {z}")));
    }
    let inner = 26.0 + 8.0 * r.log10() - 3.0 * (r - 2.0).log10();
    let constant = LogScalar::from_exp10(4.0 * r * inner)?;
    Ok(pw(es_r, 3.0)? * lv(ea_r_mu)? * constant * pw(z * (1.0 - rho_nprime), -r / 2.0)?)
}

/// Supremum and maximal inequalities used to assemble the conditional bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lemma", rename_all = "kebab-case")]
pub enum SupLemma {
    /// All-time tail of `φ(t) − νt` for continuous-time stationary increments;
    /// needs `r1 > s > 1`, `r2 > 2`, `λ ≥ 4Z`.
    DriftTailContinuous { h1: f64, h2: f64, s: f64, r1: f64, r2: f64, z: f64, nu: f64, lambda: f64 },
    /// Discrete-time analogue; needs `r3 > s3 ≥ 1`.
    DriftTailDiscrete { h3: f64, s3: f64, r3: f64, nu: f64, lambda: f64 },
    /// Maximal inequality for a general sequence: `γ > 1`, `ν ≥ γ`.
    Maximal { nu: f64, gamma: f64, c: f64, l: u32, lambda: f64 },
    /// Pooled renewal maximum over integer times: `s1 > 1`, `r1 ≥ s1`.
    MaximalPooledInteger { r1: f64, s1: f64, c1: f64, n_prime: u32, k: u32, lambda: f64 },
    /// Pooled renewal maximum over `[0, t0]`: `r2 > 2`, `t0 ∈ [0, 1]`, `λ ≥ 2`.
    MaximalPooledInterval { r2: f64, c2: f64, n_prime: u32, t0: f64, lambda: f64 },
    /// All-time pooled supremum with drift `ν`: `r1 > s1 > 1`, `r2 > 2`, `λ ≥ 8`.
    PooledAllTime { r1: f64, s1: f64, r2: f64, c1: f64, c2: f64, n_prime: u32, nu: f64, lambda: f64 },
    /// Arrival partial-sum maximum over integer indices: `s3 > 1`, `r3 ≥ s3`.
    MaximalArrival { r3: f64, s3: f64, c3: f64, k: u32, lambda: f64 },
    /// Continuous-to-discrete reformulation of the arrival supremum.
    ArrivalDiscretization { mu_a_nprime: f64, nu: f64, lambda: f64 },
    /// All-time arrival supremum with drift `ν`: `r3 > s3 > 1`.
    ArrivalAllTime { r3: f64, s3: f64, c3: f64, mu_a_nprime: f64, nu: f64, lambda: f64 },
    /// Union bound splitting the bounding supremum into arrival and service parts at level `x`.
    TwoPart { params: ConditionalParams, x: f64 },
}

impl SupLemma {
    pub fn id(&self) -> &'static str {
        match self {
            SupLemma::DriftTailContinuous { .. } => "drift-tail-continuous",
            SupLemma::DriftTailDiscrete { .. } => "drift-tail-discrete",
            SupLemma::Maximal { .. } => "maximal",
            SupLemma::MaximalPooledInteger { .. } => "maximal-pooled-integer",
            SupLemma::MaximalPooledInterval { .. } => "maximal-pooled-interval",
            SupLemma::PooledAllTime { .. } => "pooled-all-time",
            SupLemma::MaximalArrival { .. } => "maximal-arrival",
            SupLemma::ArrivalDiscretization { .. } => "arrival-discretization",
            SupLemma::ArrivalAllTime { .. } => "arrival-all-time",
            SupLemma::TwoPart { .. } => "two-part",
        }
    }
}

/// Result of a supremum-lemma evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SupBound {
    Single { value: LogScalar },
    /// Arrival part at level `x/2 − 1` and service part at level `x/2`.
    Pair { arrival: LogScalar, service: LogScalar },
    /// Equivalent discrete-time problem: drift and level for `k − μ_{A,n'} Σ A_i`.
    Reformulation { drift: f64, level: f64 },
}

impl SupBound {
    /// Single value, or the sum of a pair.
    pub fn total(&self) -> Option<LogScalar> {
        match *self {
            SupBound::Single { value } => Some(value),
            SupBound::Pair { arrival, service } => Some(arrival.add(service)),
            SupBound::Reformulation { .. } => None,
        }
    }
}

fn positive_all(id: &'static str, vals: &[(f64, &str)]) -> Result<()> {
    for (v, name) in vals {
        require(id, v.is_finite() && *v > 0.0, &format!("{name} > 0"))?;
    }
    Ok(())
}

pub fn lemma_sup_bound(lemma: &SupLemma) -> Result<SupBound> {
    let id = lemma.id();
    let single = |v: LogScalar| Ok(SupBound::Single { value: v });
    match *lemma {
        SupLemma::DriftTailContinuous { h1, h2, s, r1, r2, z, nu, lambda } => {
            positive_all(id, &[(h1, "H1"), (h2, "H2"), (nu, "ν")])?;
            require(id, r1 > s && s > 1.0, "r1 > s > 1")?;
            require(id, r2 > 2.0, "r2 > 2")?;
            require(id, z >= 0.0, "Z ≥ 0")?;
            require(id, lambda >= 4.0 * z && lambda > 0.0, "λ ≥ 4Z")?;
            let lead = lv(1.0 + 1.0 / (r1 - s))? * pw(4.0, r1 + r2 + 2.0)?;
            let a = lv(h1)? * pw(nu, -s)? * pw(lambda, -(r1 - s))?;
            let b = lv(h2)? * pw(lambda * nu, -r2 / 2.0)?;
            single(lead * a.add(b))
        }
        SupLemma::DriftTailDiscrete { h3, s3, r3, nu, lambda } => {
            positive_all(id, &[(h3, "H3"), (nu, "ν"), (lambda, "λ")])?;
            require(id, r3 > s3 && s3 >= 1.0, "r3 > s3 ≥ 1")?;
            single(
                lv(16.0 * h3)? * pw(4.0, r3)? * lv(1.0 + 1.0 / (r3 - s3))? * pw(nu, -s3)? * pw(lambda, -(r3 - s3))?,
            )
        }
        SupLemma::Maximal { nu, gamma, c, l, lambda } => {
            positive_all(id, &[(c, "C"), (lambda, "λ")])?;
            require(id, gamma > 1.0, "γ > 1")?;
            require(id, nu >= gamma, "ν ≥ γ")?;
            require(id, l >= 1, "L ≥ 1")?;
            single(pw(6.0 * (nu + 1.0) / (gamma - 1.0), nu + 1.0)? * pw(c * l as f64, gamma)? * pw(lambda, -nu)?)
        }
        SupLemma::MaximalPooledInteger { r1, s1, c1, n_prime, k, lambda } => {
            positive_all(id, &[(c1, "C1"), (lambda, "λ")])?;
            require(id, s1 > 1.0, "s1 > 1")?;
            require(id, r1 >= s1, "r1 ≥ s1")?;
            require(id, n_prime >= 1, "n' ≥ 1")?;
            if k == 0 {
                return single(LogScalar::Zero);
            }
            single(
                pw(6.0 * (r1 + 1.0) / (s1 - 1.0), r1 + 1.0)?
                    * lv(c1)?
                    * pw(n_prime as f64, r1 / 2.0)?
                    * pw(k as f64, s1)?
                    * pw(lambda, -r1)?,
            )
        }
        SupLemma::MaximalPooledInterval { r2, c2, n_prime, t0, lambda } => {
            positive_all(id, &[(c2, "C2")])?;
            require(id, r2 > 2.0, "r2 > 2")?;
            require(id, (0.0..=1.0).contains(&t0), "t0 ∈ [0, 1]")?;
            require(id, lambda >= 2.0, "λ ≥ 2")?;
            require(id, n_prime >= 1, "n' ≥ 1")?;
            if t0 == 0.0 {
                return single(LogScalar::Zero);
            }
            single(
                pw(24.0 * (r2 + 1.0) / (r2 - 2.0), r2 + 1.0)?
                    * lv(c2)?
                    * pw(n_prime as f64 * t0, r2 / 2.0)?
                    * pw(lambda, -r2)?,
            )
        }
        SupLemma::PooledAllTime { r1, s1, r2, c1, c2, n_prime, nu, lambda } => {
            positive_all(id, &[(c1, "C1"), (c2, "C2"), (nu, "ν")])?;
            require(id, r1 > s1 && s1 > 1.0, "r1 > s1 > 1")?;
            require(id, r2 > 2.0, "r2 > 2")?;
            require(id, lambda >= 8.0, "λ ≥ 8")?;
            require(id, n_prime >= 1, "n' ≥ 1")?;
            let np = n_prime as f64;
            let lead = pw(
                100.0 * (r1 + r2).powi(3) / ((s1 - 1.0) * (r1 - s1) * (r2 - 2.0)),
                r1 + r2 + 2.0,
            )?;
            let a = lv(c1)? * pw(np, r1 / 2.0)? * pw(nu, -s1)? * pw(lambda, -(r1 - s1))?;
            let b = lv(c2)? * pw(np, r2 / 2.0)? * pw(lambda * nu, -r2 / 2.0)?;
            single(lead * a.add(b))
        }
        SupLemma::MaximalArrival { r3, s3, c3, k, lambda } => {
            positive_all(id, &[(c3, "C3"), (lambda, "λ")])?;
            require(id, s3 > 1.0, "s3 > 1")?;
            require(id, r3 >= s3, "r3 ≥ s3")?;
            if k == 0 {
                return single(LogScalar::Zero);
            }
            single(pw(6.0 * (r3 + 1.0) / (s3 - 1.0), r3 + 1.0)? * lv(c3)? * pw(k as f64, s3)? * pw(lambda, -r3)?)
        }
        SupLemma::ArrivalDiscretization { mu_a_nprime, nu, lambda } => {
            positive_all(id, &[(mu_a_nprime, "μ_{A,n'}"), (nu, "ν"), (lambda, "λ")])?;
            Ok(SupBound::Reformulation {
                drift: nu / (mu_a_nprime + nu),
                level: lambda / (1.0 + nu / mu_a_nprime),
            })
        }
        SupLemma::ArrivalAllTime { r3, s3, c3, mu_a_nprime, nu, lambda } => {
            positive_all(id, &[(c3, "C3"), (mu_a_nprime, "μ_{A,n'}"), (nu, "ν"), (lambda, "λ")])?;
            require(id, r3 > s3 && s3 > 1.0, "r3 > s3 > 1")?;
            single(
                pw(1e3 * (r3 + 1.0).powi(2) / ((s3 - 1.0) * (r3 - s3)), r3 + 1.0)?
                    * lv(c3)?
                    * pw(nu, -s3)?
                    * pw(mu_a_nprime + nu, r3)?
                    * pw(mu_a_nprime, -(r3 - s3))?
                    * pw(lambda, -(r3 - s3))?,
            )
        }
        SupLemma::TwoPart { params, x } => {
            params.validate().map_err(|e| match e {
                BoundError::Hypothesis { condition, .. } => BoundError::Hypothesis { lemma: "two-part", condition },
                other => other,
            })?;
            require(id, x >= 16.0, "x ≥ 16 (service part needs λ = x/2 ≥ 8)")?;
            let mu = params.mu_a_nprime();
            let nu = 0.5 * (params.n_prime as f64 - mu);
            let arrival = lemma_sup_bound(&SupLemma::ArrivalAllTime {
                r3: params.r3,
                s3: params.s3,
                c3: params.c3,
                mu_a_nprime: mu,
                nu,
                lambda: 0.5 * x - 1.0,
            })?
            .total()
            .expect("single");
            let service = lemma_sup_bound(&SupLemma::PooledAllTime {
                r1: params.r1,
                s1: params.s1,
                r2: params.r2,
                c1: params.c1,
                c2: params.c2,
                n_prime: params.n_prime,
                nu,
                lambda: 0.5 * x,
            })?
            .total()
            .expect("single");
            Ok(SupBound::Pair { arrival, service })
        }
    }
}

/// Server count and level for the delay-probability comparison: `(n', ⌊(n − μ_A/μ_S)/2⌋)`.
///
/// A level of zero makes the comparison trivial.
pub fn sspd_comparison_params(n: u32, offered_load: f64) -> Result<(u32, u32)> {
    if !(offered_load > 0.0 && offered_load < n as f64) {
        return Err(BoundError::Unstable(offered_load / n as f64));
    }
    let threshold = ((n as f64 - offered_load) / 2.0).floor() as u32;
    Ok((n - threshold, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e10(x: LogScalar) -> f64 {
        x.exp10().unwrap()
    }

    fn unit(r: f64, n: u32, rho: f64) -> MomentSummary {
        MomentSummary::new(r, 1.0, 1.0, n, rho, 1.0).unwrap()
    }

    #[test]
    fn constants_examples() {
        let (c1, c2) = universal_constants(3.0).unwrap();
        assert!((e10(c1) - 405.80364).abs() < 1e-5);
        assert!((e10(c2) - 410.23500).abs() < 1e-4);
        assert!(e10(c1) <= 450.0 && e10(c2) <= 450.0);
        let (c4, _) = universal_constants(4.0).unwrap();
        assert!((e10(c4) - 542.61424).abs() < 1e-5);
        assert!(universal_constants(2.0).is_err());
    }

    #[test]
    fn kingman_examples() {
        let k = kingman_single(1.0, 1.0, 0.9, 1.0 / 0.9).unwrap();
        assert!((k.queue.to_f64() - 9.05).abs() < 1e-12);
        assert!((k.wait.to_f64() - 9.05 / 0.9).abs() < 1e-12);
        assert_eq!(kingman_single(0.0, 0.0, 0.5, 2.0).unwrap().queue, LogScalar::Zero);
        let md1 = kingman_single(1.0, 0.0, 0.8, 1.25).unwrap();
        assert!((md1.queue.to_f64() - 2.5).abs() < 1e-12);
        assert!(matches!(kingman_single(1.0, 1.0, 1.0, 1.0), Err(BoundError::Unstable(_))));
    }

    #[test]
    fn cyclic_examples() {
        assert!((cyclic_multiserver(1.0, 1.0, 2, 0.9).unwrap().to_f64() - 15.0).abs() < 1e-12);
        assert!((cyclic_multiserver(1.0, 0.0, 10, 0.9).unwrap().to_f64() - 5.0).abs() < 1e-12);
        let a = cyclic_multiserver(0.3, 0.7, 1, 0.6).unwrap();
        let b = kingman_weakened(0.3, 0.7, 0.6).unwrap();
        assert!((e10(a) - e10(b)).abs() < 1e-12);
        assert!(cyclic_multiserver(1.0, 1.0, 2, 1.2).is_err());
    }

    #[test]
    fn main_tail_examples() {
        let m = unit(3.0, 1, 0.5);
        let b = main_tail_bound(&m, 10.0).unwrap();
        assert!((e10(b) - 404.30364).abs() < 1e-5);
        assert_eq!(b.to_probability(), 1.0);
        let far = LogScalar::from_exp10(272.0).unwrap().to_f64();
        let p = main_tail_bound(&m, far).unwrap();
        assert!((e10(p) - (405.80364 - 408.0)).abs() < 1e-5);
        assert!((p.to_probability() - 10f64.powf(-2.19636)).abs() < 1e-6);
    }

    #[test]
    fn sspd_examples() {
        let m = unit(3.0, 100, 0.9);
        let (c1, _) = universal_constants(3.0).unwrap();
        assert!((e10(main_sspd_bound(&m).unwrap()) - e10(c1)).abs() < 1e-9);
        let big = unit(3.0, 1000, 0.9);
        assert!(main_sspd_bound(&big).unwrap() < main_sspd_bound(&m).unwrap());
    }

    #[test]
    fn mean_examples() {
        let m = unit(3.0, 1, 0.9);
        let (q, w) = mean_bounds(&m).unwrap();
        assert!((e10(q) - 411.23500).abs() < 1e-4);
        let m2 = MomentSummary { mean_interarrival: 2.5, ..m };
        let (q2, w2) = mean_bounds(&m2).unwrap();
        assert!((e10(w2) - e10(q2) - 2.5f64.log10()).abs() < 1e-12);
        assert!((e10(w) - e10(q)).abs() < 1e-12);
    }

    #[test]
    fn refined_examples() {
        let m = unit(3.0, 100, 0.9);
        assert!((e10(refined_mean_bound(&m).unwrap()) - e10(mean_bounds(&m).unwrap().0)).abs() < 1e-9);
        let m = unit(3.0, 10_000, 0.9);
        assert!((e10(mean_bounds(&m).unwrap().0) - e10(refined_mean_bound(&m).unwrap()) - 1.0).abs() < 1e-9);
        let m = unit(4.0, 10_000, 0.9);
        assert!((e10(mean_bounds(&m).unwrap().0) - e10(refined_mean_bound(&m).unwrap()) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn higher_moment_examples() {
        let m = unit(3.0, 1, 0.9);
        assert!((e10(higher_moment_bound(&m, 1.0).unwrap()) - e10(mean_bounds(&m).unwrap().0)).abs() < 1e-9);
        let v = e10(higher_moment_bound(&m, 1.4).unwrap());
        assert!((v - (405.80364 + 3.0 * 210f64.log10() + 1.4)).abs() < 1e-4);
        assert!(matches!(higher_moment_bound(&m, 1.5), Err(BoundError::Divergent(_))));
        let a = e10(higher_moment_bound(&m, 1.45).unwrap());
        let b = e10(higher_moment_bound(&m, 1.499).unwrap());
        assert!(b > a);
    }

    #[test]
    fn halfin_whitt_examples() {
        let p = HalfinWhittParams { r: 3.0, m_s: 1.0, m_a: 1.0, b: 1.0, n: None };
        let hw = halfin_whitt_bounds(&p, 1.0, 1.2).unwrap();
        assert!((e10(hw.tail) - 405.80364).abs() < 1e-5);
        let hw2 = halfin_whitt_bounds(&HalfinWhittParams { b: 2.0, ..p }, 1.0, 1.2).unwrap();
        assert!((e10(hw.sspd) - e10(hw2.sspd) - 8f64.log10()).abs() < 1e-12);
        let hw10 = halfin_whitt_bounds(&HalfinWhittParams { b: 10.0, ..p }, 1.0, 1.2).unwrap();
        assert!((e10(hw10.mean) - 408.23500).abs() < 1e-4);
        assert!(halfin_whitt_bounds(&HalfinWhittParams { n: Some(4), b: 2.0, ..p }, 1.0, 1.2).is_err());
        assert!(halfin_whitt_bounds(&HalfinWhittParams { n: Some(5), b: 2.0, ..p }, 1.0, 1.2).is_ok());
        assert!(halfin_whitt_bounds(&p, 1.0, 1.5).is_err());
    }

    #[test]
    fn default_theta_examples() {
        let (t, s) = default_theta(1.0, 2.0).unwrap();
        assert_eq!((t, s), (0.25, 8.0));
        let exact = 1.0 / (1.0 - 0.8);
        assert!(exact <= s);
        let (t, s) = default_theta(1.0, 1.0).unwrap();
        assert_eq!((t, s), (0.5, 4.0));
        assert!(1.0 / (-(-0.5f64).exp_m1()) <= s);
        assert!((1.0 / (-(-0.5f64).exp_m1()) - 2.541).abs() < 1e-3);
        assert!(default_theta(1.0, 0.5).is_err());
    }

    fn unit_catalog() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::deterministic(1.0).unwrap(),
            DistributionSpec::exponential(1.0).unwrap(),
            DistributionSpec::erlang(2, 2.0).unwrap(),
            DistributionSpec::gamma(0.3, 1.0 / 0.3).unwrap(),
            DistributionSpec::uniform(0.0, 2.0).unwrap(),
            DistributionSpec::hyperexponential(vec![0.5, 0.5], vec![0.6, 3.0]).unwrap().with_mean(1.0).unwrap(),
            DistributionSpec::lognormal(0.0, 1.0).unwrap().with_mean(1.0).unwrap(),
            DistributionSpec::weibull(0.6, 1.0).unwrap().with_mean(1.0).unwrap(),
            DistributionSpec::pareto(3.5, 1.0).unwrap().with_mean(1.0).unwrap(),
        ]
    }

    #[test]
    fn surrogate_dominates_exact_laplace_term() {
        for d in unit_catalog() {
            let s = LaplaceTerm::surrogate_for(&d).unwrap();
            let x = LaplaceTerm::exact(&d, s.theta).unwrap();
            assert!(x.inv_gap <= s.inv_gap, "{}: {} > {}", d.family_name(), x.inv_gap, s.inv_gap);
        }
        let d = DistributionSpec::gamma(2.0, 3.0).unwrap();
        let s = LaplaceTerm::surrogate_for(&d).unwrap();
        assert!(LaplaceTerm::exact(&d, s.theta).unwrap().inv_gap <= s.inv_gap);
    }

    #[test]
    fn conditional_example() {
        let p = ConditionalParams {
            n_prime: 2,
            mu_a: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            r1: 3.0,
            r2: 3.0,
            r3: 3.0,
            s1: 1.5,
            s3: 1.5,
        };
        let terms: f64 = p.terms(16.0).unwrap().iter().map(|t| t.to_f64()).sum();
        assert!((terms - 0.21339).abs() < 1e-5);
        assert!((e10(p.prefactor().unwrap()) - 111.1139).abs() < 1e-3);
        assert!((e10(conditional_sup_tail(&p, 16.0).unwrap()) - 110.443).abs() < 1e-2);
        let a = p.terms(16.0).unwrap();
        let b = p.terms(64.0).unwrap();
        assert!((e10(a[0]) - e10(b[0]) - 1.5 * 4f64.log10()).abs() < 1e-12);
        assert!((e10(a[1]) - e10(b[1]) - 1.5 * 4f64.log10()).abs() < 1e-12);
        assert!((e10(a[2]) - e10(b[2]) - 1.5 * 4f64.log10()).abs() < 1e-12);
        assert!(conditional_sup_tail(&p, 15.9).is_err());
        let bad = ConditionalParams { s1: 3.0, ..p };
        let err = conditional_sup_tail(&bad, 16.0).unwrap_err();
        assert!(err.to_string().contains("r1 > s1"));
    }

    #[test]
    fn supremum_explicit_examples() {
        let v = supremum_tail_explicit(3.0, 1.0, 1.0, 0.5, 2.0).unwrap();
        assert!((e10(v) - 12.0 * (26.0 + 8.0 * 3f64.log10())).abs() < 1e-9);
        assert!((e10(v) - 357.8036).abs() < 1e-4);
        let w = supremum_tail_explicit(3.0, 1.0, 1.0, 0.5, 4.0).unwrap();
        assert!((e10(v) - e10(w) - 1.5 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn lemma_moment_examples() {
        let lap = LaplaceTerm { theta: 0.25, inv_gap: 5.0 };
        let v = lemma_moment_bound(&MomentLemma::UnitCount { p: 1.0, laplace: lap }).unwrap();
        assert!((v.to_f64() - 0.25f64.exp() * 120f64.powi(3)).abs() / v.to_f64() < 1e-12);
        assert!((v.to_f64() - 2.2188e6).abs() < 1e2);
        let g = lemma_moment_bound(&MomentLemma::CountGrowth { p: 1.0, t: 10.0, unit_shifted_moment: 2.0 }).unwrap();
        assert!((g.to_f64() - 40.0).abs() < 1e-9);
        let mz = lemma_moment_bound(&MomentLemma::MarcinkiewiczZygmund { p: 2.0, k: 7, abs_moment: 3.0 }).unwrap();
        assert!((mz.to_f64() / (7.0 * 3.0) - 100.0).abs() < 1e-9);
        let err = lemma_moment_bound(&MomentLemma::PooledCentral { r: 2.0, k: 1, t: 0.5, es_r: 2.0, laplace: lap });
        assert!(err.unwrap_err().to_string().contains("pooled-central"));
        assert!(lemma_moment_bound(&MomentLemma::PooledSmallTime { p: 2.0, k: 1, t: 1.5, laplace: lap }).is_err());
    }

    #[test]
    fn lemma_sup_examples() {
        let v = lemma_sup_bound(&SupLemma::DriftTailDiscrete { h3: 1.0, s3: 1.0, r3: 2.0, nu: 1.0, lambda: 10.0 })
            .unwrap()
            .total()
            .unwrap();
        assert!((v.to_f64() - 51.2).abs() < 1e-9);
        let v = lemma_sup_bound(&SupLemma::DriftTailContinuous {
            h1: 1.0,
            h2: 1.0,
            s: 2.0,
            r1: 3.0,
            r2: 3.0,
            z: 1.0,
            nu: 1.0,
            lambda: 4.0,
        })
        .unwrap()
        .total()
        .unwrap();
        assert!((v.to_f64() - 49152.0).abs() < 1e-6);
        let v = lemma_sup_bound(&SupLemma::Maximal { nu: 2.0, gamma: 1.5, c: 1.0, l: 10, lambda: 100.0 })
            .unwrap()
            .total()
            .unwrap();
        assert!((v.to_f64() - 147.539).abs() < 1e-3);
        assert!(lemma_sup_bound(&SupLemma::DriftTailContinuous {
            h1: 1.0,
            h2: 1.0,
            s: 2.0,
            r1: 3.0,
            r2: 3.0,
            z: 2.0,
            nu: 1.0,
            lambda: 4.0,
        })
        .is_err());
        assert!(lemma_sup_bound(&SupLemma::PooledAllTime {
            r1: 3.0,
            s1: 1.5,
            r2: 3.0,
            c1: 1.0,
            c2: 1.0,
            n_prime: 2,
            nu: 0.5,
            lambda: 7.9
        })
        .is_err());
        let SupBound::Reformulation { drift, level } =
            lemma_sup_bound(&SupLemma::ArrivalDiscretization { mu_a_nprime: 3.0, nu: 1.0, lambda: 8.0 }).unwrap()
        else {
            panic!("expected reformulation")
        };
        assert!((drift - 0.25).abs() < 1e-15 && (level - 6.0).abs() < 1e-12);
    }

    #[test]
    fn sspd_comparison_threshold() {
        assert_eq!(sspd_comparison_params(10, 9.0).unwrap(), (10, 0));
        assert_eq!(sspd_comparison_params(10, 5.0).unwrap(), (8, 2));
        assert_eq!(sspd_comparison_params(100, 90.0).unwrap(), (95, 5));
        assert!(sspd_comparison_params(2, 2.0).is_err());
    }

    fn cond_strategy() -> impl Strategy<Value = (ConditionalParams, f64)> {
        (
            1u32..200,
            0.05f64..0.95,
            (0.01f64..100.0, 0.01f64..100.0, 0.01f64..100.0),
            (2.05f64..6.0, 2.05f64..6.0, 2.05f64..6.0),
            (0.05f64..0.95, 0.05f64..0.95),
            16.0f64..1e6,
        )
            .prop_map(|(n, frac, (c1, c2, c3), (r1, r2, r3), (a, b), x)| {
                let s1 = 1.0 + a * (r1 - 1.0);
                let s3 = 1.0 + b * (r3 - 1.0);
                (
                    ConditionalParams { n_prime: n, mu_a: frac * n as f64, c1, c2, c3, r1, r2, r3, s1, s3 },
                    x,
                )
            })
    }

    proptest! {
        #[test]
        fn mean_times_gap_constant_in_rho(r in 2.1f64..8.0, ms in 1.0f64..50.0, ma in 1.0f64..50.0,
                                          rho1 in 0.01f64..0.999, rho2 in 0.01f64..0.999) {
            let a = MomentSummary::new(r, ms, ma, 3, rho1, 1.0).unwrap();
            let b = MomentSummary::new(r, ms, ma, 3, rho2, 1.0).unwrap();
            let ea = e10(mean_bounds(&a).unwrap().0) + (1.0 - rho1).log10();
            let eb = e10(mean_bounds(&b).unwrap().0) + (1.0 - rho2).log10();
            prop_assert!((ea - eb).abs() <= 1e-9);
        }

        #[test]
        fn higher_moment_at_one_is_mean(r in 2.1f64..8.0, ms in 1.0f64..50.0, rho in 0.01f64..0.999) {
            let m = MomentSummary::new(r, ms, 1.0, 1, rho, 1.0).unwrap();
            let a = e10(higher_moment_bound(&m, 1.0).unwrap());
            let b = e10(mean_bounds(&m).unwrap().0);
            prop_assert!((a - b).abs() <= 1e-9);
        }

        #[test]
        fn refined_below_mean_iff_excess_at_least_one(r in 2.1f64..8.0, n in 1u32..10_000, rho in 0.01f64..0.999) {
            let m = unit(r, n, rho);
            let refined = e10(refined_mean_bound(&m).unwrap());
            let plain = e10(mean_bounds(&m).unwrap().0);
            let excess = n as f64 * (1.0 - rho).powi(2);
            if excess >= 1.0 {
                prop_assert!(refined <= plain + 1e-9);
            } else {
                prop_assert!(refined > plain);
            }
        }

        #[test]
        fn tail_and_sspd_monotone(r in 2.1f64..8.0, ms in 1.0f64..50.0, ma in 1.0f64..50.0,
                                  x in 1e-3f64..1e6, dx in 0.0f64..1e3, n in 1u32..1000, dn in 0u32..1000,
                                  dm in 0.0f64..10.0) {
            let m = MomentSummary::new(r, ms, ma, n, 0.7, 1.0).unwrap();
            prop_assert!(main_tail_bound(&m, x + dx).unwrap() <= main_tail_bound(&m, x).unwrap());
            let m2 = MomentSummary { n: n + dn, ..m };
            prop_assert!(main_sspd_bound(&m2).unwrap() <= main_sspd_bound(&m).unwrap());
            let m3 = MomentSummary { m_s: ms + dm, m_a: ma + dm, ..m };
            prop_assert!(main_tail_bound(&m3, x).unwrap() >= main_tail_bound(&m, x).unwrap());
            prop_assert!(main_sspd_bound(&m3).unwrap() >= main_sspd_bound(&m).unwrap());
        }

        #[test]
        fn tail_power_law(r in 2.1f64..8.0, x in 1e-3f64..1e6) {
            let m = unit(r, 1, 0.5);
            let d = e10(main_tail_bound(&m, x).unwrap()) - e10(main_tail_bound(&m, 2.0 * x).unwrap());
            prop_assert!((d - (r / 2.0) * 2f64.log10()).abs() <= 1e-9);
        }

        #[test]
        fn constant_ratio_identity(r in 2.01f64..50.0) {
            let (c1, c2) = universal_constants(r).unwrap();
            let d = e10(c2) - e10(c1);
            prop_assert!((d - r * (1.0 + r.log10() - (r - 2.0).log10())).abs() <= 1e-9);
        }

        #[test]
        fn explicit_supremum_below_main_tail(r in 2.1f64..8.0, ms in 1.0f64..50.0, ma in 1.0f64..50.0,
                                             rho in 0.01f64..0.99, x in 1e-3f64..1e9) {
            let m = MomentSummary::new(r, ms, ma, 4, rho, 1.0).unwrap();
            let explicit = supremum_tail_explicit(r, ms, ma, rho, x / (1.0 - rho)).unwrap();
            prop_assert!(explicit <= main_tail_bound(&m, x).unwrap());
        }

        #[test]
        fn probability_bounds_clamp(r in 2.1f64..8.0, x in 1e-3f64..1e6) {
            let m = unit(r, 1, 0.5);
            let b = main_tail_bound(&m, x).unwrap();
            if e10(b) >= 0.0 {
                prop_assert_eq!(b.to_probability(), 1.0);
            }
        }

        #[test]
        fn two_part_implies_conditional((p, x) in cond_strategy()) {
            let pair = lemma_sup_bound(&SupLemma::TwoPart { params: p, x }).unwrap().total().unwrap();
            let full = conditional_sup_tail(&p, x).unwrap();
            prop_assert!(pair <= full, "pair {:?} full {:?}", pair, full);
        }
    }
}
