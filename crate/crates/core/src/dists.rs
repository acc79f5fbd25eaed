//! Nonnegative parametric distributions: moments, Laplace transforms, and samplers for both
//! the ordinary law and its equilibrium (stationary-excess) law.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, LogNormal, Pareto, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::quad;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistError {
    #[error("invalid {family} parameters: {constraint}")]
    InvalidParameter { family: &'static str, constraint: String },
    #[error("moment of order {order} is infinite (moments exist only below order {available})")]
    InfiniteMoment { order: f64, available: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn invalid(family: &'static str, constraint: impl Into<String>) -> DistError {
    DistError::InvalidParameter { family, constraint: constraint.into() }
}

/// Parametric family with its canonical parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Deterministic { value: f64 },
    Exponential { rate: f64 },
    Erlang { k: u32, rate: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { a: f64, b: f64 },
    HyperExponential { weights: Vec<f64>, rates: Vec<f64> },
    LogNormal { mu: f64, sigma: f64 },
    Weibull { shape: f64, scale: f64 },
    Pareto { shape: f64, scale: f64 },
}

/// A validated nonnegative distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    family: Family,
}

fn positive(family: &'static str, name: &str, v: f64) -> Result<(), DistError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(family, format!("{name} must be positive and finite, got {v}")))
    }
}

/// Validates `family` and wraps it.
pub fn make_distribution(family: Family) -> Result<DistributionSpec, DistError> {
    match &family {
        Family::Deterministic { value } => positive("deterministic", "value", *value)?,
        Family::Exponential { rate } => positive("exponential", "rate", *rate)?,
        Family::Erlang { k, rate } => {
            if *k == 0 {
                return Err(invalid("erlang", "k must be at least 1"));
            }
            positive("erlang", "rate", *rate)?
        }
        Family::Gamma { shape, scale } => {
            positive("gamma", "shape", *shape)?;
            positive("gamma", "scale", *scale)?
        }
        Family::Uniform { a, b } => {
            if !(a.is_finite() && b.is_finite() && *a >= 0.0) {
                return Err(invalid("uniform", "a must be finite and nonnegative"));
            }
            if a >= b {
                return Err(invalid("uniform", format!("a < b required, got a={a}, b={b}")));
            }
        }
        Family::HyperExponential { weights, rates } => {
            if weights.is_empty() || weights.len() != rates.len() {
                return Err(invalid("hyperexponential", "weights and rates must be nonempty and of equal length"));
            }
            for &w in weights {
                if !(w.is_finite() && w >= 0.0) {
                    return Err(invalid("hyperexponential", "weights must be nonnegative"));
                }
            }
            for &r in rates {
                positive("hyperexponential", "rate", r)?;
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(invalid("hyperexponential", format!("weights must sum to 1, got {total}")));
            }
        }
        Family::LogNormal { mu, sigma } => {
            if !mu.is_finite() {
                return Err(invalid("lognormal", "mu must be finite"));
            }
            positive("lognormal", "sigma", *sigma)?
        }
        Family::Weibull { shape, scale } => {
            positive("weibull", "shape", *shape)?;
            positive("weibull", "scale", *scale)?
        }
        Family::Pareto { shape, scale } => {
            positive("pareto", "scale", *scale)?;
            if !(shape.is_finite() && *shape > 1.0) {
                return Err(invalid("pareto", format!("shape > 1 required, got {shape}")));
            }
        }
    }
    Ok(DistributionSpec { family })
}

impl DistributionSpec {
    pub fn deterministic(value: f64) -> Result<Self, DistError> {
        make_distribution(Family::Deterministic { value })
    }

    pub fn exponential(rate: f64) -> Result<Self, DistError> {
        make_distribution(Family::Exponential { rate })
    }

    pub fn erlang(k: u32, rate: f64) -> Result<Self, DistError> {
        make_distribution(Family::Erlang { k, rate })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self, DistError> {
        make_distribution(Family::Gamma { shape, scale })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self, DistError> {
        make_distribution(Family::Uniform { a, b })
    }

    pub fn hyperexponential(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self, DistError> {
        make_distribution(Family::HyperExponential { weights, rates })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self, DistError> {
        make_distribution(Family::LogNormal { mu, sigma })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self, DistError> {
        make_distribution(Family::Weibull { shape, scale })
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self, DistError> {
        make_distribution(Family::Pareto { shape, scale })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Deterministic { .. } => "deterministic",
            Family::Exponential { .. } => "exponential",
            Family::Erlang { .. } => "erlang",
            Family::Gamma { .. } => "gamma",
            Family::Uniform { .. } => "uniform",
            Family::HyperExponential { .. } => "hyperexponential",
            Family::LogNormal { .. } => "lognormal",
            Family::Weibull { .. } => "weibull",
            Family::Pareto { .. } => "pareto",
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.family, Family::Exponential { .. })
    }

    /// Law of `c·X`.
    pub fn scale(&self, c: f64) -> Result<Self, DistError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(DistError::InvalidArgument(format!("scale factor must be positive, got {c}")));
        }
        let family = match &self.family {
            Family::Deterministic { value } => Family::Deterministic { value: value * c },
            Family::Exponential { rate } => Family::Exponential { rate: rate / c },
            Family::Erlang { k, rate } => Family::Erlang { k: *k, rate: rate / c },
            Family::Gamma { shape, scale } => Family::Gamma { shape: *shape, scale: scale * c },
            Family::Uniform { a, b } => Family::Uniform { a: a * c, b: b * c },
            Family::HyperExponential { weights, rates } => Family::HyperExponential {
                weights: weights.clone(),
                rates: rates.iter().map(|r| r / c).collect(),
            },
            Family::LogNormal { mu, sigma } => Family::LogNormal { mu: mu + c.ln(), sigma: *sigma },
            Family::Weibull { shape, scale } => Family::Weibull { shape: *shape, scale: scale * c },
            Family::Pareto { shape, scale } => Family::Pareto { shape: *shape, scale: scale * c },
        };
        make_distribution(family)
    }

    /// Rescaled copy with the given mean.
    pub fn with_mean(&self, mean: f64) -> Result<Self, DistError> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(DistError::InvalidArgument(format!("mean must be positive, got {mean}")));
        }
        self.scale(mean / self.mean())
    }

    /// Supremum of orders `r` with `E[X^r]` finite (exclusive for Pareto).
    pub fn moment_order_available(&self) -> f64 {
        match self.family {
            Family::Pareto { shape, .. } => shape,
            _ => f64::INFINITY,
        }
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1.0).expect("every family has a finite mean")
    }

    /// Rate `1/E[X]`.
    pub fn rate(&self) -> f64 {
        1.0 / self.mean()
    }

    pub fn variance(&self) -> f64 {
        match self.raw_moment(2.0) {
            Ok(m2) => (m2 - self.mean().powi(2)).max(0.0),
            Err(_) => f64::INFINITY,
        }
    }

    /// Squared coefficient of variation, `Var[X]/E[X]^2`.
    pub fn scv(&self) -> f64 {
        self.variance() / self.mean().powi(2)
    }

    /// `E[X^k]` for `k ≥ 0`.
    pub fn raw_moment(&self, k: f64) -> Result<f64, DistError> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(DistError::InvalidArgument(format!("moment order must be nonnegative, got {k}")));
        }
        if k == 0.0 {
            return Ok(1.0);
        }
        let gamma_moment = |shape: f64, scale: f64| {
            if k.fract() == 0.0 && k <= 170.0 {
                (0..k as u32).map(|j| (shape + j as f64) * scale).product()
            } else {
                (ln_gamma(shape + k) - ln_gamma(shape) + k * scale.ln()).exp()
            }
        };
        Ok(match &self.family {
            Family::Deterministic { value } => value.powf(k),
            Family::Exponential { rate } => gamma_moment(1.0, 1.0 / rate),
            Family::Erlang { k: shape, rate } => gamma_moment(*shape as f64, 1.0 / rate),
            Family::Gamma { shape, scale } => gamma_moment(*shape, *scale),
            Family::Uniform { a, b } => (b.powf(k + 1.0) - a.powf(k + 1.0)) / ((k + 1.0) * (b - a)),
            Family::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w * gamma_moment(1.0, 1.0 / r)).sum()
            }
            Family::LogNormal { mu, sigma } => (k * mu + 0.5 * k * k * sigma * sigma).exp(),
            Family::Weibull { shape, scale } => (k * scale.ln() + ln_gamma(1.0 + k / shape)).exp(),
            Family::Pareto { shape, scale } => {
                if k >= *shape {
                    return Err(DistError::InfiniteMoment { order: k, available: *shape });
                }
                shape * scale.powf(k) / (shape - k)
            }
        })
    }

    /// Scale-free moment `E[(X/E[X])^r]`.
    pub fn normalized_moment(&self, r: f64) -> Result<f64, DistError> {
        Ok(self.raw_moment(r)? / self.mean().powf(r))
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match &self.family {
            Family::Deterministic { value } => {
                if x < *value {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Exponential { rate } => (-rate * x).exp(),
            Family::Erlang { k, rate } => gamma_ur(*k as f64, rate * x),
            Family::Gamma { shape, scale } => gamma_ur(*shape, x / scale),
            Family::Uniform { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            Family::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w * (-r * x).exp()).sum()
            }
            Family::LogNormal { mu, sigma } => {
                if x == 0.0 {
                    1.0
                } else {
                    0.5 * erfc((x.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
                }
            }
            Family::Weibull { shape, scale } => (-(x / scale).powf(*shape)).exp(),
            Family::Pareto { shape, scale } => {
                if x <= *scale {
                    1.0
                } else {
                    (scale / x).powf(*shape)
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    fn kinks(&self) -> Vec<f64> {
        match &self.family {
            Family::Deterministic { value } => vec![*value],
            Family::Uniform { a, b } => vec![*a, *b],
            Family::Pareto { scale, .. } => vec![*scale],
            _ => Vec::new(),
        }
    }

    /// Starting point for half-line quadrature: beyond the bulk of the mass.
    fn reach(&self) -> f64 {
        let m = self.mean();
        let spread = if self.variance().is_finite() { self.variance().sqrt() } else { m };
        match &self.family {
            Family::Uniform { b, .. } => *b,
            Family::Deterministic { value } => *value,
            _ => m + 10.0 * spread,
        }
    }

    /// `E[e^{-θX}]`.
    pub fn laplace(&self, theta: f64) -> Result<f64, DistError> {
        Ok(1.0 - self.laplace_gap(theta)?)
    }

    /// `1 − E[e^{-θX}]`, computed without cancellation.
    pub fn laplace_gap(&self, theta: f64) -> Result<f64, DistError> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(DistError::InvalidArgument(format!("theta must be positive, got {theta}")));
        }
        Ok(match &self.family {
            Family::Deterministic { value } => -(-theta * value).exp_m1(),
            Family::Exponential { rate } => theta / (rate + theta),
            Family::Erlang { k, rate } => -(-(*k as f64) * (theta / rate).ln_1p()).exp_m1(),
            Family::Gamma { shape, scale } => -(-shape * (theta * scale).ln_1p()).exp_m1(),
            Family::Uniform { a, b } => {
                let w = b - a;
                let l = (-theta * a).exp() * -(-theta * w).exp_m1() / (theta * w);
                1.0 - l
            }
            Family::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w * theta / (r + theta)).sum()
            }
            _ => self.laplace_gap_numeric(theta),
        })
    }

    /// `θ ∫ e^{-θx} P(X > x) dx` by quadrature, valid for every family.
    pub(crate) fn laplace_gap_numeric(&self, theta: f64) -> f64 {
        let tol = 1e-12;
        let v = quad::integrate_half_line(
            |x| theta * (-theta * x).exp() * self.survival(x),
            |q| (-theta * q).exp() * self.survival(q),
            self.reach(),
            &self.kinks(),
            tol,
        );
        v.clamp(0.0, 1.0)
    }

    /// `E[X^2] / (2 E[X])`, the mean of the equilibrium law.
    pub fn equilibrium_mean(&self) -> f64 {
        match self.raw_moment(2.0) {
            Ok(m2) => m2 / (2.0 * self.mean()),
            Err(_) => f64::INFINITY,
        }
    }

    /// Equilibrium CDF `(1/E[X]) ∫_0^y P(X > z) dz`, by quadrature.
    pub fn equilibrium_cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let v = quad::integrate_pieces(|z| self.survival(z), 0.0, y, &self.kinks(), 1e-12 * self.mean());
        (v / self.mean()).clamp(0.0, 1.0)
    }

    pub fn sampler(&self) -> Sampler {
        Sampler(match &self.family {
            Family::Deterministic { value } => Draw::Const(*value),
            Family::Exponential { rate } => Draw::Exp(exp_law(*rate)),
            Family::Erlang { k, rate } => Draw::Gamma(gamma_law(*k as f64, 1.0 / rate)),
            Family::Gamma { shape, scale } => Draw::Gamma(gamma_law(*shape, *scale)),
            Family::Uniform { a, b } => Draw::Uniform { low: *a, width: b - a },
            Family::HyperExponential { weights, rates } => {
                Draw::mixture(weights, rates.iter().map(|&r| Draw::Exp(exp_law(r))).collect())
            }
            Family::LogNormal { mu, sigma } => Draw::LogNormal(LogNormal::new(*mu, *sigma).expect("validated")),
            Family::Weibull { shape, scale } => Draw::Weibull(Weibull::new(*scale, *shape).expect("validated")),
            Family::Pareto { shape, scale } => Draw::Pareto(Pareto::new(*scale, *shape).expect("validated")),
        })
    }

    /// Sampler for the equilibrium law, built as `U · X̃` with `X̃` length-biased.
    pub fn equilibrium_sampler(&self) -> Sampler {
        let times_u = |d: Draw| Draw::TimesUniform(Box::new(d));
        Sampler(match &self.family {
            Family::Deterministic { value } => Draw::Uniform { low: 0.0, width: *value },
            Family::Exponential { rate } => Draw::Exp(exp_law(*rate)),
            Family::Erlang { k, rate } => {
                let w = vec![1.0 / *k as f64; *k as usize];
                let parts = (1..=*k).map(|j| Draw::Gamma(gamma_law(j as f64, 1.0 / rate))).collect();
                Draw::mixture(&w, parts)
            }
            Family::Gamma { shape, scale } => times_u(Draw::Gamma(gamma_law(shape + 1.0, *scale))),
            Family::Uniform { a, b } => times_u(Draw::SqrtLinear { a2: a * a, span: b * b - a * a }),
            Family::HyperExponential { weights, rates } => {
                let w: Vec<f64> = weights.iter().zip(rates).map(|(w, r)| w / r).collect();
                let total: f64 = w.iter().sum();
                let w: Vec<f64> = w.iter().map(|x| x / total).collect();
                Draw::mixture(&w, rates.iter().map(|&r| Draw::Exp(exp_law(r))).collect())
            }
            Family::LogNormal { mu, sigma } => {
                times_u(Draw::LogNormal(LogNormal::new(mu + sigma * sigma, *sigma).expect("validated")))
            }
            Family::Weibull { shape, scale } => times_u(Draw::GammaPower {
                g: gamma_law(1.0 + 1.0 / shape, 1.0),
                power: 1.0 / shape,
                scale: *scale,
            }),
            Family::Pareto { shape, scale } => {
                times_u(Draw::Pareto(Pareto::new(*scale, shape - 1.0).expect("validated")))
            }
        })
    }

    /// One draw; prefer [`DistributionSpec::sampler`] in loops.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.sampler().sample(rng)
    }

    /// One equilibrium draw; prefer [`DistributionSpec::equilibrium_sampler`] in loops.
    pub fn equilibrium_sample(&self, rng: &mut RngStream) -> f64 {
        self.equilibrium_sampler().sample(rng)
    }

    /// Canonical config literal for this distribution.
    pub fn to_literal(&self) -> DistLiteral {
        match &self.family {
            Family::Deterministic { value } => DistLiteral::Deterministic { value: Some(*value), mean: None },
            Family::Exponential { rate } => DistLiteral::Exponential { rate: Some(*rate), mean: None },
            Family::Erlang { k, rate } => DistLiteral::Erlang { k: *k, rate: Some(*rate), mean: None },
            Family::Gamma { shape, scale } => DistLiteral::Gamma { shape: *shape, scale: Some(*scale), mean: None },
            Family::Uniform { a, b } => DistLiteral::Uniform { a: *a, b: *b },
            Family::HyperExponential { weights, rates } => {
                DistLiteral::Hyperexponential { weights: weights.clone(), rates: rates.clone() }
            }
            Family::LogNormal { mu, sigma } => DistLiteral::Lognormal { mu: Some(*mu), sigma: *sigma, mean: None },
            Family::Weibull { shape, scale } => DistLiteral::Weibull { shape: *shape, scale: Some(*scale), mean: None },
            Family::Pareto { shape, scale } => DistLiteral::Pareto { shape: *shape, scale: Some(*scale), mean: None },
        }
    }
}

fn exp_law(rate: f64) -> Exp<f64> {
    Exp::new(rate).expect("validated rate")
}

fn gamma_law(shape: f64, scale: f64) -> Gamma<f64> {
    Gamma::new(shape, scale).expect("validated gamma parameters")
}

/// Config-file form, e.g. `{"family":"erlang","k":2,"mean":1.0}`.
///
/// Scale-type families accept either their natural parameter or `mean`, not both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistLiteral {
    Deterministic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
    },
    Exponential {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
    },
    Erlang {
        k: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
    },
    Gamma {
        shape: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Hyperexponential {
        weights: Vec<f64>,
        rates: Vec<f64>,
    },
    Lognormal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<f64>,
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
    },
    Weibull {
        shape: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
    },
    Pareto {
        shape: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
    },
}

fn one_of(family: &'static str, natural: &str, a: Option<f64>, mean: Option<f64>) -> Result<Either, DistError> {
    match (a, mean) {
        (Some(v), None) => Ok(Either::Natural(v)),
        (None, Some(m)) => Ok(Either::Mean(m)),
        _ => Err(invalid(family, format!("exactly one of `{natural}` or `mean` must be given"))),
    }
}

enum Either {
    Natural(f64),
    Mean(f64),
}

impl DistLiteral {
    pub fn build(&self) -> Result<DistributionSpec, DistError> {
        use Either::*;
        match self {
            DistLiteral::Deterministic { value, mean } => match one_of("deterministic", "value", *value, *mean)? {
                Natural(v) | Mean(v) => DistributionSpec::deterministic(v),
            },
            DistLiteral::Exponential { rate, mean } => match one_of("exponential", "rate", *rate, *mean)? {
                Natural(r) => DistributionSpec::exponential(r),
                Mean(m) => {
                    positive("exponential", "mean", m)?;
                    DistributionSpec::exponential(1.0 / m)
                }
            },
            DistLiteral::Erlang { k, rate, mean } => match one_of("erlang", "rate", *rate, *mean)? {
                Natural(r) => DistributionSpec::erlang(*k, r),
                Mean(m) => {
                    positive("erlang", "mean", m)?;
                    DistributionSpec::erlang(*k, *k as f64 / m)
                }
            },
            DistLiteral::Gamma { shape, scale, mean } => match one_of("gamma", "scale", *scale, *mean)? {
                Natural(s) => DistributionSpec::gamma(*shape, s),
                Mean(m) => DistributionSpec::gamma(*shape, 1.0)?.with_mean(m),
            },
            DistLiteral::Uniform { a, b } => DistributionSpec::uniform(*a, *b),
            DistLiteral::Hyperexponential { weights, rates } => {
                DistributionSpec::hyperexponential(weights.clone(), rates.clone())
            }
            DistLiteral::Lognormal { mu, sigma, mean } => match one_of("lognormal", "mu", *mu, *mean)? {
                Natural(mu) => DistributionSpec::lognormal(mu, *sigma),
                Mean(m) => DistributionSpec::lognormal(0.0, *sigma)?.with_mean(m),
            },
            DistLiteral::Weibull { shape, scale, mean } => match one_of("weibull", "scale", *scale, *mean)? {
                Natural(s) => DistributionSpec::weibull(*shape, s),
                Mean(m) => DistributionSpec::weibull(*shape, 1.0)?.with_mean(m),
            },
            DistLiteral::Pareto { shape, scale, mean } => match one_of("pareto", "scale", *scale, *mean)? {
                Natural(s) => DistributionSpec::pareto(*shape, s),
                Mean(m) => DistributionSpec::pareto(*shape, 1.0)?.with_mean(m),
            },
        }
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_literal().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        DistLiteral::deserialize(d)?.build().map_err(serde::de::Error::custom)
    }
}

/// A ChaCha8 stream keyed by `(master_seed, stream_id)`; the block counter advances on use.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        RngStream { master_seed, stream_id, rng }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[derive(Debug, Clone)]
enum Draw {
    Const(f64),
    Exp(Exp<f64>),
    Gamma(Gamma<f64>),
    Uniform { low: f64, width: f64 },
    LogNormal(LogNormal<f64>),
    Weibull(Weibull<f64>),
    Pareto(Pareto<f64>),
    SqrtLinear { a2: f64, span: f64 },
    GammaPower { g: Gamma<f64>, power: f64, scale: f64 },
    TimesUniform(Box<Draw>),
    Mixture { cumulative: Vec<f64>, parts: Vec<Draw> },
}

impl Draw {
    fn mixture(weights: &[f64], parts: Vec<Draw>) -> Draw {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Draw::Mixture { cumulative, parts }
    }

    fn draw(&self, rng: &mut RngStream) -> f64 {
        match self {
            Draw::Const(v) => *v,
            Draw::Exp(d) => d.sample(rng),
            Draw::Gamma(d) => d.sample(rng),
            Draw::Uniform { low, width } => low + width * rng.uniform(),
            Draw::LogNormal(d) => d.sample(rng),
            Draw::Weibull(d) => d.sample(rng),
            Draw::Pareto(d) => d.sample(rng),
            Draw::SqrtLinear { a2, span } => (a2 + span * rng.uniform()).sqrt(),
            Draw::GammaPower { g, power, scale } => scale * g.sample(rng).powf(*power),
            Draw::TimesUniform(inner) => {
                let u = rng.uniform();
                u * inner.draw(rng)
            }
            Draw::Mixture { cumulative, parts } => {
                let u = rng.uniform() * cumulative[cumulative.len() - 1];
                let i = cumulative.partition_point(|&c| c <= u).min(parts.len() - 1);
                parts[i].draw(rng)
            }
        }
    }
}

/// Prebuilt sampler for one law.
#[derive(Debug, Clone)]
pub struct Sampler(Draw);

impl Sampler {
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.0.draw(rng).max(0.0)
    }
}
