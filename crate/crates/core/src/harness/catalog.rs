//! Name-based access to every closed-form bound, for the command line.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

use crate::bounds::{
    self, conditional_sup_tail, halfin_whitt_bounds, higher_moment_bound, kingman_single, kingman_weakened,
    lemma_moment_bound, lemma_sup_bound, main_sspd_bound, main_tail_bound, mean_bounds, refined_mean_bound,
    supremum_tail_explicit, universal_constants, BoundError, ConditionalParams, HalfinWhittParams,
    MomentLemma, MomentSummary, SupBound, SupLemma,
};
use crate::xnum::LogScalar;

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown bound {0:?}; expected one of {names}", names = BOUND_NAMES.join(", "))]
    Unknown(String),
    #[error("bound {bound} needs parameter {param}")]
    Missing { bound: String, param: String },
    #[error("bound {bound}: unexpected parameter {param}")]
    Unexpected { bound: String, param: String },
    #[error("bound {bound}: {message}")]
    Params { bound: String, message: String },
    #[error(transparent)]
    Bound(#[from] BoundError),
}

pub const BOUND_NAMES: &[&str] = &[
    "constants",
    "kingman",
    "kingman-weakened",
    "cyclic",
    "main-tail",
    "main-sspd",
    "mean",
    "refined-mean",
    "higher-moment",
    "halfin-whitt",
    "supremum-explicit",
    "conditional-sup",
    "pooled-central",
    "renewal-central",
    "equilibrium-central",
    "unit-count",
    "shifted-count",
    "count-growth",
    "pooled-small-time-weak",
    "pooled-small-time",
    "arrival-partial-sum",
    "marcinkiewicz-zygmund",
    "nonnegative-sum",
    "drift-tail-continuous",
    "drift-tail-discrete",
    "maximal",
    "maximal-pooled-integer",
    "maximal-pooled-interval",
    "pooled-all-time",
    "maximal-arrival",
    "arrival-discretization",
    "arrival-all-time",
    "two-part",
];

const MOMENT_LEMMAS: std::ops::Range<usize> = 12..23;

/// A named bound evaluated at one parameter point; multi-part bounds list every part.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundEvaluation {
    pub bound: String,
    pub params: BTreeMap<String, f64>,
    pub parts: Vec<(String, LogScalar)>,
    /// Whether the parts bound probabilities, so clamping to 1 is meaningful.
    pub probability: bool,
}

impl BoundEvaluation {
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (name, v) in &self.parts {
            out.push_str(&format!("{}.{name} = {}", self.bound, v));
            if self.probability {
                out.push_str(&format!(" (probability {})", v.to_probability()));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let parts: Vec<Value> = self
            .parts
            .iter()
            .map(|(name, v)| {
                serde_json::json!({
                    "part": name,
                    "exp10": v.exp10(),
                    "value": v.to_f64(),
                    "probability": self.probability.then(|| v.to_probability()),
                })
            })
            .collect();
        serde_json::json!({ "bound": self.bound, "params": self.params, "parts": parts })
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.parts
            .iter()
            .map(|(name, v)| {
                let e = v.exp10().map_or_else(|| "-inf".into(), |e| format!("{e:.6}"));
                let p = if self.probability { v.to_probability().to_string() } else { String::new() };
                format!("{},{name},{e},{p}", self.bound)
            })
            .collect()
    }
}

struct Params<'a> {
    bound: &'a str,
    map: &'a BTreeMap<String, f64>,
    used: std::cell::RefCell<Vec<&'static str>>,
}

impl<'a> Params<'a> {
    fn get(&self, key: &'static str) -> Result<f64, CatalogError> {
        self.used.borrow_mut().push(key);
        self.map
            .get(key)
            .copied()
            .ok_or_else(|| CatalogError::Missing { bound: self.bound.into(), param: key.into() })
    }

    fn or(&self, key: &'static str, default: f64) -> f64 {
        self.used.borrow_mut().push(key);
        self.map.get(key).copied().unwrap_or(default)
    }

    fn uint(&self, key: &'static str) -> Result<u32, CatalogError> {
        let v = self.get(key)?;
        if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(v as u32)
        } else {
            Err(CatalogError::Params { bound: self.bound.into(), message: format!("{key} must be a nonnegative integer") })
        }
    }

    fn finish(&self) -> Result<(), CatalogError> {
        let used = self.used.borrow();
        match self.map.keys().find(|k| !used.contains(&k.as_str())) {
            Some(k) => Err(CatalogError::Unexpected { bound: self.bound.into(), param: k.clone() }),
            None => Ok(()),
        }
    }

    fn summary(&self) -> Result<MomentSummary, CatalogError> {
        let rho = self.get("rho")?;
        self.summary_at(rho)
    }

    fn summary_at(&self, rho: f64) -> Result<MomentSummary, CatalogError> {
        let n = if self.map.contains_key("n") { self.uint("n")? } else { 1 };
        Ok(MomentSummary::new(self.get("r")?, self.get("mS")?, self.get("mA")?, n, rho, self.or("EA", 1.0))?)
    }
}

fn json_number(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        Value::from(v as i64)
    } else {
        Value::from(v)
    }
}

/// Builds a tagged lemma from flat parameters. `theta` and `inv_gap` fill a `laplace` field,
/// and every nested-struct field of `two-part` is taken from the top level.
fn lemma_json(name: &str, map: &BTreeMap<String, f64>) -> Value {
    let mut obj = Map::new();
    obj.insert("lemma".into(), Value::from(name));
    let mut laplace = Map::new();
    let mut nested = Map::new();
    for (k, &v) in map {
        match k.as_str() {
            "theta" | "inv_gap" => {
                laplace.insert(k.clone(), json_number(v));
            }
            "x" if name == "two-part" => {
                obj.insert(k.clone(), json_number(v));
            }
            _ if name == "two-part" => {
                nested.insert(k.clone(), json_number(v));
            }
            _ => {
                obj.insert(k.clone(), json_number(v));
            }
        }
    }
    if !laplace.is_empty() {
        obj.insert("laplace".into(), Value::Object(laplace));
    }
    if name == "two-part" {
        obj.insert("params".into(), Value::Object(nested));
    }
    Value::Object(obj)
}

fn sup_parts(b: SupBound) -> Vec<(String, LogScalar)> {
    match b {
        SupBound::Single { value } => vec![("value".into(), value)],
        SupBound::Pair { arrival, service } => {
            vec![("arrival".into(), arrival), ("service".into(), service), ("total".into(), arrival.add(service))]
        }
        SupBound::Reformulation { drift, level } => vec![
            ("drift".into(), LogScalar::from_value(drift).unwrap_or(LogScalar::Zero)),
            ("level".into(), LogScalar::from_value(level).unwrap_or(LogScalar::Zero)),
        ],
    }
}

/// Evaluates the bound called `name` at `params`.
///
/// ```
/// use std::collections::BTreeMap;
/// use queuebound::harness::evaluate_bound;
///
/// let p = BTreeMap::from([("r".to_string(), 3.0)]);
/// let e = evaluate_bound("constants", &p).unwrap();
/// assert!((e.parts[0].1.exp10().unwrap() - 405.8036).abs() < 1e-3);
/// ```
pub fn evaluate_bound(name: &str, params: &BTreeMap<String, f64>) -> Result<BoundEvaluation, CatalogError> {
    if !BOUND_NAMES.contains(&name) {
        return Err(CatalogError::Unknown(name.to_string()));
    }
    let p = Params { bound: name, map: params, used: Default::default() };
    let one = |v: LogScalar| vec![("value".to_string(), v)];
    let mut probability = false;
    let parts: Vec<(String, LogScalar)> = match name {
        "constants" => {
            let (c1, c2) = universal_constants(p.get("r")?)?;
            vec![("C1".into(), c1), ("C2".into(), c2)]
        }
        "kingman" => {
            let b = kingman_single(p.get("cA2")?, p.get("cS2")?, p.get("rho")?, p.or("EA", 1.0))?;
            vec![("queue".into(), b.queue), ("wait".into(), b.wait)]
        }
        "kingman-weakened" => one(kingman_weakened(p.get("cA2")?, p.get("cS2")?, p.get("rho")?)?),
        "cyclic" => one(bounds::cyclic_multiserver(p.get("cA2")?, p.get("cS2")?, p.uint("n")?, p.get("rho")?)?),
        "main-tail" => {
            probability = true;
            let m = p.summary_at(p.or("rho", 0.5))?;
            one(main_tail_bound(&m, p.get("x")?)?)
        }
        "main-sspd" => {
            probability = true;
            one(main_sspd_bound(&p.summary()?)?)
        }
        "mean" => {
            let (q, w) = mean_bounds(&p.summary()?)?;
            vec![("queue".into(), q), ("wait".into(), w)]
        }
        "refined-mean" => one(refined_mean_bound(&p.summary()?)?),
        "higher-moment" => {
            let m = p.summary()?;
            one(higher_moment_bound(&m, p.get("z")?)?)
        }
        "halfin-whitt" => {
            let n = if params.contains_key("n") { Some(p.uint("n")?) } else { None };
            let hp = HalfinWhittParams { r: p.get("r")?, m_s: p.get("mS")?, m_a: p.get("mA")?, b: p.get("B")?, n };
            let b = halfin_whitt_bounds(&hp, p.or("x", 1.0), p.or("z", 1.0))?;
            vec![("tail".into(), b.tail), ("sspd".into(), b.sspd), ("mean".into(), b.mean), ("moment".into(), b.moment)]
        }
        "supremum-explicit" => {
            probability = true;
            one(supremum_tail_explicit(p.get("r")?, p.get("ES_r")?, p.get("EA_r_mu")?, p.get("rho")?, p.get("z")?)?)
        }
        "conditional-sup" => {
            probability = true;
            let cp = ConditionalParams {
                n_prime: p.uint("n_prime")?,
                mu_a: p.get("mu_a")?,
                c1: p.get("c1")?,
                c2: p.get("c2")?,
                c3: p.get("c3")?,
                r1: p.get("r1")?,
                r2: p.get("r2")?,
                r3: p.get("r3")?,
                s1: p.get("s1")?,
                s3: p.get("s3")?,
            };
            one(conditional_sup_tail(&cp, p.get("x")?)?)
        }
        _ => {
            let value = lemma_json(name, params);
            let invalid = |e: serde_json::Error| CatalogError::Params { bound: name.into(), message: e.to_string() };
            if let Ok(lemma) = serde_json::from_value::<MomentLemma>(value.clone()) {
                return Ok(BoundEvaluation {
                    bound: name.into(),
                    params: params.clone(),
                    parts: one(lemma_moment_bound(&lemma)?),
                    probability: false,
                });
            }
            let parsed = serde_json::from_value::<SupLemma>(value.clone());
            let lemma = match parsed {
                Ok(l) => l,
                Err(e) if is_moment_lemma(name) => {
                    return Err(invalid(serde_json::from_value::<MomentLemma>(value).err().unwrap_or(e)))
                }
                Err(e) => return Err(invalid(e)),
            };
            return Ok(BoundEvaluation {
                bound: name.into(),
                params: params.clone(),
                parts: sup_parts(lemma_sup_bound(&lemma)?),
                probability: !matches!(lemma, SupLemma::ArrivalDiscretization { .. }),
            });
        }
    };
    p.finish()?;
    Ok(BoundEvaluation { bound: name.into(), params: params.clone(), parts, probability })
}

fn is_moment_lemma(name: &str) -> bool {
    BOUND_NAMES[MOMENT_LEMMAS].contains(&name)
}
