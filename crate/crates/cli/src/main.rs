use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use queuebound::bounds::{lemma_moment_bound, LaplaceTerm, MomentLemma};
use queuebound::csim::{estimate_pooled_moment, simulate_supremum, sup_tail_estimate, SupremumConfig};
use queuebound::dists::DistributionSpec;
use queuebound::harness::{evaluate_bound, named_campaign, run_campaign, CampaignConfig, SimSettings, SpecEntry, SupSettings, BOUND_NAMES, CAMPAIGN_NAMES, DOMINANCE_Z};
use queuebound::qsim::{run_event_sim, run_kw, StationaryEstimate};

#[derive(Parser, Debug)]
#[command(name = "queuebound", version, about = "Explicit bounds for GI/GI/n queues and their simulation checks")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON input for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a bound by name: `bound main-tail --r 3 --mS 1 --mA 1 --x 10`.
    Bound {
        /// Bound name; omit with --list.
        name: Option<String>,
        /// List bound names.
        #[arg(long)]
        list: bool,
        /// Parameters as `--key value` pairs.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        params: Vec<String>,
    },
    /// Simulate the queues in a config file.
    Sim,
    /// Simulate the bounding supremum for the queues in a config file.
    Sup,
    /// Monte Carlo pooled renewal moments against their bounds.
    Moments,
    /// Run a verification campaign; exit 1 on any non-vacuous failure.
    Verify {
        /// Built-in campaign, ignored when --config is given.
        #[arg(long, default_value = "default")]
        campaign: String,
        /// Run only these suites.
        #[arg(long)]
        suite: Vec<String>,
        /// Worker threads; output does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Evaluate a bound over the product of comma-separated parameter lists.
    Sweep {
        name: Option<String>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        params: Vec<String>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

type Outcome = Result<(String, u8), Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let mut cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(f) = lift_globals(&mut cli) {
        return report_failure(f);
    }
    match dispatch(&cli).and_then(|(body, code)| emit(cli.out.as_deref(), &body).map(|_| code)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => report_failure(f),
    }
}

fn report_failure(f: Failure) -> ExitCode {
    let (Failure::Usage(m) | Failure::Runtime(m)) = f;
    eprintln!("error: {m}");
    ExitCode::from(2)
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, body).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// Global flags given after a bound name land in the trailing parameters; move them back.
fn lift_globals(cli: &mut Cli) -> Result<(), Failure> {
    let params = match &mut cli.command {
        Command::Bound { params, .. } | Command::Sweep { params, .. } => params,
        _ => return Ok(()),
    };
    let mut rest = Vec::new();
    let mut it = std::mem::take(params).into_iter();
    while let Some(arg) = it.next() {
        let (key, inline) = match arg.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (arg.clone(), None),
        };
        if !matches!(key.as_str(), "--seed" | "--config" | "--out" | "--format") {
            rest.push(arg);
            continue;
        }
        let value = match inline.or_else(|| it.next()) {
            Some(v) => v,
            None => return Err(Failure::Usage(format!("{key} needs a value"))),
        };
        match key.as_str() {
            "--seed" => cli.seed = Some(value.parse().map_err(|_| Failure::Usage(format!("invalid seed {value:?}")))?),
            "--config" => cli.config = Some(PathBuf::from(value)),
            "--out" => cli.out = Some(PathBuf::from(value)),
            _ => {
                cli.format = Some(Format::from_str(&value, true).map_err(|_| Failure::Usage(format!("invalid format {value:?}")))?)
            }
        }
    }
    *params = rest;
    Ok(())
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Bound { name, list, params } => cmd_bound(cli, name.as_deref(), *list, params),
        Command::Sim => cmd_sim(cli),
        Command::Sup => cmd_sup(cli),
        Command::Moments => cmd_moments(cli),
        Command::Verify { campaign, suite, workers } => cmd_verify(cli, campaign, suite, *workers),
        Command::Sweep { name, params } => cmd_sweep(cli, name.as_deref(), params),
    }
}

fn read_config<T: for<'de> Deserialize<'de>>(cli: &Cli, what: &str) -> Result<T, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Usage(format!("{what} needs --config <path>")))?;
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Parses `--key value` and `--key=value` pairs; each value is a comma-separated list.
fn parse_pairs(args: &[String]) -> Result<BTreeMap<String, Vec<f64>>, Failure> {
    let mut out = BTreeMap::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let key = arg.strip_prefix("--").ok_or_else(|| usage(format!("expected --name, got {arg:?}")))?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => (key.to_string(), it.next().ok_or_else(|| usage(format!("--{key} needs a value")))?.clone()),
        };
        let values = value
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| usage(format!("--{key}: {v:?} is not a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        if out.insert(key.clone(), values).is_some() {
            return Err(usage(format!("--{key} given twice")));
        }
    }
    Ok(out)
}

fn bound_name(name: Option<&str>) -> Result<&str, Failure> {
    name.ok_or_else(|| usage(format!("a bound name is required; one of {}", BOUND_NAMES.join(", "))))
}

fn cmd_bound(cli: &Cli, name: Option<&str>, list: bool, params: &[String]) -> Outcome {
    if list {
        return Ok((BOUND_NAMES.iter().map(|n| format!("{n}\n")).collect(), 0));
    }
    let name = bound_name(name)?;
    let mut point = BTreeMap::new();
    for (k, v) in parse_pairs(params)? {
        match v.as_slice() {
            [x] => {
                point.insert(k, *x);
            }
            _ => return Err(usage(format!("--{k}: bound takes one value; use sweep for lists"))),
        }
    }
    let e = evaluate_bound(name, &point).map_err(usage)?;
    let body = match cli.format {
        None => e.text(),
        Some(Format::Json) => pretty(&e.to_json()),
        Some(Format::Csv) => format!("bound,part,exp10,probability\n{}\n", e.csv_rows().join("\n")),
    };
    Ok((body, 0))
}

fn cmd_sweep(cli: &Cli, name: Option<&str>, params: &[String]) -> Outcome {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct SweepFile {
        bound: String,
        params: BTreeMap<String, Vec<f64>>,
    }
    let (name, grid) = if cli.config.is_some() && name.is_none() {
        let f: SweepFile = read_config(cli, "sweep")?;
        (f.bound, f.params)
    } else {
        (bound_name(name)?.to_string(), parse_pairs(params)?)
    };
    let keys: Vec<&String> = grid.keys().collect();
    let mut points = vec![BTreeMap::new()];
    for k in &keys {
        let values = &grid[*k];
        if values.is_empty() {
            return Err(usage(format!("parameter {k} has no values")));
        }
        points = points
            .into_iter()
            .flat_map(|p: BTreeMap<String, f64>| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert((*k).clone(), *v);
                    q
                })
            })
            .collect();
    }
    let evals = points.iter().map(|p| evaluate_bound(&name, p).map_err(usage)).collect::<Result<Vec<_>, _>>()?;
    let body = match cli.format {
        Some(Format::Json) => pretty(&Value::Array(evals.iter().map(|e| e.to_json()).collect())),
        Some(Format::Csv) | None => {
            let mut s = format!("{},part,exp10,probability\n", keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","));
            for e in &evals {
                let lead: Vec<String> = keys.iter().map(|k| e.params[*k].to_string()).collect();
                for row in e.csv_rows() {
                    let tail = row.split_once(',').map_or(row.as_str(), |(_, t)| t);
                    s.push_str(&format!("{},{tail}\n", lead.join(",")));
                }
            }
            s
        }
    };
    Ok((body, 0))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

struct Row {
    spec: String,
    metric: String,
    point: f64,
    ci: f64,
    seed: u64,
}

fn render_rows(format: Option<Format>, command: &str, seed: u64, rows: &[Row], extra: Value) -> String {
    match format {
        Some(Format::Json) => pretty(&json!({
            "command": command,
            "seed": seed,
            "rows": rows
                .iter()
                .map(|r| json!({ "spec": r.spec, "metric": r.metric, "point": r.point, "ci": r.ci, "seed": r.seed }))
                .collect::<Vec<_>>(),
            "diagnostics": extra,
        })),
        _ => {
            let mut s = String::from("spec,metric,point,ci,seed\n");
            for r in rows {
                s.push_str(&format!("{},{},{:e},{:e},{}\n", csv(&r.spec), csv(&r.metric), r.point, r.ci, r.seed));
            }
            s
        }
    }
}

fn csv(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimFile {
    specs: Vec<SpecEntry>,
    #[serde(default)]
    sim: SimSettings,
    #[serde(default)]
    tail_grid: Vec<f64>,
    #[serde(default)]
    moment_orders: Vec<f64>,
    #[serde(default)]
    seed: u64,
}

fn push(rows: &mut Vec<Row>, spec: &str, metric: String, e: &StationaryEstimate, seed: u64) {
    rows.push(Row { spec: spec.to_string(), metric, point: e.point, ci: e.ci_half_width, seed });
}

fn cmd_sim(cli: &Cli) -> Outcome {
    let f: SimFile = read_config(cli, "sim")?;
    let seed = cli.seed.unwrap_or(f.seed);
    let mut grid = f.tail_grid.clone();
    grid.sort_by(f64::total_cmp);
    let cfg = f.sim.config(seed, grid.clone(), f.moment_orders.clone());
    cfg.validate().map_err(usage)?;
    let queues = f.specs.iter().map(|s| s.queue().map(|q| (s.id.clone(), q))).collect::<Result<Vec<_>, _>>().map_err(usage)?;
    let mut rows = Vec::new();
    for (id, q) in &queues {
        let e = run_event_sim(q, &cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
        let k = run_kw(q, &cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
        push(&mut rows, id, "queue_mean".into(), &e.queue_mean, seed);
        push(&mut rows, id, "system_mean".into(), &e.system_mean, seed);
        push(&mut rows, id, "sspd".into(), &e.sspd, seed);
        push(&mut rows, id, "wait_mean".into(), &k.wait_mean, seed);
        push(&mut rows, id, "delay_prob".into(), &k.delay_prob, seed);
        for (i, x) in grid.iter().enumerate() {
            rows.push(Row {
                spec: id.clone(),
                metric: format!("queue_tail@{x}"),
                point: e.queue_tail.survival[i],
                ci: e.queue_tail.ci_half_widths[i],
                seed,
            });
            rows.push(Row {
                spec: id.clone(),
                metric: format!("wait_tail@{x}"),
                point: k.wait_tail.survival[i],
                ci: k.wait_tail.ci_half_widths[i],
                seed,
            });
        }
        for (z, m) in f.moment_orders.iter().zip(&e.queue_moments) {
            push(&mut rows, id, format!("queue_moment@{z}"), m, seed);
        }
    }
    Ok((render_rows(cli.format, "sim", seed, &rows, Value::Null), 0))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SupFile {
    specs: Vec<SpecEntry>,
    #[serde(default)]
    supremum: SupSettings,
    /// Server count of the bounding system; defaults to each spec's `n`.
    #[serde(default)]
    n_prime: Option<u32>,
    #[serde(default)]
    seed: u64,
}

fn cmd_sup(cli: &Cli) -> Outcome {
    let f: SupFile = read_config(cli, "sup")?;
    let seed = cli.seed.unwrap_or(f.seed);
    let mut levels = f.supremum.levels.clone();
    levels.sort_by(f64::total_cmp);
    let max_level = levels.last().copied().unwrap_or(1.0);
    let mut rows = Vec::new();
    let mut diags = Vec::new();
    for spec in &f.specs {
        let q = spec.queue().map_err(usage)?;
        let cfg = SupremumConfig {
            n_prime: f.n_prime.unwrap_or(q.n),
            reps: f.supremum.reps,
            horizon_multiplier: f.supremum.horizon_multiplier,
            master_seed: seed,
            max_level,
        };
        cfg.validate().map_err(usage)?;
        let s = simulate_supremum(&q.arrival, &q.service, &cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
        let tail = sup_tail_estimate(&s, &levels).map_err(|e| Failure::Runtime(e.to_string()))?;
        for (i, k) in levels.iter().enumerate() {
            rows.push(Row {
                spec: spec.id.clone(),
                metric: format!("sup_tail@{k}"),
                point: tail.survival[i],
                ci: tail.ci_half_widths[i],
                seed,
            });
        }
        diags.push(json!({
            "spec": spec.id,
            "n_prime": cfg.n_prime,
            "horizon": s.horizon,
            "doublings": s.doublings,
            "truncation_diag": s.truncation_diag,
        }));
    }
    Ok((render_rows(cli.format, "sup", seed, &rows, Value::Array(diags)), 0))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentsFile {
    service: DistributionSpec,
    #[serde(default = "default_true")]
    equilibrium: bool,
    ks: Vec<u32>,
    times: Vec<f64>,
    orders: Vec<f64>,
    #[serde(default = "default_reps")]
    reps: u32,
    #[serde(default)]
    seed: u64,
}

fn default_true() -> bool {
    true
}
fn default_reps() -> u32 {
    10_000
}

fn cmd_moments(cli: &Cli) -> Outcome {
    let f: MomentsFile = read_config(cli, "moments")?;
    let seed = cli.seed.unwrap_or(f.seed);
    let s = f.service.with_mean(1.0).map_err(usage)?;
    let lap = LaplaceTerm::surrogate_for(&s).map_err(usage)?;
    let mut rows = Vec::new();
    let mut bounds = Vec::new();
    let label = s.family_name().to_string();
    let mut grid = Vec::new();
    for &r in &f.orders {
        for &t in &f.times {
            for &k in &f.ks {
                grid.push((r, t, k));
            }
        }
    }
    for (i, (r, t, k)) in grid.into_iter().enumerate() {
        let sub = seed.wrapping_add(i as u64);
        let est = estimate_pooled_moment(&s, k, t, r, f.equilibrium, f.reps, sub).map_err(usage)?;
        let metric = format!("pooled_central r={r} k={k} t={t}");
        push(&mut rows, &label, metric.clone(), &est, sub);
        let lemma = if t >= 1.0 {
            s.raw_moment(r).ok().map(|es_r| MomentLemma::PooledCentral { r, k, t, es_r, laplace: lap })
        } else {
            Some(MomentLemma::PooledSmallTime { p: r, k, t, laplace: lap })
        };
        if let Some(b) = lemma.and_then(|l| lemma_moment_bound(&l).ok()) {
            let upper = est.upper(DOMINANCE_Z);
            let within = b.exp10().is_some_and(|e| upper <= 0.0 || upper.log10() <= e);
            bounds.push(json!({ "metric": metric, "bound_exp10": b.exp10(), "within": within }));
        }
    }
    Ok((render_rows(cli.format, "moments", seed, &rows, Value::Array(bounds)), 0))
}

fn cmd_verify(cli: &Cli, campaign: &str, suites: &[String], workers: Option<usize>) -> Outcome {
    let mut cfg: CampaignConfig = if cli.config.is_some() {
        read_config(cli, "verify")?
    } else {
        named_campaign(campaign, cli.seed.unwrap_or(0))
            .ok_or_else(|| usage(format!("unknown campaign {campaign:?}; one of {}", CAMPAIGN_NAMES.join(", "))))?
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if !suites.is_empty() {
        let names: Vec<&str> = suites.iter().map(String::as_str).collect();
        if let Some(missing) = names.iter().find(|n| !cfg.suites.iter().any(|s| s.name == **n)) {
            return Err(usage(format!("campaign has no suite {missing:?}")));
        }
        cfg = cfg.only_suites(&names);
    }
    cfg.workers = workers;
    let report = run_campaign(&cfg).map_err(|e| match e {
        queuebound::harness::CampaignError::Config(m) => Failure::Usage(m),
        other => Failure::Runtime(other.to_string()),
    })?;
    let code = report.exit_code() as u8;
    let body = match cli.format {
        Some(Format::Json) => report.to_json(),
        Some(Format::Csv) => report.to_csv(),
        None => report.text_summary(),
    };
    Ok((body, code))
}
