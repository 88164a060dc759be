//! Sweep and adversary experiments driven by TOML configs, with CSV output.
//!
//! A sweep runs every strategy over every `(D, k)` cell and writes one row
//! per cell:
//!
//! ```text
//! scenario_id,strategy,params,D,k,n_trials,n_censored,mean,ci_low,ci_high,ratio,seed
//! ```
//!
//! Reals are written with six significant digits. The same config always
//! produces the same bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::engine::{benchmark_time, AgentAssignment, Scenario, TreasurePlacement};
use crate::error::{invalid, Error, Result};
use crate::estimation::{adversarial_place, competitive_ratio, estimate_hitting_time, AdversarialPlacement, Estimate};
use crate::geometry::GridPoint;
use crate::rng::mix_seed;
use crate::strategy::{stock_f, StrategySpec};

pub const SWEEP_HEADER: [&str; 12] =
    ["scenario_id", "strategy", "params", "D", "k", "n_trials", "n_censored", "mean", "ci_low", "ci_high", "ratio", "seed"];

pub const ADVERSARY_HEADER: [&str; 5] = ["cell_x", "cell_y", "visit_probability", "std_error", "is_argmin"];

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Where known-`k` agents get their estimate of `k`.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KEstimate {
    /// Every agent knows the true `k`.
    #[default]
    Exact,
    /// Every agent uses this value.
    Fixed(f64),
    /// Agent `a` uses entry `a`; the list length must equal `k`.
    PerAgent(Vec<f64>),
    /// Each agent draws `k_a` uniformly in `[k/ρ, kρ]` and plans with `k_a/ρ`.
    RhoUniform(f64),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    KnownK {
        #[serde(default)]
        estimate: KEstimate,
    },
    Uniform {
        #[serde(default = "default_epsilon")]
        epsilon: OneOrMany<f64>,
    },
    Harmonic {
        delta: OneOrMany<f64>,
    },
}

fn default_epsilon() -> OneOrMany<f64> {
    OneOrMany::One(1.0)
}

/// One concrete strategy after parameter lists are expanded.
#[derive(Clone, Debug, PartialEq)]
pub enum StrategyVariant {
    KnownK(KEstimate),
    Uniform { epsilon: f64 },
    Harmonic { delta: f64 },
}

impl StrategyConfig {
    pub fn expand(&self) -> Vec<StrategyVariant> {
        match self {
            StrategyConfig::KnownK { estimate } => vec![StrategyVariant::KnownK(estimate.clone())],
            StrategyConfig::Uniform { epsilon } => {
                epsilon.to_vec().into_iter().map(|epsilon| StrategyVariant::Uniform { epsilon }).collect()
            }
            StrategyConfig::Harmonic { delta } => {
                delta.to_vec().into_iter().map(|delta| StrategyVariant::Harmonic { delta }).collect()
            }
        }
    }
}

impl StrategyVariant {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyVariant::KnownK(_) => "known_k",
            StrategyVariant::Uniform { .. } => "uniform",
            StrategyVariant::Harmonic { .. } => "harmonic",
        }
    }

    pub fn params(&self) -> String {
        match self {
            StrategyVariant::KnownK(KEstimate::Exact) => "k_est=exact".into(),
            StrategyVariant::KnownK(KEstimate::Fixed(v)) => format!("k_est={v}"),
            StrategyVariant::KnownK(KEstimate::PerAgent(list)) => {
                let items: Vec<String> = list.iter().map(|v| v.to_string()).collect();
                format!("k_est=[{}]", items.join(";"))
            }
            StrategyVariant::KnownK(KEstimate::RhoUniform(rho)) => format!("rho={rho}"),
            StrategyVariant::Uniform { epsilon } => format!("epsilon={epsilon}"),
            StrategyVariant::Harmonic { delta } => format!("delta={delta}"),
        }
    }

    /// Agent assignment for a group of `k` agents.
    pub fn assignment(&self, k: u32) -> Result<AgentAssignment> {
        Ok(match self {
            StrategyVariant::KnownK(KEstimate::Exact) => AgentAssignment::Shared(StrategySpec::known_k(f64::from(k))?),
            StrategyVariant::KnownK(KEstimate::Fixed(v)) => AgentAssignment::Shared(StrategySpec::known_k(*v)?),
            StrategyVariant::KnownK(KEstimate::PerAgent(list)) => {
                if list.len() != k as usize {
                    return Err(invalid(format!("per-agent estimate list has {} entries but k = {k}", list.len())));
                }
                AgentAssignment::PerAgent(list.iter().map(|&v| StrategySpec::known_k(v)).collect::<Result<_>>()?)
            }
            StrategyVariant::KnownK(KEstimate::RhoUniform(rho)) => AgentAssignment::RhoUniform { rho: *rho },
            StrategyVariant::Uniform { epsilon } => AgentAssignment::Shared(StrategySpec::uniform(stock_f(*epsilon)?)),
            StrategyVariant::Harmonic { delta } => AgentAssignment::Shared(StrategySpec::harmonic(*delta)?),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlacementConfig {
    /// Fresh uniform cell at distance `D` in every trial.
    #[default]
    Uniform,
    /// Fixed cell; `d_values` is ignored and `D` is the cell's distance.
    Fixed { x: i64, y: i64 },
    /// Least-visited cell at distance `D` by time
    /// `⌈budget_multiplier·(D + D²/k)⌉`, found by the adversarial placer.
    Adversarial {
        #[serde(default = "default_budget_multiplier")]
        budget_multiplier: f64,
        #[serde(default = "default_probe_trials")]
        probe_trials: u64,
    },
}

fn default_budget_multiplier() -> f64 {
    1.0
}

fn default_probe_trials() -> u64 {
    200
}

fn default_n_trials() -> u64 {
    100
}

fn default_cap_multiplier() -> u64 {
    1000
}

fn default_d_values() -> Vec<u64> {
    vec![16]
}

fn default_k_values() -> Vec<u32> {
    vec![1]
}

fn default_output() -> PathBuf {
    PathBuf::from("results.csv")
}

fn default_strategies() -> Vec<StrategyConfig> {
    vec![StrategyConfig::KnownK { estimate: KEstimate::Exact }]
}

/// Parameter sweep. Only `master_seed` is mandatory.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub master_seed: u64,
    #[serde(default = "default_n_trials")]
    pub n_trials: u64,
    /// Time cap is `multiplier · (D + ⌈D²/k⌉)`.
    #[serde(default = "default_cap_multiplier")]
    pub time_cap_multiplier: u64,
    #[serde(default = "default_d_values")]
    pub d_values: Vec<u64>,
    #[serde(default = "default_k_values")]
    pub k_values: Vec<u32>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub placement: PlacementConfig,
    #[serde(default = "default_strategies", rename = "strategy")]
    pub strategies: Vec<StrategyConfig>,
}

fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn read_config(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = parse_toml(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read_config(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.d_values.is_empty() || self.k_values.is_empty() || self.strategies.is_empty() {
            return Err(Error::Config("d_values, k_values and strategy lists must be non-empty".into()));
        }
        if self.n_trials < 2 {
            return Err(invalid("n_trials must be at least 2"));
        }
        if self.time_cap_multiplier == 0 {
            return Err(invalid("time_cap_multiplier must be at least 1"));
        }
        if self.d_values.contains(&0) && !matches!(self.placement, PlacementConfig::Fixed { .. }) {
            return Err(invalid("D values must be at least 1"));
        }
        if self.k_values.contains(&0) {
            return Err(invalid("k values must be at least 1"));
        }
        for variant in self.variants() {
            for &k in &self.k_values {
                variant.assignment(k)?;
            }
        }
        Ok(())
    }

    pub fn variants(&self) -> Vec<StrategyVariant> {
        self.strategies.iter().flat_map(StrategyConfig::expand).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub scenario_id: u64,
    pub strategy: String,
    pub params: String,
    pub d: u64,
    pub k: u32,
    pub estimate: Estimate<f64>,
    /// `None` when `D = 0`.
    pub ratio: Option<f64>,
    pub seed: u64,
}

fn time_cap(multiplier: u64, d: u64, k: u32) -> u64 {
    benchmark_time(d, k).saturating_mul(multiplier).max(1)
}

/// Runs every `(strategy, D, k)` cell in order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let d_values: Vec<Option<u64>> = match cfg.placement {
        PlacementConfig::Fixed { .. } => vec![None],
        _ => cfg.d_values.iter().copied().map(Some).collect(),
    };
    let mut rows = Vec::new();
    let mut scenario_id = 0u64;
    for variant in cfg.variants() {
        for &d_opt in &d_values {
            for &k in &cfg.k_values {
                scenario_id += 1;
                let seed = mix_seed(cfg.master_seed, scenario_id);
                let agents = variant.assignment(k)?;
                let (treasure, d) = match (&cfg.placement, d_opt) {
                    (PlacementConfig::Fixed { x, y }, _) => {
                        let p = TreasurePlacement::Fixed(GridPoint::new(*x, *y));
                        (p, p.distance())
                    }
                    (PlacementConfig::Uniform, Some(d)) => (TreasurePlacement::UniformAtDistance(d), d),
                    (PlacementConfig::Adversarial { budget_multiplier, probe_trials }, Some(d)) => {
                        let budget = (budget_multiplier * (d as f64 + (d * d) as f64 / f64::from(k))).ceil() as u64;
                        let placed = adversarial_place(&agents, k, d, budget, *probe_trials, seed)?;
                        log::info!("adversary put the treasure at {} (p = {})", placed.cell, placed.visit_probability);
                        (TreasurePlacement::Fixed(placed.cell), d)
                    }
                    _ => unreachable!("only fixed placement drops D"),
                };
                let scenario = Scenario::new(agents, k, treasure, time_cap(cfg.time_cap_multiplier, d, k), seed)?;
                let estimate = estimate_hitting_time::<f64>(&scenario, cfg.n_trials)?;
                let ratio = (d > 0).then(|| competitive_ratio(d, u64::from(k), estimate).map(|p| p.ratio)).transpose()?;
                log::info!("{} {} D={d} k={k}: mean {:.1}", variant.name(), variant.params(), estimate.mean);
                rows.push(SweepRow {
                    scenario_id,
                    strategy: variant.name().into(),
                    params: variant.params(),
                    d,
                    k,
                    estimate,
                    ratio,
                    seed,
                });
            }
        }
    }
    Ok(rows)
}

/// `%.6g`-style formatting.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let mantissa = if mantissa.contains('.') { mantissa.trim_end_matches('0').trim_end_matches('.') } else { mantissa };
        format!("{mantissa}e{exp}")
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario_id.to_string(),
            r.strategy.clone(),
            r.params.clone(),
            r.d.to_string(),
            r.k.to_string(),
            r.estimate.n_trials.to_string(),
            r.estimate.n_censored.to_string(),
            format_sig(r.estimate.mean),
            format_sig(r.estimate.ci_low),
            format_sig(r.estimate.ci_high),
            format_sig(r.ratio.unwrap_or(f64::NAN)),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_csv_bytes(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf)?;
    Ok(buf)
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    pub master_seed: u64,
    pub strategy: StrategyConfig,
    pub k: u32,
    #[serde(rename = "D")]
    pub d: u64,
    pub budget: u64,
    #[serde(default = "default_probe_trials")]
    pub probe_trials: u64,
    #[serde(default = "default_adversary_output")]
    pub output: PathBuf,
}

fn default_adversary_output() -> PathBuf {
    PathBuf::from("adversary.csv")
}

impl AdversaryConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = parse_toml(text)?;
        if cfg.k == 0 || cfg.d == 0 || cfg.probe_trials == 0 {
            return Err(invalid("k, D and probe_trials must be at least 1"));
        }
        if cfg.strategy.expand().len() != 1 {
            return Err(Error::Config("adversary config takes a single strategy, not a parameter list".into()));
        }
        cfg.variant().assignment(cfg.k)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read_config(path)?)
    }

    pub fn variant(&self) -> StrategyVariant {
        self.strategy.expand().remove(0)
    }
}

pub fn run_adversary(cfg: &AdversaryConfig) -> Result<AdversarialPlacement> {
    let agents = cfg.variant().assignment(cfg.k)?;
    adversarial_place(&agents, cfg.k, cfg.d, cfg.budget, cfg.probe_trials, cfg.master_seed)
}

pub fn write_adversary_csv<W: Write>(placement: &AdversarialPlacement, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ADVERSARY_HEADER)?;
    for c in &placement.candidates {
        w.write_record([
            c.cell.x.to_string(),
            c.cell.y.to_string(),
            format_sig(c.probability),
            format_sig(c.std_error),
            u8::from(c.cell == placement.cell).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
