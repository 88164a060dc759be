//! Embedded invariant suites behind the `selftest` command.
//!
//! Each suite is a quick exhaustive or statistical check of one building
//! block. The spiral used by the coverage suite can be swapped out so the
//! suite itself can be shown to fail.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::engine::{count_distinct_visited, run_trial, AgentAssignment, EngineKind, Scenario, TreasurePlacement};
use crate::estimation::chi_square_uniform;
use crate::geometry::{sample_ball_uniform, spiral_duration, spiral_step, Ball, GridPoint};
use crate::harmonic::HarmonicSampler;
use crate::rng::{mix_seed, stream, Purpose, TRIAL_SLOT};
use crate::strategy::{stock_f, StrategySpec};

pub type SpiralFn = fn(GridPoint, u64) -> GridPoint;

/// Spiral position function that skips the last cell of every ring.
/// Negative control for the coverage suite.
pub fn broken_spiral(origin: GridPoint, step: u64) -> GridPoint {
    let m = step.isqrt().div_ceil(2);
    if m >= 1 && step == (2 * m + 1) * (2 * m + 1) - 1 {
        return spiral_step(origin, step - 1);
    }
    spiral_step(origin, step)
}

#[derive(Clone, Debug)]
pub struct SelftestOptions {
    pub spiral: SpiralFn,
    /// Largest spiral budget checked by the coverage suite.
    pub max_budget: u64,
    pub ball_draws: u64,
    pub harmonic_draws: u64,
    pub equivalence_scenarios: u64,
    pub counting_scenarios: u64,
    pub seed: u64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            spiral: spiral_step,
            max_budget: 10_000,
            ball_draws: 1_000_000,
            harmonic_draws: 2_000_000,
            equivalence_scenarios: 500,
            counting_scenarios: 100,
            seed: 0x5e1f_7e57,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn first_failure(&self) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| !s.passed)
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<20} {:<6} {:>9}  detail\n", "suite", "result", "seconds");
        for s in &self.suites {
            out += &format!(
                "{:<20} {:<6} {:>9.2}  {}\n",
                s.name,
                if s.passed { "PASS" } else { "FAIL" },
                s.elapsed.as_secs_f64(),
                s.detail
            );
        }
        out
    }
}

pub fn run_selftest(opts: &SelftestOptions) -> SelftestReport {
    type Suite = fn(&SelftestOptions) -> std::result::Result<String, String>;
    let suites: [(&'static str, Suite); 4] = [
        ("spiral_coverage", |o| check_spiral_coverage(o.spiral, o.max_budget)),
        ("sampler_chi_square", check_samplers),
        ("engine_equivalence", |o| check_engine_equivalence(o.equivalence_scenarios, o.seed)),
        ("counting_bound", |o| check_counting_bound(o.counting_scenarios, o.seed)),
    ];
    let suites = suites
        .into_iter()
        .map(|(name, run)| {
            let start = Instant::now();
            let (passed, detail) = match run(opts) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            SuiteResult { name, passed, detail, elapsed: start.elapsed() }
        })
        .collect();
    SelftestReport { suites }
}

/// For every budget `t ≤ max_budget`, the first `spiral_duration(t)` steps
/// of `spiral` visit every cell of the L1 ball of radius `⌈√t/2⌉`.
pub fn check_spiral_coverage(spiral: SpiralFn, max_budget: u64) -> std::result::Result<String, String> {
    let mut visited = HashSet::from([GridPoint::ORIGIN]);
    let mut walked = 0u64;
    let mut radius = 0u64;
    for t in 0..=max_budget {
        while (2 * radius) * (2 * radius) < t {
            radius += 1;
        }
        let steps = spiral_duration(t).steps;
        while walked < steps {
            walked += 1;
            visited.insert(spiral(GridPoint::ORIGIN, walked));
        }
        if let Some(missed) = Ball::new(GridPoint::ORIGIN, radius).cells().find(|c| !visited.contains(c)) {
            return Err(format!("budget {t}: {steps} steps miss {missed} (radius {radius})"));
        }
    }
    Ok(format!("budgets 0..={max_budget}"))
}

fn check_samplers(opts: &SelftestOptions) -> std::result::Result<String, String> {
    let mut rng = stream(opts.seed, 0, TRIAL_SLOT, Purpose::Sampler);
    for r in [1u64, 2, 5, 10] {
        let ball = Ball::new(GridPoint::ORIGIN, r);
        let index: std::collections::HashMap<GridPoint, usize> = ball.cells().enumerate().map(|(i, c)| (c, i)).collect();
        let mut counts = vec![0u64; index.len()];
        for _ in 0..opts.ball_draws {
            let p = sample_ball_uniform(&mut rng, GridPoint::ORIGIN, r);
            match index.get(&p) {
                Some(&i) => counts[i] += 1,
                None => return Err(format!("ball sampler left radius {r}: {p}")),
            }
        }
        let test = chi_square_uniform(&counts);
        if test.p_value <= 0.01 {
            return Err(format!("ball radius {r}: chi-square p = {:.4}", test.p_value));
        }
    }
    // first radii individually, the rest pooled
    const BINS: usize = 16;
    for delta in [0.3, 0.5, 0.8] {
        let sampler = HarmonicSampler::new(delta).map_err(|e| e.to_string())?;
        let mut counts = [0u64; BINS + 1];
        for _ in 0..opts.harmonic_draws {
            let d = sampler.sample_radius(&mut rng) as usize;
            counts[d.min(BINS + 1) - 1] += 1;
        }
        let n = opts.harmonic_draws as f64;
        let head: f64 = (1..=BINS as u64).map(|d| sampler.radius_probability(d)).sum();
        let stat: f64 = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let p = if i < BINS { sampler.radius_probability(i as u64 + 1) } else { 1.0 - head };
                (c as f64 - n * p).powi(2) / (n * p)
            })
            .sum();
        let p_value = statrs::distribution::ContinuousCDF::sf(
            &statrs::distribution::ChiSquared::new(BINS as f64).expect("df >= 1"),
            stat,
        );
        if p_value <= 0.01 {
            return Err(format!("harmonic delta {delta}: chi-square p = {p_value:.4}"));
        }
    }
    Ok("ball r in {1,2,5,10}; harmonic delta in {0.3,0.5,0.8}".into())
}

/// A random scenario with `D ≤ 16`, `k ≤ 4`, any of the three strategies
/// (sometimes mixed per agent) and a time cap of `10⁵`.
pub fn random_small_scenario<R: Rng + ?Sized>(rng: &mut R) -> Scenario {
    let k = rng.random_range(1..=4u32);
    let d = rng.random_range(1..=16u64);
    let strategy = |rng: &mut R| match rng.random_range(0..3) {
        0 => StrategySpec::known_k(rng.random_range(1.0..8.0)).expect("valid estimate"),
        1 => StrategySpec::uniform(stock_f([0.5, 1.0][rng.random_range(0..2)]).expect("valid epsilon")),
        _ => StrategySpec::harmonic([0.3, 0.5, 0.8][rng.random_range(0..3)]).expect("valid delta"),
    };
    let agents = if rng.random_bool(0.25) {
        AgentAssignment::PerAgent((0..k).map(|_| strategy(rng)).collect())
    } else {
        AgentAssignment::Shared(strategy(rng))
    };
    let treasure = if rng.random_bool(0.5) {
        TreasurePlacement::UniformAtDistance(d)
    } else {
        let i = rng.random_range(0..4 * d);
        TreasurePlacement::Fixed(crate::geometry::l1_ring_point(GridPoint::ORIGIN, d, i))
    };
    Scenario::new(agents, k, treasure, 100_000, rng.random()).expect("valid scenario")
}

/// Runs `n` random small scenarios through both engines, one trial each.
pub fn check_engine_equivalence(n: u64, seed: u64) -> std::result::Result<String, String> {
    let mut hits = 0;
    for i in 0..n {
        let mut rng = stream(mix_seed(seed, 1), i, TRIAL_SLOT, Purpose::Sampler);
        let s = random_small_scenario(&mut rng);
        let trial = rng.random_range(0..1000);
        let naive = run_trial(&s, trial, EngineKind::Naive);
        let fast = run_trial(&s, trial, EngineKind::Fast);
        if (naive.hit_time, naive.finder_agent) != (fast.hit_time, fast.finder_agent) {
            return Err(format!(
                "scenario {i} ({}, D = {}, k = {}): naive {:?}/{:?}, fast {:?}/{:?}",
                s.strategy_name(),
                s.distance(),
                s.k,
                naive.hit_time,
                naive.finder_agent,
                fast.hit_time,
                fast.finder_agent
            ));
        }
        hits += u64::from(fast.hit_time.is_some());
    }
    Ok(format!("{n} scenarios, {hits} hits"))
}

/// `k` agents visit at most `k·t + 1 ≤ k(t+1)` cells by time `t`.
pub fn check_counting_bound(n: u64, seed: u64) -> std::result::Result<String, String> {
    for i in 0..n {
        let mut rng = stream(mix_seed(seed, 2), i, TRIAL_SLOT, Purpose::Sampler);
        let s = random_small_scenario(&mut rng);
        for t in [0u64, 1, 7, 64, 500, 2000] {
            let seen = count_distinct_visited(&s, i, t).map_err(|e| e.to_string())?;
            if seen > u64::from(s.k) * (t + 1) {
                return Err(format!("scenario {i}: {seen} cells by time {t} with k = {}", s.k));
            }
        }
    }
    Ok(format!("{n} scenarios"))
}
