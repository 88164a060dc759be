//! Synchronous multi-agent simulation.
//!
//! All agents leave the source at time 0 and traverse one edge per time
//! unit. The treasure is found at the first time some agent stands on it,
//! whether it got there while travelling or while spiralling.
//!
//! Two engines produce the same outcome. [`run_trial_naive`] moves every
//! agent one cell at a time. [`run_trial_fast`] resolves whole segments
//! arithmetically and runs agents one after another, each bounded by the
//! best hit found so far.

use std::borrow::Cow;
use std::collections::HashSet;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::geometry::{l1_ring_point, spiral_duration, spiral_hit_index, spiral_step, GridPoint, LPath, LegOrder};
use crate::rng::{stream, Purpose, TRIAL_SLOT};
use crate::strategy::{Program, SegmentKind, SegmentPlan, StrategySpec, SOURCE};

/// Which strategy each agent runs.
#[derive(Clone, Debug)]
pub enum AgentAssignment {
    Shared(StrategySpec),
    /// One entry per agent.
    PerAgent(Vec<StrategySpec>),
    /// Known-`k` search where agent `a` holds its own estimate `k_a`, drawn
    /// uniformly from `[k/ρ, kρ]` each trial, and plans with `max(k_a/ρ, 1)`.
    RhoUniform { rho: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreasurePlacement {
    Fixed(GridPoint),
    /// A fresh uniform cell at exactly this distance in every trial.
    UniformAtDistance(u64),
}

impl TreasurePlacement {
    pub fn distance(&self) -> u64 {
        match *self {
            TreasurePlacement::Fixed(p) => crate::geometry::l1_distance(SOURCE, p),
            TreasurePlacement::UniformAtDistance(d) => d,
        }
    }
}

/// `D + ⌈D²/k⌉`, the integer scale of the optimal search time.
pub fn benchmark_time(d: u64, k: u32) -> u64 {
    d + (d * d).div_ceil(u64::from(k.max(1)))
}

/// Time cap used when a scenario does not set one: `1000·(D + ⌈D²/k⌉)`.
pub fn default_time_cap(d: u64, k: u32) -> u64 {
    (1000 * benchmark_time(d, k)).max(1)
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub agents: AgentAssignment,
    pub k: u32,
    pub treasure: TreasurePlacement,
    pub time_cap: u64,
    pub master_seed: u64,
}

impl Scenario {
    pub fn new(agents: AgentAssignment, k: u32, treasure: TreasurePlacement, time_cap: u64, master_seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if time_cap == 0 {
            return Err(invalid("time cap must be at least 1"));
        }
        match &agents {
            AgentAssignment::PerAgent(list) if list.len() != k as usize => {
                return Err(invalid(format!("{} per-agent strategies for k = {k}", list.len())));
            }
            AgentAssignment::RhoUniform { rho } if !(rho.is_finite() && *rho >= 1.0) => {
                return Err(invalid(format!("rho must be >= 1, got {rho}")));
            }
            _ => {}
        }
        if let TreasurePlacement::UniformAtDistance(0) = treasure {
            return Err(invalid("uniform placement needs a distance >= 1"));
        }
        Ok(Self { agents, k, treasure, time_cap, master_seed })
    }

    /// Same strategy for all `k` agents.
    pub fn shared(strategy: StrategySpec, k: u32, treasure: TreasurePlacement, time_cap: u64, master_seed: u64) -> Result<Self> {
        Self::new(AgentAssignment::Shared(strategy), k, treasure, time_cap, master_seed)
    }

    pub fn distance(&self) -> u64 {
        self.treasure.distance()
    }

    pub fn with_treasure(&self, treasure: TreasurePlacement) -> Self {
        Self { treasure, ..self.clone() }
    }

    pub fn treasure_for_trial(&self, trial: u64) -> GridPoint {
        match self.treasure {
            TreasurePlacement::Fixed(p) => p,
            TreasurePlacement::UniformAtDistance(d) => {
                let mut rng = stream(self.master_seed, trial, TRIAL_SLOT, Purpose::Treasure);
                l1_ring_point(SOURCE, d, rng.random_range(0..4 * d))
            }
        }
    }

    pub fn strategy_for(&self, trial: u64, agent: u32) -> Cow<'_, StrategySpec> {
        match &self.agents {
            AgentAssignment::Shared(s) => Cow::Borrowed(s),
            AgentAssignment::PerAgent(list) => Cow::Borrowed(&list[agent as usize]),
            AgentAssignment::RhoUniform { rho } => {
                let mut rng = stream(self.master_seed, trial, u64::from(agent), Purpose::AgentEstimate);
                let k = f64::from(self.k);
                let k_a = if *rho > 1.0 { rng.random_range(k / rho..=k * rho) } else { k };
                Cow::Owned(StrategySpec::KnownK { k_est: (k_a / rho).max(1.0) })
            }
        }
    }

    pub fn program(&self, trial: u64, agent: u32) -> Program {
        let rng = stream(self.master_seed, trial, u64::from(agent), Purpose::AgentPlan);
        self.strategy_for(trial, agent).program(rng)
    }

    /// Short strategy label for reports.
    pub fn strategy_name(&self) -> &'static str {
        match &self.agents {
            AgentAssignment::Shared(s) => s.name(),
            AgentAssignment::PerAgent(_) => "per_agent",
            AgentAssignment::RhoUniform { .. } => "known_k_rho",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Naive,
    Fast,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    /// `None` when no agent reached the treasure by the time cap.
    pub hit_time: Option<u64>,
    pub finder_agent: Option<u32>,
    /// Time units each agent was simulated for.
    pub steps_simulated: Vec<u64>,
    pub engine: EngineKind,
}

impl TrialOutcome {
    pub fn is_censored(&self) -> bool {
        self.hit_time.is_none()
    }
}

pub fn run_trial(scenario: &Scenario, trial: u64, engine: EngineKind) -> TrialOutcome {
    match engine {
        EngineKind::Naive => run_trial_naive(scenario, trial),
        EngineKind::Fast => run_trial_fast(scenario, trial),
    }
}

enum Cursor {
    Path(LPath),
    Spiral { origin: GridPoint, step: u64, steps: u64 },
    Done,
}

/// Cell-by-cell walker over an agent program.
pub struct AgentWalker {
    program: Program,
    pos: GridPoint,
    cursor: Cursor,
    idle: bool,
}

impl AgentWalker {
    pub fn new(program: Program) -> Self {
        Self { program, pos: SOURCE, cursor: Cursor::Done, idle: false }
    }

    pub fn position(&self) -> GridPoint {
        self.pos
    }

    /// Advances one time unit. Returns `false` once the program is exhausted
    /// (the agent then stays where it is).
    pub fn advance(&mut self) -> bool {
        loop {
            let next = match &mut self.cursor {
                Cursor::Path(path) => path.next(),
                Cursor::Spiral { origin, step, steps } => {
                    if *step < *steps {
                        *step += 1;
                        Some(spiral_step(*origin, *step))
                    } else {
                        None
                    }
                }
                Cursor::Done => None,
            };
            if let Some(p) = next {
                self.pos = p;
                return true;
            }
            if self.idle {
                return false;
            }
            self.cursor = match self.program.next() {
                Some(SegmentKind::GoTo(target)) => Cursor::Path(LPath::new(self.pos, target, LegOrder::XThenY)),
                Some(SegmentKind::Spiral { budget }) => {
                    Cursor::Spiral { origin: self.pos, step: 0, steps: spiral_duration(budget).steps }
                }
                Some(SegmentKind::ReturnToSource) => Cursor::Path(LPath::new(self.pos, SOURCE, LegOrder::YThenX)),
                None => {
                    self.idle = true;
                    Cursor::Done
                }
            };
        }
    }
}

/// Step-exact lockstep simulation; the reference engine.
pub fn run_trial_naive(scenario: &Scenario, trial: u64) -> TrialOutcome {
    let target = scenario.treasure_for_trial(trial);
    let k = scenario.k as usize;
    let mut steps = vec![0u64; k];
    let outcome = |hit_time, finder_agent, steps_simulated| TrialOutcome {
        hit_time,
        finder_agent,
        steps_simulated,
        engine: EngineKind::Naive,
    };
    if target == SOURCE {
        return outcome(Some(0), Some(0), steps);
    }
    let mut walkers: Vec<_> = (0..scenario.k).map(|a| AgentWalker::new(scenario.program(trial, a))).collect();
    for t in 1..=scenario.time_cap {
        let mut finder = None;
        for (a, walker) in walkers.iter_mut().enumerate() {
            if walker.advance() {
                steps[a] += 1;
            }
            if finder.is_none() && walker.position() == target {
                finder = Some(a as u32);
            }
        }
        if finder.is_some() {
            return outcome(Some(t), finder, steps);
        }
    }
    outcome(None, None, steps)
}

/// Offset within the segment (1-based) at which it steps on `target`.
pub fn segment_hit_offset(seg: &SegmentPlan, target: GridPoint) -> Option<u64> {
    match seg.kind {
        SegmentKind::GoTo(to) => LPath::hit_offset(seg.start, to, LegOrder::XThenY, target),
        SegmentKind::ReturnToSource => LPath::hit_offset(seg.start, SOURCE, LegOrder::YThenX, target),
        SegmentKind::Spiral { budget } => {
            let ring = seg.start.linf_distance(target);
            if ring == 0 || ring > spiral_duration(budget).radius {
                return None;
            }
            let idx = spiral_hit_index(seg.start, target);
            (idx <= seg.duration).then_some(idx)
        }
    }
}

/// Earliest time `≤ limit` at which the agent's program visits `target`.
/// Also returns how far the agent was simulated.
pub fn agent_first_hit(mut program: Program, target: GridPoint, limit: u64) -> (Option<u64>, u64) {
    if target == SOURCE {
        return (Some(0), 0);
    }
    let mut t = 0u64;
    let mut pos = SOURCE;
    while t < limit {
        let Some(kind) = program.next() else { break };
        let seg = SegmentPlan::resolve(kind, pos);
        if let Some(off) = segment_hit_offset(&seg, target) {
            let hit = t.saturating_add(off);
            return if hit <= limit { (Some(hit), hit) } else { (None, limit) };
        }
        t = t.saturating_add(seg.duration);
        pos = seg.end;
    }
    (None, t.min(limit))
}

/// Segment-skipping simulation, observably identical to [`run_trial_naive`].
pub fn run_trial_fast(scenario: &Scenario, trial: u64) -> TrialOutcome {
    let target = scenario.treasure_for_trial(trial);
    let mut steps = vec![0u64; scenario.k as usize];
    let mut best: Option<(u64, u32)> = None;
    for a in 0..scenario.k {
        // ties go to the lower index, so later agents must be strictly earlier
        let limit = match best {
            None => scenario.time_cap,
            Some((0, _)) => break,
            Some((h, _)) => h - 1,
        };
        let (hit, simulated) = agent_first_hit(scenario.program(trial, a), target, limit);
        steps[a as usize] = simulated;
        if let Some(h) = hit {
            best = Some((h, a));
        }
    }
    TrialOutcome {
        hit_time: best.map(|(h, _)| h),
        finder_agent: best.map(|(_, a)| a),
        steps_simulated: steps,
        engine: EngineKind::Fast,
    }
}

/// Distinct cells visited by all agents together during `[0, horizon]`.
pub fn count_distinct_visited(scenario: &Scenario, trial: u64, horizon: u64) -> Result<u64> {
    if horizon > scenario.time_cap {
        return Err(invalid(format!("horizon {horizon} exceeds time cap {}", scenario.time_cap)));
    }
    let mut seen = HashSet::new();
    seen.insert(SOURCE);
    let mut walkers: Vec<_> = (0..scenario.k).map(|a| AgentWalker::new(scenario.program(trial, a))).collect();
    for _ in 0..horizon {
        for walker in &mut walkers {
            walker.advance();
            seen.insert(walker.position());
        }
    }
    Ok(seen.len() as u64)
}
