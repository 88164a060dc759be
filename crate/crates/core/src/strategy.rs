//! Search strategies compiled to lazy segment programs.
//!
//! A program is an iterator over [`SegmentKind`]s: go to a cell, spiral for a
//! budget, return to the source. The three strategies differ only in how
//! they pick the cell and the budget. Programs never end on their own
//! (except scripted test doubles); the engine stops them.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::geometry::{l1_distance, sample_ball_uniform, spiral_duration, spiral_step, GridPoint};
use crate::harmonic::HarmonicSampler;
use crate::rng::StreamRng;

/// Budgets are clamped here so ring arithmetic stays inside `u64`.
pub const MAX_SPIRAL_BUDGET: u64 = 1 << 60;

/// Largest `δ` the harmonic strategy accepts.
pub const HARMONIC_DELTA_MAX: f64 = 0.8;

pub const SOURCE: GridPoint = GridPoint::ORIGIN;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    GoTo(GridPoint),
    Spiral { budget: u64 },
    ReturnToSource,
}

/// A segment resolved against the agent's position when it starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentPlan {
    pub kind: SegmentKind,
    pub start: GridPoint,
    pub end: GridPoint,
    pub duration: u64,
}

impl SegmentPlan {
    pub fn resolve(kind: SegmentKind, start: GridPoint) -> Self {
        let (end, duration) = match kind {
            SegmentKind::GoTo(target) => (target, l1_distance(start, target)),
            SegmentKind::Spiral { budget } => {
                let steps = spiral_duration(budget).steps;
                (spiral_step(start, steps), steps)
            }
            SegmentKind::ReturnToSource => (SOURCE, l1_distance(start, SOURCE)),
        };
        Self { kind, start, end, duration }
    }
}

/// Ceiling that forgives floating-point noise on exact integers
/// (`4^2.5` must give 32, not 33).
pub fn ceil_budget(x: f64) -> u64 {
    if !(x < MAX_SPIRAL_BUDGET as f64) {
        return MAX_SPIRAL_BUDGET;
    }
    let nearest = x.round();
    let v = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { x.ceil() };
    (v.max(1.0) as u64).min(MAX_SPIRAL_BUDGET)
}

/// Non-decreasing `f: ℕ → ℕ` with `f ≥ 1`, driving the uniform strategy.
#[derive(Clone)]
pub struct GrowthFunction {
    name: String,
    eval: Arc<dyn Fn(u64) -> u64 + Send + Sync>,
}

impl GrowthFunction {
    /// Checks monotonicity and positivity on `0..=256`.
    pub fn new(name: impl Into<String>, eval: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Result<Self> {
        let name = name.into();
        let mut prev = 1;
        for j in 0..=256 {
            let v = eval(j);
            if v < prev {
                return Err(invalid(format!("growth function {name} must be non-decreasing and >= 1 (f({j}) = {v})")));
            }
            prev = v;
        }
        Ok(Self { name, eval: Arc::new(eval) })
    }

    pub fn eval(&self, j: u64) -> u64 {
        (self.eval)(j)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthFunction").field("name", &self.name).finish()
    }
}

/// `f(x) = ⌈(x+1)^(1+ε)⌉`. The argument is shifted by one so that phase 0
/// gets `f(0) = 1` instead of a zero divisor.
pub fn stock_f(epsilon: f64) -> Result<GrowthFunction> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    GrowthFunction::new(format!("ceil((x+1)^{})", 1.0 + epsilon), move |x| {
        ceil_budget(((x + 1) as f64).powf(1.0 + epsilon))
    })
}

/// Parameters of one go-spiral-return round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseParams {
    /// Target is uniform in the L1 ball of this radius around the source.
    pub ball_radius: u64,
    pub spiral_budget: u64,
}

/// Phases of the known-`k` strategy: stage `j = 1, 2, …`, phase `i = 1..=j`,
/// ball radius `2^i`, budget `⌈2^(2i+2) / k⌉`.
#[derive(Clone, Debug)]
pub struct KnownKSchedule {
    k_est: f64,
    stage: u32,
    phase: u32,
}

impl KnownKSchedule {
    pub fn new(k_est: f64) -> Self {
        Self { k_est, stage: 1, phase: 1 }
    }

    pub fn params(phase: u32, k_est: f64) -> PhaseParams {
        let i = phase.min(62);
        PhaseParams {
            ball_radius: 1u64 << i.min(48),
            spiral_budget: ceil_budget(2f64.powi(2 * i as i32 + 2) / k_est),
        }
    }
}

impl Iterator for KnownKSchedule {
    type Item = PhaseParams;

    fn next(&mut self) -> Option<PhaseParams> {
        let out = Self::params(self.phase, self.k_est);
        if self.phase == self.stage {
            self.stage += 1;
            self.phase = 1;
        } else {
            self.phase += 1;
        }
        Some(out)
    }
}

/// Loop indices of a uniform-strategy phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniformPhase {
    pub big_stage: u32,
    pub stage: u32,
    pub phase: u32,
    pub params: PhaseParams,
}

/// Phases of the uniform strategy: big-stage `ℓ = 0, 1, …`, stage
/// `i = 0..=ℓ`, phase `j = 0..=i`, ball radius `⌊√(2^(i+j) / f(j))⌋`,
/// budget `⌈2^(i+2) / f(j)⌉`.
#[derive(Clone, Debug)]
pub struct UniformSchedule {
    f: GrowthFunction,
    big_stage: u32,
    stage: u32,
    phase: u32,
}

fn pow2_saturating(e: u32) -> u128 {
    if e >= 127 {
        u128::MAX
    } else {
        1u128 << e
    }
}

impl UniformSchedule {
    pub fn new(f: GrowthFunction) -> Self {
        Self { f, big_stage: 0, stage: 0, phase: 0 }
    }

    pub fn params(f: &GrowthFunction, stage: u32, phase: u32) -> PhaseParams {
        let fj = f.eval(u64::from(phase)) as u128;
        let radius = (pow2_saturating(stage + phase) / fj).isqrt();
        let budget = pow2_saturating(stage + 2).div_ceil(fj);
        PhaseParams {
            ball_radius: radius.min(1 << 48) as u64,
            spiral_budget: budget.min(u128::from(MAX_SPIRAL_BUDGET)) as u64,
        }
    }
}

impl Iterator for UniformSchedule {
    type Item = UniformPhase;

    fn next(&mut self) -> Option<UniformPhase> {
        let out = UniformPhase {
            big_stage: self.big_stage,
            stage: self.stage,
            phase: self.phase,
            params: Self::params(&self.f, self.stage, self.phase),
        };
        if self.phase < self.stage {
            self.phase += 1;
        } else if self.stage < self.big_stage {
            self.stage += 1;
            self.phase = 0;
        } else {
            self.big_stage += 1;
            self.stage = 0;
            self.phase = 0;
        }
        Some(out)
    }
}

/// How one agent searches.
#[derive(Clone, Debug)]
pub enum StrategySpec {
    /// Doubling balls with spiral budgets scaled by an estimate of `k`.
    KnownK { k_est: f64 },
    /// No knowledge of `k`; guesses `k = 2^j` weighted by `1/f(j)`.
    Uniform(GrowthFunction),
    /// Single loop with power-law jump distances.
    Harmonic(Arc<HarmonicSampler>),
    /// Fixed segment list, then the agent stands still. Test double.
    Scripted(Arc<[SegmentKind]>),
}

impl StrategySpec {
    pub fn known_k(k_est: f64) -> Result<Self> {
        if !(k_est.is_finite() && k_est >= 1.0) {
            return Err(invalid(format!("k estimate must be >= 1, got {k_est}")));
        }
        Ok(Self::KnownK { k_est })
    }

    pub fn uniform(f: GrowthFunction) -> Self {
        Self::Uniform(f)
    }

    pub fn harmonic(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= HARMONIC_DELTA_MAX) {
            return Err(invalid(format!("harmonic delta must lie in (0, {HARMONIC_DELTA_MAX}], got {delta}")));
        }
        Ok(Self::Harmonic(Arc::new(HarmonicSampler::new(delta)?)))
    }

    pub fn scripted(segments: impl Into<Vec<SegmentKind>>) -> Self {
        Self::Scripted(segments.into().into())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::KnownK { .. } => "known_k",
            Self::Uniform(_) => "uniform",
            Self::Harmonic(_) => "harmonic",
            Self::Scripted(_) => "scripted",
        }
    }

    /// Compact parameter string, free of commas.
    pub fn params(&self) -> String {
        match self {
            Self::KnownK { k_est } => format!("k_est={k_est}"),
            Self::Uniform(f) => format!("f={}", f.name()),
            Self::Harmonic(s) => format!("delta={}", s.delta()),
            Self::Scripted(segs) => format!("segments={}", segs.len()),
        }
    }

    /// The agent program driven by `rng`.
    pub fn program(&self, rng: StreamRng) -> Program {
        match self {
            Self::KnownK { k_est } => Program::Phased(PhasedProgram::new(rng, Schedule::KnownK(KnownKSchedule::new(*k_est)))),
            Self::Uniform(f) => Program::Phased(PhasedProgram::new(rng, Schedule::Uniform(UniformSchedule::new(f.clone())))),
            Self::Harmonic(sampler) => Program::Harmonic(HarmonicProgram { rng, sampler: Arc::clone(sampler), pending_budget: 0, step: 0 }),
            Self::Scripted(segs) => Program::Scripted { segments: Arc::clone(segs), next: 0 },
        }
    }
}

#[derive(Clone, Debug)]
enum Schedule {
    KnownK(KnownKSchedule),
    Uniform(UniformSchedule),
}

impl Schedule {
    fn next_phase(&mut self) -> PhaseParams {
        match self {
            Schedule::KnownK(s) => s.next().expect("schedule is infinite"),
            Schedule::Uniform(s) => s.next().expect("schedule is infinite").params,
        }
    }
}

/// Go to a uniform cell of the phase's ball, spiral, return; repeat.
#[derive(Clone, Debug)]
pub struct PhasedProgram {
    rng: StreamRng,
    schedule: Schedule,
    pending: Option<PhaseParams>,
    step: u8,
}

impl PhasedProgram {
    fn new(rng: StreamRng, schedule: Schedule) -> Self {
        Self { rng, schedule, pending: None, step: 0 }
    }
}

impl Iterator for PhasedProgram {
    type Item = SegmentKind;

    fn next(&mut self) -> Option<SegmentKind> {
        let seg = match self.step {
            0 => {
                let phase = self.schedule.next_phase();
                self.pending = Some(phase);
                SegmentKind::GoTo(sample_ball_uniform(&mut self.rng, SOURCE, phase.ball_radius))
            }
            1 => SegmentKind::Spiral { budget: self.pending.expect("phase drawn").spiral_budget },
            _ => SegmentKind::ReturnToSource,
        };
        self.step = (self.step + 1) % 3;
        Some(seg)
    }
}

/// Jump to a power-law cell `u`, spiral for `⌈dist(u)^(2+δ)⌉`, return; repeat.
#[derive(Clone, Debug)]
pub struct HarmonicProgram {
    rng: StreamRng,
    sampler: Arc<HarmonicSampler>,
    pending_budget: u64,
    step: u8,
}

impl HarmonicProgram {
    pub fn budget_for(target: GridPoint, delta: f64) -> u64 {
        ceil_budget((l1_distance(SOURCE, target) as f64).powf(2.0 + delta))
    }
}

impl Iterator for HarmonicProgram {
    type Item = SegmentKind;

    fn next(&mut self) -> Option<SegmentKind> {
        let seg = match self.step {
            0 => {
                let target = self.sampler.sample_target(&mut self.rng, SOURCE);
                self.pending_budget = Self::budget_for(target, self.sampler.delta());
                SegmentKind::GoTo(target)
            }
            1 => SegmentKind::Spiral { budget: self.pending_budget },
            _ => SegmentKind::ReturnToSource,
        };
        self.step = (self.step + 1) % 3;
        Some(seg)
    }
}

/// Any agent program. Enum dispatch keeps the engines' inner loops monomorphic.
#[derive(Clone, Debug)]
pub enum Program {
    Phased(PhasedProgram),
    Harmonic(HarmonicProgram),
    Scripted { segments: Arc<[SegmentKind]>, next: usize },
}

impl Iterator for Program {
    type Item = SegmentKind;

    fn next(&mut self) -> Option<SegmentKind> {
        match self {
            Program::Phased(p) => p.next(),
            Program::Harmonic(p) => p.next(),
            Program::Scripted { segments, next } => {
                let seg = segments.get(*next).copied();
                *next += 1;
                seg
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::geometry::Ball;
    use crate::rng::{stream, Purpose};

    use super::*;

    fn rng(seed: u64) -> StreamRng {
        stream(seed, 0, 0, Purpose::AgentPlan)
    }

    /// Literal double loop: `for j in 1.. { for i in 1..=j { … } }`.
    fn known_k_oracle(k_est: f64, n: usize) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        'outer: for j in 1u32.. {
            for i in 1..=j {
                let budget = (4f64.powi(i as i32) * 4.0 / k_est).ceil() as u64;
                out.push((2u64.pow(i), budget));
                if out.len() == n {
                    break 'outer;
                }
            }
        }
        out
    }

    /// Literal triple loop over big-stage, stage and phase.
    fn uniform_oracle(f: &dyn Fn(u64) -> u64, n: usize) -> Vec<(u32, u32, u32, u64, u64)> {
        let mut out = Vec::new();
        'outer: for l in 0u32.. {
            for i in 0..=l {
                for j in 0..=i {
                    let fj = f(u64::from(j)) as f64;
                    let radius = (2f64.powi((i + j) as i32) / fj).sqrt().floor() as u64;
                    let budget = (2f64.powi(i as i32 + 2) / fj).ceil() as u64;
                    out.push((l, i, j, radius, budget));
                    if out.len() == n {
                        break 'outer;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn known_k_schedule_examples() {
        let phases: Vec<_> = KnownKSchedule::new(2.0).take(3).collect();
        // stage 1: phase 1; stage 2: phases 1, 2
        assert_eq!(phases[1], PhaseParams { ball_radius: 2, spiral_budget: 8 });
        assert_eq!(phases[2], PhaseParams { ball_radius: 4, spiral_budget: 32 });
        assert_eq!(KnownKSchedule::params(3, 1.0).spiral_budget, 256);
    }

    #[test]
    fn known_k_schedule_matches_double_loop() {
        for k_est in [1.0, 2.0, 3.0, 4.0, 7.5, 64.0, 1000.0] {
            let got: Vec<_> = KnownKSchedule::new(k_est).take(100).map(|p| (p.ball_radius, p.spiral_budget)).collect();
            assert_eq!(got, known_k_oracle(k_est, 100), "k_est = {k_est}");
        }
    }

    #[test]
    fn uniform_schedule_examples() {
        let pow2 = GrowthFunction::new("2^x", |j| 1 << j.min(62)).unwrap();
        assert_eq!(UniformSchedule::params(&pow2, 4, 2), PhaseParams { ball_radius: 4, spiral_budget: 16 });
        let f = stock_f(1.0).unwrap();
        assert_eq!(UniformSchedule::params(&f, 0, 0), PhaseParams { ball_radius: 1, spiral_budget: 4 });
    }

    #[test]
    fn uniform_schedule_matches_triple_loop() {
        for eps in [0.5, 1.0, 2.0] {
            let f = stock_f(eps).unwrap();
            let oracle_f = move |x: u64| {
                let v = ((x + 1) as f64).powf(1.0 + eps);
                if (v - v.round()).abs() < 1e-9 { v.round() as u64 } else { v.ceil() as u64 }
            };
            let got: Vec<_> = UniformSchedule::new(f)
                .take(200)
                .map(|p| (p.big_stage, p.stage, p.phase, p.params.ball_radius, p.params.spiral_budget))
                .collect();
            assert_eq!(got, uniform_oracle(&oracle_f, 200), "eps = {eps}");
        }
    }

    #[test]
    fn uniform_stage_time_is_linear_in_two_to_the_stage() {
        let f = stock_f(1.0).unwrap();
        let mut per_stage = [0u64; 15];
        let mut program = StrategySpec::uniform(f.clone()).program(rng(3));
        let mut pos = SOURCE;
        // stages of big-stage 14 come after 1 + 3 + … + 105 earlier phases
        let before: usize = (0..14).map(|l| (l + 1) * (l + 2) / 2).sum();
        let mut schedule = UniformSchedule::new(f);
        for _ in 0..before * 3 {
            let seg = SegmentPlan::resolve(program.next().unwrap(), pos);
            pos = seg.end;
        }
        schedule.nth(before - 1);
        for phase in schedule.take(120) {
            assert_eq!(phase.big_stage, 14);
            for _ in 0..3 {
                let seg = SegmentPlan::resolve(program.next().unwrap(), pos);
                per_stage[phase.stage as usize] += seg.duration;
                pos = seg.end;
            }
        }
        // stages 0 and 1 are dominated by rounding tiny budgets up to a full ring
        let c: Vec<f64> = (2..=14).map(|i| per_stage[i] as f64 / 2f64.powi(i as i32)).collect();
        let (lo, hi) = c.iter().fold((f64::MAX, 0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!(hi / lo <= 2.0, "{c:?}");
    }

    #[test]
    fn stock_f_values() {
        let f = stock_f(1.0).unwrap();
        assert_eq!((f.eval(0), f.eval(1), f.eval(3)), (1, 4, 16));
        assert_eq!(stock_f(0.5).unwrap().eval(3), 8);
        for eps in [0.1, 0.5, 1.0, 3.0] {
            let f = stock_f(eps).unwrap();
            assert!((0..64).all(|j| f.eval(j) <= f.eval(j + 1)));
            assert_eq!(f.eval(0), 1);
        }
        assert!(stock_f(0.0).is_err());
        assert!(GrowthFunction::new("zero", |_| 0).is_err());
        assert!(GrowthFunction::new("down", |j| 100 - j.min(99)).is_err());
    }

    #[test]
    fn segment_pattern_and_balls() {
        let strategies = [
            StrategySpec::known_k(3.0).unwrap(),
            StrategySpec::uniform(stock_f(1.0).unwrap()),
            StrategySpec::harmonic(0.5).unwrap(),
        ];
        for s in &strategies {
            let segs: Vec<_> = s.program(rng(9)).take(300).collect();
            for (n, seg) in segs.iter().enumerate() {
                let ok = match n % 3 {
                    0 => matches!(seg, SegmentKind::GoTo(_)),
                    1 => matches!(seg, SegmentKind::Spiral { .. }),
                    _ => matches!(seg, SegmentKind::ReturnToSource),
                };
                assert!(ok, "{} segment {n}: {seg:?}", s.name());
            }
        }
        let targets = |s: &StrategySpec| -> Vec<GridPoint> {
            s.program(rng(4))
                .step_by(3)
                .take(150)
                .map(|seg| match seg {
                    SegmentKind::GoTo(t) => t,
                    other => panic!("{other:?}"),
                })
                .collect()
        };
        for (t, phase) in targets(&strategies[0]).iter().zip(KnownKSchedule::new(3.0)) {
            assert!(Ball::new(SOURCE, phase.ball_radius).contains(*t));
        }
        for (t, phase) in targets(&strategies[1]).iter().zip(UniformSchedule::new(stock_f(1.0).unwrap())) {
            assert!(Ball::new(SOURCE, phase.params.ball_radius).contains(*t));
        }
    }

    #[test]
    fn programs_are_deterministic() {
        for s in [
            StrategySpec::known_k(2.0).unwrap(),
            StrategySpec::uniform(stock_f(1.0).unwrap()),
            StrategySpec::harmonic(0.3).unwrap(),
        ] {
            let a: Vec<_> = s.program(rng(77)).take(500).collect();
            let b: Vec<_> = s.program(rng(77)).take(500).collect();
            let c: Vec<_> = s.program(rng(78)).take(500).collect();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn harmonic_budgets() {
        assert_eq!(HarmonicProgram::budget_for(GridPoint::new(4, 0), 0.5), 32);
        assert_eq!(HarmonicProgram::budget_for(GridPoint::new(0, -1), 0.5), 1);
        assert_eq!(spiral_duration(1).steps, 8);
        let s = StrategySpec::harmonic(0.5).unwrap();
        let segs: Vec<_> = s.program(rng(1)).take(600).collect();
        for pair in segs.chunks(3) {
            let (SegmentKind::GoTo(u), SegmentKind::Spiral { budget }) = (pair[0], pair[1]) else {
                panic!("{pair:?}");
            };
            assert_ne!(u, SOURCE);
            assert_eq!(budget, HarmonicProgram::budget_for(u, 0.5));
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(StrategySpec::harmonic(0.0).is_err());
        assert!(StrategySpec::harmonic(0.81).is_err());
        assert!(StrategySpec::harmonic(0.8).is_ok());
        assert!(StrategySpec::known_k(0.5).is_err());
        assert!(StrategySpec::known_k(f64::NAN).is_err());
    }

    #[test]
    fn ceil_budget_rounding() {
        assert_eq!(ceil_budget(4f64.powf(2.5)), 32);
        assert_eq!(ceil_budget(5.333), 6);
        assert_eq!(ceil_budget(0.2), 1);
        assert_eq!(ceil_budget(f64::INFINITY), MAX_SPIRAL_BUDGET);
    }

    #[test]
    fn scripted_program_ends() {
        let s = StrategySpec::scripted(vec![SegmentKind::GoTo(GridPoint::new(3, 0))]);
        let segs: Vec<_> = s.program(rng(0)).collect();
        assert_eq!(segs, vec![SegmentKind::GoTo(GridPoint::new(3, 0))]);
    }
}
