//! Simulation laboratory for collective treasure search on the grid `Z²`.
//!
//! `k` non-communicating agents leave a source cell together and search for
//! a treasure at unknown distance `D`. This crate implements three search
//! strategies as lazy segment programs, two equivalent simulation engines,
//! and the Monte Carlo machinery to estimate expected hitting times and
//! compare them with the `D + D²/k` benchmark.
//!
//! Geometry is exact integer arithmetic. The statistics layer is generic
//! over the floating-point scalar; the aliases below fix it to `f64`/`f32`.

pub mod engine;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod geometry;
pub mod harmonic;
pub mod rng;
pub mod scalar;
pub mod selftest;
pub mod strategy;

pub use engine::{
    count_distinct_visited, default_time_cap, run_trial, run_trial_fast, run_trial_naive, AgentAssignment, EngineKind,
    Scenario, TreasurePlacement, TrialOutcome,
};
pub use error::{Error, Result};
pub use estimation::{adversarial_place, competitive_ratio, estimate_hitting_time, fit_growth};
pub use geometry::{
    ball_size, l1_distance, sample_ball_uniform, spiral_duration, spiral_hit_index, spiral_step, travel_path, Ball,
    GridPoint,
};
pub use scalar::Scalar;
pub use strategy::{stock_f, GrowthFunction, SegmentKind, SegmentPlan, StrategySpec};

pub type Estimate = estimation::Estimate<f64>;
pub type Estimate32 = estimation::Estimate<f32>;
pub type CompetitivenessPoint = estimation::CompetitivenessPoint<f64>;
pub type CompetitivenessPoint32 = estimation::CompetitivenessPoint<f32>;
pub type GrowthFit = estimation::GrowthFit<f64>;
