//! Monte Carlo statistics over trials.
//!
//! Hitting-time estimates with Student-t intervals, competitive ratios
//! against the `D + D²/k` benchmark, growth-law fits, the adversarial
//! treasure placer, and the small hypothesis tests the acceptance checks use.

use num_rational::Ratio;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::engine::{run_trial, AgentAssignment, EngineKind, Scenario, TreasurePlacement, TrialOutcome};
use crate::error::{invalid, Result};
use crate::geometry::{l1_ring_point, GridPoint};
use crate::scalar::Scalar;
use crate::strategy::SOURCE;

/// Mean hitting time with a 95% confidence interval.
///
/// Censored trials enter the sample at the time cap, so when
/// `n_censored > 0` the mean is a lower bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<F> {
    pub mean: F,
    pub ci_low: F,
    pub ci_high: F,
    pub n_trials: u64,
    pub n_censored: u64,
}

/// Two-sided Student-t quantile, `P(T ≤ t) = p` with `df` degrees of freedom.
pub fn student_t_quantile(p: f64, df: u64) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1").inverse_cdf(p)
}

impl<F: Scalar> Estimate<F> {
    pub fn from_samples(samples: &[u64], n_censored: u64) -> Result<Self> {
        let n = samples.len() as u64;
        if n < 2 {
            return Err(invalid("an estimate needs at least two trials"));
        }
        let nf = F::from_count(n);
        let mean = samples.iter().map(|&v| F::from_count(v)).sum::<F>() / nf;
        let ss = samples.iter().map(|&v| (F::from_count(v) - mean).powi(2)).sum::<F>();
        let sd = (ss / F::from_count(n - 1)).sqrt();
        let half = F::from_f64_lossy(student_t_quantile(0.975, n - 1)) * sd / nf.sqrt();
        Ok(Self { mean, ci_low: mean - half, ci_high: mean + half, n_trials: n, n_censored })
    }

    pub fn from_outcomes(outcomes: &[TrialOutcome], time_cap: u64) -> Result<Self> {
        let samples: Vec<u64> = outcomes.iter().map(|o| o.hit_time.unwrap_or(time_cap)).collect();
        let censored = outcomes.iter().filter(|o| o.is_censored()).count() as u64;
        Self::from_samples(&samples, censored)
    }

    pub fn is_lower_bound(&self) -> bool {
        self.n_censored > 0
    }

    pub fn censored_fraction(&self) -> f64 {
        self.n_censored as f64 / self.n_trials as f64
    }
}

/// Trials `0..n` on the rayon pool, returned in trial order.
pub fn run_trials(scenario: &Scenario, n_trials: u64, engine: EngineKind) -> Vec<TrialOutcome> {
    (0..n_trials).into_par_iter().map(|t| run_trial(scenario, t, engine)).collect()
}

pub fn estimate_hitting_time<F: Scalar>(scenario: &Scenario, n_trials: u64) -> Result<Estimate<F>> {
    if n_trials < 2 {
        return Err(invalid("n_trials must be at least 2"));
    }
    let outcomes = run_trials(scenario, n_trials, EngineKind::Fast);
    let est = Estimate::from_outcomes(&outcomes, scenario.time_cap)?;
    if est.n_censored > 0 {
        log::warn!(
            "{} of {} trials censored at {} (D = {}, k = {}); mean is a lower bound",
            est.n_censored,
            n_trials,
            scenario.time_cap,
            scenario.distance(),
            scenario.k
        );
    }
    Ok(est)
}

/// `D + D²/k` as an exact fraction.
pub fn benchmark(d: u64, k: u64) -> Ratio<u128> {
    let (d, k) = (u128::from(d), u128::from(k));
    Ratio::new(d * k + d * d, k)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompetitivenessPoint<F> {
    pub d: u64,
    pub k: u64,
    pub estimate: Estimate<F>,
    /// `mean / (D + D²/k)`.
    pub ratio: F,
}

pub fn competitive_ratio<F: Scalar>(d: u64, k: u64, estimate: Estimate<F>) -> Result<CompetitivenessPoint<F>> {
    if d == 0 || k == 0 {
        return Err(invalid(format!("competitive ratio needs D, k >= 1 (D = {d}, k = {k})")));
    }
    let bench = benchmark(d, k);
    let denom = F::from_f64_lossy(*bench.numer() as f64) / F::from_f64_lossy(*bench.denom() as f64);
    Ok(CompetitivenessPoint { d, k, estimate, ratio: estimate.mean / denom })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthFit<F> {
    /// Largest `ratio / g(⌊log₂ k⌋)` over the points.
    pub c_fit: F,
    /// Largest over smallest normalised ratio; 1 means a perfect fit.
    pub max_residual: F,
    pub normalized: Vec<F>,
}

/// Fits `ratio ≤ c·g(⌊log₂ k⌋)` over a sweep.
pub fn fit_growth<F: Scalar>(points: &[CompetitivenessPoint<F>], g: impl Fn(u32) -> F) -> Result<GrowthFit<F>> {
    if points.is_empty() {
        return Err(invalid("growth fit needs at least one point"));
    }
    if let Some(p) = points.iter().find(|p| p.estimate.n_censored > 0) {
        return Err(invalid(format!("censored point in growth fit (D = {}, k = {})", p.d, p.k)));
    }
    let normalized: Vec<F> = points.iter().map(|p| p.ratio / g(p.k.ilog2())).collect();
    let c_fit = normalized.iter().copied().fold(F::neg_infinity(), F::max);
    let low = normalized.iter().copied().fold(F::infinity(), F::min);
    Ok(GrowthFit { c_fit, max_residual: c_fit / low, normalized })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellProbe {
    pub cell: GridPoint,
    pub probability: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversarialPlacement {
    pub cell: GridPoint,
    pub visit_probability: f64,
    /// Every cell at distance `D`, in lexicographic order.
    pub candidates: Vec<CellProbe>,
}

/// Finds the cell at distance `D` least likely to be visited by `budget`.
///
/// Each candidate is probed with the same `probe_trials` trials, so the
/// estimates share their random streams and are monotone in `budget`.
pub fn adversarial_place(
    agents: &AgentAssignment,
    k: u32,
    d: u64,
    budget: u64,
    probe_trials: u64,
    master_seed: u64,
) -> Result<AdversarialPlacement> {
    if d == 0 || probe_trials == 0 {
        return Err(invalid("adversarial placement needs D >= 1 and probe_trials >= 1"));
    }
    let mut cells: Vec<GridPoint> = (0..4 * d).map(|i| l1_ring_point(SOURCE, d, i)).collect();
    cells.sort();
    let template = Scenario::new(agents.clone(), k, TreasurePlacement::Fixed(cells[0]), budget.max(1), master_seed)?;
    let candidates: Vec<CellProbe> = cells
        .par_iter()
        .map(|&cell| {
            // no hit can precede the distance
            let hits = if budget < d {
                0
            } else {
                let s = template.with_treasure(TreasurePlacement::Fixed(cell));
                (0..probe_trials).filter(|&t| run_trial(&s, t, EngineKind::Fast).hit_time.is_some()).count()
            };
            let p = hits as f64 / probe_trials as f64;
            CellProbe { cell, probability: p, std_error: (p * (1.0 - p) / probe_trials as f64).sqrt() }
        })
        .collect();
    let best = candidates
        .iter()
        .fold(None::<&CellProbe>, |acc, c| match acc {
            Some(a) if a.probability <= c.probability => Some(a),
            _ => Some(c),
        })
        .expect("at least four candidates");
    Ok(AdversarialPlacement { cell: best.cell, visit_probability: best.probability, candidates })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
}

/// Pearson goodness-of-fit against equal cell probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> ChiSquareTest {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let df = counts.len() as u64 - 1;
    let p_value = ChiSquared::new(df as f64).expect("df >= 1").sf(statistic);
    ChiSquareTest { statistic, df, p_value }
}

/// Least-squares slope with a one-sided t-test for a positive trend.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrendTest {
    pub slope: f64,
    pub intercept: f64,
    pub std_error: f64,
    pub t_stat: f64,
    /// One-sided 95% critical value at `n − 2` degrees of freedom.
    pub critical: f64,
}

impl TrendTest {
    pub fn significantly_positive(&self) -> bool {
        self.t_stat > self.critical
    }
}

pub fn linear_trend(xs: &[f64], ys: &[f64]) -> Result<TrendTest> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return Err(invalid("trend test needs at least three paired points"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("trend test needs at least two distinct x values"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let std_error = (sse / (nf - 2.0) / sxx).sqrt();
    let t_stat = if std_error > 0.0 { slope / std_error } else { slope.signum() * f64::INFINITY };
    Ok(TrendTest { slope, intercept, std_error, t_stat, critical: student_t_quantile(0.95, n as u64 - 2) })
}
