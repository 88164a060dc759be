//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{HashMap, HashSet};
use std::process::ExitCode;
use std::time::Instant;

use ants_core::engine::{count_distinct_visited, run_trial, EngineKind, Scenario, TreasurePlacement};
use ants_core::estimation::{
    adversarial_place, chi_square_uniform, competitive_ratio, fit_growth, linear_trend, run_trials, Estimate,
};
use ants_core::experiment::{run_sweep, sweep_csv_bytes, KEstimate, StrategyConfig, SweepConfig, SweepRow};
use ants_core::geometry::{l1_distance, sample_ball_uniform, spiral_duration, spiral_step, Ball, GridPoint};
use ants_core::harmonic::HarmonicSampler;
use ants_core::rng::{stream, Purpose, TRIAL_SLOT};
use ants_core::selftest::random_small_scenario;
use ants_core::strategy::{stock_f, StrategySpec};
use rand::Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

const SWEEP_D: [u64; 6] = [8, 16, 32, 64, 128, 256];
const SWEEP_K: [u32; 4] = [1, 4, 16, 64];

fn known_k_sweep(estimate: KEstimate) -> SweepConfig {
    SweepConfig {
        master_seed: 20_240_601,
        n_trials: 400,
        time_cap_multiplier: 1000,
        d_values: SWEEP_D.to_vec(),
        k_values: SWEEP_K.to_vec(),
        output: "unused.csv".into(),
        placement: Default::default(),
        strategies: vec![StrategyConfig::KnownK { estimate }],
    }
}

fn engine_equivalence() -> Outcome {
    let n = 600u64;
    let mismatches: Vec<String> = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = stream(77, i, TRIAL_SLOT, Purpose::Sampler);
            let s = random_small_scenario(&mut rng);
            let trial = rng.random_range(0..10_000);
            let naive = run_trial(&s, trial, EngineKind::Naive);
            let fast = run_trial(&s, trial, EngineKind::Fast);
            (naive.hit_time != fast.hit_time || naive.finder_agent != fast.finder_agent)
                .then(|| format!("#{i}: naive {:?} fast {:?}", naive.hit_time, fast.hit_time))
        })
        .collect();
    if mismatches.is_empty() {
        Ok(format!("{n} scenarios agree"))
    } else {
        Err(format!("{} mismatches, first {}", mismatches.len(), mismatches[0]))
    }
}

fn spiral_coverage() -> Outcome {
    // independent walk: move, turn left when the left cell is fresh
    let longest = spiral_duration(10_000).steps as usize;
    let mut walk = vec![GridPoint::ORIGIN];
    let mut seen = HashSet::from([GridPoint::ORIGIN]);
    let (mut pos, mut dir) = (GridPoint::ORIGIN, (1i64, 0i64));
    while walk.len() <= longest {
        pos = pos.offset(dir.0, dir.1);
        walk.push(pos);
        seen.insert(pos);
        let left = (-dir.1, dir.0);
        if !seen.contains(&pos.offset(left.0, left.1)) {
            dir = left;
        }
    }
    if let Some(s) = (0..=longest as u64).find(|&s| spiral_step(GridPoint::ORIGIN, s) != walk[s as usize]) {
        return Err(format!("spiral_step disagrees with the walk at step {s}"));
    }
    let mut covered = HashSet::new();
    let mut upto = 0usize;
    for t in 0..=10_000u64 {
        let radius = ((t as f64).sqrt() / 2.0).ceil() as u64;
        let steps = spiral_duration(t).steps as usize;
        while upto <= steps {
            covered.insert(walk[upto]);
            upto += 1;
        }
        if let Some(c) = Ball::new(GridPoint::ORIGIN, radius).cells().find(|c| !covered.contains(c)) {
            return Err(format!("budget {t}: cell {c} not covered in {steps} steps"));
        }
    }
    Ok("every t <= 10^4 covered".into())
}

fn ratio_spread(rows: &[SweepRow]) -> (f64, f64) {
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio.expect("D >= 1")).collect();
    let max = ratios.iter().copied().fold(f64::MIN, f64::max);
    let min = ratios.iter().copied().fold(f64::MAX, f64::min);
    (max / min, max)
}

fn constant_competitive(rows: &[SweepRow]) -> Outcome {
    let worst = rows
        .iter()
        .map(|r| r.estimate.censored_fraction())
        .fold(0.0, f64::max);
    let (spread, max) = ratio_spread(rows);
    let xs: Vec<f64> = rows.iter().map(|r| (r.d as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ratio.expect("D >= 1")).collect();
    let trend = linear_trend(&xs, &ys).map_err(|e| e.to_string())?;
    let detail = format!(
        "spread {spread:.3} (max ratio {max:.3}), censored <= {:.2}%, slope {:.4} t {:.2} (crit {:.2})",
        100.0 * worst,
        trend.slope,
        trend.t_stat,
        trend.critical
    );
    if worst < 0.01 && spread <= 6.0 && !trend.significantly_positive() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rho_robust(exact: &[SweepRow], rho: &[SweepRow]) -> Outcome {
    let mut worst = (1.0, 0, 0);
    for (a, b) in exact.iter().zip(rho) {
        assert_eq!((a.d, a.k), (b.d, b.k));
        let f = (a.estimate.mean / b.estimate.mean).max(b.estimate.mean / a.estimate.mean);
        if f > worst.0 {
            worst = (f, a.d, a.k);
        }
    }
    let detail = format!("largest factor {:.3} at D = {}, k = {}", worst.0, worst.1, worst.2);
    if worst.0 <= 4.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn growth_law() -> Outcome {
    let d = 64u64;
    let f = stock_f(1.0).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    for i in 1..=8u32 {
        let k = 1u32 << i;
        let cap = 1000 * (d + (d * d).div_ceil(u64::from(k)));
        let s = Scenario::shared(StrategySpec::uniform(f.clone()), k, TreasurePlacement::UniformAtDistance(d), cap, 5150 + u64::from(i))
            .map_err(|e| e.to_string())?;
        let est = Estimate::from_outcomes(&run_trials(&s, 300, EngineKind::Fast), cap).map_err(|e| e.to_string())?;
        points.push(competitive_ratio(d, u64::from(k), est).map_err(|e| e.to_string())?);
    }
    let fit = fit_growth(&points, |x| f64::from(x + 1).powi(2)).map_err(|e| e.to_string())?;
    let ratios: Vec<String> = points.iter().map(|p| format!("{:.2}", p.ratio)).collect();
    let detail = format!("c_fit {:.3}, spread {:.3}, ratios [{}]", fit.c_fit, fit.max_residual, ratios.join(" "));
    if fit.max_residual <= 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn harmonic_success() -> Outcome {
    let delta = 0.5;
    let mut rates = Vec::new();
    for d in [16u64, 32, 64] {
        let k = (4.0 * (d as f64).powf(delta)).ceil() as u32;
        let budget = (10.0 * (d as f64 + (d as f64).powf(2.0 + delta) / f64::from(k))).floor() as u64;
        let s = Scenario::shared(StrategySpec::harmonic(delta).map_err(|e| e.to_string())?, k, TreasurePlacement::UniformAtDistance(d), budget, 600 + d)
            .map_err(|e| e.to_string())?;
        let hits = run_trials(&s, 300, EngineKind::Fast).iter().filter(|o| o.hit_time.is_some()).count();
        rates.push((d, k, hits as f64 / 300.0));
    }
    let detail: Vec<String> = rates.iter().map(|(d, k, r)| format!("D={d} k={k}: {r:.3}")).collect();
    let detail = detail.join(", ");
    if rates.iter().all(|r| r.2 >= 0.8) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lower_bound_experiment() -> Outcome {
    let (d, k) = (64u64, 4u32);
    let t = d * d / (8 * u64::from(k));
    let budget = 2 * t;
    let agents = StrategySpec::known_k(f64::from(k)).map_err(|e| e.to_string())?;
    let assignment = ants_core::engine::AgentAssignment::Shared(agents);
    let placed = adversarial_place(&assignment, k, d, budget, 1000, 4242).map_err(|e| e.to_string())?;
    let s = Scenario::new(assignment, k, TreasurePlacement::Fixed(placed.cell), budget, 4242).map_err(|e| e.to_string())?;
    let violations = (0..1000u64)
        .into_par_iter()
        .filter(|&trial| {
            [1, t / 2, t, budget].iter().any(|&h| count_distinct_visited(&s, trial, h).expect("h <= cap") > u64::from(k) * (h + 1))
        })
        .count();
    let detail = format!(
        "argmin {} with p = {:.3} (budget {budget}), {violations} counting violations",
        placed.cell, placed.visit_probability
    );
    if placed.visit_probability < 0.5 && violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn samplers() -> Outcome {
    let mut rng = stream(8080, 0, TRIAL_SLOT, Purpose::Sampler);
    let mut notes = Vec::new();
    for r in [1u64, 2, 5, 10] {
        let index: HashMap<GridPoint, usize> = Ball::new(GridPoint::ORIGIN, r).cells().enumerate().map(|(i, c)| (c, i)).collect();
        let mut counts = vec![0u64; index.len()];
        for _ in 0..1_000_000 {
            let p = sample_ball_uniform(&mut rng, GridPoint::ORIGIN, r);
            counts[*index.get(&p).ok_or_else(|| format!("sample {p} outside radius {r}"))?] += 1;
        }
        let test = chi_square_uniform(&counts);
        notes.push(format!("r={r} p={:.3}", test.p_value));
        if test.p_value <= 0.01 {
            return Err(notes.join(", "));
        }
    }
    for delta in [0.3, 0.5, 0.8] {
        let sampler = HarmonicSampler::new(delta).map_err(|e| e.to_string())?;
        let counts = (0..10u64)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = stream(9090, chunk, (delta * 10.0) as u64, Purpose::Sampler);
                let mut counts = [0u64; 65];
                for _ in 0..1_000_000 {
                    let d = l1_distance(GridPoint::ORIGIN, sampler.sample_target(&mut rng, GridPoint::ORIGIN));
                    if d <= 64 {
                        counts[d as usize] += 1;
                    }
                }
                counts
            })
            .reduce(|| [0u64; 65], |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            });
        let xs: Vec<f64> = (1..=64).map(|d| (d as f64).ln()).collect();
        let ys: Vec<f64> = (1..=64).map(|d| (counts[d] as f64).ln()).collect();
        let slope = linear_trend(&xs, &ys).map_err(|e| e.to_string())?.slope;
        notes.push(format!("delta={delta} slope={slope:.4}"));
        if (slope + 1.0 + delta).abs() > 0.05 {
            return Err(notes.join(", "));
        }
    }
    Ok(notes.join(", "))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {id} {name}: PASS ({secs:.1}s) {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {id} {name}: FAIL ({secs:.1}s) {d}");
            }
        }
    };

    let start = Instant::now();
    report(1, "engine equivalence", start, engine_equivalence());
    let start = Instant::now();
    report(2, "spiral coverage", start, spiral_coverage());

    let start = Instant::now();
    let exact = run_sweep(&known_k_sweep(KEstimate::Exact)).expect("sweep runs");
    report(3, "known-k constant competitiveness", start, constant_competitive(&exact));
    let start = Instant::now();
    let rho = run_sweep(&known_k_sweep(KEstimate::RhoUniform(2.0))).expect("sweep runs");
    report(4, "rho-approximate estimates", start, rho_robust(&exact, &rho));
    let start = Instant::now();
    report(5, "uniform growth law", start, growth_law());
    let start = Instant::now();
    report(6, "harmonic success", start, harmonic_success());
    let start = Instant::now();
    report(7, "adversarial lower bound", start, lower_bound_experiment());
    let start = Instant::now();
    report(8, "samplers", start, samplers());

    let start = Instant::now();
    let first = sweep_csv_bytes(&exact).expect("csv");
    let again = sweep_csv_bytes(&run_sweep(&known_k_sweep(KEstimate::Exact)).expect("sweep runs")).expect("csv");
    let outcome = if first == again {
        Ok(format!("{} bytes identical", first.len()))
    } else {
        Err("repeated sweep produced different bytes".into())
    };
    report(9, "determinism", start, outcome);

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
