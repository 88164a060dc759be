//! Power-law target sampling for harmonic search.
//!
//! Targets `u ≠ s` are drawn with probability proportional to
//! `dist(u)^-(2+δ)`. There are `4d` cells at distance `d`, so the radius has
//! law `P(d) = d^-(1+δ) / ζ(1+δ)` and the cell is uniform on its ring.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::geometry::{l1_ring_point, GridPoint};

/// Radii past this are clamped. Reaching such a cell takes longer than any
/// simulated horizon.
pub const MAX_RADIUS: u64 = 1 << 48;

const TABLE_LEN: usize = 4096;

/// Riemann zeta for real `s > 1` by Euler–Maclaurin summation.
///
/// Direct sum of the first `N − 1` terms, integral tail, and four Bernoulli
/// corrections; relative error is far below `1e-12` for `s ≥ 1.01`.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1, got {s}");
    const N: f64 = 64.0;
    let head: f64 = (1..64).rev().map(|n| (n as f64).powf(-s)).sum();
    let mut acc = head + N.powf(1.0 - s) / (s - 1.0) + 0.5 * N.powf(-s);
    // B_{2k} / (2k)!
    let coeffs = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1_209_600.0];
    let mut rising = s;
    let mut power = N.powf(-s - 1.0);
    for (k, c) in coeffs.iter().enumerate() {
        acc += c * rising * power;
        let j = 2.0 * k as f64;
        rising *= (s + j + 1.0) * (s + j + 2.0);
        power /= N * N;
    }
    acc
}

/// Sampler for one fixed `δ`. Build once and share between agents.
#[derive(Clone, Debug)]
pub struct HarmonicSampler {
    delta: f64,
    exponent: f64,
    zeta: f64,
    /// `cdf[i] = Σ_{d ≤ i+1} d^-(1+δ)`, unnormalised.
    cdf: Vec<f64>,
}

impl HarmonicSampler {
    /// Accepts any `δ > 0`; the search strategy narrows this to `(0, 0.8]`.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(invalid(format!("power-law exponent offset must be positive, got {delta}")));
        }
        let exponent = 1.0 + delta;
        let mut cdf = Vec::with_capacity(TABLE_LEN);
        let mut acc = 0.0;
        for d in 1..=TABLE_LEN {
            acc += (d as f64).powf(-exponent);
            cdf.push(acc);
        }
        Ok(Self { delta, exponent, zeta: zeta(exponent), cdf })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `ζ(1+δ)`, the normaliser of the radius law.
    pub fn normalizer(&self) -> f64 {
        self.zeta
    }

    /// Exact probability of radius `d`.
    pub fn radius_probability(&self, d: u64) -> f64 {
        if d == 0 {
            0.0
        } else {
            (d as f64).powf(-self.exponent) / self.zeta
        }
    }

    pub fn sample_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = rng.random::<f64>() * self.zeta;
        let table_mass = *self.cdf.last().expect("table is non-empty");
        if u < table_mass {
            return self.cdf.partition_point(|&c| c <= u) as u64 + 1;
        }
        self.sample_tail(rng)
    }

    /// Radius conditioned on `d > TABLE_LEN`.
    ///
    /// Proposal: floor of a continuous Pareto variable on `[a, ∞)`, whose
    /// mass at `d` is `∫_d^{d+1} z^-s dz`. The target-to-proposal ratio is at
    /// most `(1 + 1/a)^s`, so almost every proposal is accepted.
    fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let a = TABLE_LEN as f64 + 1.0;
        let s = self.exponent;
        let bound = (1.0 + 1.0 / a).powf(s);
        loop {
            let v: f64 = rng.random();
            let w: f64 = rng.random();
            let z = a * (1.0 - v).powf(-1.0 / self.delta);
            if !(z < MAX_RADIUS as f64) {
                return MAX_RADIUS;
            }
            let d = z.floor();
            // d^-s / ∫_d^{d+1} z^-s dz, written to avoid cancellation
            let ratio = self.delta / (d * -(-self.delta * (1.0 / d).ln_1p()).exp_m1());
            if w * bound <= ratio {
                return d as u64;
            }
        }
    }

    /// A target cell around `source`, never `source` itself.
    pub fn sample_target<R: Rng + ?Sized>(&self, rng: &mut R, source: GridPoint) -> GridPoint {
        let d = self.sample_radius(rng);
        let index = rng.random_range(0..4 * d);
        l1_ring_point(source, d, index)
    }
}
