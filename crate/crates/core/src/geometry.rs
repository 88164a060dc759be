//! Exact integer geometry of the grid `Z²`.
//!
//! Everything here is integer arithmetic: L1 distances, L1 balls, the
//! canonical square spiral (forward and inverse indexing), the L-shaped
//! travel paths agents use to move between cells, and the uniform ball
//! sampler.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// A node of the infinite grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: i64,
    pub y: i64,
}

impl GridPoint {
    pub const ORIGIN: GridPoint = GridPoint { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i64, dy: i64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    /// Chebyshev (L∞) distance, the spiral ring index of `other` around `self`.
    pub fn linf_distance(self, other: GridPoint) -> u64 {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    pub fn is_neighbor(self, other: GridPoint) -> bool {
        l1_distance(self, other) == 1
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(i64, i64)> for GridPoint {
    fn from((x, y): (i64, i64)) -> Self {
        Self::new(x, y)
    }
}

/// Hop distance on the grid.
pub fn l1_distance(a: GridPoint, b: GridPoint) -> u64 {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
}

/// Number of cells within L1 distance `r` of a cell: `2r² + 2r + 1`.
pub fn ball_size(r: u64) -> u64 {
    2 * r * r + 2 * r + 1
}

/// All cells within L1 distance `radius` of `center`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ball {
    pub center: GridPoint,
    pub radius: u64,
}

impl Ball {
    pub fn new(center: GridPoint, radius: u64) -> Self {
        Self { center, radius }
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        l1_distance(self.center, p) <= self.radius
    }

    pub fn size(&self) -> u64 {
        ball_size(self.radius)
    }

    /// Cells of the ball in row-major order (by `y`, then `x`).
    pub fn cells(&self) -> impl Iterator<Item = GridPoint> + '_ {
        let r = self.radius as i64;
        (-r..=r).flat_map(move |dy| {
            let w = r - dy.abs();
            (-w..=w).map(move |dx| self.center.offset(dx, dy))
        })
    }
}

/// Draws a cell uniformly from the L1 ball of radius `r` around `center`.
///
/// Rejection from the bounding square: each round draws one `dx` and one
/// `dy`; the acceptance rate is above one half for every radius.
pub fn sample_ball_uniform<R: Rng + ?Sized>(rng: &mut R, center: GridPoint, r: u64) -> GridPoint {
    if r == 0 {
        return center;
    }
    let r = r as i64;
    loop {
        let dx = rng.random_range(-r..=r);
        let dy = rng.random_range(-r..=r);
        if dx.abs() + dy.abs() <= r {
            return center.offset(dx, dy);
        }
    }
}

/// Point `index` (in `0..4d`) of the ring of cells at L1 distance exactly `d ≥ 1`.
///
/// Quarter `q = index / d` is the first quarter rotated by `q` right angles,
/// so the enumeration is invariant under grid rotation.
pub fn l1_ring_point(center: GridPoint, d: u64, index: u64) -> GridPoint {
    debug_assert!(d >= 1 && index < 4 * d);
    let d = d as i64;
    let quarter = index as i64 / d;
    let t = index as i64 % d;
    let (dx, dy) = match quarter {
        0 => (d - t, t),
        1 => (-t, d - t),
        2 => (-d + t, -t),
        _ => (t, -d + t),
    };
    center.offset(dx, dy)
}

/// Direction an L-shaped path takes first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LegOrder {
    XThenY,
    YThenX,
}

/// Lazy L-shaped shortest path between two cells.
///
/// Yields every cell after `from`, ending at `to`.
#[derive(Clone, Debug)]
pub struct LPath {
    pos: GridPoint,
    to: GridPoint,
    order: LegOrder,
}

impl LPath {
    pub fn new(from: GridPoint, to: GridPoint, order: LegOrder) -> Self {
        Self { pos: from, to, order }
    }

    pub fn remaining(&self) -> u64 {
        l1_distance(self.pos, self.to)
    }

    /// Offset (1-based) at which the path steps on `target`, if it does.
    pub fn hit_offset(from: GridPoint, to: GridPoint, order: LegOrder, target: GridPoint) -> Option<u64> {
        if target == from {
            return None;
        }
        let between = |v: i64, a: i64, b: i64| a.min(b) <= v && v <= a.max(b);
        match order {
            LegOrder::XThenY => {
                if target.y == from.y && between(target.x, from.x, to.x) {
                    Some(target.x.abs_diff(from.x))
                } else if target.x == to.x && between(target.y, from.y, to.y) {
                    Some(to.x.abs_diff(from.x) + target.y.abs_diff(from.y))
                } else {
                    None
                }
            }
            LegOrder::YThenX => {
                if target.x == from.x && between(target.y, from.y, to.y) {
                    Some(target.y.abs_diff(from.y))
                } else if target.y == to.y && between(target.x, from.x, to.x) {
                    Some(to.y.abs_diff(from.y) + target.x.abs_diff(from.x))
                } else {
                    None
                }
            }
        }
    }
}

impl Iterator for LPath {
    type Item = GridPoint;

    fn next(&mut self) -> Option<GridPoint> {
        let (dx, dy) = (self.to.x - self.pos.x, self.to.y - self.pos.y);
        let step = match self.order {
            LegOrder::XThenY if dx != 0 => (dx.signum(), 0),
            LegOrder::YThenX if dy != 0 => (0, dy.signum()),
            _ if dx != 0 => (dx.signum(), 0),
            _ if dy != 0 => (0, dy.signum()),
            _ => return None,
        };
        self.pos = self.pos.offset(step.0, step.1);
        Some(self.pos)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining()).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// Outbound travel: x-axis moves first, then y-axis moves.
pub fn travel_path(from: GridPoint, to: GridPoint) -> Vec<GridPoint> {
    LPath::new(from, to, LegOrder::XThenY).collect()
}

/// Inbound travel: y-axis moves first, then x-axis moves.
///
/// `return_path(p, s)` visits the cells of `travel_path(s, p)` in reverse.
pub fn return_path(from: GridPoint, to: GridPoint) -> Vec<GridPoint> {
    LPath::new(from, to, LegOrder::YThenX).collect()
}

fn ring_start(m: u64) -> u64 {
    let side = 2 * m - 1;
    side * side
}

/// Position after `step` edges of the square spiral around `origin`.
///
/// The spiral starts with a `+x` move and turns counterclockwise. Ring
/// `m ≥ 1` (cells at L∞ distance `m`) occupies steps `(2m−1)² .. (2m+1)²−1`,
/// entering at `(m, 1−m)` and leaving at `(m, −m)`.
pub fn spiral_step(origin: GridPoint, step: u64) -> GridPoint {
    if step == 0 {
        return origin;
    }
    // (2m−1)² ≤ step < (2m+1)²
    let m = step.isqrt().div_ceil(2);
    let o = (step - ring_start(m)) as i64;
    let m = m as i64;
    let (dx, dy) = if o < 2 * m {
        (m, 1 - m + o)
    } else if o < 4 * m {
        (3 * m - 1 - o, m)
    } else if o < 6 * m {
        (-m, 5 * m - 1 - o)
    } else {
        (o - 7 * m + 1, -m)
    };
    origin.offset(dx, dy)
}

/// The unique step at which the spiral around `origin` visits `target`.
pub fn spiral_hit_index(origin: GridPoint, target: GridPoint) -> u64 {
    let (dx, dy) = (target.x - origin.x, target.y - origin.y);
    let m = dx.abs().max(dy.abs());
    if m == 0 {
        return 0;
    }
    let o = if dx == m && dy > -m {
        dy + m - 1
    } else if dy == m {
        3 * m - 1 - dx
    } else if dx == -m {
        5 * m - 1 - dy
    } else {
        dx + 7 * m - 1
    };
    ring_start(m as u64) + o as u64
}

/// Spiral length actually executed for a nominal budget `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpiralDuration {
    pub steps: u64,
    pub radius: u64,
}

/// Rounds a spiral budget up to a whole number of rings.
///
/// `radius = ⌈√t / 2⌉`, i.e. the least `r` with `4r² ≥ t`, and
/// `steps = (2r+1)² − 1`, after which the full L∞ square of that radius
/// (and so the L1 ball) has been visited.
pub fn spiral_duration(t: u64) -> SpiralDuration {
    let q = t.div_ceil(4);
    let mut radius = q.isqrt();
    if radius * radius < q {
        radius += 1;
    }
    let side = 2 * radius + 1;
    SpiralDuration { steps: side * side - 1, radius }
}

/// A position on the spiral around `origin`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpiralCursor {
    pub origin: GridPoint,
    pub step: u64,
}

impl SpiralCursor {
    pub fn new(origin: GridPoint) -> Self {
        Self { origin, step: 0 }
    }

    pub fn cell(&self) -> GridPoint {
        spiral_step(self.origin, self.step)
    }
}

impl Iterator for SpiralCursor {
    type Item = GridPoint;

    fn next(&mut self) -> Option<GridPoint> {
        self.step += 1;
        Some(self.cell())
    }
}
