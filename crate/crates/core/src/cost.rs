//! Weighted clustering costs, partitions, and brute-force oracles.
//!
//! Costs accumulate through compensated (Neumaier) summation so that large
//! benchmark sums remain stable; the result is independent of row order up
//! to the documented tolerance.

use crate::error::Error;
use crate::geometry::Line;
use crate::points::WeightedPointSet;
use crate::Result;

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Running compensated accumulator for incremental cost updates.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Weighted cost of `points` against `k` members under a caller-supplied
/// distance: `Σᵢ wᵢ · min_{x<k} dist(i, x)`.
///
/// With zero members the empty-set convention applies: every distance is 1,
/// so the cost is the total weight.
pub fn weighted_min_cost<F>(points: &WeightedPointSet, k: usize, mut dist: F) -> f64
where
    F: FnMut(usize, usize) -> f64,
{
    if k == 0 {
        return points.total_weight();
    }
    neumaier_sum((0..points.len()).map(|i| {
        let d = (0..k).map(|x| dist(i, x)).fold(f64::INFINITY, f64::min);
        points.weight(i) * d
    }))
}

/// Weighted squared-Euclidean cost of the points to a set of origin-lines.
pub fn cost_to_lines(points: &WeightedPointSet, lines: &[Line]) -> f64 {
    weighted_min_cost(points, lines.len(), |i, x| {
        lines[x].sq_dist_to_row(&points.row(i))
    })
}

/// Assigns every point to its nearest member (ties to the lowest index).
/// Returns one index set per member; empty cells stay empty.
pub fn partition_over<F>(
    points: &WeightedPointSet,
    k: usize,
    mut dist: F,
) -> Result<Vec<Vec<usize>>>
where
    F: FnMut(usize, usize) -> f64,
{
    if k == 0 {
        return Err(Error::InvalidParam("partition over empty set".into()));
    }
    let mut cells = vec![Vec::new(); k];
    for i in 0..points.len() {
        let mut best = 0usize;
        let mut best_d = dist(i, 0);
        for x in 1..k {
            let d = dist(i, x);
            if d < best_d {
                best_d = d;
                best = x;
            }
        }
        cells[best].push(i);
    }
    Ok(cells)
}

const BRUTE_MAX_N: usize = 25;
const BRUTE_MAX_K: usize = 3;

/// Exact discrete optimum: minimizes the weighted cost over all
/// `k`-subsets of the input points, under a caller-supplied distance
/// `dist(point, candidate_point)`.
///
/// Guarded at `n <= 25`, `k <= 3` so enumeration stays cheap. For the line
/// objective pass the point-to-line distance through candidate points; the
/// result is then the optimum over origin-lines through input points, the
/// comparison class of the seeding bound.
pub fn brute_force_opt<F>(
    points: &WeightedPointSet,
    k: usize,
    mut dist: F,
) -> Result<(f64, Vec<usize>)>
where
    F: FnMut(usize, usize) -> f64,
{
    let n = points.len();
    if n > BRUTE_MAX_N || k > BRUTE_MAX_K {
        return Err(Error::TooLarge {
            n,
            k,
            max_n: BRUTE_MAX_N,
            max_k: BRUTE_MAX_K,
        });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParam(format!("k={k} out of range for n={n}")));
    }
    // Cache the full n x n distance table once.
    let mut table = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            table[i * n + j] = dist(i, j);
        }
    }
    let cost_of = |subset: &[usize]| -> f64 {
        neumaier_sum((0..n).map(|i| {
            let d = subset
                .iter()
                .map(|&j| table[i * n + j])
                .fold(f64::INFINITY, f64::min);
            points.weight(i) * d
        }))
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let c = cost_of(&subset);
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, subset.clone()));
        }
        // next k-combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best.unwrap());
            }
            i -= 1;
            if subset[i] != i + n - k {
                subset[i] += 1;
                for j in i + 1..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}
