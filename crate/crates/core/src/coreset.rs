//! Coreset constructions: line collapse, uniform sampling, and the
//! fixed-size composition with the spectral row selection.

use crate::cost::{neumaier_sum, Accumulator};
use crate::error::Error;
use crate::geometry::SubspaceSet;
use crate::points::WeightedPointSet;
use crate::rng::stream_rng;
use crate::seeding::{lines_from_seeds, AdaptiveSampler, NormalizedRows};
use crate::svd::opt_single_subspace;
use crate::tolerances::Tolerances;
use crate::Result;
use nalgebra::DMatrix;
use rand::Rng;

/// Which construction produced a coreset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoresetSource {
    LineCollapse,
    Cnw,
    Uniform,
    Composed,
    /// Pass-through (merge-reduce tree with the identity reducer).
    Identity,
}

/// Construction parameters recorded alongside a coreset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoresetParams {
    pub k: usize,
    pub j: usize,
    /// `ε` for the spectral constructions, the threshold `a` for the collapse.
    pub epsilon_or_threshold: f64,
    pub seed: u64,
}

/// Weighted representative points with provenance.
///
/// The materialized matrix form scales row `i` by `sqrt(scale_weights[i])`
/// so the weighted Gram matrix equals `Σᵢ wᵢ·qᵢᵀqᵢ`; costs against
/// non-affine subspaces are therefore preserved by the weighting.
#[derive(Debug, Clone)]
pub struct Coreset {
    representatives: WeightedPointSet,
    pub source: CoresetSource,
    pub params: CoresetParams,
}

impl Coreset {
    /// Builds from representatives carrying their scale weights. Zero-weight
    /// rows are dropped; remaining weights must be positive.
    pub fn new(
        representatives: WeightedPointSet,
        source: CoresetSource,
        params: CoresetParams,
    ) -> Self {
        let keep: Vec<usize> = (0..representatives.len())
            .filter(|&i| representatives.weight(i) > 0.0)
            .collect();
        let representatives = if keep.len() == representatives.len() {
            representatives
        } else {
            representatives.select(&keep)
        };
        Coreset {
            representatives,
            source,
            params,
        }
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Representatives with their scale weights.
    pub fn points(&self) -> &WeightedPointSet {
        &self.representatives
    }

    pub fn scale_weights(&self) -> &[f64] {
        self.representatives.weights()
    }

    /// Total scale weight.
    pub fn mass(&self) -> f64 {
        self.representatives.total_weight()
    }

    /// `sqrt(weight)`-scaled dense matrix view.
    pub fn materialized(&self) -> DMatrix<f64> {
        self.representatives.weighted_matrix()
    }

    /// The literal `w·cᵢ` row scaling kept for compatibility with code that
    /// prints weighted points that way; quadratic costs are *not* preserved
    /// under this view.
    pub fn linearly_scaled_rows(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| {
                let w = self.representatives.weight(i);
                self.representatives
                    .dense_row(i)
                    .into_iter()
                    .map(|x| w * x)
                    .collect()
            })
            .collect()
    }

    /// Weighted cost against a set of subspaces:
    /// `Σᵢ wᵢ·f₀(qᵢ, S)`.
    pub fn cost_to_subspaces(&self, subspaces: &SubspaceSet) -> f64 {
        neumaier_sum((0..self.len()).map(|i| {
            self.representatives.weight(i) * subspaces.sq_dist_to_row(&self.representatives.row(i))
        }))
    }
}

/// Outcome of the line-collapse construction.
#[derive(Debug, Clone)]
pub struct CollapseResult {
    /// Seed indices into the input, in sampling order.
    pub seeds: Vec<usize>,
    /// One representative per nonempty cell, weighted by the cell's mass.
    pub weighted_coreset: Coreset,
    /// Number of seeding iterations (`= seeds.len()`).
    pub iterations: usize,
    /// Weighted line cost at termination (strictly below the threshold).
    pub final_cost: f64,
    /// The cost threshold `a`.
    pub threshold: f64,
}

/// Grows origin-line seeds by adaptive line-metric sampling until the
/// weighted squared-Euclidean cost of the input to the seed lines drops
/// below `threshold`, then collapses every point onto its nearest seed
/// line's seed point, one weighted representative per nonempty cell.
///
/// The iteration cap at `n` never binds on finite inputs (the cost reaches
/// zero once every point is a seed); it guards against NaN poisoning.
pub fn line_collapse(
    points: &WeightedPointSet,
    threshold: f64,
    rng_seed: u64,
) -> Result<CollapseResult> {
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "threshold a={threshold} must be positive"
        )));
    }
    if points.is_empty() {
        return Err(Error::InvalidParam("empty input".into()));
    }
    let n = points.len();
    let rows = NormalizedRows::new(points)?;
    let mut sampler = AdaptiveSampler::new(points, &[], |i, j| rows.line_metric(i, j), rng_seed)?;

    // Incremental f0-to-line cache alongside the sampler's line-metric cache:
    // the squared distance from point i to the line through seed j is
    // ‖pᵢ‖² - (pᵢ·û_j)², evaluated on the precomputed unit rows.
    let sq_norms: Vec<f64> = (0..n).map(|i| points.row(i).sq_norm()).collect();
    let mut line_dist = vec![f64::INFINITY; n];
    let mut cost;
    let mut seen = 0usize;
    loop {
        sampler.extend(1)?;
        // fold in distances to the lines of any seeds added this round
        for &s in &sampler.seeds()[seen..] {
            let u = rows.unit_row(s);
            for (i, ld) in line_dist.iter_mut().enumerate() {
                let t = points.row(i).dot_dense(u);
                let d = (sq_norms[i] - t * t).max(0.0);
                if d < *ld {
                    *ld = d;
                }
            }
        }
        seen = sampler.seeds().len();
        let mut acc = Accumulator::default();
        for (i, &d) in line_dist.iter().enumerate() {
            acc.add(points.weight(i) * d);
        }
        cost = acc.value();
        if cost < threshold || seen >= n {
            break;
        }
    }

    let seeds = sampler.seeds().to_vec();
    let lines = lines_from_seeds(points, &seeds)?;
    // Partition by squared distance to the seed lines (argmin-equivalent to
    // the line metric), ties to the lowest seed index.
    let cells = crate::cost::partition_over(points, lines.len(), |i, x| {
        lines[x].sq_dist_to_row(&points.row(i))
    })?;
    let mut rep_rows = Vec::new();
    let mut rep_weights = Vec::new();
    let mut kept_seeds = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        if cell.is_empty() {
            continue;
        }
        let u = neumaier_sum(cell.iter().map(|&i| points.weight(i)));
        rep_rows.push(points.dense_row(seeds[c]));
        rep_weights.push(u);
        kept_seeds.push(seeds[c]);
    }
    let reps = WeightedPointSet::from_rows_weighted(rep_rows, rep_weights)?;
    let coreset = Coreset::new(
        reps,
        CoresetSource::LineCollapse,
        CoresetParams {
            k: 0,
            j: 1,
            epsilon_or_threshold: threshold,
            seed: rng_seed,
        },
    );
    debug_assert!(
        (coreset.mass() - points.total_weight()).abs()
            <= Tolerances::DEFAULT.mass_rel * points.total_weight().max(1.0),
        "cell weights must conserve total mass"
    );
    Ok(CollapseResult {
        iterations: seeds.len(),
        seeds,
        weighted_coreset: coreset,
        final_cost: cost,
        threshold,
    })
}

/// Quality parameters of a collapse-based coreset. `alpha` is the declared
/// approximation factor of the pilot solution (caller metadata, not
/// verified); `epsilon_prime` follows the transfer bound
/// `(1/ψ + 2ψ)·ε·α + 2ψ`.
#[derive(Debug, Clone, Copy)]
pub struct CoresetQualityParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub psi: f64,
    pub epsilon_prime: f64,
    /// Observed iteration count of the collapse stage.
    pub m_star: usize,
}

impl CoresetQualityParams {
    pub fn new(epsilon: f64, alpha: f64, psi: f64, m_star: usize) -> Result<Self> {
        let bad = |x: f64| !x.is_finite();
        if bad(epsilon)
            || epsilon <= 0.0
            || bad(alpha)
            || alpha < 1.0
            || bad(psi)
            || psi <= 0.0
            || psi >= 1.0
        {
            return Err(Error::InvalidParam(format!(
                "epsilon={epsilon}, alpha={alpha}, psi={psi} out of range"
            )));
        }
        Ok(CoresetQualityParams {
            epsilon,
            alpha,
            psi,
            epsilon_prime: (1.0 / psi + 2.0 * psi) * epsilon * alpha + 2.0 * psi,
            m_star,
        })
    }
}

/// Uniform sampling baseline: `m` rows without replacement, each carrying
/// weight `Σw/m`.
pub fn uniform_coreset(points: &WeightedPointSet, m: usize, rng_seed: u64) -> Result<Coreset> {
    let n = points.len();
    if m == 0 || m > n {
        return Err(Error::InvalidParam(format!("m={m} out of range 1..={n}")));
    }
    let mut rng = stream_rng(rng_seed, &[n as u64, m as u64]);
    // partial Fisher-Yates
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut chosen = idx[..m].to_vec();
    chosen.sort_unstable();
    let w = points.total_weight() / m as f64;
    let rows: Vec<Vec<f64>> = chosen.iter().map(|&i| points.dense_row(i)).collect();
    let reps = WeightedPointSet::from_rows_weighted(rows, vec![w; m])?;
    Ok(Coreset::new(
        reps,
        CoresetSource::Uniform,
        CoresetParams {
            k: 0,
            j: 0,
            epsilon_or_threshold: 0.0,
            seed: rng_seed,
        },
    ))
}

/// Fixed-size composition: line collapse down to the cost threshold
/// `(ε/2)·opt_estimate`, then spectral row selection with parameter `ε/2`
/// on the collapsed weighted representatives. The output has at most
/// `ceil(4k/ε²)` rows.
///
/// `opt_estimate` must be a positive upper bound on the optimal `k`-set
/// `j`-subspace cost; for `k = 1` use [`opt_single_subspace`], which is also
/// a valid upper bound for every `k >= 1`.
pub fn fixed_size_coreset(
    points: &WeightedPointSet,
    k: usize,
    j: usize,
    epsilon: f64,
    opt_estimate: f64,
    rng_seed: u64,
) -> Result<Coreset> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "epsilon={epsilon} outside (0, 1]"
        )));
    }
    if !opt_estimate.is_finite() || opt_estimate <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "opt_estimate={opt_estimate} must be positive"
        )));
    }
    let threshold = 0.5 * epsilon * opt_estimate;
    let collapse = line_collapse(points, threshold, rng_seed)?;
    // The selection stage runs at ε/2. Near ε = 1 that hits the ε < 1/2
    // validity edge of the barrier parameters, so the stage epsilon is
    // clamped and the iteration count pinned to the declared output bound.
    let inner_eps = (0.5 * epsilon).min(0.499);
    let mut cfg = crate::cnw::CnwConfig::new(k, inner_eps)?;
    cfg.iterations = cfg
        .iterations
        .min((4.0 * k as f64 / (epsilon * epsilon)).ceil() as usize);
    let inner = crate::cnw::cnw_with(collapse.weighted_coreset.points(), cfg, rng_seed)?;
    Ok(Coreset::new(
        inner.points().clone(),
        CoresetSource::Composed,
        CoresetParams {
            k,
            j,
            epsilon_or_threshold: epsilon,
            seed: rng_seed,
        },
    ))
}

/// Convenience wrapper computing the pilot estimate from the single-subspace
/// optimum before composing.
pub fn fixed_size_coreset_auto(
    points: &WeightedPointSet,
    k: usize,
    j: usize,
    epsilon: f64,
    rng_seed: u64,
) -> Result<Coreset> {
    let opt = opt_single_subspace(points, j)?;
    if !opt.is_finite() || opt <= 0.0 {
        return Err(Error::InvalidParam(
            "single-subspace optimum is zero; supply a positive opt_estimate".into(),
        ));
    }
    fixed_size_coreset(points, k, j, epsilon, opt, rng_seed)
}
