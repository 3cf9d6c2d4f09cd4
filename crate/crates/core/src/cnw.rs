//! Deterministic spectral-barrier row selection.
//!
//! Given the `sqrt(weight)`-materialized matrix `Q` (`ℓ x d`), the
//! construction selects at most `ceil(k/ε²)` weighted rows whose weighted
//! Gram matrix approximates `QᵀQ` multiplicatively on the subspace that
//! matters for rank-`k` projection costs. The steps:
//!
//! 1. thin SVD of `Q`; inputs of rank `<= k` are returned verbatim (they
//!    are exact coresets);
//! 2. a reduced representation `A = [A₂ | QZ]` of width at most `3k`:
//!    `QZ` holds the coordinates on the top-`2k` right singular vectors,
//!    and `A₂` encodes the residual `Q - QZZᵀ` through its top `k-1`
//!    spectral coordinates plus one column carrying each row's leftover
//!    residual norm, all scaled by `sqrt(k)/‖Q - Q_k‖_F`. (For `k = 1`
//!    this is exactly the classical `2k+1`-column construction.)
//! 3. the rows of `A` are whitened so their Gram is the identity — the
//!    `±k·I` barrier initialization presumes isotropic input — and the
//!    barrier selection runs for `ceil(k/ε²)` iterations;
//! 4. selected weights are rescaled so the output's weighted squared
//!    Frobenius mass matches the input exactly.
//!
//! Each iteration shifts both barriers, solves the two SPD barrier systems,
//! scores every row by the classical upper/lower potential quantities, and
//! increments the weight of the row maximizing `diag(L) - diag(U)` by
//! `1/U_jj`. Losing positive definiteness aborts with the iteration number.

use crate::coreset::{Coreset, CoresetParams, CoresetSource};
use crate::error::Error;
use crate::points::WeightedPointSet;
use crate::svd::ThinSvd;
use crate::tolerances::Tolerances;
use crate::Result;
use nalgebra::{DMatrix, DVector};

/// Parameters of a selection run.
#[derive(Debug, Clone, Copy)]
pub struct CnwConfig {
    pub k: usize,
    pub epsilon: f64,
    /// Upper barrier shift per iteration, `ε + 2ε²`.
    pub delta_u: f64,
    /// Lower barrier shift parameter, `ε - 2ε²`.
    pub delta_l: f64,
    /// Number of barrier iterations, `ceil(k/ε²)`.
    pub iterations: usize,
    /// Shift the lower barrier by `delta_u` instead of `delta_l`, as some
    /// renditions of the algorithm print it. The faster lower barrier
    /// overtakes the accumulated Gram's smallest eigenvalue before full
    /// rank is reached once `ε + 2ε² > 1/3`, so the conventional `delta_l`
    /// shift is the default.
    pub printed_lower_shift: bool,
}

impl CnwConfig {
    /// Validates `1 <= k` and `0 < ε <= 0.499` (at `ε = 1/2` the lower
    /// potential denominator `δ_l` vanishes).
    pub fn new(k: usize, epsilon: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParam("k must be >= 1".into()));
        }
        if !(epsilon > 0.0 && epsilon <= 0.499) {
            return Err(Error::InvalidParam(format!(
                "epsilon={epsilon} outside (0, 0.499]"
            )));
        }
        Ok(CnwConfig {
            k,
            epsilon,
            delta_u: epsilon + 2.0 * epsilon * epsilon,
            delta_l: epsilon - 2.0 * epsilon * epsilon,
            iterations: (k as f64 / (epsilon * epsilon)).ceil() as usize,
            printed_lower_shift: false,
        })
    }

    fn lower_shift(&self) -> f64 {
        if self.printed_lower_shift {
            self.delta_u
        } else {
            self.delta_l
        }
    }
}

/// Barrier-selection state over `ℓ` candidate rows in a `d'`-dimensional
/// representation.
#[derive(Debug, Clone)]
pub struct BarrierState {
    /// Upper barrier shift matrix (`d' x d'`).
    pub xu: DMatrix<f64>,
    /// Lower barrier shift matrix (`d' x d'`).
    pub xl: DMatrix<f64>,
    /// Accumulated weighted Gram matrix `Σ rⱼ aⱼᵀaⱼ`.
    pub z: DMatrix<f64>,
    /// Per-row selection weights; at most `iteration` nonzero entries.
    pub r: Vec<f64>,
    pub iteration: usize,
    gram: DMatrix<f64>,
}

impl BarrierState {
    /// Initializes the barriers at `±k·I` for rows whose Gram is `gram`.
    pub fn new(ell: usize, k: usize, gram: DMatrix<f64>) -> Self {
        let d = gram.nrows();
        BarrierState {
            xu: DMatrix::identity(d, d) * k as f64,
            xl: DMatrix::identity(d, d) * -(k as f64),
            z: DMatrix::zeros(d, d),
            r: vec![0.0; ell],
            iteration: 0,
            gram,
        }
    }

    /// One barrier iteration over the rows of `a` (`ℓ x d'`).
    ///
    /// Shifts both barriers, solves the SPD systems `(Z - Xl)` and
    /// `(Xu - Z)`, scores rows through per-row quadratic forms (the `ℓ x ℓ`
    /// score matrices are never materialized), and increments the weight of
    /// the winner. Returns the chosen row.
    pub fn step(&mut self, a: &DMatrix<f64>, cfg: &CnwConfig) -> Result<usize> {
        self.iteration += 1;
        self.xu += &self.gram * cfg.delta_u;
        self.xl += &self.gram * cfg.lower_shift();

        let m_l = spd_inverse(&(&self.z - &self.xl)).ok_or(Error::BarrierBreakdown {
            iteration: self.iteration,
        })?;
        let m_u = spd_inverse(&(&self.xu - &self.z)).ok_or(Error::BarrierBreakdown {
            iteration: self.iteration,
        })?;

        // diag(N) via aᵢ M aᵢᵀ and diag(N²) via aᵢ (M G M) aᵢᵀ,
        // N = A M Aᵀ; traces are the sums of the diagonals.
        let nu_l = row_quadratic_forms(a, &m_l);
        let nu_u = row_quadratic_forms(a, &m_u);
        let d2_l = row_quadratic_forms(a, &(&m_l * &self.gram * &m_l));
        let d2_u = row_quadratic_forms(a, &(&m_u * &self.gram * &m_u));
        let tr_l: f64 = d2_l.sum();
        let tr_u: f64 = d2_u.sum();
        if !(tr_l > 0.0 && tr_u > 0.0) {
            return Err(Error::BarrierBreakdown {
                iteration: self.iteration,
            });
        }

        let ell = a.nrows();
        let mut best = usize::MAX;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..ell {
            // zero rows carry no spectral information; never select them
            if nu_u[i] <= 0.0 {
                continue;
            }
            let l_d = d2_l[i] / (cfg.delta_l * tr_l) - nu_l[i];
            let u_d = d2_u[i] / (cfg.delta_u * tr_u) + nu_u[i];
            let score = l_d - u_d;
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        if best == usize::MAX {
            return Err(Error::BarrierBreakdown {
                iteration: self.iteration,
            });
        }
        let u_best = d2_u[best] / (cfg.delta_u * tr_u) + nu_u[best];
        debug_assert!(u_best > 0.0, "selected weight increment must be positive");
        let delta = 1.0 / u_best;
        self.r[best] += delta;
        // Z += Δ aⱼᵀaⱼ, keeping Z the accumulated weighted Gram
        let row = a.row(best);
        for c1 in 0..a.ncols() {
            for c2 in 0..a.ncols() {
                self.z[(c1, c2)] += delta * row[c1] * row[c2];
            }
        }
        Ok(best)
    }
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky
/// factorization; `None` when the matrix is not PD.
fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    nalgebra::Cholesky::new(sym).map(|c| c.inverse())
}

/// `out[i] = aᵢ M aᵢᵀ` for every row of `a`.
fn row_quadratic_forms(a: &DMatrix<f64>, m: &DMatrix<f64>) -> DVector<f64> {
    let t = a * m;
    let prod = t.component_mul(a);
    let mut out = DVector::zeros(a.nrows());
    for i in 0..a.nrows() {
        out[i] = prod.row(i).sum();
    }
    out
}

/// Spectral-barrier coreset of the `sqrt(weight)`-materialized input matrix:
/// at most `ceil(k/ε²)` of its rows, reweighted.
pub fn cnw(points: &WeightedPointSet, k: usize, epsilon: f64) -> Result<Coreset> {
    cnw_with(points, CnwConfig::new(k, epsilon)?, 0)
}

/// [`cnw`] with an explicit configuration (the seed only tags provenance;
/// the algorithm is deterministic).
pub fn cnw_with(points: &WeightedPointSet, cfg: CnwConfig, seed: u64) -> Result<Coreset> {
    if points.is_empty() {
        return Err(Error::InvalidParam("empty input".into()));
    }
    if cfg.k > points.dims() {
        return Err(Error::InvalidParam(format!(
            "k={} exceeds dimension {}",
            cfg.k,
            points.dims()
        )));
    }
    let q = points.weighted_matrix();
    let params = CoresetParams {
        k: cfg.k,
        j: cfg.k,
        epsilon_or_threshold: cfg.epsilon,
        seed,
    };
    let verbatim = |q: &DMatrix<f64>| -> Result<Coreset> {
        let rows: Vec<Vec<f64>> = (0..q.nrows())
            .map(|i| q.row(i).iter().copied().collect())
            .collect();
        let n = rows.len();
        Ok(Coreset::new(
            WeightedPointSet::from_rows_weighted(rows, vec![1.0; n])?,
            CoresetSource::Cnw,
            params,
        ))
    };

    let svd = ThinSvd::new(&q)?;
    let rank = svd.rank();
    let tail_sq = svd.tail_sq(cfg.k);
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    // rank <= k (or numerically so): the input is an exact coreset of itself
    if rank <= cfg.k || tail_sq.sqrt() <= sigma_max * Tolerances::DEFAULT.rank_rel {
        return verbatim(&q);
    }

    let a = build_representation(&svd, cfg.k, rank, tail_sq);
    let aw = whiten(&a).ok_or_else(|| Error::InvalidParam("degenerate representation".into()))?;
    let dprime = aw.ncols();
    let mut state = BarrierState::new(aw.nrows(), cfg.k, DMatrix::identity(dprime, dprime));
    for _ in 0..cfg.iterations {
        state.step(&aw, &cfg)?;
    }

    // Rescale so the weighted squared Frobenius mass matches the input.
    let total_sq: f64 = q.iter().map(|x| x * x).sum();
    let selected_sq: f64 = (0..q.nrows())
        .filter(|&i| state.r[i] > 0.0)
        .map(|i| state.r[i] * q.row(i).iter().map(|x| x * x).sum::<f64>())
        .sum();
    if !selected_sq.is_finite() || selected_sq <= 0.0 {
        return Err(Error::BarrierBreakdown {
            iteration: state.iteration,
        });
    }
    let kappa = selected_sq / total_sq;

    let mut rows = Vec::new();
    let mut weights = Vec::new();
    for i in 0..q.nrows() {
        if state.r[i] > 0.0 {
            rows.push(q.row(i).iter().copied().collect::<Vec<f64>>());
            weights.push(state.r[i] / kappa);
        }
    }
    Ok(Coreset::new(
        WeightedPointSet::from_rows_weighted(rows, weights)?,
        CoresetSource::Cnw,
        params,
    ))
}

/// Builds the `ℓ x (<= 3k)` representation `[A₂ | QZ]` from the thin SVD.
fn build_representation(svd: &ThinSvd, k: usize, rank: usize, tail_sq: f64) -> DMatrix<f64> {
    let ell = svd.u.nrows();
    let c2k = (2 * k).min(rank);
    let ck = (k.saturating_sub(1)).min(rank - c2k);
    let has_leftover = rank > c2k + ck;
    let width = ck + usize::from(has_leftover) + c2k;
    let scale = (k as f64).sqrt() / tail_sq.sqrt();
    let mut a = DMatrix::zeros(ell, width);
    for i in 0..ell {
        let mut col = 0;
        for j in 0..ck {
            a[(i, col)] = scale * svd.u[(i, c2k + j)] * svd.sigma[c2k + j];
            col += 1;
        }
        if has_leftover {
            let mut left = 0.0;
            for j in c2k + ck..rank {
                let v = svd.u[(i, j)] * svd.sigma[j];
                left += v * v;
            }
            a[(i, col)] = scale * left.sqrt();
            col += 1;
        }
        for j in 0..c2k {
            a[(i, col)] = svd.u[(i, j)] * svd.sigma[j];
            col += 1;
        }
    }
    a
}

/// Column-whitens `a` so the Gram of the result is the identity; drops
/// numerically null directions.
fn whiten(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let g = a.transpose() * a;
    let g = (&g + g.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(g);
    let max = eig.eigenvalues.iter().fold(0.0f64, |acc, &x| acc.max(x));
    if max <= 0.0 {
        return None;
    }
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > max * Tolerances::DEFAULT.rank_rel)
        .collect();
    let mut w = DMatrix::zeros(a.ncols(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt();
        for r in 0..a.ncols() {
            w[(r, c)] = eig.eigenvectors[(r, i)] / s;
        }
    }
    Some(a * w)
}
