//! Thin SVD with a fixed contract: singular values nonincreasing,
//! orthonormal factors, and a sparse-friendly top-k path that never
//! densifies the input.

use crate::error::Error;
use crate::points::{RowRef, WeightedPointSet};
use crate::tolerances::Tolerances;
use crate::Result;
use nalgebra::{DMatrix, DVector};

/// Thin SVD `M = U Σ Vᵀ` with `Σ` sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    /// `d x r` matrix whose columns are the right singular vectors.
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let svd = m.clone().svd(true, true);
        let u = svd
            .u
            .ok_or_else(|| Error::InvalidParam("svd: no U".into()))?;
        let vt = svd
            .v_t
            .ok_or_else(|| Error::InvalidParam("svd: no Vᵀ".into()))?;
        let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
        // enforce nonincreasing order
        let mut order: Vec<usize> = (0..sigma.len()).collect();
        order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
        let sorted: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
        let u2 = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
        let v2 = DMatrix::from_fn(vt.ncols(), order.len(), |r, c| vt[(order[c], r)]);
        Ok(ThinSvd {
            u: u2,
            sigma: sorted,
            v: v2,
        })
    }

    /// Numerical rank relative to the largest singular value.
    pub fn rank(&self) -> usize {
        let tol = self.sigma.first().copied().unwrap_or(0.0) * Tolerances::DEFAULT.rank_rel;
        self.sigma.iter().filter(|&&s| s > tol).count()
    }

    /// `Σᵢ>k σᵢ²`: squared Frobenius distance to the best rank-`k` matrix.
    pub fn tail_sq(&self, k: usize) -> f64 {
        self.sigma.iter().skip(k).map(|s| s * s).sum()
    }
}

/// Top-`k` right singular vectors (`d x k`) of the `sqrt(weight)`-scaled
/// matrix, plus the squared tail `Σᵢ>k σᵢ²`.
///
/// Dense inputs go through the full thin SVD. Sparse inputs use block
/// subspace iteration on the Gram operator so rows are never densified.
pub fn top_right_vectors(points: &WeightedPointSet, k: usize) -> Result<(DMatrix<f64>, f64)> {
    let d = points.dims();
    if k == 0 || k > d {
        return Err(Error::InvalidParam(format!(
            "k={k} out of range for dimension {d}"
        )));
    }
    if points.is_sparse() {
        sparse_top_right(points, k)
    } else {
        let svd = ThinSvd::new(&points.weighted_matrix())?;
        let cols = k.min(svd.v.ncols());
        let mut v = svd.v.columns(0, cols).into_owned();
        if cols < k {
            // pad with zero columns; callers only project onto it
            v = v.insert_columns(cols, k - cols, 0.0);
        }
        Ok((v, svd.tail_sq(k)))
    }
}

/// Cost of the best single `j`-dimensional non-affine subspace:
/// the squared singular-value tail of the weighted matrix beyond the top `j`.
pub fn opt_single_subspace(points: &WeightedPointSet, j: usize) -> Result<f64> {
    let (_, tail) = top_right_vectors(points, j)?;
    Ok(tail)
}

/// Squared Frobenius norm of the weighted matrix, `Σᵢ wᵢ‖pᵢ‖²`.
pub fn weighted_frobenius_sq(points: &WeightedPointSet) -> f64 {
    crate::cost::neumaier_sum((0..points.len()).map(|i| points.weight(i) * points.row(i).sq_norm()))
}

fn sparse_top_right(points: &WeightedPointSet, k: usize) -> Result<(DMatrix<f64>, f64)> {
    let d = points.dims();
    let n = points.len();
    let block = (2 * k + 4).min(d);
    // deterministic start block
    let mut rng = crate::rng::stream_rng(0x5eed_5eed, &[n as u64, d as u64, k as u64]);
    use rand::Rng;
    let mut q = DMatrix::from_fn(d, block, |_, _| rng.random_range(-1.0..1.0f64));
    orthonormalize(&mut q);
    let gram_apply = |x: &DMatrix<f64>| -> DMatrix<f64> {
        // (AᵀA) X without forming AᵀA: accumulate wᵢ pᵢ (pᵢ·X)
        let mut out = DMatrix::zeros(d, x.ncols());
        for i in 0..n {
            let w = points.weight(i);
            if w == 0.0 {
                continue;
            }
            match points.row(i) {
                RowRef::Dense(v) => {
                    for c in 0..x.ncols() {
                        let t: f64 = v.iter().zip(x.column(c).iter()).map(|(a, b)| a * b).sum();
                        let wt = w * t;
                        for (j, &a) in v.iter().enumerate() {
                            out[(j, c)] += wt * a;
                        }
                    }
                }
                RowRef::Sparse { indices, values } => {
                    for c in 0..x.ncols() {
                        let t: f64 = indices
                            .iter()
                            .zip(values.iter())
                            .map(|(&j, &a)| a * x[(j as usize, c)])
                            .sum();
                        let wt = w * t;
                        for (&j, &a) in indices.iter().zip(values.iter()) {
                            out[(j as usize, c)] += wt * a;
                        }
                    }
                }
            }
        }
        out
    };
    let mut prev = DVector::zeros(block);
    for _iter in 0..500 {
        let mut z = gram_apply(&q);
        // Rayleigh-Ritz on the block
        let s = q.transpose() * &z;
        let eig = nalgebra::SymmetricEigen::new(s);
        orthonormalize(&mut z);
        q = z;
        let mut lam: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        lam.sort_by(|a, b| b.total_cmp(a));
        let cur = DVector::from_vec(lam);
        let diff = (&cur - &prev).norm();
        let scale = cur.norm().max(1e-300);
        prev = cur;
        if diff <= 1e-12 * scale {
            break;
        }
    }
    // final Rayleigh-Ritz to extract ordered eigenvectors
    let z = gram_apply(&q);
    let s = q.transpose() * &z;
    let s = (&s + s.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut v = DMatrix::zeros(d, k);
    let mut top_sq = 0.0;
    let rot = &q * &eig.eigenvectors;
    for (c, &oi) in order.iter().take(k).enumerate() {
        v.set_column(c, &rot.column(oi));
        top_sq += eig.eigenvalues[oi].max(0.0);
    }
    let total = weighted_frobenius_sq(points);
    Ok((v, (total - top_sq).max(0.0)))
}

fn orthonormalize(m: &mut DMatrix<f64>) {
    let qr = m.clone().qr();
    *m = qr.q();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::Csr;
    use approx::assert_abs_diff_eq;

    #[test]
    fn singular_values_sorted() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0]);
        let svd = ThinSvd::new(&m).unwrap();
        assert_eq!(svd.sigma, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn opt_single_subspace_examples() {
        // rank <= j gives 0
        let set =
            WeightedPointSet::from_rows(vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(opt_single_subspace(&set, 1).unwrap(), 0.0, epsilon = 1e-18);

        // rows diag(3,2,1), j = 2: tail is 1² = 1
        let set = WeightedPointSet::from_rows(vec![
            vec![3.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_abs_diff_eq!(opt_single_subspace(&set, 2).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tail_matches_projection_cost() {
        use crate::geometry::Subspace;
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(3, &[]);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let set = WeightedPointSet::from_rows(rows).unwrap();
        let j = 3;
        let (v, tail) = top_right_vectors(&set, j).unwrap();
        let sub = Subspace::new(v).unwrap();
        let direct = crate::cost::neumaier_sum(
            (0..set.len()).map(|i| set.weight(i) * sub.sq_dist_to_row(&set.row(i))),
        );
        assert!((tail - direct).abs() <= 1e-8 * (1.0 + direct));
    }

    #[test]
    fn sparse_top_right_matches_dense() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(9, &[]);
        let (n, d) = (40, 8);
        let mut indptr = vec![0usize];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut dense_rows = Vec::new();
        for _ in 0..n {
            let mut row = vec![0.0; d];
            for (j, slot) in row.iter_mut().enumerate() {
                if rng.random_range(0.0..1.0f64) < 0.4 {
                    let v = rng.random_range(-2.0..2.0f64);
                    *slot = v;
                    indices.push(j as u32);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
            dense_rows.push(row);
        }
        let sparse = WeightedPointSet::from_csr(
            Csr {
                indptr,
                indices,
                values,
                ncols: d,
            },
            vec![1.0; n],
        )
        .unwrap();
        let dense = WeightedPointSet::from_rows(dense_rows).unwrap();
        let k = 3;
        let (_, tail_s) = top_right_vectors(&sparse, k).unwrap();
        let (_, tail_d) = top_right_vectors(&dense, k).unwrap();
        assert!(
            (tail_s - tail_d).abs() <= 1e-7 * (1.0 + tail_d),
            "sparse {tail_s} dense {tail_d}"
        );
    }
}
