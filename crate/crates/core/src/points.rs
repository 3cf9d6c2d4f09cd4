//! Weighted point sets with dense or compressed-sparse-row storage.

use crate::error::Error;
use crate::Result;
use nalgebra::DMatrix;

/// A view of one row, dense or sparse.
#[derive(Debug, Clone, Copy)]
pub enum RowRef<'a> {
    Dense(&'a [f64]),
    /// Column indices (strictly increasing) and matching values.
    Sparse {
        indices: &'a [u32],
        values: &'a [f64],
    },
}

impl<'a> RowRef<'a> {
    pub fn sq_norm(&self) -> f64 {
        match self {
            RowRef::Dense(v) => v.iter().map(|x| x * x).sum(),
            RowRef::Sparse { values, .. } => values.iter().map(|x| x * x).sum(),
        }
    }

    pub fn dot(&self, other: &RowRef<'_>) -> f64 {
        match (self, other) {
            (RowRef::Dense(a), RowRef::Dense(b)) => {
                a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
            }
            (RowRef::Dense(a), RowRef::Sparse { indices, values })
            | (RowRef::Sparse { indices, values }, RowRef::Dense(a)) => indices
                .iter()
                .zip(values.iter())
                .map(|(&j, &v)| a[j as usize] * v)
                .sum(),
            (
                RowRef::Sparse {
                    indices: ia,
                    values: va,
                },
                RowRef::Sparse {
                    indices: ib,
                    values: vb,
                },
            ) => {
                let (mut i, mut j, mut acc) = (0usize, 0usize, 0.0);
                while i < ia.len() && j < ib.len() {
                    match ia[i].cmp(&ib[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            acc += va[i] * vb[j];
                            i += 1;
                            j += 1;
                        }
                    }
                }
                acc
            }
        }
    }

    /// Dot product against a dense slice.
    pub fn dot_dense(&self, other: &[f64]) -> f64 {
        self.dot(&RowRef::Dense(other))
    }

    /// Squared Euclidean distance to another row.
    pub fn sq_dist(&self, other: &RowRef<'_>) -> f64 {
        let d = self.sq_norm() - 2.0 * self.dot(other) + other.sq_norm();
        d.max(0.0)
    }

    /// Copies the row into a dense vector of width `dims`.
    pub fn to_dense(&self, dims: usize) -> Vec<f64> {
        match self {
            RowRef::Dense(v) => v.to_vec(),
            RowRef::Sparse { indices, values } => {
                let mut out = vec![0.0; dims];
                for (&j, &v) in indices.iter().zip(values.iter()) {
                    out[j as usize] = v;
                }
                out
            }
        }
    }
}

/// Compressed row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    pub ncols: usize,
}

impl Csr {
    pub fn nrows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn row(&self, i: usize) -> RowRef<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        RowRef::Sparse {
            indices: &self.indices[a..b],
            values: &self.values[a..b],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense { data: Vec<f64>, dims: usize },
    Sparse(Csr),
}

/// `n` weighted points in `d` dimensions; dense or sparse rows.
///
/// Weights are nonnegative; construction rejects negative or non-finite
/// weights. Rows are immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointSet {
    storage: Storage,
    weights: Vec<f64>,
}

impl WeightedPointSet {
    /// Builds a dense set with unit weights.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        Self::from_rows_weighted(rows, vec![1.0; n])
    }

    /// Builds a dense set with explicit weights.
    pub fn from_rows_weighted(rows: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let dims = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dims);
        for r in &rows {
            if r.len() != dims {
                return Err(Error::DimensionMismatch {
                    left: dims,
                    right: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(data, dims, weights)
    }

    /// Builds a dense set from row-major data.
    pub fn from_flat(data: Vec<f64>, dims: usize, weights: Vec<f64>) -> Result<Self> {
        if dims == 0 && !data.is_empty() {
            return Err(Error::InvalidParam("zero-width rows".into()));
        }
        let n = data.len().checked_div(dims).unwrap_or(0);
        if n * dims != data.len() {
            return Err(Error::InvalidParam(format!(
                "row-major data length {} not divisible by width {dims}",
                data.len()
            )));
        }
        check_weights(&weights, n)?;
        Ok(WeightedPointSet {
            storage: Storage::Dense { data, dims },
            weights,
        })
    }

    /// Builds a sparse set from compressed rows.
    pub fn from_csr(csr: Csr, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, csr.nrows())?;
        Ok(WeightedPointSet {
            storage: Storage::Sparse(csr),
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dims(&self) -> usize {
        match &self.storage {
            Storage::Dense { dims, .. } => *dims,
            Storage::Sparse(c) => c.ncols,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn row(&self, i: usize) -> RowRef<'_> {
        match &self.storage {
            Storage::Dense { data, dims } => RowRef::Dense(&data[i * dims..(i + 1) * dims]),
            Storage::Sparse(c) => c.row(i),
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total weight mass.
    pub fn total_weight(&self) -> f64 {
        crate::cost::neumaier_sum(self.weights.iter().copied())
    }

    /// Removes all-zero rows, returning the filtered set and how many rows
    /// were dropped. The spherical line metric is undefined at the origin,
    /// so loaders call this before any seeding runs.
    pub fn drop_zero_rows(self) -> (Self, usize) {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.row(i).sq_norm() > 0.0)
            .collect();
        if keep.len() == self.len() {
            let n = self.len();
            return (self, n - keep.len());
        }
        let dropped = self.len() - keep.len();
        let weights: Vec<f64> = keep.iter().map(|&i| self.weights[i]).collect();
        let set = match &self.storage {
            Storage::Dense { data, dims } => {
                let mut out = Vec::with_capacity(keep.len() * dims);
                for &i in &keep {
                    out.extend_from_slice(&data[i * dims..(i + 1) * dims]);
                }
                WeightedPointSet::from_flat(out, *dims, weights).expect("filtered rows are valid")
            }
            Storage::Sparse(c) => {
                let mut indptr = vec![0usize];
                let mut indices = Vec::new();
                let mut values = Vec::new();
                for &i in &keep {
                    let (a, b) = (c.indptr[i], c.indptr[i + 1]);
                    indices.extend_from_slice(&c.indices[a..b]);
                    values.extend_from_slice(&c.values[a..b]);
                    indptr.push(indices.len());
                }
                WeightedPointSet::from_csr(
                    Csr {
                        indptr,
                        indices,
                        values,
                        ncols: c.ncols,
                    },
                    weights,
                )
                .expect("filtered rows are valid")
            }
        };
        (set, dropped)
    }

    /// Gathers a subset of rows (with their weights) into a new set.
    pub fn select(&self, rows: &[usize]) -> Self {
        let weights: Vec<f64> = rows.iter().map(|&i| self.weights[i]).collect();
        match &self.storage {
            Storage::Dense { data, dims } => {
                let mut out = Vec::with_capacity(rows.len() * dims);
                for &i in rows {
                    out.extend_from_slice(&data[i * dims..(i + 1) * dims]);
                }
                WeightedPointSet::from_flat(out, *dims, weights).expect("selected rows are valid")
            }
            Storage::Sparse(c) => {
                let mut indptr = vec![0usize];
                let mut indices = Vec::new();
                let mut values = Vec::new();
                for &i in rows {
                    let (a, b) = (c.indptr[i], c.indptr[i + 1]);
                    indices.extend_from_slice(&c.indices[a..b]);
                    values.extend_from_slice(&c.values[a..b]);
                    indptr.push(indices.len());
                }
                WeightedPointSet::from_csr(
                    Csr {
                        indptr,
                        indices,
                        values,
                        ncols: c.ncols,
                    },
                    weights,
                )
                .expect("selected rows are valid")
            }
        }
    }

    /// Concatenates two sets with equal dimension. Sparse wins: if either
    /// side is sparse the result is sparse.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&other.weights);
        if !self.is_sparse() && !other.is_sparse() {
            let dims = self.dims();
            let mut data = match &self.storage {
                Storage::Dense { data, .. } => data.clone(),
                _ => unreachable!(),
            };
            if let Storage::Dense { data: d2, .. } = &other.storage {
                data.extend_from_slice(d2);
            }
            return WeightedPointSet::from_flat(data, dims, weights);
        }
        let mut indptr = vec![0usize];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut push_rows = |s: &WeightedPointSet| {
            for i in 0..s.len() {
                match s.row(i) {
                    RowRef::Dense(v) => {
                        for (j, &x) in v.iter().enumerate() {
                            if x != 0.0 {
                                indices.push(j as u32);
                                values.push(x);
                            }
                        }
                    }
                    RowRef::Sparse {
                        indices: ix,
                        values: vx,
                    } => {
                        indices.extend_from_slice(ix);
                        values.extend_from_slice(vx);
                    }
                }
                indptr.push(indices.len());
            }
        };
        push_rows(self);
        push_rows(other);
        WeightedPointSet::from_csr(
            Csr {
                indptr,
                indices,
                values,
                ncols: self.dims(),
            },
            weights,
        )
    }

    /// Materializes the `sqrt(weight)`-scaled dense matrix, so that the
    /// weighted Gram matrix equals `Σᵢ wᵢ·pᵢᵀpᵢ`.
    pub fn weighted_matrix(&self) -> DMatrix<f64> {
        let (n, d) = (self.len(), self.dims());
        let mut m = DMatrix::zeros(n, d);
        for i in 0..n {
            let s = self.weights[i].sqrt();
            match self.row(i) {
                RowRef::Dense(v) => {
                    for (j, &x) in v.iter().enumerate() {
                        m[(i, j)] = s * x;
                    }
                }
                RowRef::Sparse { indices, values } => {
                    for (&j, &x) in indices.iter().zip(values.iter()) {
                        m[(i, j as usize)] = s * x;
                    }
                }
            }
        }
        m
    }

    /// Dense copy of row `i`.
    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        self.row(i).to_dense(self.dims())
    }
}

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            left: weights.len(),
            right: n,
        });
    }
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidParam(format!("bad weight {w}")));
        }
    }
    if n > 0 && weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidParam(
            "a nonempty set needs at least one positive weight".into(),
        ));
    }
    Ok(())
}
