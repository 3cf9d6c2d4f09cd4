//! Distance functions and subspace types.
//!
//! Two distances drive everything here:
//!
//! - [`sq_dist`]: squared Euclidean distance between points;
//! - [`line_metric`]: the squared chordal distance between the *lines*
//!   through two nonzero points, `min{‖p̂-q̂‖², ‖p̂+q̂‖²} = 2 - 2|cos θ|`.
//!
//! The line metric is scale- and sign-invariant, bounded by 2, and satisfies
//! a relaxed triangle inequality with factor 8. For any set of non-affine
//! subspaces `S` it is sandwiched by the Euclidean point cost:
//! `f₀(p,S) <= ‖p‖²·f_ℓ(p,S) <= 2·f₀(p,S)`.

use crate::error::Error;
use crate::points::RowRef;
use crate::tolerances::Tolerances;
use crate::Result;
use nalgebra::DMatrix;

/// Squared Euclidean distance `‖p - q‖²`.
pub fn sq_dist(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Spherical line distance: `min{‖p̂-q̂‖², ‖p̂+q̂‖²}` for nonzero `p`, `q`.
///
/// Computed as `2 - 2|p·q|/(‖p‖‖q‖)`, clamped into `[0, 2]`.
pub fn line_metric(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    line_metric_rows(&RowRef::Dense(p), &RowRef::Dense(q))
}

/// [`line_metric`] on row views (sparse rows never densified).
pub fn line_metric_rows(p: &RowRef<'_>, q: &RowRef<'_>) -> Result<f64> {
    let np = p.sq_norm();
    let nq = q.sq_norm();
    if np == 0.0 || nq == 0.0 {
        return Err(Error::ZeroVector {
            context: "line metric",
        });
    }
    let c = p.dot(q) / (np.sqrt() * nq.sqrt());
    Ok((2.0 - 2.0 * c.abs()).clamp(0.0, 2.0))
}

/// A 1-dimensional non-affine subspace, stored as a unit direction.
/// `u` and `-u` denote the same line.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    direction: Vec<f64>,
}

impl Line {
    /// Wraps a direction that is already unit-norm (within tolerance).
    pub fn from_unit(direction: Vec<f64>) -> Result<Self> {
        let n = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (n - 1.0).abs() > Tolerances::DEFAULT.unit_norm {
            return Err(Error::InvalidParam(format!(
                "direction norm {n} is not 1 within {}",
                Tolerances::DEFAULT.unit_norm
            )));
        }
        Ok(Line { direction })
    }

    /// The line through the origin and a nonzero point.
    pub fn through(point: &[f64]) -> Result<Self> {
        let n = point.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::ZeroVector {
                context: "line through origin and point",
            });
        }
        Ok(Line {
            direction: point.iter().map(|x| x / n).collect(),
        })
    }

    pub fn through_row(row: &RowRef<'_>, dims: usize) -> Result<Self> {
        Self::through(&row.to_dense(dims))
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn dims(&self) -> usize {
        self.direction.len()
    }

    /// Squared Euclidean distance from a point to the line:
    /// `‖p‖² - (p·u)²`, clamped at zero against roundoff.
    pub fn sq_dist_to(&self, p: &[f64]) -> f64 {
        self.sq_dist_to_row(&RowRef::Dense(p))
    }

    pub fn sq_dist_to_row(&self, p: &RowRef<'_>) -> f64 {
        let t = p.dot_dense(&self.direction);
        (p.sq_norm() - t * t).max(0.0)
    }

    /// Whether two lines are the same up to sign, within `tol` on `|u·v|`.
    pub fn same_line(&self, other: &Line, tol: f64) -> bool {
        let c: f64 = self
            .direction
            .iter()
            .zip(&other.direction)
            .map(|(a, b)| a * b)
            .sum();
        (c.abs() - 1.0).abs() <= tol
    }
}

/// A `j`-dimensional non-affine subspace stored as an orthonormal basis
/// (`d x j`, columns orthonormal).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let j = basis.ncols();
        if j == 0 || j > basis.nrows() {
            return Err(Error::InvalidParam(format!(
                "subspace dimension {j} out of range for ambient {}",
                basis.nrows()
            )));
        }
        let g = basis.transpose() * &basis;
        let tol = Tolerances::DEFAULT.orthonormality;
        for r in 0..j {
            for c in 0..j {
                let want = if r == c { 1.0 } else { 0.0 };
                if (g[(r, c)] - want).abs() > tol {
                    return Err(Error::InvalidParam(format!(
                        "basis not orthonormal: (BᵀB)[{r},{c}] = {}",
                        g[(r, c)]
                    )));
                }
            }
        }
        Ok(Subspace { basis })
    }

    pub fn dims(&self) -> usize {
        self.basis.nrows()
    }

    pub fn j(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Squared Euclidean distance from a point to the subspace:
    /// `‖p‖² - ‖Bᵀp‖²`, clamped at zero.
    pub fn sq_dist_to(&self, p: &[f64]) -> f64 {
        self.sq_dist_to_row(&RowRef::Dense(p))
    }

    pub fn sq_dist_to_row(&self, p: &RowRef<'_>) -> f64 {
        let mut proj = 0.0;
        for c in 0..self.basis.ncols() {
            let col = self.basis.column(c);
            let t = match p {
                RowRef::Dense(v) => v.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>(),
                RowRef::Sparse { indices, values } => indices
                    .iter()
                    .zip(values.iter())
                    .map(|(&j, &v)| v * col[j as usize])
                    .sum::<f64>(),
            };
            proj += t * t;
        }
        (p.sq_norm() - proj).max(0.0)
    }
}

/// A set of equal-dimension subspaces; distance is the minimum over members.
#[derive(Debug, Clone)]
pub struct SubspaceSet {
    members: Vec<Subspace>,
}

impl SubspaceSet {
    pub fn new(members: Vec<Subspace>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParam("empty subspace set".into()));
        }
        let j = members[0].j();
        let d = members[0].dims();
        for s in &members[1..] {
            if s.j() != j || s.dims() != d {
                return Err(Error::DimensionMismatch {
                    left: j,
                    right: s.j(),
                });
            }
        }
        Ok(SubspaceSet { members })
    }

    pub fn members(&self) -> &[Subspace] {
        &self.members
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    pub fn sq_dist_to_row(&self, p: &RowRef<'_>) -> f64 {
        self.members
            .iter()
            .map(|s| s.sq_dist_to_row(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sq_dist_to(&self, p: &[f64]) -> f64 {
        self.sq_dist_to_row(&RowRef::Dense(p))
    }
}

/// Parameters of the relaxed triangle inequality satisfied by a distance
/// built from a log-log Lipschitz function with exponent `r`:
/// `f(x,z) - f(y,z) <= φ·f(x,y) + ψ·f(x,z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoMetricParams {
    pub r: f64,
    pub rho: f64,
    pub psi: f64,
    pub phi: f64,
}

impl RhoMetricParams {
    /// Derives `ρ = max{2^(r-1), 1}` and `φ = ((r-1)/ψ)^(r-1)` for `r > 1`,
    /// `ψ ∈ (0, r-1)`.
    pub fn for_exponent(r: f64, psi: f64) -> Result<Self> {
        if r.is_nan() || r <= 1.0 {
            return Err(Error::InvalidParam(format!("exponent r={r} must be > 1")));
        }
        if !(psi > 0.0 && psi < r - 1.0) {
            return Err(Error::InvalidParam(format!(
                "psi={psi} outside (0, {})",
                r - 1.0
            )));
        }
        Ok(RhoMetricParams {
            r,
            rho: (2.0f64).powf(r - 1.0).max(1.0),
            psi,
            phi: ((r - 1.0) / psi).powf(r - 1.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn sq_dist_examples() {
        assert_eq!(sq_dist(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(sq_dist(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 25.0);
        assert_eq!(sq_dist(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!(sq_dist(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn line_metric_examples() {
        // antipodal directions are the same line
        assert_abs_diff_eq!(
            line_metric(&[5.0, 0.0], &[-3.0, 0.0]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        // orthogonal
        assert_abs_diff_eq!(
            line_metric(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        // direct evaluation: p̂ = (0.6, 0.8), min{0.8, 3.2}
        assert_abs_diff_eq!(
            line_metric(&[3.0, 4.0], &[1.0, 0.0]).unwrap(),
            0.8,
            epsilon = 1e-12
        );
        assert!(line_metric(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn point_to_line_examples() {
        let e1 = Line::from_unit(vec![1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(e1.sq_dist_to(&[3.0, 4.0]), 16.0, epsilon = 1e-12);
        // containment
        let l = Line::through(&[2.0, -1.0]).unwrap();
        assert_abs_diff_eq!(l.sq_dist_to(&[4.0, -2.0]), 0.0, epsilon = 1e-12);
        // sandwich instance: f0 <= ‖p‖²·f_ell <= 2·f0
        let p = [3.0, 4.0];
        let f0 = e1.sq_dist_to(&p);
        let fl = line_metric(&p, &[1.0, 0.0]).unwrap();
        let mid = 25.0 * fl;
        assert_abs_diff_eq!(mid, 20.0, epsilon = 1e-12);
        assert!(f0 <= mid && mid <= 2.0 * f0);
    }

    #[test]
    fn point_to_subspace_examples() {
        let b = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let s = Subspace::new(b).unwrap();
        assert_abs_diff_eq!(s.sq_dist_to(&[2.0, 3.0, 0.0]), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.sq_dist_to(&[0.0, 0.0, 5.0]), 25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.sq_dist_to(&[1.0, 1.0, 1.0]), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let b = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert!(Subspace::new(b).is_err());
    }

    #[test]
    fn rho_params_consistency() {
        let p = RhoMetricParams::for_exponent(2.0, 0.5).unwrap();
        assert_eq!(p.rho, 2.0);
        assert_eq!(p.phi, 2.0);
        assert!(RhoMetricParams::for_exponent(2.0, 1.5).is_err());
    }

    proptest! {
        // f_ell depends only on the lines, not the representatives.
        #[test]
        fn line_metric_scale_invariant(
            p in proptest::collection::vec(-10.0f64..10.0, 3),
            q in proptest::collection::vec(-10.0f64..10.0, 3),
            a in prop_oneof![-8.0f64..-0.1, 0.1f64..8.0],
            b in prop_oneof![-8.0f64..-0.1, 0.1f64..8.0],
        ) {
            prop_assume!(p.iter().map(|x| x*x).sum::<f64>() > 1e-6);
            prop_assume!(q.iter().map(|x| x*x).sum::<f64>() > 1e-6);
            let pa: Vec<f64> = p.iter().map(|x| a * x).collect();
            let qb: Vec<f64> = q.iter().map(|x| b * x).collect();
            let d1 = line_metric(&p, &q).unwrap();
            let d2 = line_metric(&pa, &qb).unwrap();
            prop_assert!((d1 - d2).abs() <= 1e-12);
        }

        // Sandwich: f0(p, S) <= ‖p‖² f_ell(p, S) <= 2 f0(p, S) for line sets.
        #[test]
        fn sandwich_on_line_sets(
            p in proptest::collection::vec(-5.0f64..5.0, 4),
            dirs in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 4), 1..4),
        ) {
            prop_assume!(p.iter().map(|x| x*x).sum::<f64>() > 1e-6);
            let lines: Vec<Line> = dirs
                .iter()
                .filter(|v| v.iter().map(|x| x*x).sum::<f64>() > 1e-6)
                .map(|v| Line::through(v).unwrap())
                .collect();
            prop_assume!(!lines.is_empty());
            let f0 = lines.iter().map(|l| l.sq_dist_to(&p)).fold(f64::INFINITY, f64::min);
            let fl = lines
                .iter()
                .map(|l| line_metric(&p, l.direction()).unwrap())
                .fold(f64::INFINITY, f64::min);
            let np = p.iter().map(|x| x*x).sum::<f64>();
            let mid = np * fl;
            let slack = 1e-9 * (1.0 + f0.abs() + mid.abs());
            prop_assert!(f0 <= mid + slack);
            prop_assert!(mid <= 2.0 * f0 + slack);
        }

        // f_ell is an 8-distance.
        #[test]
        fn relaxed_triangle_factor8(
            q in proptest::collection::vec(-5.0f64..5.0, 3),
            p in proptest::collection::vec(-5.0f64..5.0, 3),
            r in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            for v in [&q, &p, &r] {
                prop_assume!(v.iter().map(|x| x*x).sum::<f64>() > 1e-6);
            }
            let qp = line_metric(&q, &p).unwrap();
            let pr = line_metric(&p, &r).unwrap();
            let qr = line_metric(&q, &r).unwrap();
            prop_assert!(qr <= 8.0 * (qp + pr) + 1e-12);
        }
    }
}
