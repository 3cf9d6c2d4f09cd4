//! Numeric tolerance constants used across the crate, gathered in one record.

/// Tolerances for the crate's numeric contracts.
///
/// `Tolerances::default()` is what every public operation uses; the record
/// exists so tests and callers can reference the exact same constants.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Line directions must satisfy `|‖u‖ - 1| <= unit_norm`.
    pub unit_norm: f64,
    /// Subspace bases must satisfy `|BᵀB - I| <= orthonormality` per entry.
    pub orthonormality: f64,
    /// Relative slack for weight-mass conservation checks.
    pub mass_rel: f64,
    /// Relative agreement required between serial and row-parallel cost sums.
    pub parallel_cost_rel: f64,
    /// SPD solves must reproduce the exact inverse within this relative error
    /// on well-conditioned inputs.
    pub spd_solve_rel: f64,
    /// Singular values below `sigma_max * rank_rel` count as zero.
    pub rank_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::DEFAULT
    }
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        unit_norm: 1e-12,
        orthonormality: 1e-10,
        mass_rel: 1e-12,
        parallel_cost_rel: 1e-10,
        spd_solve_rel: 1e-8,
        rank_rel: 1e-12,
    };
}
