//! Weighted coresets for projective clustering on non-affine subspaces.
//!
//! The crate provides three coreset constructions over weighted point sets:
//!
//! - [`coreset::line_collapse`]: adaptive line seeding that collapses the
//!   input onto a small set of origin-lines, one weighted representative
//!   per cell;
//! - [`cnw::cnw`]: deterministic barrier-method row selection producing at
//!   most `ceil(k / eps^2)` weighted rows whose projection costs match the
//!   input on every rank-`k` subspace;
//! - [`coreset::fixed_size_coreset`]: the composition of the two, giving a
//!   fixed output size of at most `ceil(4k / eps^2)` rows.
//!
//! On top of these sit a merge-reduce tree for chunked streams
//! ([`streaming`]), optional Johnson-Lindenstrauss chunk projection, file
//! ingestion for dense CSV / IDX images / sparse triplets ([`io`]), and a
//! benchmark harness ([`mod@bench`]) with deterministic seeding and CSV
//! reports.
//!
//! All randomized operations take a 64-bit seed and derive independent
//! ChaCha streams through [`rng::stream_rng`]; identical seeds give
//! identical results regardless of thread count.

pub mod bench;
pub mod cnw;
pub mod coreset;
pub mod cost;
pub mod error;
pub mod geometry;
pub mod io;
pub mod points;
pub mod rng;
pub mod seeding;
pub mod streaming;
pub mod svd;
pub mod tolerances;

pub use cnw::{cnw, BarrierState, CnwConfig};
pub use coreset::{
    fixed_size_coreset, line_collapse, uniform_coreset, CollapseResult, Coreset,
    CoresetQualityParams, CoresetSource,
};
pub use cost::{brute_force_opt, cost_to_lines, partition_over, weighted_min_cost};
pub use error::Error;
pub use geometry::{line_metric, sq_dist, Line, RhoMetricParams, Subspace, SubspaceSet};
pub use points::{RowRef, WeightedPointSet};
pub use tolerances::Tolerances;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
