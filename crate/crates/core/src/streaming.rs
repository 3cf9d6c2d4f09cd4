//! Merge-reduce coreset tree over chunked input, with optional
//! Johnson-Lindenstrauss chunk projection.
//!
//! The input splits into consecutive chunks of at most `m` rows (floor 0).
//! Each floor merges adjacent node pairs and reduces the union (at most
//! `2m` weighted rows) back to at most `m` rows with the configured
//! reducer; an odd trailing node is carried up unmerged. The top node is a
//! coreset of the whole stream.
//!
//! Node reductions on one floor are independent: each node derives its own
//! random stream from `(seed, floor, node index)`, so the tree is
//! bit-identical no matter how many workers run it.

use crate::bench::{ErrorEvaluator, ErrorForm};
use crate::coreset::{fixed_size_coreset, uniform_coreset, Coreset, CoresetParams, CoresetSource};
use crate::error::Error;
use crate::points::WeightedPointSet;
use crate::rng::{stream_id, stream_rng};
use crate::svd::opt_single_subspace;
use crate::Result;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use std::path::Path;
use std::time::Instant;

/// Node reduction rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reducer {
    /// Pass the union through unreduced (testing/baseline only; node sizes
    /// grow with the floor).
    Identity,
    /// Uniform subsample to `m` rows.
    Uniform,
    /// Spectral row selection with `ceil(k/ε²) <= m` rows.
    Cnw,
    /// Line collapse + spectral selection with `ceil(4k/ε²) <= m` rows; the
    /// cost threshold comes from the node input's single-subspace optimum.
    Composed,
}

impl Reducer {
    pub fn parse(s: &str) -> Result<Reducer> {
        match s {
            "identity" => Ok(Reducer::Identity),
            "uniform" => Ok(Reducer::Uniform),
            "cnw" => Ok(Reducer::Cnw),
            "composed" => Ok(Reducer::Composed),
            other => Err(Error::InvalidParam(format!("unknown reducer '{other}'"))),
        }
    }

    fn source(&self) -> CoresetSource {
        match self {
            Reducer::Identity => CoresetSource::Identity,
            Reducer::Uniform => CoresetSource::Uniform,
            Reducer::Cnw => CoresetSource::Cnw,
            Reducer::Composed => CoresetSource::Composed,
        }
    }
}

/// Distribution of the random projection matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JlDistribution {
    Gaussian,
    Rademacher,
    /// Exact copy; requires `target_dim == d`.
    Identity,
}

/// Johnson-Lindenstrauss projection settings.
///
/// One matrix (one seed) serves every chunk, so all floors live in a common
/// projected space and per-floor errors stay comparable.
#[derive(Debug, Clone, Copy)]
pub struct JlConfig {
    pub target_dim: usize,
    pub distribution: JlDistribution,
    /// Orthonormalize the columns (and scale by `sqrt(d/d')`). On by
    /// default: the plain `1/sqrt(d')` scaling has noticeably heavier
    /// distortion tails.
    pub orthonormalize: bool,
    pub rng_seed: u64,
}

impl JlConfig {
    pub fn gaussian(target_dim: usize, rng_seed: u64) -> Self {
        JlConfig {
            target_dim,
            distribution: JlDistribution::Gaussian,
            orthonormalize: true,
            rng_seed,
        }
    }

    /// The default target dimension `k·ceil(ln m)` for chunk size `m`; the
    /// `6k` variant is selectable through [`JlConfig::six_k`].
    pub fn default_dim(k: usize, chunk_size: usize) -> usize {
        k * (chunk_size.max(2) as f64).ln().ceil() as usize
    }

    /// The fixed `6k` target dimension variant.
    pub fn six_k(k: usize) -> usize {
        6 * k
    }
}

/// Tree configuration.
#[derive(Debug, Clone)]
pub struct TreeConfig {
    /// Chunk size `m` (>= 2); every node holds at most `m` rows.
    pub chunk_size: usize,
    pub reducer: Reducer,
    pub k: usize,
    pub epsilon: f64,
    pub jl: Option<JlConfig>,
    pub seed: u64,
}

impl TreeConfig {
    /// Validates the reducer size contract `output <= m` per merged pair.
    pub fn validate(&self) -> Result<()> {
        if self.chunk_size < 2 {
            return Err(Error::InvalidParam(format!(
                "chunk_size={} must be >= 2",
                self.chunk_size
            )));
        }
        let m = self.chunk_size;
        match self.reducer {
            Reducer::Identity | Reducer::Uniform => Ok(()),
            Reducer::Cnw => {
                let out = (self.k as f64 / (self.epsilon * self.epsilon)).ceil() as usize;
                if out > m {
                    return Err(Error::InvalidParam(format!(
                        "cnw reducer would output {out} > m={m} rows; raise epsilon"
                    )));
                }
                Ok(())
            }
            Reducer::Composed => {
                let out = (4.0 * self.k as f64 / (self.epsilon * self.epsilon)).ceil() as usize;
                if out > m {
                    return Err(Error::InvalidParam(format!(
                        "composed reducer would output {out} > m={m} rows; raise epsilon"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `ceil(log2(ceil(n/m))) + 1` floors for `n` input rows.
    pub fn floors_for(&self, n: usize) -> usize {
        let chunks = chunk_count(n, self.chunk_size);
        (chunks.max(1) as f64).log2().ceil() as usize + 1
    }
}

/// Number of chunks of size at most `m` covering `n` rows.
pub fn chunk_count(n: usize, m: usize) -> usize {
    n.div_ceil(m)
}

/// Splits into consecutive, order-preserving chunks of at most `m` rows;
/// the last chunk may be short.
pub fn chunk(points: &WeightedPointSet, m: usize) -> Result<Vec<WeightedPointSet>> {
    if m < 2 {
        return Err(Error::InvalidParam(format!("chunk size {m} must be >= 2")));
    }
    if points.is_empty() {
        return Err(Error::InvalidParam("empty stream".into()));
    }
    let n = points.len();
    let mut out = Vec::with_capacity(chunk_count(n, m));
    let mut start = 0;
    while start < n {
        let end = (start + m).min(n);
        let idx: Vec<usize> = (start..end).collect();
        out.push(points.select(&idx));
        start = end;
    }
    Ok(out)
}

/// Streaming variant of [`chunk`] over `(row, weight)` pairs.
pub fn chunk_stream<I>(rows: I, dims: usize, m: usize) -> impl Iterator<Item = WeightedPointSet>
where
    I: IntoIterator<Item = (Vec<f64>, f64)>,
{
    let mut it = rows.into_iter().peekable();
    std::iter::from_fn(move || {
        it.peek()?;
        let mut data = Vec::with_capacity(m * dims);
        let mut weights = Vec::with_capacity(m);
        while weights.len() < m {
            match it.next() {
                Some((row, w)) => {
                    data.extend_from_slice(&row);
                    weights.push(w);
                }
                None => break,
            }
        }
        Some(
            WeightedPointSet::from_flat(data, dims, weights)
                .expect("stream rows share the declared width"),
        )
    })
}

/// Projects one chunk through the shared random matrix.
pub fn jl_project(chunk: &WeightedPointSet, cfg: &JlConfig) -> Result<WeightedPointSet> {
    let d = chunk.dims();
    if cfg.target_dim == 0 || cfg.target_dim > d {
        return Err(Error::InvalidParam(format!(
            "target dimension {} out of range 1..={d}",
            cfg.target_dim
        )));
    }
    if cfg.distribution == JlDistribution::Identity {
        if cfg.target_dim != d {
            return Err(Error::InvalidParam(
                "identity projection requires target_dim == d".into(),
            ));
        }
        return Ok(chunk.clone());
    }
    let r = jl_matrix(d, cfg);
    let mut rows = Vec::with_capacity(chunk.len());
    for i in 0..chunk.len() {
        let mut out = vec![0.0; cfg.target_dim];
        match chunk.row(i) {
            crate::points::RowRef::Dense(v) => {
                for (j, &x) in v.iter().enumerate() {
                    if x != 0.0 {
                        for c in 0..cfg.target_dim {
                            out[c] += x * r[(j, c)];
                        }
                    }
                }
            }
            crate::points::RowRef::Sparse { indices, values } => {
                for (&j, &x) in indices.iter().zip(values.iter()) {
                    for c in 0..cfg.target_dim {
                        out[c] += x * r[(j as usize, c)];
                    }
                }
            }
        }
        rows.push(out);
    }
    WeightedPointSet::from_rows_weighted(rows, chunk.weights().to_vec())
}

/// The shared `d x d'` projection matrix for a seed.
pub fn jl_matrix(d: usize, cfg: &JlConfig) -> DMatrix<f64> {
    let mut rng = stream_rng(cfg.rng_seed, &[0x4a4c, d as u64, cfg.target_dim as u64]);
    let mut g = DMatrix::from_fn(d, cfg.target_dim, |_, _| match cfg.distribution {
        JlDistribution::Gaussian | JlDistribution::Identity => {
            let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        }
        JlDistribution::Rademacher => {
            if rng.random_range(0..2u8) == 0 {
                1.0
            } else {
                -1.0
            }
        }
    });
    if cfg.orthonormalize {
        let q = g.clone().qr().q();
        let scale = (d as f64 / cfg.target_dim as f64).sqrt();
        q * scale
    } else {
        g /= (cfg.target_dim as f64).sqrt();
        g
    }
}

/// Per-floor summary emitted by [`merge_reduce`].
#[derive(Debug, Clone)]
pub struct FloorReport {
    pub floor: usize,
    pub nodes: usize,
    /// Total rows across the floor's nodes.
    pub rows: usize,
    /// Error of the concatenated floor rows against the original data
    /// (projected data when JL is on), under the benchmark metric.
    pub error: f64,
    pub wall_time: f64,
}

/// Builds the merge-reduce tree. Returns the top coreset and one report per
/// floor (floor 0 = the chunks themselves).
///
/// When checkpointing is requested, every node is persisted as a
/// weighted-matrix CSV named `floor-<f>/node-<i>.wcsv` under the directory.
pub fn merge_reduce(
    chunks: Vec<WeightedPointSet>,
    cfg: &TreeConfig,
    checkpoint_dir: Option<&Path>,
) -> Result<(Coreset, Vec<FloorReport>)> {
    cfg.validate()?;
    if chunks.is_empty() {
        return Err(Error::InvalidParam("empty stream".into()));
    }
    let m = cfg.chunk_size;
    for (i, c) in chunks.iter().enumerate() {
        if c.len() > m {
            return Err(Error::InvalidParam(format!(
                "chunk {i} has {} rows > m={m}",
                c.len()
            )));
        }
    }

    // Reference data for the per-floor error: the concatenation of the
    // original chunks (already projected when JL is on upstream).
    let mut reference = chunks[0].clone();
    for c in &chunks[1..] {
        reference = reference.concat(c)?;
    }
    let evaluator =
        ErrorEvaluator::new(&reference, cfg.k.min(reference.dims()), ErrorForm::Squared)?;

    let mut reports = Vec::new();
    let mut floor_nodes = chunks;
    let mut floor = 0usize;
    loop {
        let t0 = Instant::now();
        if let Some(dir) = checkpoint_dir {
            let fdir = dir.join(format!("floor-{floor}"));
            std::fs::create_dir_all(&fdir).map_err(|e| Error::io(&fdir, e))?;
            for (i, node) in floor_nodes.iter().enumerate() {
                crate::io::write_weighted_csv(&fdir.join(format!("node-{i}.wcsv")), node)?;
            }
        }
        let mut concat = floor_nodes[0].clone();
        for c in &floor_nodes[1..] {
            concat = concat.concat(c)?;
        }
        let error = evaluator.eval(&concat, &reference)?;
        reports.push(FloorReport {
            floor,
            nodes: floor_nodes.len(),
            rows: concat.len(),
            error,
            wall_time: t0.elapsed().as_secs_f64(),
        });
        if floor_nodes.len() == 1 {
            break;
        }

        // merge adjacent pairs; odd node carried up unmerged
        let pairs: Vec<(usize, &WeightedPointSet, Option<&WeightedPointSet>)> = floor_nodes
            .chunks(2)
            .enumerate()
            .map(|(i, pair)| (i, &pair[0], pair.get(1)))
            .collect();
        let t1 = Instant::now();
        let next: Vec<Result<WeightedPointSet>> = pairs
            .par_iter()
            .map(|(i, a, b)| {
                let merged = match b {
                    Some(b) => a.concat(b)?,
                    None => (*a).clone(),
                };
                if b.is_none() {
                    // carried up untouched
                    return Ok(merged);
                }
                reduce_node(&merged, cfg, floor + 1, *i).map_err(|e| Error::Reducer {
                    floor: floor + 1,
                    node: *i,
                    source: Box::new(e),
                })
            })
            .collect();
        let mut nodes = Vec::with_capacity(next.len());
        for r in next {
            nodes.push(r?);
        }
        if let Some(last) = reports.last_mut() {
            last.wall_time += t1.elapsed().as_secs_f64();
        }
        floor_nodes = nodes;
        floor += 1;
    }

    let top = floor_nodes.pop().expect("loop ends with one node");
    let coreset = Coreset::new(
        top,
        cfg.reducer.source(),
        CoresetParams {
            k: cfg.k,
            j: cfg.k,
            epsilon_or_threshold: cfg.epsilon,
            seed: cfg.seed,
        },
    );
    Ok((coreset, reports))
}

fn reduce_node(
    merged: &WeightedPointSet,
    cfg: &TreeConfig,
    floor: usize,
    index: usize,
) -> Result<WeightedPointSet> {
    let node_seed = stream_id(&[cfg.seed, floor as u64, index as u64]);
    let m = cfg.chunk_size;
    let reduced = match cfg.reducer {
        Reducer::Identity => return Ok(merged.clone()),
        Reducer::Uniform => uniform_coreset(merged, m.min(merged.len()), node_seed)?,
        Reducer::Cnw => crate::cnw::cnw(merged, cfg.k.min(merged.dims()), cfg.epsilon)?,
        Reducer::Composed => {
            let k = cfg.k.min(merged.dims());
            let opt = opt_single_subspace(merged, k)?;
            let coreset = if opt > 0.0 {
                fixed_size_coreset(merged, k, k, cfg.epsilon, opt, node_seed)?
            } else {
                // node input already spans <= k dimensions: it is its own
                // exact coreset; subsample only if the size contract demands
                if merged.len() <= m {
                    return Ok(merged.clone());
                }
                uniform_coreset(merged, m, node_seed)?
            };
            // Rescale to conserve the node's weight mass. A common factor on
            // every weight leaves the coreset's singular subspaces (and so
            // every floor error) untouched, but keeps floor masses
            // telescoping up the tree.
            let out = coreset.points();
            let factor = merged.total_weight() / out.total_weight();
            let rows: Vec<Vec<f64>> = (0..out.len()).map(|i| out.dense_row(i)).collect();
            let weights: Vec<f64> = out.weights().iter().map(|w| w * factor).collect();
            return WeightedPointSet::from_rows_weighted(rows, weights);
        }
    };
    Ok(reduced.points().clone())
}

/// Error of a floor's concatenated rows against the original data under the
/// benchmark metric.
pub fn floor_error(
    floor_rows: &WeightedPointSet,
    original: &WeightedPointSet,
    k: usize,
) -> Result<f64> {
    ErrorEvaluator::new(original, k, ErrorForm::Squared)?.eval(floor_rows, original)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{synth, SynthKind};
    use approx::assert_abs_diff_eq;

    #[test]
    fn chunk_sizes() {
        let set = synth(SynthKind::Isotropic, 10, 3, 0, 0, 0.0, 1).unwrap();
        let chunks = chunk(&set, 4).unwrap();
        let sizes: Vec<usize> = chunks.iter().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![4, 4, 2]);

        let one = chunk(&set, 10).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].len(), 10);
    }

    // 4 624 611 rows in chunks of 141: exact count without materializing.
    #[test]
    fn multimillion_row_chunk_count() {
        assert_eq!(chunk_count(4_624_611, 141), 32_799);
        let n = 4_624_611usize;
        let stream = (0..n).map(|_| (vec![1.0f64], 1.0));
        let mut count = 0usize;
        let mut last = 0usize;
        for c in chunk_stream(stream, 1, 141) {
            count += 1;
            last = c.len();
            assert!(c.len() <= 141);
        }
        assert_eq!(count, 32_799);
        assert_eq!(last, n - 141 * 32_798);
    }

    #[test]
    fn identity_reducer_reproduces_input() {
        let set = synth(SynthKind::Lines, 40, 5, 3, 1, 0.01, 2).unwrap();
        let (set, _) = set.drop_zero_rows();
        let cfg = TreeConfig {
            chunk_size: 64,
            reducer: Reducer::Identity,
            k: 2,
            epsilon: 0.3,
            jl: None,
            seed: 7,
        };
        let chunks = chunk(&set, cfg.chunk_size).unwrap();
        let (top, reports) = merge_reduce(chunks, &cfg, None).unwrap();
        assert_eq!(top.len(), set.len());
        assert_eq!(reports.len(), 1);
        assert!(reports[0].error.abs() < 1e-12);
    }

    #[test]
    fn uniform_reducer_conserves_mass() {
        let set = synth(SynthKind::Lines, 64, 4, 3, 1, 0.01, 3).unwrap();
        let (set, _) = set.drop_zero_rows();
        let cfg = TreeConfig {
            chunk_size: 8,
            reducer: Reducer::Uniform,
            k: 2,
            epsilon: 0.3,
            jl: None,
            seed: 5,
        };
        let chunks = chunk(&set, cfg.chunk_size).unwrap();
        let (top, reports) = merge_reduce(chunks, &cfg, None).unwrap();
        assert_abs_diff_eq!(
            top.mass(),
            set.total_weight(),
            epsilon = 1e-9 * set.total_weight()
        );
        // floors = ceil(log2(8 chunks)) + 1 = 4; node counts halve
        assert_eq!(reports.len(), cfg.floors_for(set.len()));
        assert_eq!(reports.len(), 4);
        let counts: Vec<usize> = reports.iter().map(|r| r.nodes).collect();
        assert_eq!(counts, vec![8, 4, 2, 1]);
        // row counts halve (±1 chunk) per floor ascent
        for w in reports.windows(2) {
            assert!(w[1].rows <= w[0].rows / 2 + cfg.chunk_size);
        }
    }

    #[test]
    fn composed_reducer_conserves_mass_at_every_node() {
        let dir = tempfile::tempdir().unwrap();
        let set = synth(SynthKind::Lines, 96, 8, 5, 1, 0.02, 12).unwrap();
        let (set, _) = set.drop_zero_rows();
        let cfg = TreeConfig {
            chunk_size: 24,
            reducer: Reducer::Composed,
            k: 1,
            epsilon: 0.9,
            jl: None,
            seed: 8,
        };
        let chunks = chunk(&set, cfg.chunk_size).unwrap();
        let (top, _) = merge_reduce(chunks, &cfg, Some(dir.path())).unwrap();
        assert_abs_diff_eq!(
            top.mass(),
            set.total_weight(),
            epsilon = 1e-9 * set.total_weight()
        );
        // every checkpointed floor keeps total mass
        for floor in 0.. {
            let fdir = dir.path().join(format!("floor-{floor}"));
            if !fdir.exists() {
                break;
            }
            let mut mass = 0.0;
            for node in 0.. {
                let f = fdir.join(format!("node-{node}.wcsv"));
                if !f.exists() {
                    break;
                }
                mass += crate::io::load_weighted_csv(&f, false)
                    .unwrap()
                    .total_weight();
            }
            assert_abs_diff_eq!(
                mass,
                set.total_weight(),
                epsilon = 1e-9 * set.total_weight()
            );
        }
    }

    // A 4-chunk tree must match the hand-built two-level composition
    // bit for bit.
    #[test]
    fn four_chunk_tree_matches_manual_composition() {
        let set = synth(SynthKind::Subspaces, 48, 6, 2, 2, 0.05, 9).unwrap();
        let (set, _) = set.drop_zero_rows();
        let m = 12;
        let cfg = TreeConfig {
            chunk_size: m,
            reducer: Reducer::Cnw,
            k: 2,
            epsilon: 0.42,
            jl: None,
            seed: 11,
        };
        let chunks = chunk(&set, m).unwrap();
        assert_eq!(chunks.len(), 4);
        let (top, _) = merge_reduce(chunks.clone(), &cfg, None).unwrap();

        let reduce = |merged: &WeightedPointSet| -> WeightedPointSet {
            crate::cnw::cnw(merged, cfg.k, cfg.epsilon)
                .unwrap()
                .points()
                .clone()
        };
        let left = reduce(&chunks[0].concat(&chunks[1]).unwrap());
        let right = reduce(&chunks[2].concat(&chunks[3]).unwrap());
        let manual = reduce(&left.concat(&right).unwrap());
        assert_eq!(top.points(), &manual);
    }

    #[test]
    fn odd_chunk_carried_up() {
        let set = synth(SynthKind::Isotropic, 50, 4, 0, 0, 0.0, 4).unwrap();
        let cfg = TreeConfig {
            chunk_size: 10,
            reducer: Reducer::Uniform,
            k: 2,
            epsilon: 0.3,
            jl: None,
            seed: 1,
        };
        let chunks = chunk(&set, 10).unwrap();
        assert_eq!(chunks.len(), 5);
        let (_, reports) = merge_reduce(chunks, &cfg, None).unwrap();
        let counts: Vec<usize> = reports.iter().map(|r| r.nodes).collect();
        // 5 -> 3 -> 2 -> 1
        assert_eq!(counts, vec![5, 3, 2, 1]);
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let set = synth(SynthKind::Lines, 120, 6, 4, 1, 0.02, 6).unwrap();
        let (set, _) = set.drop_zero_rows();
        let cfg = TreeConfig {
            chunk_size: 16,
            reducer: Reducer::Uniform,
            k: 2,
            epsilon: 0.3,
            jl: None,
            seed: 1234,
        };
        let run = |threads: usize| -> WeightedPointSet {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let chunks = chunk(&set, cfg.chunk_size).unwrap();
                merge_reduce(chunks, &cfg, None).unwrap().0.points().clone()
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn jl_identity_exact_copy() {
        let set = synth(SynthKind::Isotropic, 10, 6, 0, 0, 0.0, 8).unwrap();
        let cfg = JlConfig {
            target_dim: 6,
            distribution: JlDistribution::Identity,
            orthonormalize: false,
            rng_seed: 3,
        };
        let out = jl_project(&set, &cfg).unwrap();
        assert_eq!(out, set);
    }

    #[test]
    fn jl_default_dims() {
        // ceil(ln 141) = 5
        assert_eq!(JlConfig::default_dim(5, 141), 25);
        assert_eq!(JlConfig::six_k(5), 30);
    }

    #[test]
    fn jl_same_seed_same_matrix_across_chunks() {
        let a = synth(SynthKind::Isotropic, 6, 40, 0, 0, 0.0, 1).unwrap();
        let b = synth(SynthKind::Isotropic, 6, 40, 0, 0, 0.0, 2).unwrap();
        let cfg = JlConfig::gaussian(8, 77);
        let ma = jl_matrix(40, &cfg);
        let pa = jl_project(&a, &cfg).unwrap();
        let pb = jl_project(&b, &cfg).unwrap();
        // project manually with the shared matrix
        for (orig, proj) in [(&a, &pa), (&b, &pb)] {
            for i in 0..orig.len() {
                let row = orig.dense_row(i);
                for c in 0..8 {
                    let want: f64 = (0..40).map(|j| row[j] * ma[(j, c)]).sum();
                    let got = proj.dense_row(i)[c];
                    assert!((want - got).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn floor_error_matches_external_recompute() {
        let set = synth(SynthKind::Subspaces, 60, 8, 2, 2, 0.05, 10).unwrap();
        let (set, _) = set.drop_zero_rows();
        let cfg = TreeConfig {
            chunk_size: 16,
            reducer: Reducer::Uniform,
            k: 2,
            epsilon: 0.3,
            jl: None,
            seed: 21,
        };
        let chunks = chunk(&set, 16).unwrap();
        let (top, reports) = merge_reduce(chunks, &cfg, None).unwrap();
        let recomputed = floor_error(top.points(), &set, 2).unwrap();
        let last = reports.last().unwrap();
        assert!((recomputed - last.error).abs() <= 1e-12 * (1.0 + last.error));
    }

    // Sparse rows stay sparse through chunking and concat; the projection
    // densifies only the projected chunks.
    #[test]
    fn sparse_input_through_projected_tree() {
        use crate::points::Csr;
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(33, &[]);
        let (n, d) = (64usize, 40usize);
        let mut indptr = vec![0usize];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for _ in 0..n {
            for j in 0..d {
                if rng.random_range(0.0..1.0f64) < 0.15 {
                    indices.push(j as u32);
                    values.push(rng.random_range(-2.0..2.0f64));
                }
            }
            if *indptr.last().unwrap() == indices.len() {
                indices.push(rng.random_range(0..d as u32));
                values.push(1.0);
            }
            indptr.push(indices.len());
        }
        let set = WeightedPointSet::from_csr(
            Csr {
                indptr,
                indices,
                values,
                ncols: d,
            },
            vec![1.0; n],
        )
        .unwrap();
        let cfg = TreeConfig {
            chunk_size: 16,
            reducer: Reducer::Uniform,
            k: 2,
            epsilon: 0.3,
            jl: Some(JlConfig::gaussian(10, 5)),
            seed: 9,
        };
        let chunks: Vec<WeightedPointSet> = chunk(&set, cfg.chunk_size)
            .unwrap()
            .iter()
            .map(|c| {
                assert!(c.is_sparse());
                jl_project(c, cfg.jl.as_ref().unwrap()).unwrap()
            })
            .collect();
        let (top, reports) = merge_reduce(chunks, &cfg, None).unwrap();
        assert_eq!(top.points().dims(), 10);
        assert!(reports[0].error.abs() < 1e-9);
        assert_abs_diff_eq!(top.mass(), n as f64, epsilon = 1e-9 * n as f64);
    }

    #[test]
    fn checkpoints_written() {
        let dir = tempfile::tempdir().unwrap();
        let set = synth(SynthKind::Isotropic, 20, 3, 0, 0, 0.0, 13).unwrap();
        let cfg = TreeConfig {
            chunk_size: 5,
            reducer: Reducer::Uniform,
            k: 1,
            epsilon: 0.3,
            jl: None,
            seed: 2,
        };
        let chunks = chunk(&set, 5).unwrap();
        merge_reduce(chunks, &cfg, Some(dir.path())).unwrap();
        assert!(dir.path().join("floor-0/node-0.wcsv").exists());
        assert!(dir.path().join("floor-0/node-3.wcsv").exists());
        assert!(dir.path().join("floor-2/node-0.wcsv").exists());
    }
}
