//! Benchmark harness: synthetic data, the top-`k` projection error metric,
//! deterministic grid runs, CSV records, and plot-data emission.
//!
//! A run is a grid over `(dataset, algorithm, k, coreset size, seed)` cells.
//! Every cell derives its own random stream from the master seed and the
//! cell coordinates, cells execute in a work pool, and records are written
//! through a single ordered sink, so reruns produce identical records no
//! matter how many workers participate. Wall-clock columns are measured
//! medians over `repetitions` builds when `measure_time` is on and written
//! as zeros when it is off (timing is inherently non-reproducible; every
//! other column is byte-stable).

use crate::coreset::{fixed_size_coreset, uniform_coreset, Coreset};
use crate::error::Error;
use crate::io::{load_as, Dataset, FileFormat};
use crate::points::WeightedPointSet;
use crate::rng::{stream_id, stream_rng};
use crate::svd::{top_right_vectors, weighted_frobenius_sq};
use crate::Result;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Sentinel reported when the data has exact rank `<= k` (zero error
/// denominator).
pub const EXACT_RANK_SENTINEL: f64 = f64::INFINITY;

/// Which rendition of the error formula to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorForm {
    /// `|‖A-AV_AV_Aᵀ‖² - ‖A-AV_CV_Cᵀ‖²| / ‖A-AV_AV_Aᵀ‖²`
    Squared,
    /// Same numerator over the unsquared `‖A-AV_AV_Aᵀ‖` denominator.
    UnsquaredDenominator,
}

/// Precomputed data-side quantities of the error metric for one `(data, k)`.
pub struct ErrorEvaluator {
    k: usize,
    /// `Σ w‖p‖²` of the data.
    data_frob_sq: f64,
    /// `‖A - AV_AV_Aᵀ‖²`: the optimal tail.
    tail_sq: f64,
    form: ErrorForm,
}

impl ErrorEvaluator {
    pub fn new(data: &WeightedPointSet, k: usize, form: ErrorForm) -> Result<Self> {
        let (_, tail_sq) = top_right_vectors(data, k)?;
        Ok(ErrorEvaluator {
            k,
            data_frob_sq: weighted_frobenius_sq(data),
            tail_sq,
            form,
        })
    }

    /// Evaluates the metric for a candidate weighted point set `C`:
    /// computes `V_C` from `C`'s weighted matrix and measures how well it
    /// explains the original data.
    pub fn eval(&self, candidate: &WeightedPointSet, data: &WeightedPointSet) -> Result<f64> {
        if self.tail_sq <= self.data_frob_sq * 1e-15 {
            return Ok(EXACT_RANK_SENTINEL);
        }
        let (vc, _) = top_right_vectors(candidate, self.k.min(candidate.dims()))?;
        // ‖A - A V_C V_Cᵀ‖² = Σ w‖p‖² - Σ w‖V_Cᵀp‖²
        let mut captured = 0.0;
        for i in 0..data.len() {
            let row = data.row(i);
            let mut cap = 0.0;
            for c in 0..vc.ncols() {
                let col = vc.column(c);
                let t = match row {
                    crate::points::RowRef::Dense(v) => {
                        v.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>()
                    }
                    crate::points::RowRef::Sparse { indices, values } => indices
                        .iter()
                        .zip(values.iter())
                        .map(|(&j, &v)| v * col[j as usize])
                        .sum::<f64>(),
                };
                cap += t * t;
            }
            captured += data.weight(i) * cap;
        }
        let cost_c = (self.data_frob_sq - captured).max(0.0);
        let num = (cost_c - self.tail_sq).abs();
        Ok(match self.form {
            ErrorForm::Squared => num / self.tail_sq,
            ErrorForm::UnsquaredDenominator => num / self.tail_sq.sqrt(),
        })
    }
}

/// Top-`k` projection error of a coreset against the original data.
pub fn svd_error(data: &WeightedPointSet, coreset: &Coreset, k: usize) -> Result<f64> {
    svd_error_form(data, coreset.points(), k, ErrorForm::Squared)
}

/// [`svd_error`] over an arbitrary candidate set and error form.
pub fn svd_error_form(
    data: &WeightedPointSet,
    candidate: &WeightedPointSet,
    k: usize,
    form: ErrorForm,
) -> Result<f64> {
    ErrorEvaluator::new(data, k, form)?.eval(candidate, data)
}

/// Synthetic dataset kinds.
///
/// Generative models (all seeded):
/// - `lines`: `k` unit directions `u_c`; point `i` belongs to cluster
///   `c = i mod k` and equals `s·u_c + noise·g` with `s ~ N(0, amp_c²)`,
///   `amp_c = exp(N(0,1))`, `g` standard normal;
/// - `subspaces`: as `lines` with `j`-dimensional orthonormal bases and
///   coefficient vectors `N(0, amp_c²·I_j)`;
/// - `isotropic`: pure standard normal rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Lines,
    Subspaces,
    Isotropic,
}

impl SynthKind {
    pub fn parse(s: &str) -> Result<SynthKind> {
        match s {
            "lines" => Ok(SynthKind::Lines),
            "subspaces" => Ok(SynthKind::Subspaces),
            "isotropic" => Ok(SynthKind::Isotropic),
            other => Err(Error::InvalidParam(format!("unknown synth kind '{other}'"))),
        }
    }
}

/// Generates a synthetic dataset; see [`SynthKind`] for the models.
pub fn synth(
    kind: SynthKind,
    n: usize,
    d: usize,
    k: usize,
    j: usize,
    noise: f64,
    rng_seed: u64,
) -> Result<WeightedPointSet> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParam(format!("empty shape {n} x {d}")));
    }
    if matches!(kind, SynthKind::Lines | SynthKind::Subspaces) && k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    if matches!(kind, SynthKind::Subspaces) && (j == 0 || j > d) {
        return Err(Error::InvalidParam(format!("j={j} out of range")));
    }
    let mut rng = stream_rng(rng_seed, &[0x5d17]);
    let normal = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        // Box-Muller from two uniform draws
        let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut rows = Vec::with_capacity(n);
    match kind {
        SynthKind::Isotropic => {
            for _ in 0..n {
                rows.push((0..d).map(|_| normal(&mut rng)).collect::<Vec<f64>>());
            }
        }
        SynthKind::Lines => {
            let dirs: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
                    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.into_iter().map(|x| x / nv).collect()
                })
                .collect();
            let amps: Vec<f64> = (0..k).map(|_| normal(&mut rng).exp()).collect();
            for i in 0..n {
                let c = i % k;
                let s = amps[c] * normal(&mut rng);
                let row: Vec<f64> = (0..d)
                    .map(|t| s * dirs[c][t] + noise * normal(&mut rng))
                    .collect();
                rows.push(row);
            }
        }
        SynthKind::Subspaces => {
            let bases: Vec<DMatrix<f64>> = (0..k)
                .map(|_| {
                    let g = DMatrix::from_fn(d, j, |_, _| normal(&mut rng));
                    g.qr().q().columns(0, j).into_owned()
                })
                .collect();
            let amps: Vec<f64> = (0..k).map(|_| normal(&mut rng).exp()).collect();
            for i in 0..n {
                let c = i % k;
                let coef: Vec<f64> = (0..j).map(|_| amps[c] * normal(&mut rng)).collect();
                let row: Vec<f64> = (0..d)
                    .map(|t| {
                        let mut x = 0.0;
                        for (jj, &cf) in coef.iter().enumerate() {
                            x += bases[c][(t, jj)] * cf;
                        }
                        x + noise * normal(&mut rng)
                    })
                    .collect();
                rows.push(row);
            }
        }
    }
    WeightedPointSet::from_rows(rows)
}

/// How a benchmark dataset is obtained.
#[derive(Debug, Clone)]
pub enum DatasetSpec {
    File {
        name: String,
        path: PathBuf,
        format: Option<FileFormat>,
        header: bool,
    },
    Synth {
        name: String,
        kind: SynthKind,
        n: usize,
        d: usize,
        k: usize,
        j: usize,
        noise: f64,
        seed: u64,
    },
}

impl DatasetSpec {
    fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSpec::File {
                name,
                path,
                format,
                header,
            } => {
                let fmt = format.unwrap_or_else(|| FileFormat::infer(path));
                let mut ds = load_as(path, fmt, *header)?;
                ds.name = name.clone();
                Ok(ds)
            }
            DatasetSpec::Synth {
                name,
                kind,
                n,
                d,
                k,
                j,
                noise,
                seed,
            } => {
                let points = synth(*kind, *n, *d, *k, *j, *noise, *seed)?;
                let (points, dropped) = points.drop_zero_rows();
                Ok(Dataset {
                    name: name.clone(),
                    points,
                    provenance: PathBuf::from(format!("synth:{name}")),
                    format: FileFormat::DenseCsv,
                    dropped_zero_rows: dropped,
                })
            }
        }
    }
}

/// Algorithms the harness compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Uniform,
    Cnw,
    Composed,
}

impl Algo {
    pub fn parse(s: &str) -> Result<Algo> {
        match s {
            "uniform" => Ok(Algo::Uniform),
            "cnw" => Ok(Algo::Cnw),
            "composed" => Ok(Algo::Composed),
            other => Err(Error::InvalidParam(format!("unknown algorithm '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algo::Uniform => "uniform",
            Algo::Cnw => "cnw",
            Algo::Composed => "composed",
        }
    }
}

/// Full benchmark configuration; see [`BenchConfig::parse`] for the file
/// schema.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub datasets: Vec<DatasetSpec>,
    pub algos: Vec<Algo>,
    pub ks: Vec<usize>,
    pub sizes: Vec<usize>,
    pub num_seeds: usize,
    /// Seed count override for the deterministic spectral algorithm (its
    /// records repeat bit-for-bit across seeds, so one is enough).
    pub cnw_num_seeds: Option<usize>,
    pub repetitions: usize,
    pub master_seed: u64,
    pub measure_time: bool,
    pub error_form: ErrorForm,
    pub out: PathBuf,
}

impl BenchConfig {
    /// Parses the flat key-value config format:
    ///
    /// ```text
    /// # comment
    /// out = results
    /// master_seed = 42
    /// algos = uniform,cnw,composed
    /// ks = 5,10
    /// sizes = 100,200,400,800
    /// num_seeds = 10
    /// cnw_num_seeds = 1
    /// repetitions = 3
    /// measure_time = true
    /// error_form = squared
    /// dataset.<name>.path = data/points.wcsv
    /// dataset.<name>.format = weighted-csv   # optional, inferred otherwise
    /// dataset.<name>.header = false          # optional
    /// dataset.<name>.synth = lines           # alternative to path
    /// dataset.<name>.n = 1000
    /// dataset.<name>.d = 128
    /// dataset.<name>.k = 20
    /// dataset.<name>.j = 2
    /// dataset.<name>.noise = 0.001
    /// dataset.<name>.seed = 7
    /// ```
    pub fn parse(text: &str, base_dir: &Path) -> Result<BenchConfig> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(
                    "<config>",
                    idx + 1,
                    format!("expected 'key = value': '{line}'"),
                )
            })?;
            kv.insert(key.trim().to_string(), value.trim().to_string());
        }
        let get = |key: &str| kv.get(key).map(|s| s.as_str());
        let parse_list_usize = |key: &str, default: &[usize]| -> Result<Vec<usize>> {
            match get(key) {
                None => Ok(default.to_vec()),
                Some(s) => s
                    .split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::InvalidParam(format!("bad {key} entry '{x}'")))
                    })
                    .collect(),
            }
        };

        let algos: Vec<Algo> = match get("algos") {
            None => vec![Algo::Uniform, Algo::Cnw, Algo::Composed],
            Some(s) => s
                .split(',')
                .map(|x| Algo::parse(x.trim()))
                .collect::<Result<_>>()?,
        };
        let error_form = match get("error_form") {
            None | Some("squared") => ErrorForm::Squared,
            Some("unsquared") => ErrorForm::UnsquaredDenominator,
            Some(other) => {
                return Err(Error::InvalidParam(format!("unknown error_form '{other}'")))
            }
        };

        // dataset.<name>.<field> groups
        let mut names: Vec<String> = Vec::new();
        for key in kv.keys() {
            if let Some(rest) = key.strip_prefix("dataset.") {
                if let Some((name, _)) = rest.split_once('.') {
                    if !names.iter().any(|n| n == name) {
                        names.push(name.to_string());
                    }
                }
            }
        }
        if names.is_empty() {
            return Err(Error::InvalidParam("config defines no datasets".into()));
        }
        let mut datasets = Vec::new();
        for name in names {
            let field = |f: &str| kv.get(&format!("dataset.{name}.{f}")).cloned();
            if let Some(kind) = field("synth") {
                let num = |f: &str, default: usize| -> Result<usize> {
                    field(f)
                        .map(|v| {
                            v.parse::<usize>().map_err(|_| {
                                Error::InvalidParam(format!("bad dataset.{name}.{f}='{v}'"))
                            })
                        })
                        .unwrap_or(Ok(default))
                };
                datasets.push(DatasetSpec::Synth {
                    name: name.clone(),
                    kind: SynthKind::parse(&kind)?,
                    n: num("n", 1000)?,
                    d: num("d", 32)?,
                    k: num("k", 5)?,
                    j: num("j", 1)?,
                    noise: field("noise")
                        .map(|v| {
                            v.parse::<f64>().map_err(|_| {
                                Error::InvalidParam(format!("bad dataset.{name}.noise='{v}'"))
                            })
                        })
                        .unwrap_or(Ok(0.0))?,
                    seed: num("seed", 0)? as u64,
                });
            } else {
                let path = field("path").ok_or_else(|| {
                    Error::InvalidParam(format!("dataset.{name} needs a path or synth kind"))
                })?;
                let mut pb = PathBuf::from(&path);
                if pb.is_relative() {
                    pb = base_dir.join(pb);
                }
                datasets.push(DatasetSpec::File {
                    name: name.clone(),
                    path: pb,
                    format: field("format").map(|f| FileFormat::parse(&f)).transpose()?,
                    header: field("header").map(|h| h == "true").unwrap_or(false),
                });
            }
        }

        Ok(BenchConfig {
            datasets,
            algos,
            ks: parse_list_usize("ks", &[5, 10])?,
            sizes: parse_list_usize("sizes", &[100, 200, 400, 800])?,
            num_seeds: parse_list_usize("num_seeds", &[10])?[0],
            cnw_num_seeds: get("cnw_num_seeds")
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| Error::InvalidParam(format!("bad cnw_num_seeds '{s}'")))
                })
                .transpose()?,
            repetitions: parse_list_usize("repetitions", &[3])?[0].max(1),
            master_seed: get("master_seed")
                .map(|s| {
                    s.parse::<u64>()
                        .map_err(|_| Error::InvalidParam(format!("bad master_seed '{s}'")))
                })
                .unwrap_or(Ok(0))?,
            measure_time: get("measure_time").map(|s| s == "true").unwrap_or(true),
            error_form,
            out: PathBuf::from(get("out").unwrap_or("bench-out")),
        })
    }
}

/// One `(algorithm, dataset, k, size, seed)` measurement.
#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub algorithm: &'static str,
    pub dataset: String,
    pub k: usize,
    /// Requested coreset size (the grid coordinate).
    pub coreset_size: usize,
    /// Rows actually stored (the spectral constructions may return fewer).
    pub rows: usize,
    /// `NaN` marks a failed cell; `inf` marks the exact-rank sentinel.
    pub error: f64,
    pub build_time: f64,
    pub eval_time: f64,
    pub seed: u64,
}

struct Cell {
    dataset_idx: usize,
    algo: Algo,
    k: usize,
    size: usize,
    seed_idx: usize,
}

fn build_coreset(
    algo: Algo,
    points: &WeightedPointSet,
    k: usize,
    size: usize,
    seed: u64,
) -> Result<Coreset> {
    match algo {
        Algo::Uniform => uniform_coreset(points, size.min(points.len()), seed),
        Algo::Cnw => {
            let eps = (k as f64 / size as f64).sqrt().min(0.499);
            crate::cnw::cnw(points, k, eps)
        }
        Algo::Composed => {
            let eps = (4.0 * k as f64 / size as f64).sqrt().min(1.0);
            let opt = crate::svd::opt_single_subspace(points, k)?;
            if !opt.is_finite() || opt <= 0.0 {
                return Err(Error::InvalidParam(
                    "exact low-rank data: composed needs a positive optimum estimate".into(),
                ));
            }
            fixed_size_coreset(points, k, k, eps, opt, seed)
        }
    }
}

/// Runs the full grid and returns the records in deterministic order.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let datasets: Vec<Dataset> = cfg
        .datasets
        .iter()
        .map(|spec| spec.load())
        .collect::<Result<_>>()?;
    log::info!(
        "benchmark: {} datasets, {} algos, ks {:?}, sizes {:?}, {} seeds",
        datasets.len(),
        cfg.algos.len(),
        cfg.ks,
        cfg.sizes,
        cfg.num_seeds
    );

    let mut cells = Vec::new();
    for (dataset_idx, _) in datasets.iter().enumerate() {
        for &algo in &cfg.algos {
            let seeds = match algo {
                Algo::Cnw => cfg.cnw_num_seeds.unwrap_or(cfg.num_seeds),
                _ => cfg.num_seeds,
            };
            for &k in &cfg.ks {
                for &size in &cfg.sizes {
                    for seed_idx in 0..seeds {
                        cells.push(Cell {
                            dataset_idx,
                            algo,
                            k,
                            size,
                            seed_idx,
                        });
                    }
                }
            }
        }
    }

    // Pre-build evaluators once per (dataset, k).
    let mut evals: BTreeMap<(usize, usize), ErrorEvaluator> = BTreeMap::new();
    for (di, ds) in datasets.iter().enumerate() {
        for &k in &cfg.ks {
            evals.insert((di, k), ErrorEvaluator::new(&ds.points, k, cfg.error_form)?);
        }
    }

    let records: Vec<BenchRecord> = cells
        .par_iter()
        .map(|cell| run_cell(cfg, &datasets, &evals, cell))
        .collect();
    Ok(records)
}

fn run_cell(
    cfg: &BenchConfig,
    datasets: &[Dataset],
    evals: &BTreeMap<(usize, usize), ErrorEvaluator>,
    cell: &Cell,
) -> BenchRecord {
    let ds = &datasets[cell.dataset_idx];
    let cell_seed = stream_id(&[
        cfg.master_seed,
        cell.dataset_idx as u64,
        cell.algo as u64,
        cell.k as u64,
        cell.size as u64,
        cell.seed_idx as u64,
    ]);
    let mut record = BenchRecord {
        algorithm: cell.algo.name(),
        dataset: ds.name.clone(),
        k: cell.k,
        coreset_size: cell.size,
        rows: 0,
        error: f64::NAN,
        build_time: 0.0,
        eval_time: 0.0,
        seed: cell_seed,
    };
    let reps = if cfg.measure_time { cfg.repetitions } else { 1 };
    let mut built: Option<Coreset> = None;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t0 = Instant::now();
        match build_coreset(cell.algo, &ds.points, cell.k, cell.size, cell_seed) {
            Ok(c) => {
                times.push(t0.elapsed().as_secs_f64());
                built = Some(c);
            }
            Err(e) => {
                log::warn!(
                    "cell failed: {} {} k={} size={} seed={}: {e}",
                    cell.algo.name(),
                    ds.name,
                    cell.k,
                    cell.size,
                    cell_seed
                );
                return record;
            }
        }
    }
    let coreset = built.expect("at least one repetition ran");
    record.rows = coreset.len();
    if cfg.measure_time {
        times.sort_by(f64::total_cmp);
        record.build_time = times[times.len() / 2];
    }
    let t0 = Instant::now();
    match evals[&(cell.dataset_idx, cell.k)].eval(coreset.points(), &ds.points) {
        Ok(err) => {
            record.error = err;
            if cfg.measure_time {
                record.eval_time = t0.elapsed().as_secs_f64();
            }
        }
        Err(e) => log::warn!("eval failed: {e}"),
    }
    record
}

/// Serializes records in the fixed column order with RFC-4180 quoting.
pub fn records_to_csv(records: &[BenchRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "algorithm",
        "dataset",
        "k",
        "coreset_size",
        "rows",
        "error",
        "build_time",
        "eval_time",
        "seed",
    ])
    .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.algorithm.to_string(),
            r.dataset.clone(),
            r.k.to_string(),
            r.coreset_size.to_string(),
            r.rows.to_string(),
            format_float(r.error),
            format!("{:.6}", r.build_time),
            format!("{:.6}", r.eval_time),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidParam(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidParam(e.to_string()))
}

fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidParam(format!("csv: {e}"))
}

/// Writes `records.csv`, per-panel plot data, and a plotting script under
/// `cfg.out`.
pub fn write_outputs(cfg: &BenchConfig, records: &[BenchRecord]) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let records_path = cfg.out.join("records.csv");
    std::fs::write(&records_path, records_to_csv(records)?)
        .map_err(|e| Error::io(&records_path, e))?;

    let plots = cfg.out.join("plots");
    std::fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    // panel key: (dataset, k, algorithm, "error"|"time") -> size -> samples
    type Panels = BTreeMap<(String, usize, &'static str, &'static str), BTreeMap<usize, Vec<f64>>>;
    let mut panels: Panels = BTreeMap::new();
    for r in records {
        if r.error.is_nan() {
            continue;
        }
        panels
            .entry((r.dataset.clone(), r.k, r.algorithm, "error"))
            .or_default()
            .entry(r.coreset_size)
            .or_default()
            .push(r.error);
        panels
            .entry((r.dataset.clone(), r.k, r.algorithm, "time"))
            .or_default()
            .entry(r.coreset_size)
            .or_default()
            .push(r.build_time);
    }
    for ((dataset, k, algo, what), by_size) in &panels {
        let mut text = format!("size,{what}\n");
        for (size, vals) in by_size {
            let mut vs = vals.clone();
            vs.sort_by(f64::total_cmp);
            let med = vs[vs.len() / 2];
            let _ = writeln!(text, "{size},{med}");
        }
        let path = plots.join(format!("{dataset}_k{k}_{what}_{algo}.csv"));
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }

    let script = cfg.out.join("plot.py");
    std::fs::write(&script, PLOT_SCRIPT).map_err(|e| Error::io(&script, e))?;
    Ok(records_path)
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Renders the panel CSVs under plots/ into PNG figures."""
import csv
import glob
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
panels = defaultdict(dict)
for path in glob.glob(os.path.join(here, "plots", "*.csv")):
    stem = os.path.basename(path)[:-4]
    dataset, rest = stem.split("_k", 1)
    k, what, algo = rest.split("_", 2)
    xs, ys = [], []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            xs.append(int(row["size"]))
            ys.append(float(row[what]))
    panels[(dataset, k, what)][algo] = (xs, ys)

for (dataset, k, what), algos in sorted(panels.items()):
    fig, ax = plt.subplots(figsize=(5, 4))
    for algo, (xs, ys) in sorted(algos.items()):
        ax.plot(xs, ys, marker="o", label=algo)
    ax.set_xlabel("coreset size")
    ax.set_ylabel("median " + what)
    ax.set_title(f"{dataset}, k={k}")
    if what == "error":
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    out = os.path.join(here, f"{dataset}_k{k}_{what}.png")
    fig.savefig(out, dpi=120)
    print("wrote", out)
"#;
