//! Benchmark and coreset command line.

use clap::{Parser, Subcommand, ValueEnum};
use spancore::bench::{
    run_benchmark, svd_error_form, synth, write_outputs, BenchConfig, ErrorForm, SynthKind,
};
use spancore::coreset::{fixed_size_coreset, uniform_coreset};
use spancore::io::{self, FileFormat};
use spancore::streaming::{
    chunk, jl_project, merge_reduce, JlConfig, JlDistribution, Reducer, TreeConfig,
};
use spancore::svd::opt_single_subspace;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spancore",
    version,
    about = "Coreset construction and benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Uniform,
    Cnw,
    Composed,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Lines,
    Subspaces,
    Isotropic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReducerArg {
    Identity,
    Uniform,
    Cnw,
    Composed,
}

#[derive(Clone, Copy, ValueEnum)]
enum JlDistArg {
    Gaussian,
    Rademacher,
}

#[derive(Clone, Copy, ValueEnum)]
enum ErrorFormArg {
    Squared,
    Unsquared,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark grid from a config file and write CSV records.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format (only csv).
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Build one coreset and write it as weighted CSV.
    Coreset {
        #[arg(long)]
        input: PathBuf,
        /// Input format; inferred from the extension when omitted.
        #[arg(long)]
        input_format: Option<String>,
        /// Skip one header line in CSV inputs.
        #[arg(long, default_value_t = false)]
        header: bool,
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Subspace dimension used for the composed pilot estimate.
        #[arg(long)]
        j: Option<usize>,
        /// Target coreset size; epsilon is derived unless given explicitly.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a merge-reduce tree, with per-node checkpoints and floor reports.
    Tree {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        input_format: Option<String>,
        #[arg(long, default_value_t = false)]
        header: bool,
        #[arg(long)]
        chunk_size: usize,
        #[arg(long, value_enum)]
        reducer: ReducerArg,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0.3)]
        epsilon: f64,
        /// Project chunks to this dimension before the tree ("auto" picks
        /// k·ceil(ln m), "off" disables projection).
        #[arg(long, default_value = "off")]
        jl: String,
        #[arg(long, value_enum, default_value = "gaussian")]
        jl_dist: JlDistArg,
        /// Skip column orthonormalization of the projection matrix.
        #[arg(long, default_value_t = false)]
        jl_raw: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic dataset as dense CSV.
    Synth {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        j: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a stored coreset against a dataset.
    Eval {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        input_format: Option<String>,
        #[arg(long, default_value_t = false)]
        header: bool,
        /// Coreset file (weighted CSV).
        #[arg(long)]
        coreset: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, value_enum, default_value = "squared")]
        error_form: ErrorFormArg,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_input(
    path: &std::path::Path,
    fmt: &Option<String>,
    header: bool,
) -> spancore::Result<spancore::io::Dataset> {
    let format = match fmt {
        Some(f) => FileFormat::parse(f)?,
        None => FileFormat::infer(path),
    };
    io::load_as(path, format, header)
}

fn run(cli: Cli) -> spancore::Result<()> {
    match cli.command {
        Command::Bench {
            config,
            seed,
            out,
            format: FormatArg::Csv,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| spancore::Error::Io {
                path: config.clone(),
                source: e,
            })?;
            let base = config.parent().unwrap_or(std::path::Path::new("."));
            let mut cfg = BenchConfig::parse(&text, base)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            let records = run_benchmark(&cfg)?;
            let path = write_outputs(&cfg, &records)?;
            let failed = records.iter().filter(|r| r.error.is_nan()).count();
            println!(
                "wrote {} records to {} ({failed} failed cells)",
                records.len(),
                path.display()
            );
            Ok(())
        }
        Command::Coreset {
            input,
            input_format,
            header,
            algo,
            k,
            j,
            size,
            epsilon,
            seed,
            out,
        } => {
            let ds = load_input(&input, &input_format, header)?;
            let points = &ds.points;
            let coreset = match algo {
                AlgoArg::Uniform => {
                    let m = size.ok_or_else(|| {
                        spancore::Error::InvalidParam("uniform needs --size".into())
                    })?;
                    uniform_coreset(points, m, seed)?
                }
                AlgoArg::Cnw => {
                    let eps = resolve_eps(epsilon, size, k, 1.0)?;
                    spancore::cnw::cnw(points, k, eps)?
                }
                AlgoArg::Composed => {
                    let eps = resolve_eps(epsilon, size, k, 4.0)?;
                    let j = j.unwrap_or(k);
                    let opt = opt_single_subspace(points, j)?;
                    if !opt.is_finite() || opt <= 0.0 {
                        return Err(spancore::Error::InvalidParam(
                            "input has exact rank <= j; the composed construction needs a \
                             positive optimum estimate"
                                .into(),
                        ));
                    }
                    fixed_size_coreset(points, k, j, eps, opt, seed)?
                }
            };
            std::fs::create_dir_all(&out).map_err(|e| spancore::Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let file = out.join("coreset.wcsv");
            io::write_weighted_csv(&file, coreset.points())?;
            println!(
                "{} rows (mass {:.6}) -> {}",
                coreset.len(),
                coreset.mass(),
                file.display()
            );
            Ok(())
        }
        Command::Tree {
            input,
            input_format,
            header,
            chunk_size,
            reducer,
            k,
            epsilon,
            jl,
            jl_dist,
            jl_raw,
            seed,
            out,
        } => {
            let ds = load_input(&input, &input_format, header)?;
            let reducer = match reducer {
                ReducerArg::Identity => Reducer::Identity,
                ReducerArg::Uniform => Reducer::Uniform,
                ReducerArg::Cnw => Reducer::Cnw,
                ReducerArg::Composed => Reducer::Composed,
            };
            let jl_cfg = match jl.as_str() {
                "off" => None,
                spec => {
                    let target_dim = if spec == "auto" {
                        JlConfig::default_dim(k, chunk_size).min(ds.points.dims())
                    } else {
                        spec.parse::<usize>().map_err(|_| {
                            spancore::Error::InvalidParam(format!("bad --jl value '{spec}'"))
                        })?
                    };
                    Some(JlConfig {
                        target_dim,
                        distribution: match jl_dist {
                            JlDistArg::Gaussian => JlDistribution::Gaussian,
                            JlDistArg::Rademacher => JlDistribution::Rademacher,
                        },
                        orthonormalize: !jl_raw,
                        rng_seed: seed,
                    })
                }
            };
            let cfg = TreeConfig {
                chunk_size,
                reducer,
                k,
                epsilon,
                jl: jl_cfg,
                seed,
            };
            let mut chunks = chunk(&ds.points, chunk_size)?;
            if let Some(jl_cfg) = &cfg.jl {
                chunks = chunks
                    .iter()
                    .map(|c| jl_project(c, jl_cfg))
                    .collect::<spancore::Result<_>>()?;
            }
            std::fs::create_dir_all(&out).map_err(|e| spancore::Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let (top, reports) = merge_reduce(chunks, &cfg, Some(&out))?;
            io::write_weighted_csv(&out.join("top.wcsv"), top.points())?;
            let mut floors = String::from("floor,nodes,rows,error,wall_time\n");
            for r in &reports {
                floors.push_str(&format!(
                    "{},{},{},{},{:.6}\n",
                    r.floor, r.nodes, r.rows, r.error, r.wall_time
                ));
            }
            let fpath = out.join("floors.csv");
            std::fs::write(&fpath, floors).map_err(|e| spancore::Error::Io {
                path: fpath.clone(),
                source: e,
            })?;
            println!(
                "top coreset: {} rows; {} floors -> {}",
                top.len(),
                reports.len(),
                out.display()
            );
            Ok(())
        }
        Command::Synth {
            kind,
            n,
            d,
            k,
            j,
            noise,
            seed,
            out,
        } => {
            let kind = match kind {
                KindArg::Lines => SynthKind::Lines,
                KindArg::Subspaces => SynthKind::Subspaces,
                KindArg::Isotropic => SynthKind::Isotropic,
            };
            let points = synth(kind, n, d, k, j, noise, seed)?;
            io::write_dense_csv(&out, &points)?;
            println!(
                "wrote {} x {} -> {}",
                points.len(),
                points.dims(),
                out.display()
            );
            Ok(())
        }
        Command::Eval {
            input,
            input_format,
            header,
            coreset,
            k,
            error_form,
        } => {
            let ds = load_input(&input, &input_format, header)?;
            let cs = io::load_weighted_csv(&coreset, false)?;
            let form = match error_form {
                ErrorFormArg::Squared => ErrorForm::Squared,
                ErrorFormArg::Unsquared => ErrorForm::UnsquaredDenominator,
            };
            let err = svd_error_form(&ds.points, &cs, k, form)?;
            println!("{err}");
            Ok(())
        }
    }
}

/// Derives epsilon from a target size: `sqrt(factor·k/size)` capped at the
/// construction's admissible maximum.
fn resolve_eps(
    epsilon: Option<f64>,
    size: Option<usize>,
    k: usize,
    factor: f64,
) -> spancore::Result<f64> {
    let cap = if factor > 1.0 { 1.0 } else { 0.499 };
    match (epsilon, size) {
        (Some(e), _) => Ok(e),
        (None, Some(m)) => Ok((factor * k as f64 / m as f64).sqrt().min(cap)),
        (None, None) => Err(spancore::Error::InvalidParam(
            "need --size or --epsilon".into(),
        )),
    }
}
