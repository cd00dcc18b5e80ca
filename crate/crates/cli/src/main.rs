//! Command-line front end for `fnnpe`.
//!
//! Every command prints (or writes with `--out`) a JSON report that echoes the
//! arguments it was run with. Errors go to stderr as JSON with a nonzero exit code.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fnnpe::io::{self, BenchConfig, Format, ReportDocument};
use fnnpe::metric::{doubling_constant_exact, doubling_constant_greedy};
use fnnpe::synthetic::{gaussian_cloud, noisy_plane};
use fnnpe::verification::{self, CalibrationConfig, UnitVectorSource};
use fnnpe::{select_params, Constants, DataSet, EmbedParams, Error, FjltTransform, LinearEmbedding, Result, RngSeed};

#[derive(Parser, Serialize)]
#[command(name = "fnnpe", version, about = "Fast nearest-neighbor-preserving embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Print the embedding parameters s, q and k.
    Params {
        #[arg(long)]
        n: usize,
        /// Input dimension; must be a power of two.
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        embed: EmbedArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Estimate the doubling constant of a dataset.
    Doubling {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value_t = Method::Greedy)]
        method: Method,
        /// Radii probed per center (greedy).
        #[arg(long, default_value_t = 32)]
        radii: usize,
        /// Centers probed; 0 means all points (greedy).
        #[arg(long, default_value_t = 32)]
        centers: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Embed a dataset and save the sampled transform.
    Embed {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        embed: EmbedArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the embedded points.
        #[arg(long)]
        output: PathBuf,
        /// Format of the embedded points; inferred from the extension by default.
        #[arg(long)]
        output_format: Option<Format>,
        /// Where to write the transform; defaults to `<output>.transform.json`.
        #[arg(long)]
        transform: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run one Monte-Carlo verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        embed: EmbedArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials, or sampled transforms for `nn`.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Overrides the computed target dimension.
        #[arg(long)]
        k: Option<usize>,
        /// Target dimensions for a distortion sweep.
        #[arg(long, value_delimiter = ',')]
        ks: Vec<usize>,
        /// Unit vectors for `zi`.
        #[arg(long, value_enum, default_value_t = Source::Smooth)]
        source: Source,
        /// Variances of the smaller Gaussian vector (`gaussian-appendix`).
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        x_vars: Vec<f64>,
        /// Variances of the larger Gaussian vector (`gaussian-appendix`).
        #[arg(long, value_delimiter = ',', default_value = "0.5,3,2.5")]
        y_vars: Vec<f64>,
        /// Threshold `t` for the dominance check.
        #[arg(long, default_value_t = 3.0)]
        t: f64,
        /// Coefficients for the 2-stability check.
        #[arg(long, value_delimiter = ',', default_value = "3,4")]
        u: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Time FJLT against a dense Gaussian projection; writes CSV to --out.
    Bench {
        /// Comma-separated `NxD` cells.
        #[arg(long, value_delimiter = ',', default_value = "4096x16384")]
        grid: Vec<String>,
        #[command(flatten)]
        embed: EmbedArgs,
        #[arg(long, default_value_t = 16.0)]
        bench_lambda: f64,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 256)]
        pool: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the full report as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sweep the unspecified constants over the synthetic calibration suite.
    Calibrate {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, value_delimiter = ',')]
        c_sparsity_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        c_dim_grid: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Serialize)]
struct EmbedArgs {
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Doubling constant; estimated greedily from the data when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = Constants::DEFAULT_C_DIM)]
    c_dim: f64,
    #[arg(long, default_value_t = Constants::DEFAULT_C_SPARSITY)]
    c_sparsity: f64,
    #[arg(long, default_value_t = Constants::DEFAULT_C_SMOOTH)]
    c_smooth: f64,
}

impl EmbedArgs {
    fn constants(&self) -> Constants {
        Constants {
            c_smooth: self.c_smooth,
            c_sparsity: self.c_sparsity,
            c_dim: self.c_dim,
        }
    }

    fn params(&self, n: usize, d: usize, data: Option<&DataSet>) -> Result<EmbedParams> {
        let lambda = match (self.lambda, data) {
            (Some(l), _) => l,
            (None, Some(data)) => doubling_constant_greedy(data, 32, 32).lambda as f64,
            (None, None) => return Err(Error::Precondition("--lambda is required without a dataset".into())),
        };
        select_params(n, d, self.eps, self.delta, lambda, self.constants())
    }
}

#[derive(Args, Serialize)]
struct DataArgs {
    /// Dataset file; a synthetic set is generated when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Dataset format; inferred from the extension by default.
    #[arg(long)]
    format: Option<Format>,
    #[arg(long, value_enum, default_value_t = Synthetic::Cloud)]
    synthetic: Synthetic,
    /// Synthetic point count.
    #[arg(long, default_value_t = 64)]
    points: usize,
    /// Synthetic dimension.
    #[arg(long, default_value_t = 256)]
    dim: usize,
    /// Noise level of the synthetic plane.
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
}

impl DataArgs {
    fn load(&self) -> Result<DataSet> {
        match &self.input {
            Some(path) => io::load_dataset(path, self.format.unwrap_or_else(|| Format::from_path(path))),
            None => match self.synthetic {
                Synthetic::Cloud => gaussian_cloud(self.points, self.dim, RngSeed(self.data_seed)),
                Synthetic::Plane => noisy_plane(self.points, self.dim, self.noise, RngSeed(self.data_seed)),
            },
        }
    }
}

#[derive(Args, Serialize)]
struct OutArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add a generation timestamp to the report.
    #[arg(long)]
    timestamp: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Synthetic {
    Cloud,
    Plane,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Source {
    Smooth,
    Spike,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    Smoothness,
    Zi,
    Distortion,
    Shrinkage,
    Nn,
    GaussianAppendix,
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Params { .. } => "params",
        Command::Doubling { .. } => "doubling",
        Command::Embed { .. } => "embed",
        Command::Verify { .. } => "verify",
        Command::Bench { .. } => "bench",
        Command::Calibrate { .. } => "calibrate",
    }
}

fn emit(cli: &Cli, out: &OutArgs, payload: &impl Serialize) -> Result<()> {
    let mut doc = ReportDocument::new(command_name(&cli.command), &cli.command, payload)?;
    if out.timestamp {
        doc = doc.stamped();
    }
    let text = doc.to_json()? + "\n";
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_cell(cell: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse {
        location: format!("--grid {cell:?}"),
        message: "expected NxD, e.g. 4096x16384".into(),
    };
    let (n, d) = cell.split_once('x').ok_or_else(bad)?;
    Ok((n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?))
}

fn default_transform_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".transform.json");
    PathBuf::from(name)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Params { n, d, embed, out } => emit(cli, out, &embed.params(*n, *d, None)?),
        Command::Doubling {
            data,
            method,
            radii,
            centers,
            out,
        } => {
            let ds = data.load()?;
            let est = match method {
                Method::Exact => doubling_constant_exact(&ds)?,
                Method::Greedy => doubling_constant_greedy(&ds, *radii, *centers),
            };
            emit(cli, out, &est)
        }
        Command::Embed {
            data,
            embed,
            seed,
            output,
            output_format,
            transform,
            out,
        } => {
            let ds = data.load()?;
            let params = embed.params(ds.n(), ds.d(), Some(&ds))?;
            let t = FjltTransform::sample(&params, RngSeed(*seed))?;
            let embedded = t.apply_batch(&ds)?;
            io::save_dataset(output, &embedded, output_format.unwrap_or_else(|| Format::from_path(output)))?;
            let transform_path = transform.clone().unwrap_or_else(|| default_transform_path(output));
            io::save_transform(&transform_path, &t)?;
            emit(
                cli,
                out,
                &json!({
                    "params": params,
                    "nnz": t.projection().nnz(),
                    "points": embedded.n(),
                    "output": output,
                    "transform": transform_path,
                }),
            )
        }
        Command::Verify {
            suite,
            data,
            embed,
            seed,
            trials,
            k,
            ks,
            source,
            x_vars,
            y_vars,
            t,
            u,
            sigma,
            out,
        } => {
            let seed = RngSeed(*seed);
            let trials = *trials;
            match suite {
                Suite::Smoothness => {
                    let ds = data.load()?;
                    let s = fnnpe::model::smoothness_level(ds.n(), ds.d(), embed.c_smooth);
                    emit(cli, out, &verification::mc_smoothness(&ds, s, embed.c_smooth, trials, seed)?)
                }
                Suite::Zi => {
                    let d = data.dim.next_power_of_two();
                    let mut p = embed.params(data.points, d, None)?;
                    if let Some(k) = k {
                        p = p.with_k(*k);
                    }
                    let source = match source {
                        Source::Smooth => UnitVectorSource::Smooth,
                        Source::Spike => UnitVectorSource::Spike,
                    };
                    emit(cli, out, &verification::mc_zi_concentration(p.q, p.d, p.k, p.s, trials, source, seed)?)
                }
                Suite::Distortion => {
                    let ds = data.load()?;
                    let mut p = embed.params(ds.n(), ds.d(), Some(&ds))?;
                    if let Some(k) = k {
                        p = p.with_k(*k);
                    }
                    let ks = if ks.is_empty() { vec![p.k] } else { ks.clone() };
                    emit(cli, out, &verification::mc_distortion_sweep(&p, &ds, &ks, trials, seed)?)
                }
                Suite::Shrinkage => {
                    let d = data.dim.next_power_of_two();
                    let mut p = embed.params(data.points, d, None)?;
                    if let Some(k) = k {
                        p = p.with_k(*k);
                    }
                    emit(cli, out, &verification::mc_shrinkage(&p, trials, seed)?)
                }
                Suite::Nn => {
                    let ds = data.load()?;
                    let mut p = embed.params(ds.n(), ds.d(), Some(&ds))?;
                    if let Some(k) = k {
                        p = p.with_k(*k);
                    }
                    emit(cli, out, &verification::mc_nn_preservation(&ds, &p, trials, seed)?)
                }
                Suite::GaussianAppendix => {
                    let dominance = verification::mc_gaussian_dominance(x_vars, y_vars, *t, trials, seed.derive(0))?;
                    let stability = verification::mc_two_stability(u, *sigma, trials, seed.derive(1))?;
                    emit(cli, out, &json!({ "dominance": dominance, "stability": stability }))
                }
            }
        }
        Command::Bench {
            grid,
            embed,
            bench_lambda,
            repeats,
            pool,
            seed,
            json,
            out,
        } => {
            let config = BenchConfig {
                grid: grid.iter().map(|c| parse_cell(c)).collect::<Result<_>>()?,
                epsilon: embed.eps,
                delta: embed.delta,
                lambda: embed.lambda.unwrap_or(*bench_lambda),
                constants: embed.constants(),
                repeats: *repeats,
                pool: *pool,
                seed: RngSeed(*seed),
            };
            let rows = io::bench(&config)?;
            match &out.out {
                Some(path) => io::bench_rows_to_csv(std::fs::File::create(path)?, &rows)?,
                None => io::bench_rows_to_csv(std::io::stdout().lock(), &rows)?,
            }
            if let Some(path) = json {
                let doc = ReportDocument::new("bench", &cli.command, &rows)?;
                std::fs::write(path, doc.to_json()? + "\n")?;
            }
            Ok(())
        }
        Command::Calibrate {
            seed,
            c_sparsity_grid,
            c_dim_grid,
            out,
        } => {
            let mut config = CalibrationConfig {
                seed: RngSeed(*seed),
                ..CalibrationConfig::default()
            };
            if let Some(g) = c_sparsity_grid {
                config.c_sparsity_grid = g.clone();
            }
            if let Some(g) = c_dim_grid {
                config.c_dim_grid = g.clone();
            }
            emit(cli, out, &verification::calibrate(&config)?)
        }
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("FNNPE_THREADS") {
        let threads: usize = v.trim().parse().map_err(|_| Error::Parse {
            location: "FNNPE_THREADS".into(),
            message: format!("{v:?} is not a thread count"),
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Precondition(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
