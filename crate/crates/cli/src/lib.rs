//! Batch command-line front end for `rkhs-radon`.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: 0 on success, 2 for usage or input errors, 1 when the numerics
//! fail or output cannot be written.

pub mod config;
pub mod error;
pub mod ingest;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rkhs_radon::gauss::{posterior_over, sample};
use rkhs_radon::radon::{grt_mc, DEFAULT_SAMPLES};
use rkhs_radon::regress::{predict_many, ridge_fit, spline_fit};
use rkhs_radon::wiener::tail_mass;
use rkhs_radon::{json, Kernel, RidgeModel, SolvePath};

use crate::config::{PosteriorSpec, RadonSpec};
pub use crate::error::{CliError, Result};
pub use crate::ingest::ingest_csv;

#[derive(Debug, Parser)]
#[command(
    name = "rkhs-radon",
    version,
    about = "Kernel ridge regression, Gaussian conditioning and Monte-Carlo path functionals"
)]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress to standard error.
    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit kernel ridge regression and write the model as JSON.
    Fit(FitArgs),
    /// Fit the minimum-norm interpolant (no regularization).
    Interpolate(InterpolateArgs),
    /// Evaluate a fitted model at the points of a CSV file.
    Predict(PredictArgs),
    /// Write the conditioned Gaussian over query points as JSON.
    Condition(SpecArgs),
    /// Draw samples of the conditioned Gaussian as CSV.
    Sample(SampleArgs),
    /// Monte-Carlo estimate of a path functional under the conditioned process.
    Radon(SpecArgs),
    /// Tail mass of the measurable norm on a k-dimensional coordinate block.
    Tailmass(TailmassArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelKind {
    Rbf,
    BrownianMin,
    Linear,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PathArg {
    ClosedForm,
    Geometric,
}

#[derive(Debug, Args)]
struct KernelArgs {
    #[arg(long, value_enum)]
    kernel: KernelKind,
    /// RBF scale s in exp(-|p-q|^2 / 2s).
    #[arg(long, allow_negative_numbers = true)]
    scale: Option<f64>,
    /// Brownian horizon T.
    #[arg(long, allow_negative_numbers = true)]
    horizon: Option<f64>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "closed-form")]
    path: PathArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InterpolateArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SpecArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TailmassArgs {
    #[arg(long = "N")]
    n: u64,
    #[arg(long)]
    k: u64,
    #[arg(long, allow_negative_numbers = true)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl KernelArgs {
    fn build(&self) -> Result<Kernel> {
        let reject = |flag: &str| CliError::input(format!("--{flag} is not used by this kernel"));
        let k = match self.kernel {
            KernelKind::Rbf => {
                if self.horizon.is_some() {
                    return Err(reject("horizon"));
                }
                Kernel::rbf(self.scale.ok_or_else(|| CliError::input("--kernel rbf requires --scale"))?)
            }
            KernelKind::BrownianMin => {
                if self.scale.is_some() {
                    return Err(reject("scale"));
                }
                Kernel::brownian_min(
                    self.horizon.ok_or_else(|| CliError::input("--kernel brownian-min requires --horizon"))?,
                )
            }
            KernelKind::Linear => {
                if self.scale.is_some() {
                    return Err(reject("scale"));
                }
                if self.horizon.is_some() {
                    return Err(reject("horizon"));
                }
                Ok(Kernel::Linear)
            }
        };
        k.map_err(|e| CliError::input(e.to_string()))
    }
}

struct Log(bool);

impl Log {
    fn line(&self, msg: impl AsRef<str>) {
        if self.0 {
            eprintln!("rkhs-radon: {}", msg.as_ref());
        }
    }
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Output { path: path.display().to_string(), source })
}

fn load_model(path: &Path) -> Result<RidgeModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    RidgeModel::from_json(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn execute(command: Command, log: &Log) -> Result<()> {
    match command {
        Command::Fit(a) => {
            let data = ingest_csv(&a.data)?;
            let k = a.kernel.build()?;
            let path = match a.path {
                PathArg::ClosedForm => SolvePath::ClosedForm,
                PathArg::Geometric => SolvePath::Geometric,
            };
            log.line(format!("fit: n={} d={} lambda={}", data.len(), data.dim(), a.lambda));
            let model = ridge_fit(&data, &k, a.lambda, path)?;
            write_out(&a.out, &model.to_json()?)
        }
        Command::Interpolate(a) => {
            let data = ingest_csv(&a.data)?;
            let k = a.kernel.build()?;
            log.line(format!("interpolate: n={} d={}", data.len(), data.dim()));
            let model = spline_fit(&data, &k)?;
            write_out(&a.out, &model.to_json()?)
        }
        Command::Predict(a) => {
            let model = load_model(&a.model)?;
            let points = ingest::ingest_points(&a.points)?;
            log.line(format!("predict: {} points", points.len()));
            let yhat = predict_many(&model, &points)?;
            write_out(&a.out, &ingest::predictions_csv(&points, &yhat))
        }
        Command::Condition(a) => {
            let (spec, base) = config::load::<PosteriorSpec>(&a.spec)?;
            let post = posterior(&spec, &base)?;
            log.line(format!("condition: {} query points", post.dim()));
            write_out(&a.out, &json::to_string(&post)?)
        }
        Command::Sample(a) => {
            let (spec, base) = config::load::<PosteriorSpec>(&a.spec)?;
            if a.count == 0 {
                return Err(CliError::input("--count must be at least 1"));
            }
            let post = posterior(&spec, &base)?;
            log.line(format!("sample: {} draws of dimension {}", a.count, post.dim()));
            let draws = sample(&post, a.count, a.seed)?;
            write_out(&a.out, &ingest::samples_csv(post.labels(), &draws))
        }
        Command::Radon(a) => {
            let (spec, base) = config::load::<RadonSpec>(&a.spec)?;
            let cond = config::conditioning(&spec.kernel, &spec.train, spec.lambda, &base)?;
            let functional = spec.functional.build()?;
            let samples = spec.samples.unwrap_or(DEFAULT_SAMPLES);
            log.line(format!(
                "radon: {} observations, {} functional points, {samples} samples",
                cond.train_points().len(),
                functional.points().len()
            ));
            let est = grt_mc(&cond, &functional, samples, spec.seed)?;
            log.line(format!("radon: value {} +/- {}", est.value, est.std_error));
            write_out(&a.out, &json::to_string(&est)?)
        }
        Command::Tailmass(a) => {
            log.line(format!("tailmass: N={} k={} eps={} samples={}", a.n, a.k, a.eps, a.samples));
            let report = tail_mass(a.n, a.k, a.eps, a.samples, a.seed)?;
            let text = json::to_string(&report)?;
            match a.out {
                Some(path) => write_out(&path, &text),
                None => {
                    use std::io::Write;
                    std::io::stdout()
                        .write_all(text.as_bytes())
                        .map_err(|source| CliError::Output { path: "<stdout>".into(), source })
                }
            }
        }
    }
}

fn posterior(spec: &PosteriorSpec, base: &Path) -> Result<rkhs_radon::ConditionalGaussian> {
    let cond = config::conditioning(&spec.kernel, &spec.train, spec.lambda, base)?;
    let query = spec.query.points()?;
    Ok(posterior_over(cond.kernel(), cond.train_points(), cond.targets(), cond.lambda(), &query)?)
}

/// Runs one command line (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let log = Log(cli.verbose);

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("rkhs-radon: --threads must be at least 1");
            return 2;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("rkhs-radon: cannot start worker pool: {e}");
            return 1;
        }
    };

    match pool.install(|| execute(cli.command, &log)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rkhs-radon: error: {e}");
            e.exit_code()
        }
    }
}
