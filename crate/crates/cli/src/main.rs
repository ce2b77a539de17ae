//! `spectral-stats`: power-spectrum statistics of images and activation maps.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectral_stats::distill::{CpsVariant, ReduceMethod, DEFAULT_EPSILON};

#[derive(Debug, Parser)]
#[command(name = "spectral-stats", version, about = "Power-law spectral statistics of images and CNN activations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Which tensors of the input to analyse.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Dataset manifest (.json) or a single .npy file.
    #[arg(long)]
    input: PathBuf,
    /// Only use activation items from this layer.
    #[arg(long)]
    layer: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Radially averaged ensemble power spectrum as CSV (k,power,count).
    Spectrum {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        output: PathBuf,
        /// Multiply each bin by its radius.
        #[arg(long)]
        jacobian: bool,
        /// Remove each image's mean before transforming.
        #[arg(long)]
        subtract_mean: bool,
        /// Also write ln k / ln P columns for plotting.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Power-law fit of a spectrum CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kmin: Option<usize>,
        #[arg(long)]
        kmax: Option<usize>,
        /// Fit every radius instead of the upper half.
        #[arg(long, conflicts_with_all = ["kmin", "kmax"])]
        full_range: bool,
        #[arg(long)]
        output: PathBuf,
    },
    /// Radially averaged autocorrelation and its power-law fit.
    Correlation {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 1)]
        rmin: usize,
        /// Defaults to a quarter of the image size.
        #[arg(long)]
        rmax: Option<usize>,
        /// Keep each image's mean instead of removing it.
        #[arg(long)]
        keep_mean: bool,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Compare spectra before and after average pooling.
    PoolCheck {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 2)]
        factor: usize,
        #[arg(long, requires = "pre_kmax")]
        pre_kmin: Option<usize>,
        #[arg(long, requires = "pre_kmin")]
        pre_kmax: Option<usize>,
        #[arg(long, requires = "post_kmax")]
        post_kmin: Option<usize>,
        #[arg(long, requires = "post_kmin")]
        post_kmax: Option<usize>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Radial power gain of a 3x3 kernel on an N x N grid.
    Kernel {
        /// 3x3 JSON array (rows dy = -1, 0, 1), inline or as a file path.
        #[arg(long)]
        weights: String,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        output: PathBuf,
        /// JSON with the radial modes, the predicted gain and the
        /// closed-form vs. zero-padded transform check.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Spectral exponent of an ensemble after repeated linear convolution.
    DepthSim {
        #[command(flatten)]
        input: InputArgs,
        /// `box`, `identity` or `file:<path to 3x3 JSON>`.
        #[arg(long, default_value = "box")]
        kernel: String,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, requires = "kmax")]
        kmin: Option<usize>,
        #[arg(long, requires = "kmin")]
        kmax: Option<usize>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Spectral distillation losses between teacher and student maps.
    Loss {
        #[arg(long)]
        teacher: PathBuf,
        #[arg(long)]
        student: PathBuf,
        #[arg(long, default_value = "normalized", value_parser = parse_variant)]
        variant: CpsVariant,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Common channel count; defaults to the smaller of the two.
        #[arg(long)]
        channels: Option<usize>,
        #[arg(long, default_value = "mean-group", value_parser = parse_reduce)]
        reduce: ReduceMethod,
        /// Externally computed cross-entropy term.
        #[arg(long)]
        ce: Option<f64>,
        /// Externally computed pixel-wise feature loss.
        #[arg(long)]
        overhaul: Option<f64>,
        #[arg(long, default_value_t = 1e-4)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-4)]
        beta: f64,
        #[arg(long, default_value_t = 0.01)]
        gamma: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a seeded synthetic ensemble as .npy files plus a manifest.
    Synth {
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Spectral exponent; ignored with --white-noise.
        #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long)]
        white_noise: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn parse_variant(s: &str) -> Result<CpsVariant, String> {
    s.parse().map_err(|e: spectral_stats::Error| e.to_string())
}

fn parse_reduce(s: &str) -> Result<ReduceMethod, String> {
    s.parse().map_err(|e: spectral_stats::Error| e.to_string())
}

/// Bad flag values found after parsing; reported like clap's usage errors.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn run(cli: Cli) -> anyhow::Result<()> {
    use commands::*;
    match cli.command {
        Command::Spectrum {
            input,
            output,
            jacobian,
            subtract_mean,
            plot_data,
        } => spectrum(&input, &output, jacobian, subtract_mean, plot_data.as_deref()),
        Command::Fit {
            input,
            kmin,
            kmax,
            full_range,
            output,
        } => fit(&input, kmin, kmax, full_range, &output),
        Command::Correlation {
            input,
            rmin,
            rmax,
            keep_mean,
            output,
            plot_data,
        } => correlation(&input, rmin, rmax, !keep_mean, &output, plot_data.as_deref()),
        Command::PoolCheck {
            input,
            factor,
            pre_kmin,
            pre_kmax,
            post_kmin,
            post_kmax,
            output,
            plot_data,
        } => {
            let ranges = spectral_stats::scaling::FitRanges {
                pre: pre_kmin.zip(pre_kmax),
                post: post_kmin.zip(post_kmax),
            };
            pool_check(&input, factor, ranges, &output, plot_data.as_deref())
        }
        Command::Kernel {
            weights,
            size,
            output,
            report,
            plot_data,
        } => kernel(&weights, size, &output, report.as_deref(), plot_data.as_deref()),
        Command::DepthSim {
            input,
            kernel,
            depth,
            kmin,
            kmax,
            output,
            plot_data,
        } => depth_sim(&input, &kernel, depth, kmin.zip(kmax), &output, plot_data.as_deref()),
        Command::Loss {
            teacher,
            student,
            variant,
            epsilon,
            channels,
            reduce,
            ce,
            overhaul,
            alpha,
            beta,
            gamma,
            output,
        } => loss(LossArgs {
            teacher: &teacher,
            student: &student,
            variant,
            epsilon,
            channels,
            reduce,
            ce,
            overhaul,
            weights: spectral_stats::distill::LossWeights { alpha, beta, gamma },
            output: &output,
        }),
        Command::Synth {
            output_dir,
            size,
            count,
            alpha,
            white_noise,
            seed,
        } => synth(&output_dir, size, count, (!white_noise).then_some(alpha), seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
