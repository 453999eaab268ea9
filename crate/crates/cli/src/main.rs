use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holopulse::NormMethod;

mod commands;

/// Cardiac pulse features and segmentation metrics for power Doppler stacks.
#[derive(Debug, Parser)]
#[command(name = "holopulse", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the pulse pipeline and write the feature stack plus intermediates.
    Extract(ExtractArgs),
    /// Score a predicted artery/vein mask against ground truth.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic pulsatile phantom.
    Phantom(PhantomArgs),
    /// Print the header of a stack/map container or a mask.
    Info(InfoArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Stack header (`<name>.json`, payload in `<name>.raw`).
    #[arg(long)]
    pub stack: PathBuf,
    /// Binary vessel mask (PGM); any non-zero label counts as vessel.
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Artery-seed threshold on the normalized upstroke score.
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub theta: f64,
    /// Radius in pixels of the square dilation applied to segments before averaging.
    #[arg(long, default_value_t = 2)]
    pub dilation: usize,
    /// Segments shorter than this many pixels are dropped.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_len: u64,
    /// Frames on each side of a peak included in the systole/diastole average.
    #[arg(long, default_value_t = 2)]
    pub half_window: usize,
    /// Minimum distance between peaks in frames, or `auto` for frames / 8.
    #[arg(long, default_value = "auto", value_parser = parse_min_separation)]
    pub min_separation: MinSeparation,
    /// Moving-average width applied to normalized segment signals before scoring.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub smoothing: u64,
    /// `none`, `zscore` or `pminmax:LO:HI`.
    #[arg(long, default_value = "pminmax:1:99", value_parser = parse_norm)]
    pub m0_norm: NormMethod,
    #[arg(long, default_value = "none", value_parser = parse_norm)]
    pub corr_norm: NormMethod,
    #[arg(long, default_value = "pminmax:1:99", value_parser = parse_norm)]
    pub diasys_norm: NormMethod,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Report JSON destination.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// Phantom spec JSON; missing keys take their defaults. Omit for the default spec.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the spec's rng_seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    pub path: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinSeparation {
    Auto,
    Frames(usize),
}

impl MinSeparation {
    pub fn frames(self) -> Option<usize> {
        match self {
            MinSeparation::Auto => None,
            MinSeparation::Frames(n) => Some(n),
        }
    }
}

fn parse_min_separation(s: &str) -> Result<MinSeparation, String> {
    if s == "auto" {
        return Ok(MinSeparation::Auto);
    }
    match s.parse::<usize>() {
        Ok(0) => Err("min-separation must be >= 1".into()),
        Ok(n) => Ok(MinSeparation::Frames(n)),
        Err(_) => Err(format!("expected `auto` or a frame count, got {s:?}")),
    }
}

fn parse_norm(s: &str) -> Result<NormMethod, String> {
    match s {
        "none" => return Ok(NormMethod::None),
        "zscore" => return Ok(NormMethod::Zscore),
        _ => {}
    }
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["pminmax" | "percentile_minmax", lo, hi] => {
            let lo: f64 = lo
                .parse()
                .map_err(|_| format!("bad lower percentile {lo:?}"))?;
            let hi: f64 = hi
                .parse()
                .map_err(|_| format!("bad upper percentile {hi:?}"))?;
            if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo > hi {
                return Err(format!(
                    "percentiles must satisfy 0 <= LO <= HI <= 100, got {lo}:{hi}"
                ));
            }
            Ok(NormMethod::PercentileMinmax { p_lo: lo, p_hi: hi })
        }
        _ => Err(format!("expected none, zscore or pminmax:LO:HI, got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .parse_default_env()
        .init();

    let result = match cli.command {
        Command::Extract(args) => commands::extract(&args),
        Command::Evaluate(args) => commands::evaluate(&args),
        Command::Phantom(args) => commands::phantom(&args),
        Command::Info(args) => commands::info(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
