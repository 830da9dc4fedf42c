use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use dmaps::config::{Config, DEFAULT_SEED};
use dmaps::experiments::{assa_trace, bias, spectrum, variance, RunContext};

#[derive(Parser)]
#[command(name = "dmaps", version, about = "Diffusion-map experiments on the flat torus")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: `[output] dir`, else the current directory)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed (default: `seed` from the config, else 1)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Trials per (eps, M) point of the variance sweep
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue bias of the continuum operators over an eps grid
    BiasSweep,
    /// Eigenspace errors of sampled diffusion maps over M, eps and trials
    VarianceSweep,
    /// Residual traces of plain Sinkhorn and ASSA
    AssaTrace,
    /// Spectrum of a point cloud read from a headerless CSV file
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// Points, one per row
    #[arg(long, value_name = "CSV")]
    input: Option<PathBuf>,
    /// Kernel bandwidth
    #[arg(long)]
    eps: Option<f64>,
    /// `sinkhorn` or `standard:ALPHA`
    #[arg(long)]
    normalization: Option<String>,
    /// Number of eigenpairs
    #[arg(long)]
    k: Option<usize>,
    /// Torus side length; omit for points in Euclidean space
    #[arg(long)]
    side: Option<f64>,
    /// Directory for cached kernel matrices
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let config = match &g.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let seed = g.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let out = g.out.clone().or(config.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let ctx = RunContext::new(out, seed);

    match cli.command {
        Command::BiasSweep => {
            let cfg = config.bias_sweep;
            let outcome = bias::run(&cfg)?;
            bias::write(&outcome, &cfg, &ctx)?;
            for r in outcome.rates.iter().filter(|r| r.slope.is_some()) {
                eprintln!("{} k={}: slope {:.3}", r.normalization, r.index, r.slope.unwrap());
            }
        }
        Command::VarianceSweep => {
            let mut cfg = config.variance_sweep;
            if let Some(t) = g.trials {
                cfg.trials = t;
            }
            let outcome = variance::run(&cfg, seed)?;
            variance::write(&outcome, &cfg, &ctx)?;
            for s in &outcome.summary {
                eprintln!(
                    "{} eps={} M={}: variance error median {:.3e}, total {:.3e}",
                    s.normalization, s.eps, s.m, s.var_median, s.total_median
                );
            }
        }
        Command::AssaTrace => {
            let cfg = config.assa_trace;
            let outcome = assa_trace::run(&cfg, seed)?;
            assa_trace::write(&outcome, &cfg, &ctx)?;
            eprintln!("ASSA: {:?} iterations, plain Sinkhorn: {:?}", outcome.assa_iterations, outcome.plain_iterations);
        }
        Command::Spectrum(args) => {
            let mut cfg = config.spectrum;
            cfg.input = args.input.or(cfg.input);
            cfg.eps = args.eps.unwrap_or(cfg.eps);
            cfg.normalization = args.normalization.unwrap_or(cfg.normalization);
            cfg.k = args.k.unwrap_or(cfg.k);
            cfg.side = args.side.or(cfg.side);
            cfg.cache_dir = args.cache_dir.or(cfg.cache_dir);
            let outcome = spectrum::run(&cfg)?;
            spectrum::write(&outcome, &cfg, &ctx)?;
        }
    }
    Ok(())
}
