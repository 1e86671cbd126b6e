//! CLI shell around the experiment runners. Exit codes: 0 when every gating
//! check passes, 1 when any fails, 2 on configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use smc_hmc::experiments::bias::BiasSampler;
use smc_hmc::experiments::tune::TuneInputs;
use smc_hmc::experiments::{self, ExperimentConfig, ExperimentReport};
use smc_hmc::potentials::parse_model;
use smc_hmc::samplers::RhoKind;
use smc_hmc::Error;

#[derive(Parser)]
#[command(
    name = "smc-hmc",
    version,
    about = "Unadjusted HMC with stratified Monte Carlo time integration: \
             samplers, couplings, and claim-checking experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Target model: iso:<k>[,d] | aniso:<k1,k2,...> | double_well | rough:<a>
    #[arg(long, default_value = "iso:1,1")]
    model: String,
    /// RNG seed; every table is a pure function of (config, seed)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials / samples / steps; default depends on the subcommand
    #[arg(long)]
    trials: Option<usize>,
    /// Write the CSV table to this path (atomically)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Divide trial counts by 10
    #[arg(long)]
    quick: bool,
    /// Relax conservative tuned parameters by this factor (>= 1)
    #[arg(long, default_value_t = 1.0)]
    relax: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Uhmc,
    Adjusted,
}

#[derive(Clone, Copy, ValueEnum)]
enum RhoArg {
    /// b ~ Uniform(0, 1/2)
    Continuous,
    /// b ~ Uniform{0, 1/2}
    TwoPoint,
}

#[derive(Subcommand)]
enum Command {
    /// Endpoint L2 accuracy of sMC (order 3/2) and Verlet (order 2)
    Accuracy {
        #[command(flatten)]
        common: Common,
        /// Inclusive dyadic exponent range for the grid h = 2^-n
        #[arg(long, value_parser = parse_n_range, default_value = "2..10")]
        n_range: (u32, u32),
    },
    /// Almost-sure flow contraction and the coupled-chain decay rate
    Contraction {
        #[command(flatten)]
        common: Common,
        /// Integration duration T; default saturates L T^2 = 1/8
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Asymptotic W2 bias of the chain over a step grid
    Bias {
        #[command(flatten)]
        common: Common,
        /// Comma-separated requested steps (rounded to strata); default 2^-2..2^-6
        #[arg(long, value_delimiter = ',')]
        h_grid: Vec<f64>,
        #[arg(long, value_enum, default_value_t = SamplerArg::Uhmc)]
        sampler: SamplerArg,
    },
    /// Jump-process event statistics, coupling contraction, bias diagnostic
    Mjp {
        #[command(flatten)]
        common: Common,
        /// Refresh intensity for the event block; default 12 sqrt(L)
        #[arg(long)]
        lambda: Option<f64>,
        /// Step for the event block; default 1/(2 lambda)
        #[arg(long)]
        h: Option<f64>,
        /// Step grid for the bias diagnostic; default 1/2,1/4,1/8
        #[arg(long, value_delimiter = ',')]
        h_grid: Vec<f64>,
    },
    /// Metropolis-adjusted chain: exact moments and acceptance checks
    Adjusted {
        #[command(flatten)]
        common: Common,
        /// Proposal step size
        #[arg(long, default_value_t = 0.5)]
        h: f64,
        /// Two-stage steps per proposal
        #[arg(long, default_value_t = 4)]
        leap_steps: usize,
        /// Distribution of the two-stage coefficient b
        #[arg(long, value_enum, default_value_t = RhoArg::Continuous)]
        rho: RhoArg,
    },
    /// Draw samples with tuned parameters and report moments
    Sample {
        #[command(flatten)]
        common: Common,
        /// W2 accuracy target fed to the tuner
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Evaluate the tuning formulas with consistency gates
    Tune {
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        w2_init: f64,
        /// Write the one-row CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_n_range(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected lo..hi, got '{s}'"))?;
    let lo: u32 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad exponent '{lo}'"))?;
    let hi: u32 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad exponent '{hi}'"))?;
    Ok((lo, hi))
}

fn build_cfg(
    common: &Common,
    h_grid: Vec<f64>,
    n_range: (u32, u32),
) -> Result<ExperimentConfig, Error> {
    let model = parse_model(&common.model)?;
    let mut cfg = ExperimentConfig::new(model, common.seed);
    cfg.trials = common.trials;
    let mut grid = h_grid;
    grid.sort_by(|a, b| b.total_cmp(a));
    cfg.h_grid = grid;
    cfg.n_range = n_range;
    cfg.quick = common.quick;
    cfg.relax = common.relax;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(ExperimentReport, Option<PathBuf>), Error> {
    match cli.command {
        Command::Accuracy { common, n_range } => {
            let cfg = build_cfg(&common, Vec::new(), n_range)?;
            Ok((
                experiments::accuracy::run_accuracy_experiment(&cfg)?,
                common.out,
            ))
        }
        Command::Contraction { common, duration } => {
            let cfg = build_cfg(&common, Vec::new(), (2, 10))?;
            Ok((
                experiments::contraction::run_contraction_experiment(&cfg, duration)?,
                common.out,
            ))
        }
        Command::Bias {
            common,
            h_grid,
            sampler,
        } => {
            let cfg = build_cfg(&common, h_grid, (2, 10))?;
            let sampler = match sampler {
                SamplerArg::Uhmc => BiasSampler::Uhmc,
                SamplerArg::Adjusted => BiasSampler::Adjusted,
            };
            Ok((
                experiments::bias::run_bias_experiment(&cfg, sampler)?,
                common.out,
            ))
        }
        Command::Mjp {
            common,
            lambda,
            h,
            h_grid,
        } => {
            let cfg = build_cfg(&common, h_grid, (2, 10))?;
            Ok((
                experiments::mjp::run_mjp_experiment(&cfg, lambda, h)?,
                common.out,
            ))
        }
        Command::Adjusted {
            common,
            h,
            leap_steps,
            rho,
        } => {
            let cfg = build_cfg(&common, Vec::new(), (2, 10))?;
            let rho = match rho {
                RhoArg::Continuous => RhoKind::UniformContinuous,
                RhoArg::TwoPoint => RhoKind::UniformTwoPoint,
            };
            Ok((
                experiments::adjusted::run_adjusted_experiment(&cfg, h, leap_steps, rho)?,
                common.out,
            ))
        }
        Command::Sample { common, epsilon } => {
            let cfg = build_cfg(&common, Vec::new(), (2, 10))?;
            Ok((experiments::sample::run_sample(&cfg, epsilon)?, common.out))
        }
        Command::Tune {
            k,
            l,
            dim,
            epsilon,
            w2_init,
            out,
        } => {
            let inputs = TuneInputs {
                k,
                l,
                dim,
                epsilon,
                w2_init,
            };
            Ok((experiments::tune::run_tune(&inputs)?, out))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((report, out)) => {
            print!("{}", report.render());
            if let Some(path) = out {
                if let Err(e) = report.table.write_csv(&path) {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
                eprintln!("wrote {}", path.display());
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
