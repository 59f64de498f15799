use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sublinear_qp::bench::{
    print_json_line, read_samples, run_cutnorm, run_pearson, run_synth, solve_file, write_cutnorm,
    write_records, PearsonOptions, SolveMode, SynthOptions,
};
use sublinear_qp::pearson::{DEFAULT_ALPHA, DEFAULT_LAMBDA, DEFAULT_SIGMA2};
use sublinear_qp::synthetic::DEFAULT_D_MARGIN;
use sublinear_qp::{suggest_k, QpError, SampleSizeSchedule};

#[derive(Parser)]
#[command(name = "sqp-bench", version, about = "Seeded experiments for the constant-time quadratic minimum estimator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Problem sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Sample sizes, comma separated. When absent, k = suggest_k(eps, delta).
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

impl Common {
    fn n_list(&self, default: &[usize]) -> Vec<usize> {
        if self.n.is_empty() {
            default.to_vec()
        } else {
            self.n.clone()
        }
    }

    /// Explicit `--k`, or the schedule clamped to the smallest `n`.
    fn k_list(&self, n_list: &[usize]) -> Result<Vec<usize>, QpError> {
        if !self.k.is_empty() {
            return Ok(self.k.clone());
        }
        let k = suggest_k(self.eps, self.delta, &SampleSizeSchedule::default())?;
        Ok(vec![k.min(n_list.iter().copied().min().unwrap_or(k))])
    }
}

#[derive(Subcommand)]
enum Command {
    /// Error study on random synthetic problems.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_D_MARGIN)]
        d_margin: f64,
        /// Use the identity index sequence (requires k = n).
        #[arg(long)]
        identity: bool,
    },
    /// Relative Pearson divergence: proposed estimator against Nyström.
    Pearson {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_SIGMA2)]
        sigma2: f64,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long, default_value_t = 200)]
        n_prime: usize,
        /// Numerator sample, one value per line.
        #[arg(long, requires = "xp_file")]
        x_file: Option<PathBuf>,
        /// Denominator sample, one value per line.
        #[arg(long, requires = "x_file")]
        xp_file: Option<PathBuf>,
        /// Pick sigma2 and lambda per trial by 5-fold cross-validation.
        #[arg(long)]
        grid_cv: bool,
    },
    /// Cut-norm gap between a base matrix and sampled restrictions.
    Cutnorm {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Use the all-ones base matrix.
        #[arg(long)]
        constant: bool,
    },
    /// Minimum of a QPROB1 file, printed as one JSON line.
    Solve {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

fn run(cli: Cli) -> Result<(), QpError> {
    match cli.command {
        Command::Synth { common, d_margin, identity } => {
            let n_list = common.n_list(&[200, 400, 800]);
            let k_list = common.k_list(&n_list)?;
            let mut opts = SynthOptions::new(n_list, k_list, common.trials, common.seed);
            opts.d_margin = d_margin;
            opts.identity = identity;
            write_records(&common.out, &run_synth(&opts)?)
        }
        Command::Pearson { common, alpha, sigma2, lambda, n_prime, x_file, xp_file, grid_cv } => {
            let data = match (x_file, xp_file) {
                (Some(x), Some(xp)) => Some((read_samples(&x)?, read_samples(&xp)?)),
                _ => None,
            };
            let n_list = match &data {
                Some((x, _)) if common.n.is_empty() => vec![x.len()],
                _ => common.n_list(&[500, 1000]),
            };
            let k_list = common.k_list(&n_list)?;
            let mut opts = PearsonOptions::new(n_list, k_list, common.trials, common.seed);
            opts.alpha = alpha;
            opts.sigma2 = sigma2;
            opts.lambda = lambda;
            opts.n_prime = n_prime;
            opts.grid_cv = grid_cv;
            opts.data = data;
            write_records(&common.out, &run_pearson(&opts)?)
        }
        Command::Cutnorm { n, k, samples, seed, out, constant } => {
            write_cutnorm(&out, &run_cutnorm(n, &k, samples, seed, constant)?)
        }
        Command::Solve { path, mode, k, seed } => {
            let mode = match mode {
                ModeArg::Exact => SolveMode::Exact,
                ModeArg::Sampled => SolveMode::Sampled,
            };
            let output = solve_file(&path, mode, k, seed)?;
            print_json_line(&mut std::io::stdout().lock(), &output)
                .map_err(|source| QpError::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sqp-bench: {e}");
            match e {
                QpError::Io { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
