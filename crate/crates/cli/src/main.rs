use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use unbalanced_lcs::estimators::{
    estimate_concat_lower, estimate_drift, estimate_gamma, estimate_gamma_eps, estimate_lnds_binomial,
    estimate_lnds_mean, ConcatParams, Sampling, TWO_LETTER_LOWER, TWO_LETTER_UPPER,
};
use unbalanced_lcs::games::chain::{chain_states, closed_form_stationary, Side};
use unbalanced_lcs::games::delta::{delta_game_exact, mean_bound, second_moment_bound};
use unbalanced_lcs::games::{random_walk_abs_expectation, star_probability, DeltaObjective, Scalar};
use unbalanced_lcs::montecarlo::{default_threads, EstimateReport};
use unbalanced_lcs::particles::run_dynamics;
use unbalanced_lcs::verify::{run_suite, Suite, VerifyOptions};
use unbalanced_lcs::{Error, RngStream};

/// Largest horizon accepted by `game-dp`.
const DP_MAX_L: usize = 2000;
/// Largest alphabet accepted by `chain`.
const CHAIN_MAX_K: u32 = 256;

#[derive(Parser)]
#[command(
    name = "ulcs",
    version,
    about = "Estimators, exact solvers and verification suites for the LCS of unbalanced random words"
)]
struct Cli {
    #[command(flatten)]
    run: RunOptions,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunOptions {
    /// Master seed; a fresh one is drawn and printed when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "ULCS_THREADS")]
    threads: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Mean LCS(w, w')/n for two words of length n.
    Gamma {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Mean LCS(w, w')/n with w' of length floor((1-eps)kn).
    GammaEps {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Mean particle spread P_d(L) - P_0(L).
    Drift {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        d: usize,
        #[arg(long = "L")]
        l: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Mean longest non-decreasing subsequence, optionally of Binom(n, p) length.
    Lnds {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Total length of the greedy pieces in the block construction.
    Concat {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        eps: f64,
        /// Defaults to 1/sqrt(7).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long = "L0")]
        l0: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Run a verification suite and print one row per check.
    Verify {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
        /// Alphabet size for the chain suite.
        #[arg(long, default_value_t = 8)]
        k: u32,
    },
    /// Stationary law and star probability of the reduced chain.
    Chain {
        #[arg(long)]
        k: u32,
        /// Print only the star probability.
        #[arg(long)]
        star: bool,
    },
    /// Exact E|walk after T steps| for the reflected walk from 1/2.
    Walk {
        #[arg(long = "T")]
        t: u64,
    },
    /// Optimal value of the gap game and its bound.
    GameDp {
        #[arg(long)]
        k: u32,
        #[arg(long = "L")]
        l: usize,
        /// Solve for E[(gap - 1/2)^2] instead of E[gap].
        #[arg(long)]
        second_moment: bool,
    },
    /// Step-by-step particle trajectory as JSON lines.
    Trajectory {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        d: usize,
        #[arg(long = "L")]
        l: usize,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure that maps to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: Error) -> anyhow::Error {
    match e {
        Error::InvalidParameter(_) | Error::SymbolOutOfRange { .. } | Error::Parse(_) => Usage(e.to_string()).into(),
        other => other.into(),
    }
}

struct Runner {
    seed: u64,
    threads: usize,
    output: Option<PathBuf>,
    format: Format,
}

impl Runner {
    fn sampling(&self, samples: u64) -> Sampling {
        Sampling::new(samples, self.seed, self.threads)
    }

    fn sink(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn emit(&self, report: &EstimateReport) -> anyhow::Result<()> {
        let text = match self.format {
            Format::Json => report.to_json() + "\n",
            Format::Csv => EstimateReport::to_csv(std::slice::from_ref(report)).map_err(usage)?,
        };
        let mut out = self.sink()?;
        out.write_all(text.as_bytes())?;
        out.flush()?;
        Ok(())
    }
}

fn fresh_seed() -> u64 {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos() as u64);
    RngStream::new(nanos ^ u64::from(std::process::id()).rotate_left(32), 0).u64_at(unbalanced_lcs::Lane::Fortune, 0)
}

fn summary(report: &EstimateReport) -> String {
    let params: Vec<String> = report.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(
        "{} {}: mean {:.6} ± {:.6} (95% CI [{:.6}, {:.6}], {} samples, {:.2}s)",
        report.quantity,
        params.join(" "),
        report.mean,
        report.stderr,
        report.ci95[0],
        report.ci95[1],
        report.samples,
        report.wall_time_secs
    )
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let threads = match cli.run.threads {
        Some(0) => return Err(Usage("--threads must be at least 1".into()).into()),
        Some(t) => t,
        None => default_threads(),
    };
    let seed = cli.run.seed.unwrap_or_else(fresh_seed);
    let ctx = Runner {
        seed,
        threads,
        output: cli.run.output,
        format: cli.run.format,
    };
    let estimate = |report: unbalanced_lcs::Result<EstimateReport>| -> anyhow::Result<ExitCode> {
        eprintln!("seed: {seed}");
        let report = report.map_err(usage)?;
        ctx.emit(&report)?;
        eprintln!("{}", summary(&report));
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        Ok(ExitCode::SUCCESS)
    };
    match cli.command {
        Command::Gamma { k, n, samples } => {
            let exit = estimate(estimate_gamma(k, n, &ctx.sampling(samples)))?;
            if k == 2 {
                eprintln!("reference band for the limit: [{TWO_LETTER_LOWER}, {TWO_LETTER_UPPER}]");
            }
            Ok(exit)
        }
        Command::GammaEps { k, eps, n, samples } => estimate(estimate_gamma_eps(k, eps, n, &ctx.sampling(samples))),
        Command::Drift { k, d, l, samples } => estimate(estimate_drift(k, d, l, &ctx.sampling(samples))),
        Command::Lnds { k, n, p, samples } => match p {
            Some(p) => estimate(estimate_lnds_binomial(k, n, p, &ctx.sampling(samples))),
            None => estimate(estimate_lnds_mean(k, n, &ctx.sampling(samples))),
        },
        Command::Concat {
            k,
            d,
            eps,
            alpha,
            l0,
            n,
            samples,
        } => {
            let p = ConcatParams {
                k,
                eps,
                d,
                alpha: alpha.unwrap_or(1.0 / 7f64.sqrt()),
                l0,
                n,
            };
            estimate(estimate_concat_lower(&p, &ctx.sampling(samples)))
        }
        Command::Verify { suite, k } => {
            eprintln!("seed: {seed}");
            let opts = VerifyOptions {
                seed,
                threads,
                chain_k: k,
            };
            let report = run_suite(suite, &opts).map_err(usage)?;
            print!("{}", report.table());
            if ctx.output.is_some() {
                let text = match ctx.format {
                    Format::Json => report.to_json() + "\n",
                    Format::Csv => report.to_csv().map_err(usage)?,
                };
                ctx.sink()?.write_all(text.as_bytes())?;
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Chain { k, star } => {
            if !(2..=CHAIN_MAX_K).contains(&k) {
                return Err(Usage(format!("need 2 <= k <= {CHAIN_MAX_K}, got {k}")).into());
            }
            let p = star_probability(k);
            let mut out = ctx.sink()?;
            if star {
                writeln!(out, "{p}")?;
            } else {
                for (state, pi) in chain_states(k).iter().zip(closed_form_stationary(k)) {
                    let side = if state.side == Side::In { "in" } else { "out" };
                    writeln!(out, "({},{side})\t{pi}\t{:.12}", state.s, pi.to_f64())?;
                }
                writeln!(out, "star\t{p}\t{:.12}", p.to_f64())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Walk { t } => {
            writeln!(ctx.sink()?, "{}", random_walk_abs_expectation(t))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GameDp { k, l, second_moment } => {
            if k < 2 {
                return Err(Usage(format!("need k >= 2, got {k}")).into());
            }
            if l > DP_MAX_L {
                return Err(Usage(format!("L = {l} exceeds the exact solver limit of {DP_MAX_L}")).into());
            }
            let line = if second_moment {
                let table = delta_game_exact(k, l, DeltaObjective::SecondMoment).map_err(usage)?;
                format!(
                    "{:?} (bound {:?})",
                    table.value().to_f64(),
                    second_moment_bound(k, l).to_f64()
                )
            } else {
                let table = delta_game_exact(k, l, DeltaObjective::Mean).map_err(usage)?;
                format!("{:?} (bound {:?})", table.value().to_f64(), mean_bound(k, l))
            };
            writeln!(ctx.sink()?, "{line}")?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Trajectory { k, d, l } => {
            eprintln!("seed: {seed}");
            let t = run_dynamics(k, d, l, &RngStream::new(seed, 0)).map_err(usage)?;
            let mut out = ctx.sink()?;
            // Letters are printed 1-based; particle indices keep 0..=d.
            for step in &t.steps {
                let mut line = step.clone();
                line.symbol += 1;
                line.under.iter_mut().for_each(|u| *u += 1);
                writeln!(out, "{}", serde_json::to_string(&line)?)?;
            }
            out.flush()?;
            eprintln!(
                "trajectory k={k} d={d} L={l}: final {:?}, {} non-trivial steps",
                t.final_state.positions(),
                t.nontrivial_count()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
