//! `mkhbm`: generate least-squares problems, run momentum solvers, print
//! closed-form theory reports, verify concentration bounds, and reproduce
//! the batch-size experiments.
//!
//! Exit codes: 0 success, 2 configuration error, 3 divergence-dominated
//! experiment (more than half of all trials diverged).

use clap::{Args, Parser, Subcommand};
use mkhbm_core::error::Error;
use mkhbm_core::experiments::{
    emit, preset, run_experiment, sweep_batch_sizes, theory_report, ExperimentReport,
};
use mkhbm_core::io::{read_problem, write_problem, write_trace_csv};
use mkhbm_core::momentum::{kstar_default, Method};
use mkhbm_core::problems::{
    make_inconsistent, sparse_bernoulli_problem, spectrum_algebraic, spectrum_exponential,
    synth_svd_problem, tomo_problem, ProblemInstance,
};
use mkhbm_core::sampling::{build_sampler, SamplingScheme};
use mkhbm_core::solvers::{run_solver, SolveStatus, SolverConfig, SolverMethod};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "mkhbm", version, about)]
struct Cli {
    /// Worker threads for trial-parallel commands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Load a problem directory written by `gen` instead of generating one.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Generator: synth | bernoulli | tomo.
    #[arg(long, default_value = "synth")]
    generator: String,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    d: usize,
    /// Spectrum family for synth: exp | alg.
    #[arg(long, default_value = "exp")]
    family: String,
    #[arg(long, default_value_t = 100.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
    /// Perturb b off the column span by this radius (synth only).
    #[arg(long, default_value_t = 0.0)]
    radius: f64,
    /// Tomography grid side length (d becomes grid^2).
    #[arg(long, default_value_t = 16)]
    grid: usize,
    #[arg(long, default_value_t = 90)]
    angles: usize,
    #[arg(long, default_value_t = 24)]
    detectors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ProblemArgs {
    fn build(&self) -> Result<ProblemInstance, Error> {
        if let Some(dir) = &self.problem {
            return read_problem(dir);
        }
        match self.generator.as_str() {
            "synth" => {
                let sq = match self.family.as_str() {
                    "exp" => spectrum_exponential(self.d, self.kappa, self.rho)?,
                    "alg" => spectrum_algebraic(self.d, self.kappa, self.rho)?,
                    other => {
                        return Err(Error::Param(format!(
                            "unknown family '{other}' (expected exp or alg)"
                        )))
                    }
                };
                let p = synth_svd_problem(self.n, self.d, &sq, self.seed)?;
                if self.radius > 0.0 {
                    make_inconsistent(&p, self.radius, self.seed.wrapping_add(1))
                } else {
                    Ok(p)
                }
            }
            "bernoulli" => sparse_bernoulli_problem(self.n, self.d, self.seed),
            "tomo" => tomo_problem(self.grid, self.angles, self.detectors, self.seed),
            other => Err(Error::Param(format!(
                "unknown generator '{other}' (expected synth, bernoulli, or tomo)"
            ))),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem and write A.mtx plus a JSON sidecar.
    Gen {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one solver and write the per-iteration trace as CSV.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        /// gd | hbm | sgd_rk | minibatch_hbm | minibatch_nag
        #[arg(long, default_value = "minibatch_hbm")]
        method: String,
        #[arg(long, default_value_t = 100)]
        batch: usize,
        /// rownorm | uniform
        #[arg(long, default_value = "rownorm")]
        sampling: String,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        kstar: Option<f64>,
        #[arg(long, default_value_t = 300)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        residuals: bool,
        /// Output file; omit for stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form theory quantities.
    Theory {
        #[command(subcommand)]
        sub: TheoryCommand,
    },
    /// Concentration bound verification.
    Concentration {
        #[command(subcommand)]
        sub: ConcentrationCommand,
    },
    /// Run a named experiment preset and emit CSV/JSON/gnuplot outputs.
    Experiment {
        /// fig2 | fig3 | fig4 | fig5 | tomo
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Batch-size multipliers c (B = c B*) for the sweep presets.
        #[arg(long, value_delimiter = ',')]
        multipliers: Option<Vec<f64>>,
    },
}

#[derive(Subcommand)]
enum TheoryCommand {
    /// Print every computed quantity for a problem + method + gamma + k*.
    Report {
        #[command(flatten)]
        problem: ProblemArgs,
        /// gd | hbm | nag
        #[arg(long, default_value = "hbm")]
        method: String,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        kstar: Option<f64>,
        /// Batch size for the convergence-horizon bound.
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConcentrationCommand {
    /// Monte Carlo verification of the concentration bounds.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value = "rownorm")]
        sampling: String,
        /// Target deviation for the batch-size rule. Defaults to
        /// 0.1 * ||A||^2.
        #[arg(long)]
        delta: Option<f64>,
        /// Batch size to verify at; defaults to the rule's requirement.
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Param(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Gen { problem, out } => {
            let p = problem.build()?;
            write_problem(&out, &p)?;
            eprintln!(
                "wrote {} ({}x{}, {} nonzeros) to {}",
                p.generator,
                p.n(),
                p.d(),
                p.a.nnz(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            problem,
            method,
            batch,
            sampling,
            gamma,
            kstar,
            iters,
            seed,
            residuals,
            out,
        } => {
            let p = problem.build()?;
            let method = SolverMethod::from_str(&method)?;
            let s = &p.spectrum;
            let gamma = gamma.unwrap_or(s.lambda_min / 1e3);
            let params = match method {
                SolverMethod::Gd => mkhbm_core::momentum::gd_params(s.lambda_max)?,
                SolverMethod::MinibatchNag => {
                    mkhbm_core::momentum::nag_params(s.lambda_max, s.lambda_min)?
                }
                _ => mkhbm_core::momentum::hbm_params_perturbed(s.lambda_max, s.lambda_min, gamma)?,
            };
            let cfg = SolverConfig {
                method,
                params,
                batch_size: batch,
                scheme: SamplingScheme::from_str(&sampling)?,
                max_iters: iters,
                seed,
                record_residuals: residuals,
                k_star: kstar.unwrap_or_else(|| kstar_default(s.kappa)),
                x0: None,
            };
            let trace = run_solver(&p, &cfg)?;
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &trace)?;
            write_out(&out, &String::from_utf8_lossy(&buf))?;
            if let SolveStatus::Diverged { at_iter } = trace.status {
                eprintln!("run diverged at iteration {at_iter}");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Theory { sub } => match sub {
            TheoryCommand::Report {
                problem,
                method,
                gamma,
                kstar,
                batch,
                out,
            } => {
                let p = problem.build()?;
                let method = match method.as_str() {
                    "gd" => Method::Gd,
                    "hbm" => Method::Hbm,
                    "nag" => Method::Nag,
                    other => return Err(Error::Param(format!("unknown method '{other}'"))),
                };
                let report = theory_report(&p, method, gamma, kstar, batch)?;
                write_out(&out, &to_pretty_json(&report)?)?;
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Concentration { sub } => match sub {
            ConcentrationCommand::Verify {
                problem,
                sampling,
                delta,
                batch,
                trials,
                seed,
                out,
            } => {
                let p = problem.build()?;
                let sampler = build_sampler(&p.a, SamplingScheme::from_str(&sampling)?)?;
                let delta = delta.unwrap_or(0.1 * p.spectrum.op_sq);
                let report = mkhbm_core::concentration::concentration_verify(
                    &p.a, &sampler, batch, delta, trials, seed,
                )?;
                write_out(&out, &to_pretty_json(&report)?)?;
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Experiment {
            preset: name,
            trials,
            seed,
            out,
            multipliers,
        } => {
            let cfg = preset(&name, seed, trials)?;
            let reports: Vec<ExperimentReport> = match (&name[..], multipliers) {
                // spectra sweeps run one report per batch-size multiplier
                ("fig3" | "fig4", m) => {
                    let mults = m.unwrap_or_else(|| vec![1e-3, 1e-2, 1e-1, 1.0]);
                    sweep_batch_sizes(&cfg, &mults)?
                }
                (_, Some(m)) => sweep_batch_sizes(&cfg, &m)?,
                (_, None) => vec![run_experiment(&cfg)?],
            };
            let mut total = 0usize;
            let mut diverged = 0usize;
            for (i, report) in reports.iter().enumerate() {
                let dir = if reports.len() == 1 {
                    out.clone()
                } else {
                    out.join(format!("run_{i:02}"))
                };
                let files = emit(report, &dir)?;
                eprintln!(
                    "{}: {} files in {} ({} ms)",
                    report.config.name,
                    files.len(),
                    dir.display(),
                    report.wall_ms
                );
                for c in &report.curves {
                    total += c.trials;
                    diverged += c.diverged_trials;
                }
            }
            if total > 0 && diverged * 2 > total {
                eprintln!("{diverged}/{total} trials diverged");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
