//! `pronylab`: reconstruct spike trains from noisy moments and verify
//! the error-amplification geometry by reproducible experiments.
//!
//! Exit codes: 0 success, 2 input error, 3 inversion failure,
//! 4 assertion/containment failure.

mod config;
mod experiments;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use prony_leaves::*;

use config::{ExperimentConfig, Overrides};
use experiments::GammaRule;

#[derive(Parser)]
#[command(name = "pronylab", version, about = "Spike-train moment reconstruction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the moment vector of a signal file.
    Forward {
        /// Signal JSON: {"amplitudes": [...], "nodes": [...]}
        #[arg(long)]
        input: PathBuf,
        /// Number of moments (default 2d).
        #[arg(long)]
        count: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover a signal from exactly 2d moments.
    Solve {
        /// Moment JSON: {"moments": [...]}
        #[arg(long)]
        input: PathBuf,
        /// Number of spikes.
        #[arg(long)]
        d: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Max accepted |Im| for a root, scaled by max(1, |Re|).
        #[arg(long, default_value_t = 1e-8)]
        imag_tol: f64,
        /// Minimum gap between recovered nodes.
        #[arg(long, default_value_t = 1e-12)]
        collision_tol: f64,
        /// Newton polish iterations.
        #[arg(long, default_value_t = 2)]
        refine_steps: usize,
    },
    /// Print the stability constants bundle.
    Constants {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        m: f64,
        #[arg(long = "M", id = "M")]
        m_upper: f64,
        #[arg(long, default_value_t = 0.0)]
        kappa: f64,
        /// Print a single constant by name (C1..C8, r, R, K3, K4).
        #[arg(long)]
        only: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample error sets, emit plot data, and check the parallelepiped
    /// containments.
    ErrorSet(Overrides),
    /// Sweep h, estimate worst-case errors, and fit the amplification
    /// exponents.
    WorstCase(Overrides),
    /// Sample a Prony leaf section of the model signal.
    Leaves {
        #[command(flatten)]
        overrides: Overrides,
        /// Leaf index: the first q+1 moments are frozen.
        #[arg(long)]
        q: usize,
    },
    /// Constrained reconstruction with the amplitude-ratio window.
    Improve {
        #[command(flatten)]
        overrides: Overrides,
        /// Ratio bound gamma >= 1, or "inf", or "auto" (gamma = 1 + 2h).
        #[arg(long, default_value = "auto")]
        gamma: String,
        /// A priori lower bound on the cluster half-width (default: h).
        #[arg(long)]
        h_lower: Option<f64>,
        /// Use these measured moments instead of the built-in scenario.
        #[arg(long)]
        moments: Option<PathBuf>,
    },
    /// Emit the plot-ready data behind the standard figures.
    Figures {
        /// Which figure: 1 (h = 0.1 error set), 2 (h = 0.05), or
        /// 3 (constrained reconstruction).
        which: u8,
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

enum Failure {
    Input(anyhow::Error),
    Inversion(InversionError),
    Check(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    Ok(serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("parsing {}: {e}", path.display()))?)
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    match out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)
                        .map_err(|e| anyhow::anyhow!("creating {}: {e}", dir.display()))?;
                }
            }
            std::fs::write(path, text)
                .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput {
    schema: u32,
    signal: Signal,
    diagnostics: prony_leaves::inverse::InversionDiagnostics,
}

#[derive(Serialize)]
struct ConstantsOutput {
    schema: u32,
    #[serde(flatten)]
    bundle: ConstantsBundle,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Forward { input, count, out } => {
            let signal: Signal = read_json(&input)?;
            let count = count.unwrap_or(2 * signal.d());
            if count == 0 {
                return Err(Failure::Input(anyhow::anyhow!("count must be positive")));
            }
            emit(&compute_moments(&signal, count), out.as_ref())
        }
        Command::Solve {
            input,
            d,
            out,
            imag_tol,
            collision_tol,
            refine_steps,
        } => {
            let mu: MomentVector = read_json(&input)?;
            if d == 0 || mu.len() != 2 * d {
                return Err(Failure::Input(anyhow::anyhow!(
                    "solve needs exactly 2d moments (d = {d}, got {})",
                    mu.len()
                )));
            }
            let cfg = InversionConfig {
                real_root_imag_tol: imag_tol,
                collision_tol,
                refine_steps,
            };
            let (signal, diagnostics) =
                solve_prony_detailed(&mu, d, &cfg).map_err(Failure::Inversion)?;
            emit(
                &SolveOutput {
                    schema: 1,
                    signal,
                    diagnostics,
                },
                out.as_ref(),
            )
        }
        Command::Constants {
            d,
            eta,
            m,
            m_upper,
            kappa,
            only,
            out,
        } => {
            if d == 0 || !(eta > 0.0) || !(0.0 < m && m < m_upper) {
                return Err(Failure::Input(anyhow::anyhow!(
                    "need d >= 1, eta > 0 and 0 < m < M"
                )));
            }
            let bundle = compute_constants(d, &RegularityParams::new(eta, m, m_upper), kappa);
            match only {
                Some(name) => {
                    let value = match name.as_str() {
                        "C1" => Some(bundle.c1),
                        "C2" => Some(bundle.c2),
                        "C3" => Some(bundle.c3),
                        "C4" => Some(bundle.c4),
                        "C5" => Some(bundle.c5),
                        "C6" => Some(bundle.c6),
                        "C7" => Some(bundle.c7),
                        "C8" => Some(bundle.c8),
                        "r" => Some(bundle.r),
                        "R" => Some(bundle.r_big),
                        "K3" => bundle.k3,
                        "K4" => Some(bundle.k4),
                        _ => {
                            return Err(Failure::Input(anyhow::anyhow!(
                                "unknown constant {name:?}"
                            )))
                        }
                    };
                    match value {
                        Some(v) => {
                            println!("{v}");
                            Ok(())
                        }
                        None => Err(Failure::Input(anyhow::anyhow!(
                            "{name} is undefined for d = {d}"
                        ))),
                    }
                }
                None => emit(&ConstantsOutput { schema: 1, bundle }, out.as_ref()),
            }
        }
        Command::ErrorSet(overrides) => {
            let cfg = ExperimentConfig::resolve(&overrides)?;
            if cfg.d < 2 {
                return Err(Failure::Input(anyhow::anyhow!(
                    "error-set experiments need d >= 2"
                )));
            }
            let pass = experiments::run_error_set(&cfg)?;
            if pass {
                println!("all containment checks passed");
                Ok(())
            } else {
                Err(Failure::Check("a containment check failed".into()))
            }
        }
        Command::WorstCase(overrides) => {
            let cfg = ExperimentConfig::resolve(&overrides)?;
            if cfg.d < 2 {
                return Err(Failure::Input(anyhow::anyhow!(
                    "worst-case experiments need d >= 2"
                )));
            }
            let (witness_ok, human) = experiments::run_worst_case(&cfg)?;
            println!("{human}");
            if witness_ok {
                Ok(())
            } else {
                Err(Failure::Check("a lower-bound witness check failed".into()))
            }
        }
        Command::Leaves { overrides, q } => {
            let cfg = ExperimentConfig::resolve(&overrides)?;
            experiments::run_leaves(&cfg, q)?;
            Ok(())
        }
        Command::Improve {
            overrides,
            gamma,
            h_lower,
            moments,
        } => {
            let cfg = ExperimentConfig::resolve(&overrides)?;
            let rule = GammaRule::parse(&gamma)?;
            let (feasible, human) =
                experiments::run_improve(&cfg, rule, h_lower, moments.as_deref())?;
            println!("{human}");
            if feasible {
                Ok(())
            } else {
                Err(Failure::Check(
                    "improved output violates the constraint".into(),
                ))
            }
        }
        Command::Figures { which, out, seed } => {
            let pass = experiments::run_figures(which, &out, seed)?;
            if pass {
                Ok(())
            } else {
                Err(Failure::Check("a figure-level check failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("input error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Inversion(e)) => {
            eprintln!("inversion error ({:?}): {}", e.kind, e.detail);
            ExitCode::from(3)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(4)
        }
    }
}
