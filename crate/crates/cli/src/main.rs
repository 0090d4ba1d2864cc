use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use traptp_cli::commands::{self, Report, DEFAULT_GAME_CIRCUIT};
use traptp_cli::config::{parse_budgets, resolve_seed, Config, SEED_ENV};
use traptp_cli::frame::DEFAULT_MAX_FRAME;
use traptp_cli::protocol::{run_client, serve, ClientRequest, ServerOptions};
use traptp_core::circuit::CircuitDesc;
use traptp_core::clcrypto::mac::DEFAULT_VECTORS;
use traptp_core::games::GameKind;
use traptp_core::qsim::StateVector;
use traptp_core::traptp::{Budgets, Variant};

#[derive(Parser)]
#[command(name = "traptp", version, about = "Verifiable homomorphic encryption on the trap code, simulated")]
struct Cli {
    /// Master seed; the TRAPTP_SEED environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Code concatenation level.
    #[arg(long, global = true, default_value_t = 1)]
    level: u8,
    /// Gate budgets as t,p,h.
    #[arg(long, global = true, default_value = "2,2,2", value_parser = budgets)]
    budgets: Budgets,
    /// Trial count; each experiment has its own default.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Game adversary: honest, always-0, adaptive, random-pauli, weight-N,
    /// log-tamper, mac-forgery or wrong-circuit.
    #[arg(long, global = true, default_value = "honest")]
    adversary: String,
    /// Server address for serve and connect.
    #[arg(long, global = true, default_value = "127.0.0.1:7878")]
    addr: String,
    #[command(subcommand)]
    cmd: Cmd,
}

fn budgets(s: &str) -> Result<Budgets, String> {
    parse_budgets(s).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Correctness,
    Game,
    AttackStats,
}

#[derive(Clone, Copy, ValueEnum)]
enum Game {
    Indver,
    Indver2,
    Hybrid,
}

#[derive(Subcommand)]
enum Cmd {
    /// Quick invariant checks across all modules.
    Selftest {
        /// MAC test vectors to check instead of the built-in file.
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Run an experiment and print CSV plus a summary.
    Run {
        experiment: Experiment,
        #[arg(long, value_enum, default_value = "indver")]
        game: Game,
        /// standard, side-channel or shadow (hybrid game only).
        #[arg(long, default_value = "standard")]
        variant: Variant,
        /// Circuit text; `;` separates statements.
        #[arg(long, default_value = DEFAULT_GAME_CIRCUIT)]
        circuit: String,
        /// Attack weight for attack-stats; 0 is a single random X or Z.
        #[arg(long, default_value_t = 1)]
        weight: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate delegated computations.
    Serve {
        /// Flip one byte of every log sent back.
        #[arg(long)]
        tamper_log: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_FRAME)]
        max_frame: usize,
        /// Stop after this many sessions.
        #[arg(long)]
        sessions: Option<usize>,
    },
    /// Delegate a circuit to a server and verify the result.
    Connect {
        #[arg(long)]
        circuit: String,
        /// Input basis state, one of 0 1 + - per qubit; all zeros by default.
        #[arg(long)]
        input: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_FRAME)]
        max_frame: usize,
    },
}

fn emit(report: &Report, csv: Option<&PathBuf>) -> Result<ExitCode, String> {
    match csv {
        Some(p) => std::fs::write(p, &report.csv).map_err(|e| format!("{}: {e}", p.display()))?,
        None => print!("{}", report.csv),
    }
    print!("{}", report.summary);
    Ok(if report.ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let env = std::env::var(SEED_ENV).ok();
    let cfg = Config {
        seed: resolve_seed(cli.seed, env.as_deref()).map_err(|e| e.to_string())?,
        level: cli.level,
        budgets: cli.budgets,
        trials: cli.trials,
        adversary: cli.adversary,
        addr: cli.addr,
    };
    cfg.validate().map_err(|e| e.to_string())?;
    match cli.cmd {
        Cmd::Selftest { vectors } => {
            let text = match vectors {
                Some(p) => std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?,
                None => DEFAULT_VECTORS.to_string(),
            };
            emit(&commands::selftest(&text, cfg.seed), None)
        }
        Cmd::Run { experiment, game, variant, circuit, weight, csv } => {
            let c = CircuitDesc::parse(&circuit).map_err(|e| e.to_string())?;
            let report = match experiment {
                Experiment::Correctness => commands::run_correctness(&cfg),
                Experiment::Game => {
                    let kind = match game {
                        Game::Indver => GameKind::IndVer,
                        Game::Indver2 => GameKind::IndVer2,
                        Game::Hybrid => GameKind::Hybrid,
                    };
                    commands::run_game(&cfg, kind, variant, &c)
                }
                Experiment::AttackStats => commands::run_attack_stats(&cfg, weight, &c),
            }
            .map_err(|e| e.to_string())?;
            emit(&report, csv.as_ref())
        }
        Cmd::Serve { tamper_log, max_frame, sessions } => {
            let listener = TcpListener::bind(&cfg.addr).map_err(|e| format!("{}: {e}", cfg.addr))?;
            eprintln!("listening on {}", listener.local_addr().map_err(|e| e.to_string())?);
            let opts = ServerOptions { seed: cfg.seed, max_frame, tamper_log };
            serve(&listener, &opts, sessions).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Connect { circuit, input, max_frame } => {
            let c = CircuitDesc::parse(&circuit).map_err(|e| e.to_string())?;
            let init = input.unwrap_or_else(|| "0".repeat(c.n_qubits()));
            let state = StateVector::new_register(c.n_qubits(), &init).map_err(|e| e.to_string())?;
            let mut stream = TcpStream::connect(&cfg.addr).map_err(|e| format!("{}: {e}", cfg.addr))?;
            let req = ClientRequest { circuit: c, input: state, level: cfg.level, budgets: cfg.budgets, seed: cfg.seed, max_frame };
            let report = run_client(&mut stream, &req).map_err(|e| e.to_string())?;
            print!("{}", report.render());
            Ok(if report.accepted { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
