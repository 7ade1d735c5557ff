use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pnlab::harness::{self, RunConfig};
use pnlab::receiver::ReceiverKind;

#[derive(Parser)]
#[command(name = "pnlab", version, about = "Phase-noise receiver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write the results CSV.
    Run {
        /// TOML config file; flags below override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// SNR points in dB, comma separated.
        #[arg(long, value_delimiter = ',')]
        snr: Option<Vec<f64>>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        /// Receivers, comma separated: bpmfep, eks, known_pn.
        #[arg(long, value_delimiter = ',')]
        receiver: Option<Vec<ReceiverKind>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Results CSV; a per-frame table is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired comparison of two receivers from a results CSV.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "eks")]
        baseline: ReceiverKind,
        #[arg(long, default_value = "bpmfep")]
        subject: ReceiverKind,
    },
    /// Check the message-passing kernels against brute-force oracles.
    Selftest,
}

fn run(cli: Cli) -> pnlab::Result<bool> {
    match cli.command {
        Command::Run {
            config,
            snr,
            frames,
            iters,
            receiver,
            seed,
            out,
        } => {
            let mut cfg = match config {
                Some(p) => RunConfig::from_file(&p)?.0,
                None => RunConfig::default(),
            };
            if let Some(v) = snr {
                cfg.snr_db_grid = v;
            }
            if let Some(v) = frames {
                cfg.n_frames = v;
            }
            if let Some(v) = iters {
                cfg.iters = v;
            }
            if let Some(v) = receiver {
                cfg.receivers = v;
            }
            if let Some(v) = seed {
                cfg.master_seed = v;
            }
            if out.is_some() {
                cfg.out = out;
            }
            cfg.validate()?;
            let res = match cfg.out.clone() {
                Some(path) => {
                    let res = harness::run_experiment_with(&cfg, |partial| {
                        harness::write_experiment(partial, &path)
                    })?;
                    log::info!("wrote {}", path.display());
                    res
                }
                None => {
                    let res = harness::run_experiment(&cfg)?;
                    harness::write_results(&res.rows, std::io::stdout().lock())?;
                    res
                }
            };
            log::info!("{} rows", res.rows.len());
            Ok(true)
        }
        Command::Summarize {
            input,
            baseline,
            subject,
        } => {
            let frames_path = harness::frames_path(&input);
            let frames = harness::read_frames(std::fs::File::open(&frames_path)?)?;
            let cmp = harness::summarize(&frames, baseline, subject)?;
            harness::write_comparison(&cmp, std::io::stdout().lock())?;
            Ok(true)
        }
        Command::Selftest => {
            let checks = pnlab::selftest::run_all()?;
            for c in &checks {
                println!("{c}");
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
