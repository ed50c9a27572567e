use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use mirror_game::harness::{measure_memory, play_match, run_montecarlo, run_repl, CampaignConfig, ReportFormat};
use mirror_game::oracle::{decode_random_string, RandomBitString};
use mirror_game::strategies::StrategyName;
use mirror_game::two_bin::{enumerate_prob, simulate_two_bin, TwoBinConfig, TwoBinRow, Variant};

#[derive(Parser)]
#[command(name = "mirror-game", version, about = "Mirror game simulator with metered player memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one game and print its transcript
    Play {
        #[arg(long = "n")]
        n: u64,
        #[arg(long, default_value = "bob-uniform")]
        bob: String,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Play Bob yourself from the terminal
        #[arg(long)]
        interactive: bool,
    },
    /// Monte Carlo campaign over several N
    Mc {
        #[arg(long = "n", value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        bob: String,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        workers: Option<usize>,
        /// Add wall-clock time to each row (makes output non-reproducible)
        #[arg(long)]
        timing: bool,
    },
    /// Peak metered memory against N
    Memory {
        #[arg(long = "n", value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Two-bin process: simulation, closed form and enumeration
    Twobin {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        t: u64,
        #[arg(long, default_value = "bob")]
        variant: String,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include the closed-form probability (Bob starts, even m)
        #[arg(long)]
        exact: bool,
        /// Include the exhaustive-enumeration probability (m <= 6)
        #[arg(long)]
        enumerate: bool,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Decode a raw random bit file into a matching list
    Decode {
        #[arg(long)]
        bits: PathBuf,
        #[arg(long = "n")]
        n: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    match cli.command {
        Command::Play { n, bob, c, seed, interactive } => {
            if interactive {
                let transcript = run_repl(io::stdin().lock(), stdout.lock(), n, c, seed)?;
                eprint!("{}", transcript.to_text());
                return Ok(());
            }
            let bob: StrategyName = bob.parse()?;
            let record = play_match(StrategyName::AlicePartition, bob, n, c, seed)?;
            let mut out = stdout.lock();
            out.write_all(record.transcript.to_text().as_bytes())?;
            if let Some(reason) = &record.transcript.abort_reason {
                eprintln!("abort: {reason}");
            }
            eprintln!("k = {}, peak Alice bits = {}, peak Bob bits = {}", record.k, record.peak_alice_bits, record.peak_bob_bits);
        }
        Command::Mc { n, trials, bob, c, seed, out, format, workers, timing } => {
            let format: ReportFormat = format.parse()?;
            let config = CampaignConfig {
                ns: n,
                c,
                bob: bob.parse()?,
                trials,
                master_seed: seed,
                workers: workers.unwrap_or_else(rayon::current_num_threads),
                output: out.clone(),
                format,
                timing,
            };
            let report = run_montecarlo(&config)?;
            if out.is_none() {
                stdout.lock().write_all(report.render(format)?.as_bytes())?;
            }
        }
        Command::Memory { n, trials, c, seed } => {
            let report = measure_memory(&n, c, trials, seed)?;
            let mut json = serde_json::to_string_pretty(&report)?;
            json.push('\n');
            stdout.lock().write_all(json.as_bytes())?;
        }
        Command::Twobin { m, t, variant, trials, seed, exact, enumerate, format } => {
            let variant: Variant = variant.parse()?;
            let config = TwoBinConfig { m, t, variant, trials, seed };
            let result = simulate_two_bin(&config)?;
            let mut known = if exact { result.exact.clone() } else { None };
            if enumerate {
                let enumerated = enumerate_prob(m, t, variant)?;
                if let Some(closed) = &known {
                    if *closed != enumerated {
                        bail!("closed form {closed} disagrees with enumeration {enumerated}");
                    }
                }
                known = Some(enumerated);
            }
            let row = TwoBinRow::new(&config, &result, known);
            let mut out = stdout.lock();
            match format.as_str() {
                "csv" => writeln!(out, "{}\n{}", TwoBinRow::CSV_HEADER, row.to_csv())?,
                "json" => writeln!(out, "{}", serde_json::to_string_pretty(&row)?)?,
                other => bail!("unknown format {other:?}"),
            }
        }
        Command::Decode { bits, n } => {
            let bytes = std::fs::read(&bits).with_context(|| format!("reading {}", bits.display()))?;
            let list = decode_random_string(&RandomBitString::from_bytes(bytes), n)?;
            stdout.lock().write_all(list.to_list_file().as_bytes())?;
        }
    }
    Ok(())
}
