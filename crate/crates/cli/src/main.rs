use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tfnp_core::harness::RoundTripOptions;
use tfnp_lab::commands::{self, CliError, Oracle, Output};

#[derive(Parser)]
#[command(name = "tfnp-lab", version, about = "Reductions, oracles and counterexample hunts for TFNP search problems")]
struct Cli {
    /// Worker threads for independent (instance, reduction) pairs and hunt jobs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate seeded instances.
    Gen {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: u32,
        /// Potential width for LocalOPT kinds.
        #[arg(long)]
        m: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Apply a reduction to each instance in a file.
    Reduce {
        #[arg(long)]
        reduction: String,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Solve {
        #[arg(long, value_enum)]
        oracle: Oracle,
        #[arg(short, long)]
        input: PathBuf,
        /// Cap for the enumerate oracle.
        #[arg(long, default_value_t = 1000)]
        limit: usize,
    },
    /// Check certificates; exits 1 if any is rejected.
    Verify {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Pull reduced solutions back and verify them; one JSON report per line.
    Roundtrip {
        #[arg(long)]
        reduction: String,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        exhaustive_max_n: u32,
        #[arg(long, default_value_t = 100)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search for sequences the Quotient Pigeon → Constrained Long Choice pull-back cannot handle.
    Hunt {
        #[arg(long)]
        family: String,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        /// `a..b`, or `k` for `0..k`.
        #[arg(long, value_parser = commands::parse_seeds)]
        seeds: std::ops::Range<u64>,
        #[arg(long, default_value_t = 200)]
        sample: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the acceptance criteria; exits 0 iff every gate passes.
    Suite {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Serve the game session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: &Output, path: Option<&PathBuf>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, &out.text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(out.text.as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn serve(host: &str, port: u16) -> Result<(), CliError> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| CliError::Runtime(format!("cannot bind {host}:{port}: {e}")))?;
        eprintln!("listening on http://{}", listener.local_addr().map_err(|e| CliError::Runtime(e.to_string()))?);
        tfnp_lab::server::serve(listener).await.map_err(|e| CliError::Runtime(e.to_string()))
    })
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (out, path) = match cli.cmd {
        Cmd::Gen { kind, n, m, seed, count, output } => (commands::gen(&kind, n, m, seed, count)?, output),
        Cmd::Reduce { reduction, input, output } => (commands::reduce(&reduction, &read(&input)?)?, output),
        Cmd::Solve { oracle, input, limit } => (commands::solve(oracle, &read(&input)?, limit)?, None),
        Cmd::Verify { input, solution } => (commands::verify(&read(&input)?, &read(&solution)?)?, None),
        Cmd::Roundtrip { reduction, input, exhaustive_max_n, sample, seed } => {
            let opts = RoundTripOptions {
                exhaustive_max_n,
                sample,
                seed,
                ..RoundTripOptions::default()
            };
            (commands::roundtrip(&reduction, &read(&input)?, &opts, cli.jobs)?, None)
        }
        Cmd::Hunt { family, n, seeds, sample, output } => {
            let (out, summary) = commands::hunt(&family, n, seeds, sample, cli.jobs)?;
            eprintln!("{summary}");
            (out, output)
        }
        Cmd::Suite { config, json } => {
            let text = config.as_ref().map(read).transpose()?;
            (commands::suite(text.as_deref(), json)?, None)
        }
        Cmd::Serve { port, host } => {
            serve(&host, port)?;
            return Ok(true);
        }
    };
    emit(&out, path.as_ref())?;
    Ok(out.ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
