use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dmfsense_cli::commands;
use dmfsense_cli::render::Format;
use dmfsense_cli::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "dmfsense",
    version,
    about = "Impedance-sensing simulator for a 169-electrode DMF array"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derive classification thresholds and write a calibration file.
    Calibrate {
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long, value_name = "INT")]
        seed: Option<u64>,
    },
    /// Run a scenario and render every status map.
    Scan {
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        #[arg(long, value_name = "PATH")]
        calibration: PathBuf,
        #[arg(long, default_value = "ascii", value_parser = parse_format)]
        format: Format,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long, value_name = "INT")]
        seed: Option<u64>,
    },
    /// Rebuild droplet trajectories from `scan --format json` output.
    Track {
        /// Status-map stream; standard input when omitted or `-`.
        input: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Io {
                path: p.display().to_string(),
                source: e,
            }
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn origin(path: Option<&Path>) -> String {
    path.map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string())
}

fn write_all(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = output(path)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Io {
            path: origin(path),
            source: e,
        })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate {
            scenario,
            out,
            seed,
        } => {
            let file = commands::calibrate(&scenario, seed)?;
            write_all(out.as_deref(), &file.to_json())
        }
        Command::Scan {
            scenario,
            calibration,
            format,
            out,
            seed,
        } => {
            let (array, maps) = commands::scan(&scenario, &calibration, seed)?;
            let mut sink = output(out.as_deref())?;
            commands::write_scan(format, &array, &maps, &mut sink, &origin(out.as_deref()))
        }
        Command::Track { input, out } => {
            let report = match input.as_deref() {
                Some(p) if p != Path::new("-") => {
                    let f = File::open(p).map_err(|e| CliError::Io {
                        path: p.display().to_string(),
                        source: e,
                    })?;
                    commands::track(BufReader::new(f), &p.display().to_string())?
                }
                _ => commands::track(io::stdin().lock(), "<stdin>")?,
            };
            write_all(out.as_deref(), &report.to_json())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // Output piped into `head` and the like.
        Err(CliError::Io { source, .. }) if source.kind() == io::ErrorKind::BrokenPipe => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dmfsense: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
