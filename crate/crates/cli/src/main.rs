//! Batch front end for the barcode pipeline.
//!
//! Exit codes: 0 success, 2 configuration errors, 3 memory cap,
//! 4 numerical failures.

use clap::{Parser, Subcommand};
use gfbarcode::error::Error;
use gfbarcode::persistence::{bottleneck, reduce, Barcode};
use gfbarcode::pipeline::{run_pipeline, sample_pieces, samples_to_json, RunConfig, RunOptions};
use gfbarcode::triplet;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "gfbarcode",
    about = "Generating-function barcodes of composed planar twist maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline from a JSON configuration.
    Compute {
        #[arg(long)]
        config: PathBuf,
        /// Override the mesh parameter m.
        #[arg(long)]
        mesh: Option<u32>,
        /// Barcode output path (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// SVG plot output path (overrides the config).
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Reference barcode for a bottleneck comparison.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Worker-pool cap for the parallel stages.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Cell-count cap (overrides the config).
        #[arg(long)]
        memory_cap: Option<u64>,
    },
    /// Stage 1 only: sample every piece's generating function.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mesh: Option<u32>,
        /// Output path for the sample JSON (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce an externally supplied triplet matrix.
    Reduce {
        #[arg(long)]
        matrix: PathBuf,
        /// Output path for the reduced matrix and pairing (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bottleneck distance between two barcode files.
    Bottleneck { a: PathBuf, b: PathBuf },
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ConfigInvalid(_) | Error::MeshMismatch { .. } | Error::Json(_) | Error::Io(_) => 2,
        Error::MemoryCap { .. } => 3,
        Error::InvalidBounds(_)
        | Error::NoConvergence { .. }
        | Error::EmptyComplex
        | Error::NonMonotone { .. }
        | Error::BudgetExceeded { .. } => 4,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Compute {
            config,
            mesh,
            out,
            svg,
            reference,
            threads,
            memory_cap,
        } => {
            let cfg = RunConfig::from_path(&config)?;
            let opts = RunOptions {
                mesh,
                memory_cap,
                threads,
                out,
                svg,
                reference,
            };
            let result = run_pipeline(&cfg, &opts)?;
            println!("cells: {}", result.report.total_cells);
            println!(
                "barcode: {} infinite, {} finite bars",
                result.report.infinite_bars, result.report.finite_bars
            );
            for bar in &result.barcode.bars {
                match bar.death {
                    Some(d) => println!(
                        "  deg {} ({:+.6e}, {:+.6e}] x{}",
                        bar.degree, bar.birth, d, bar.multiplicity
                    ),
                    None => println!(
                        "  deg {} ({:+.6e}, inf) x{}",
                        bar.degree, bar.birth, bar.multiplicity
                    ),
                }
            }
            println!("error budget: {:.6e}", result.error_budget);
            if let Some(d) = result.report.bottleneck_to_reference {
                println!("bottleneck to reference: {:.6e}", d);
            }
            Ok(())
        }
        Command::Sample { config, mesh, out } => {
            let cfg = RunConfig::from_path(&config)?;
            let opts = RunOptions {
                mesh,
                ..RunOptions::default()
            };
            let samples = sample_pieces(&cfg, &opts)?;
            let json = serde_json::to_string_pretty(&samples_to_json(&samples))?;
            match out {
                Some(path) => std::fs::write(path, json)?,
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Reduce { matrix, out } => {
            let file = std::fs::File::open(&matrix)?;
            let filtered = triplet::parse_matrix(std::io::BufReader::new(file))?;
            let red = reduce(&filtered);
            let mut buf = Vec::new();
            triplet::write_reduction(&mut buf, &red)?;
            match out {
                Some(path) => std::fs::write(path, buf)?,
                None => print!("{}", String::from_utf8_lossy(&buf)),
            }
            Ok(())
        }
        Command::Bottleneck { a, b } => {
            let ba = Barcode::from_json(&std::fs::read_to_string(&a)?)?;
            let bb = Barcode::from_json(&std::fs::read_to_string(&b)?)?;
            println!("{:.12e}", bottleneck(&ba, &bb));
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
