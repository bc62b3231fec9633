use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpathnet::scenarios::{verify_preset, Tolerances};
use qpathnet_cli::config::Mode;
use qpathnet_cli::report::{report, sig12};
use qpathnet_cli::run::{run, RunError};

const EXIT_CONFIG: u8 = 2;
const EXIT_ENGINE: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "qpathnet", version, about = "Virtual-path analysis of sequential quantum measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or `preset:<name>` and write its artifacts.
    Run {
        source: String,
        /// Output directory (also accepted as --out).
        out_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Largest grid spacing in pointer units.
        #[arg(long)]
        grid_step: Option<f64>,
        /// Grid padding beyond the extreme shifts, in pointer widths.
        #[arg(long)]
        grid_extent: Option<f64>,
        /// Sweep widths, comma separated (sweep mode).
        #[arg(long, value_delimiter = ',')]
        widths: Option<Vec<f64>>,
    },
    /// Tabulate run summaries and write plot-ready CSV files.
    Report {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        /// Directory for plot CSV files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a preset as an editable scenario file.
    Export {
        source: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a preset's expected values against the engine.
    Verify { source: String },
    /// List the built-in presets.
    Presets,
}

fn set_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("QPATHNET_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("QPATHNET_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = set_threads() {
        return fail(EXIT_CONFIG, e);
    }
    match cli.command {
        Command::Run {
            source,
            out_dir,
            out,
            mode,
            seed,
            trials,
            grid_step,
            grid_extent,
            widths,
        } => {
            let mut cfg = match qpathnet_cli::load(&source) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let r = &mut cfg.run;
            if let Some(m) = mode {
                r.mode = m;
            }
            r.seed = seed.or(r.seed);
            r.trials = trials.or(r.trials);
            r.grid.step = grid_step.or(r.grid.step);
            r.grid.padding = grid_extent.or(r.grid.padding);
            if let Some(w) = widths {
                r.widths = w;
            }
            let scenario = match cfg.build() {
                Ok(s) => s,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let dir = out.or(out_dir).unwrap_or_else(|| PathBuf::from("out"));
            match run(&scenario, &dir) {
                Ok(o) => {
                    for f in o.files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e @ RunError::Engine(_)) => fail(EXIT_ENGINE, e),
                Err(e) => fail(EXIT_IO, e),
            }
        }
        Command::Report { summaries, out } => match report(&summaries, out.as_deref()) {
            Ok(r) => {
                print!("{}", r.table);
                for f in r.files {
                    println!("wrote {}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(EXIT_CONFIG, e),
        },
        Command::Export { source, out } => {
            let cfg = match qpathnet_cli::load(&source) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let text = cfg.to_json() + "\n";
            match out {
                Some(p) => match std::fs::write(&p, text) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(EXIT_IO, format!("{}: {e}", p.display())),
                },
                None => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
            }
        }
        Command::Verify { source } => {
            let Some(name) = source.strip_prefix("preset:") else {
                return fail(EXIT_CONFIG, "verify takes `preset:<name>`");
            };
            let preset = match qpathnet::scenarios::preset(name) {
                Ok(p) => p,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let rep = verify_preset(&preset, &Tolerances::default());
            for e in &rep.entries {
                println!(
                    "{:<4} {:<32} expected {:>20} computed {:>20} delta {:>20} bound {}",
                    if e.passed { "ok" } else { "FAIL" },
                    e.name,
                    sig12(e.expected),
                    sig12(e.computed),
                    sig12(e.delta),
                    sig12(e.bound)
                );
            }
            if rep.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_ENGINE)
            }
        }
        Command::Presets => {
            for name in qpathnet::scenarios::PRESET_NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
