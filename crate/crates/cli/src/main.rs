use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use ariel_core::harness::{cmd_check, cmd_compile, cmd_run, RunOptions};
use ariel_core::rcode::RCodeProgram;
use ariel_core::trace;
use clap::{Parser, Subcommand};

/// Compile recovery scripts, simulate scenarios and check their traces.
#[derive(Parser)]
#[command(name = "ariel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate ARIEL source into `<stem>.rcod` and `<stem>.cfg`.
    Compile {
        source: PathBuf,
        /// File of `#define NAME value` lines.
        #[arg(long)]
        constants: Option<PathBuf>,
        /// Where to write the outputs; defaults to the source's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Simulate a scenario file.
    Run {
        scenario: PathBuf,
        #[arg(long, env = "ARIEL_SEED", default_value_t = 0)]
        seed: u64,
        /// End time in global milliseconds; overrides the scenario.
        #[arg(long)]
        until: Option<f64>,
        /// Trace output path; the trace goes to stdout if omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evaluate an assertions file against a trace.
    Check { trace: PathBuf, assertions: PathBuf },
    /// Print the instructions of a `.rcod` file.
    Disasm { rcode: PathBuf },
}

fn main() -> ExitCode {
    let code = match Cli::parse().command {
        Command::Compile {
            source,
            constants,
            out_dir,
        } => match cmd_compile(&source, constants.as_deref(), out_dir.as_deref()) {
            Ok(a) => {
                for d in &a.diagnostics {
                    eprintln!("{}: {d}", source.display());
                }
                for p in [&a.rcode_path, &a.config_path].into_iter().flatten() {
                    println!("wrote {}", p.display());
                }
                u8::from(a.has_errors())
            }
            Err(e) => {
                eprintln!("{}: {e}", source.display());
                1
            }
        },
        Command::Run {
            scenario,
            seed,
            until,
            trace: trace_path,
        } => {
            let opts = RunOptions {
                seed,
                until,
                trace: trace_path.clone(),
            };
            match cmd_run(&scenario, &opts) {
                Ok(out) => {
                    if trace_path.is_none() {
                        print!("{}", trace::render(&out.trace));
                    }
                    match out.fault {
                        Some(f) => {
                            eprintln!("{f}");
                            3
                        }
                        None => 0,
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    e.exit_code() as u8
                }
            }
        }
        Command::Check { trace, assertions } => match cmd_check(&trace, &assertions) {
            Ok(report) => {
                print!("{report}");
                report.exit_code() as u8
            }
            Err(e) => {
                eprintln!("{e}");
                e.exit_code() as u8
            }
        },
        Command::Disasm { rcode } => {
            let decoded = fs::read(&rcode)
                .map_err(|e| e.to_string())
                .and_then(|b| RCodeProgram::decode(&b).map_err(|e| e.to_string()));
            match decoded {
                Ok(p) => {
                    print!("{}", p.disassemble());
                    0
                }
                Err(e) => {
                    eprintln!("{}: {e}", rcode.display());
                    1
                }
            }
        }
    };
    ExitCode::from(code)
}
