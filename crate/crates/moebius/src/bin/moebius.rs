use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use moebius::corpus::{render, run_source};
use moebius::eval::{default_fuel, Machine};
use moebius::frontend::{dump::dump_program, parse_program, pretty};
use moebius::metatheory::{check_lemma, Lemma};
use moebius::typing::{check_program, equal::without_constraints, Checked};

#[derive(Parser)]
#[command(name = "moebius", about = "Multi-level contextual modal lambda calculus")]
struct Cli {
    /// Compare types without consulting solved type variables.
    #[arg(long, global = true)]
    no_constraints: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Type-check every definition and the entry expression.
    Check { file: PathBuf },
    /// Evaluate the entry expression and print its value.
    Run {
        file: PathBuf,
        /// Print every intermediate term.
        #[arg(long)]
        trace: bool,
        /// Maximum number of reduction steps.
        #[arg(long)]
        fuel: Option<u64>,
        /// Re-validate every match against the case rule's premises.
        #[arg(long)]
        oracle: bool,
    },
    /// Print the elaborated program as canonical s-expressions.
    DumpAst { file: PathBuf },
    /// Print the golden record for a program: types, value and levels.
    Golden { file: PathBuf },
    /// Run a randomized metatheory check.
    Meta {
        #[arg(long)]
        lemma: String,
        #[arg(long, default_value_t = 300)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

const TYPE_ERROR: u8 = 1;
const PARSE_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;

fn load(file: &PathBuf) -> Result<Checked, ExitCode> {
    let src = std::fs::read_to_string(file).map_err(|e| {
        eprintln!("{}: {e}", file.display());
        ExitCode::from(PARSE_ERROR)
    })?;
    let prog = parse_program(&src).map_err(|e| {
        eprintln!("{}:{e}", file.display());
        ExitCode::from(PARSE_ERROR)
    })?;
    check_program(&prog).map_err(|e| {
        eprintln!("{}: {e}", file.display());
        ExitCode::from(TYPE_ERROR)
    })
}

fn run(cli: Cli) -> ExitCode {
    match cli.cmd {
        Cmd::Check { file } => match load(&file) {
            Ok(c) => {
                for (n, t, _) in &c.defs {
                    println!("{n} : {}", pretty::ty(t));
                }
                if let Some((_, t)) = &c.main {
                    println!("- : {}", pretty::ty(t));
                }
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Cmd::Run { file, trace, fuel, oracle } => {
            let c = match load(&file) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let main = match c.closed_main() {
                Ok(Some(m)) => m,
                Ok(None) => {
                    eprintln!("{}: no entry expression to run", file.display());
                    return ExitCode::from(RUNTIME_ERROR);
                }
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(RUNTIME_ERROR);
                }
            };
            let mut m = Machine::new(fuel.unwrap_or_else(default_fuel));
            m.oracle |= oracle;
            let mut out = std::io::stdout().lock();
            let result = m.run_with(&main, |t| {
                if trace {
                    let _ = writeln!(out, "⟹ {}", pretty::term(t));
                }
            });
            match result {
                Ok(v) => {
                    let _ = writeln!(out, "{}", pretty::term(&v));
                    if m.discrepancies > 0 {
                        eprintln!("oracle: {} discrepancies", m.discrepancies);
                        return ExitCode::from(RUNTIME_ERROR);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(RUNTIME_ERROR)
                }
            }
        }
        Cmd::DumpAst { file } => match load(&file) {
            Ok(c) => {
                print!("{}", dump_program(&c.defs, c.main.as_ref()));
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Cmd::Golden { file } => match std::fs::read_to_string(&file) {
            Ok(src) => {
                print!("{}", render(&run_source(&src)));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}: {e}", file.display());
                ExitCode::from(PARSE_ERROR)
            }
        },
        Cmd::Meta { lemma, samples, seed } => {
            let Some(l) = Lemma::from_name(&lemma) else {
                eprintln!("unknown lemma `{lemma}`; known: {}", Lemma::names().join(", "));
                return ExitCode::from(2);
            };
            let report = check_lemma(l, samples, seed);
            print!("{report}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.no_constraints {
        without_constraints(|| run(cli))
    } else {
        run(cli)
    }
}
