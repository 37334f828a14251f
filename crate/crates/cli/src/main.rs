mod commands;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::Outcome;

/// Debugging and repair of description-logic TBoxes.
#[derive(Debug, Parser)]
#[command(name = "ontorepair", version)]
struct Cli {
    /// Print a schema-versioned JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for pseudo-random oracle errors.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Fraction of oracle answers to flip, chosen from the seed.
    #[arg(long, global = true)]
    error_rate: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Consistency and unsatisfiable concept names.
    Check { tbox: PathBuf },
    /// All justifications of an entailed axiom.
    Justify {
        tbox: PathBuf,
        #[arg(long)]
        axiom: String,
    },
    /// Minimal unsatisfiability-preserving sub-TBoxes of a concept name.
    Mups {
        tbox: PathBuf,
        #[arg(long)]
        concept: String,
    },
    /// Minimal incoherence-preserving sub-TBoxes.
    Mips { tbox: PathBuf },
    /// Minimal hitting sets of the MIPS.
    Hst { tbox: PathBuf },
    /// Delete-only repairs of the wrong axioms and incoherence.
    Debug {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = Mode::AllFalse)]
        mode: Mode,
    },
    /// Add-only repair of the missing axioms.
    Complete {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long, value_enum, default_value_t = Choice::MostGeneral)]
        choice: Choice,
    },
    /// Interleaved debugging and completion.
    Repair {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = Mode::AllFalse)]
        mode: Mode,
    },
    /// Checks every repair of a JSON list against the problem.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        repairs: PathBuf,
    },
    /// Preference relations between the repairs of a JSON list.
    Compare {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        repairs: PathBuf,
        #[arg(long, value_enum, default_value_t = Universe::Auto)]
        universe: Universe,
    },
    /// Ontology networks given by a manifest.
    Network {
        #[command(subcommand)]
        action: NetworkAction,
    },
    /// Runs the HTTP session service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// TOML file with `port`, `data_dir` and `conflict_order`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum NetworkAction {
    /// Coherence, conservativity and candidate missing is-a relations.
    Check {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Deletions restoring coherence, mappings first.
    Repair {
        #[arg(long)]
        manifest: PathBuf,
        /// Axioms over qualified names (`O1__A SubClassOf O2__X`) that must not follow.
        #[arg(long)]
        wrong: Option<PathBuf>,
        /// Truth TBox over qualified names; confirmed axioms are kept.
        #[arg(long)]
        oracle: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ProblemArgs {
    tbox: PathBuf,
    /// Truth TBox answering oracle queries, or a `.jsonl` log of recorded answers.
    #[arg(long)]
    oracle: Option<PathBuf>,
    /// Axioms that should follow, one per line.
    #[arg(long)]
    missing: Option<PathBuf>,
    /// Axioms that should not follow, one per line.
    #[arg(long)]
    wrong: Option<PathBuf>,
    /// Treatment of Unknown verdicts.
    #[arg(long, value_enum, default_value_t = Policy::Prudent)]
    policy: Policy,
    /// Ids of axioms that must not be deleted, e.g. `--protect 3 --protect 7`.
    #[arg(long = "protect")]
    protect: Vec<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Hs,
    AllFalse,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Choice {
    MostGeneral,
    MissingItself,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Universe {
    /// Names and shapes of the problem together with the compared axioms.
    Auto,
    /// Only the generated shapes.
    Shape,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Policy {
    Prudent,
    Strict,
    Credulous,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let json = cli.json;
    match commands::run(cli) {
        Ok(Outcome { code, text, report }) => {
            let mut out = std::io::stdout().lock();
            // A closed pipe (`| head`) is not an error of ours.
            let _ = if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("reports serialize"))
            } else {
                write!(out, "{text}")
            };
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
