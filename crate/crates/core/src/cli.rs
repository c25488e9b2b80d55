//! Command-line front end.

use std::ffi::OsString;
use std::io::{self, Write};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::oracle::format_decimal;
use crate::runner::{check_bool, QcConfig, Verdict, DEFAULT_MAX_TESTS, DEFAULT_SEED};
use crate::suites::{oracle_property, run_property, suite, PropName, SuiteName};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSIFIED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ismpbt",
    version,
    about = "Property-based testing of state-machine models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check properties with random traces.
    Run(RunArgs),
    /// Exact probability that a random trace satisfies a property.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropChoice {
    All,
    ReadyInsert,
    EventuallyReady,
    SendThreeOk,
}

impl PropChoice {
    fn single(self) -> Option<PropName> {
        match self {
            PropChoice::All => None,
            PropChoice::ReadyInsert => Some(PropName::ReadyInsert),
            PropChoice::EventuallyReady => Some(PropName::EventuallyReady),
            PropChoice::SendThreeOk => Some(PropName::SendThreeOk),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub suite: SuiteName,
    #[arg(long, value_enum, default_value = "all")]
    pub prop: PropChoice,
    #[arg(long, env = "ISMPBT_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_TESTS, value_parser = clap::value_parser!(u32).range(1..))]
    pub tests: u32,
    /// Trace length; defaults to the property's own bound.
    #[arg(long)]
    pub depth: Option<usize>,
    /// One JSON report per line instead of text.
    #[arg(long)]
    pub json: bool,
    /// Count a run that gives up on discards as a pass.
    #[arg(long)]
    pub allow_exhaust: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub suite: SuiteName,
    #[arg(long, value_enum)]
    pub prop: PropName,
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub suite: SuiteName,
    pub property: PropName,
    pub seed: u64,
    pub tests: u32,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    pub elapsed_ms: u64,
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args, out, err),
        Command::Oracle(args) => cmd_oracle(&args, out, err),
    };
    outcome.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_USAGE
    })
}

fn usage(err: &mut dyn Write, msg: impl std::fmt::Display) -> io::Result<i32> {
    writeln!(err, "error: {msg}")?;
    Ok(EXIT_USAGE)
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let spec = suite(args.suite);
    let props: Vec<PropName> = match args.prop.single() {
        Some(p) => match spec.property(p) {
            Ok(_) => vec![p],
            Err(e) => return usage(err, e),
        },
        None => spec.properties.iter().map(|p| p.name).collect(),
    };
    let cfg = QcConfig::with_seed(args.seed)
        .max_tests(args.tests)
        .expect("clap rejects zero");
    let mut falsified = false;
    let mut gave_up = false;
    for prop in props {
        let start = Instant::now();
        let result = match run_property(args.suite, prop, &cfg, args.depth) {
            Ok(r) => r,
            Err(e) => return usage(err, e),
        };
        let elapsed_ms = start.elapsed().as_millis() as u64;
        falsified |= result.verdict == Verdict::Falsified;
        gave_up |= !check_bool(args.allow_exhaust, &result) && result.verdict == Verdict::Exhausted;
        if args.json {
            let report = RunReport {
                suite: args.suite,
                property: prop,
                seed: args.seed,
                tests: result.tests_run,
                verdict: result.verdict,
                counterexample: result.counterexample.map(|c| c.rendered),
                elapsed_ms,
            };
            writeln!(
                out,
                "{}",
                serde_json::to_string(&report).map_err(io::Error::other)?
            )?;
        } else {
            let bound = args
                .depth
                .unwrap_or_else(|| spec.property(prop).map_or(0, |p| p.bound));
            writeln!(
                out,
                "== {} {} (seed {}, bound {}) ==",
                args.suite, prop, args.seed, bound
            )?;
            writeln!(out, "{}", result.log)?;
        }
    }
    Ok(if falsified {
        EXIT_FALSIFIED
    } else if gave_up {
        EXIT_USAGE
    } else {
        EXIT_OK
    })
}

pub fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let lines = match oracle_property(args.suite, args.prop, args.depth) {
        Ok(lines) => lines,
        Err(e) => return usage(err, e),
    };
    let depth = args
        .depth
        .unwrap_or_else(|| suite(args.suite).property(args.prop).map_or(0, |p| p.bound));
    writeln!(out, "{} {} depth {}", args.suite, args.prop, depth)?;
    for line in lines {
        let bad = line.counterexample();
        writeln!(out, "[{}]", line.variant)?;
        writeln!(
            out,
            "  holds          {} ({})",
            line.holds,
            format_decimal(&line.holds, 6)
        )?;
        writeln!(
            out,
            "  counterexample {} ({})",
            bad,
            format_decimal(&bad, 6)
        )?;
    }
    Ok(EXIT_OK)
}
