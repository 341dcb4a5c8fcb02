//! Command-line front end.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::conflict::{explain, find_strategy, AnalysisConfig, ConflictReport, ResolutionLevel, Verdict};
use crate::sat::{self, SatStatus, SolverConfig};
use crate::scenario::{self, Scenario};
use crate::strategy::DEFAULT_STRATEGY_BOUND;

pub const EXIT_NO_CONFLICT: i32 = 0;
pub const EXIT_RESOLVED: i32 = 1;
pub const EXIT_UNRESOLVED: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNSAT: i32 = 20;

/// Variable naming the log filter, e.g. `CONFLICTLENS_LOG=debug`.
pub const LOG_ENV: &str = "CONFLICTLENS_LOG";

#[derive(Debug, Parser)]
#[command(name = "conflictlens", version, about = "Believed conflicts between two agents and their staged resolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect a conflict without resolving it.
    Analyze(ScenarioArgs),
    /// Resolve level by level up to --max-level.
    Resolve(ScenarioArgs),
    /// Resolve and print the justification chain.
    Explain(ScenarioArgs),
    /// Solve a DIMACS CNF file (`-` reads standard input).
    Solve(SolveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario file; bundled scenarios may also be named by file name.
    pub scenario: PathBuf,
    /// Overrides the scenario's HORIZON.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Highest resolution level to apply, C1 to C4.
    #[arg(long, default_value = "C4", value_parser = parse_level)]
    pub max_level: ResolutionLevel,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    pub output: Output,
    /// Seed of the SAT solver's initial activities.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Most candidate strategies of A to enumerate.
    #[arg(long, default_value_t = DEFAULT_STRATEGY_BOUND, value_parser = parse_positive)]
    pub strategy_bound: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// DIMACS file, or `-` for standard input.
    pub input: PathBuf,
    /// Seed of the solver's initial activities.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_level(s: &str) -> Result<ResolutionLevel, String> {
    ResolutionLevel::parse(s).ok_or_else(|| format!("`{s}` is not one of C1, C2, C3, C4"))
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::NoConflict => EXIT_NO_CONFLICT,
        Verdict::ResolvedAt(_) => EXIT_RESOLVED,
        Verdict::Unresolved => EXIT_UNRESOLVED,
    }
}

/// Reads a scenario from disk, falling back to a bundled one of that name.
pub fn read_scenario(path: &Path) -> anyhow::Result<String> {
    match fs::read_to_string(path) {
        Ok(t) => Ok(t),
        Err(e) => {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            scenario::fixture(name)
                .map(str::to_string)
                .ok_or_else(|| anyhow::anyhow!("cannot read {}: {e}", path.display()))
        }
    }
}

/// Runs the scenario commands. `resolve` false stops after detection.
pub fn report(args: &ScenarioArgs, resolve: bool) -> anyhow::Result<ConflictReport> {
    let text = read_scenario(&args.scenario)?;
    let sc = Scenario::load(&text)?;
    let compiled = sc.compile(args.horizon)?;
    let cfg = AnalysisConfig {
        strategy_bound: args.strategy_bound,
        max_level: resolve.then_some(args.max_level),
        ..AnalysisConfig::default()
    };
    Ok(find_strategy(&compiled.problem, &compiled.base, &cfg)?)
}

fn scenario_command(args: &ScenarioArgs, cmd: &Command, out: &mut dyn Write) -> anyhow::Result<i32> {
    sat::set_default_seed(args.seed);
    let job = || report(args, !matches!(cmd, Command::Analyze(_)));
    let rep = match args.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(job)?,
        None => job()?,
    };
    let ex = explain(&rep);
    match (cmd, args.output) {
        (Command::Explain(_), Output::Json) => writeln!(out, "{}", ex.to_json())?,
        (_, Output::Json) => writeln!(out, "{}", rep.to_json())?,
        (_, Output::Text) => write!(out, "{}", ex.text)?,
    }
    Ok(exit_code(rep.verdict))
}

fn solve_command(args: &SolveArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let text = if args.input == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(&args.input)?
    };
    let cnf = sat::parse_dimacs(&text)?;
    let res = sat::solve_with(&cnf, &[], SolverConfig { seed: args.seed, ..SolverConfig::default() })?;
    match res.status {
        SatStatus::Sat => {
            writeln!(out, "s SATISFIABLE")?;
            let model = res.model.unwrap_or_default();
            let lits: Vec<String> = model
                .iter()
                .enumerate()
                .map(|(i, &b)| if b { (i + 1).to_string() } else { format!("-{}", i + 1) })
                .collect();
            for chunk in lits.chunks(16) {
                writeln!(out, "v {}", chunk.join(" "))?;
            }
            writeln!(out, "v 0")?;
            Ok(EXIT_SAT)
        }
        SatStatus::Unsat => {
            writeln!(out, "s UNSATISFIABLE")?;
            Ok(EXIT_UNSAT)
        }
    }
}

/// Executes a parsed command line, returning the process exit code.
/// Input errors are reported on `err` and map to [`EXIT_INPUT`].
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = match &cli.command {
        Command::Solve(a) => solve_command(a, out),
        cmd @ (Command::Analyze(a) | Command::Resolve(a) | Command::Explain(a)) => scenario_command(a, cmd, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            // A reader that stops early, e.g. `| head`, is not worth a message.
            let closed = e
                .chain()
                .any(|c| c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe));
            if !closed {
                let _ = writeln!(err, "conflictlens: {e:#}");
            }
            EXIT_INPUT
        }
    }
}
