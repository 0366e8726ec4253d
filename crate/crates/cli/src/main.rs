use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gmachine::machine::heap_dot;
use gmachine::{
    compile_globals, compile_program, force_deep, parse_program, CoreProgram, FinalResult, MachineError, MachineState,
    Stats, TraceRecord,
};

const EXIT_INPUT: u8 = 1;
const EXIT_MACHINE: u8 = 2;
const EXIT_STEP_LIMIT: u8 = 3;

/// Compile and run programs on a G-machine.
#[derive(Parser)]
#[command(name = "gmachine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate `main` and print its value
    Run(RunArgs),
    /// Print the compiled code of every global
    Compile {
        file: PathBuf,
    },
    /// Evaluate `main`, printing the rule applied at every step
    Trace(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,

    /// Give up after this many steps
    #[arg(long, env = "GMACHINE_MAX_STEPS", default_value_t = 1_000_000,
          value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,

    /// Evaluate constructor results this many levels deep (0 prints the shallow value)
    #[arg(long = "force", env = "GMACHINE_FORCE", default_value_t = 0)]
    force: usize,

    /// Print execution statistics after the result
    #[arg(long, env = "GMACHINE_STATS")]
    stats: bool,

    /// Format of the statistics
    #[arg(long, env = "GMACHINE_STATS_FORMAT", value_enum, default_value_t = StatsFormat::Text)]
    stats_format: StatsFormat,

    /// Write a Graphviz snapshot of the heap after every step (trace only)
    #[arg(long, env = "GMACHINE_DOT")]
    dot: Option<PathBuf>,

    /// Follow each trace line with a summary of the machine state
    #[arg(long, short, env = "GMACHINE_VERBOSE")]
    verbose: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsFormat {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the exit status of other input errors
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(&args, false),
        Command::Trace(args) => run(&args, true),
        Command::Compile { file } => compile(&file),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}

fn load(path: &Path) -> Result<CoreProgram, u8> {
    let src = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_INPUT
    })?;
    parse_program(&src).map_err(|e| {
        eprintln!("{}:{e}", path.display());
        EXIT_INPUT
    })
}

fn compile(path: &Path) -> Result<(), u8> {
    let program = load(path)?;
    let compiled = compile_globals(&program).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_INPUT
    })?;
    // a closed pipe (e.g. `| head`) is not an error
    let _ = write!(io::stdout(), "{compiled}");
    Ok(())
}

fn run(args: &RunArgs, trace: bool) -> Result<(), u8> {
    let program = load(&args.file)?;
    let mut machine = compile_program(&program).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_INPUT
    })?;

    let dot_dir = if trace { args.dot.as_deref() } else { None };
    if let Some(dir) = dot_dir {
        fs::create_dir_all(dir).map_err(|e| {
            eprintln!("error: cannot create {}: {e}", dir.display());
            EXIT_INPUT
        })?;
        write_dot(dir, &machine)?;
    }

    let mut dot_error = None;
    let result = machine.run_observed(args.max_steps, |rec: &TraceRecord, state| {
        if trace {
            let line = if args.verbose { rec.verbose_line() } else { rec.line() };
            let _ = writeln!(io::stdout(), "{line}");
        }
        if let (Some(dir), None) = (dot_dir, &dot_error) {
            dot_error = write_dot(dir, state).err();
        }
    });
    if let Some(code) = dot_error {
        return Err(code);
    }

    let result = result.map_err(|e| machine_failure(&e, &machine, args))?;
    match result {
        FinalResult::Constructor { .. } if args.force > 0 => {
            let budget = args.max_steps - machine.stats.steps.min(args.max_steps);
            let value = force_deep(&mut machine, args.force, budget).map_err(|e| machine_failure(&e, &machine, args))?;
            let _ = writeln!(io::stdout(), "result({value})");
        }
        other => {
            let _ = writeln!(io::stdout(), "result({other})");
        }
    }
    print_stats(args, &machine.stats);
    Ok(())
}

fn machine_failure(e: &MachineError, machine: &MachineState, args: &RunArgs) -> u8 {
    eprintln!("error: {e}");
    print_stats(args, &machine.stats);
    if let MachineError::StepLimitExceeded(_) = e {
        EXIT_STEP_LIMIT
    } else {
        eprint!("{}", machine.describe());
        EXIT_MACHINE
    }
}

fn print_stats(args: &RunArgs, stats: &Stats) {
    if !args.stats {
        return;
    }
    let mut out = io::stdout();
    let _ = match args.stats_format {
        StatsFormat::Text => write!(out, "{stats}"),
        StatsFormat::Json => writeln!(out, "{}", stats.to_json()),
    };
}

fn write_dot(dir: &Path, state: &MachineState) -> Result<(), u8> {
    let path = dir.join(format!("step_{:06}.dot", state.stats.steps));
    fs::write(&path, heap_dot(state)).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        EXIT_INPUT
    })
}
