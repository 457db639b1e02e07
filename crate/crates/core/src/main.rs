use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use capp::capp::{parse_capp, validate, CappScript};
use capp::inference::{analyze, InferOptions, LoopBound};
use capp::minisl::parse_function;
use capp::program::CostProgram;
use capp::rational::{format_rational, Exact, Rational};
use capp::scheduler::{parse_trace, simulate, write_log, Fleet, InvocationRequest, Registry, Scheduler};
use capp::solver::{evaluate_concrete, export_interchange, solve_symbolic, Binding};
use capp::Diagnostic;

#[derive(Parser)]
#[command(name = "capp", version, about = "Cost inference and cost-aware scheduling for serverless functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the payload here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Print the AST of a miniSL function as JSON.
    Parse { source: PathBuf },
    /// Infer the cost program of a miniSL function.
    Infer {
        source: PathBuf,
        #[command(flatten)]
        infer: InferArgs,
    },
    /// Evaluate a cost program under a binding.
    Solve {
        program: PathBuf,
        /// JSON object of symbol values, inline or as a file path.
        #[arg(long, default_value = "{}")]
        bind: String,
        /// Produce a closed form instead of a value.
        #[arg(long)]
        symbolic: bool,
        /// Unfolding limit for concrete evaluation.
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
    },
    /// Print a cost program as interchange clauses.
    Export { program: PathBuf },
    /// Check a cAPP script against a fleet and a registry.
    Validate {
        script: PathBuf,
        #[command(flatten)]
        deployment: Deployment,
    },
    /// Schedule one invocation request.
    Schedule {
        script: PathBuf,
        #[command(flatten)]
        deployment: Deployment,
        #[arg(long)]
        request: PathBuf,
        #[arg(long, default_value = "100")]
        default_duration_ms: String,
    },
    /// Replay a JSON Lines trace of requests.
    Simulate {
        script: PathBuf,
        #[command(flatten)]
        deployment: Deployment,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "100")]
        default_duration_ms: String,
    },
}

#[derive(Args)]
struct InferArgs {
    /// Whether `range(a, b)` includes `b`.
    #[arg(long, default_value = "exclusive")]
    loop_bound: LoopBound,
    /// Rename a parameter or service symbol, as NAME=SYMBOL.
    #[arg(long = "alias", value_name = "NAME=SYMBOL")]
    aliases: Vec<String>,
}

impl InferArgs {
    fn options(&self) -> Result<InferOptions, Failure> {
        let mut aliases = Vec::new();
        for a in &self.aliases {
            let (name, symbol) = a
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--alias expects NAME=SYMBOL, got {a:?}")))?;
            aliases.push((name.trim().to_string(), symbol.trim().to_string()));
        }
        Ok(InferOptions {
            loop_bound: self.loop_bound,
            aliases,
        })
    }
}

#[derive(Args)]
struct Deployment {
    #[arg(long)]
    fleet: PathBuf,
    #[arg(long)]
    registry: PathBuf,
    #[command(flatten)]
    infer: InferArgs,
}

enum Failure {
    Usage(String),
    Diagnostics(Vec<Diagnostic>),
}

impl Failure {
    fn error(message: impl ToString) -> Self {
        Failure::Diagnostics(vec![Diagnostic::error(0, 0, message.to_string())])
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn file_stem(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("main");
    name.split('.').next().unwrap_or(name).to_string()
}

fn load_program(path: &Path) -> Result<CostProgram, Failure> {
    read(path)?.parse::<CostProgram>().map_err(Failure::error)
}

fn load_binding(arg: &str) -> Result<Binding, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        read(Path::new(arg))?
    };
    let raw: std::collections::BTreeMap<String, Exact> =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("--bind: {e}")))?;
    Ok(raw.into_iter().map(|(k, v)| (k, v.0)).collect())
}

fn load_script(path: &Path) -> Result<CappScript, Failure> {
    parse_capp(&read(path)?).map_err(|e| Failure::Diagnostics(vec![e.to_diagnostic()]))
}

fn load_deployment(d: &Deployment) -> Result<(Fleet, Registry), Failure> {
    let fleet = Fleet::from_json(&read(&d.fleet)?).map_err(Failure::error)?;
    let registry = Registry::load(&d.registry, &d.infer.options()?).map_err(|e| match e {
        capp::scheduler::ConfigError::Analysis { function, error } => Failure::Diagnostics(
            error
                .diagnostics()
                .into_iter()
                .map(|mut d| {
                    d.message = format!("{function}: {}", d.message);
                    d
                })
                .collect(),
        ),
        other => Failure::error(other),
    })?;
    Ok((fleet, registry))
}

fn duration(text: &str) -> Result<Rational, Failure> {
    capp::rational::parse_rational(text)
        .filter(|q| *q >= Rational::from_integer(0.into()))
        .ok_or_else(|| Failure::Usage(format!("--default-duration-ms expects a nonnegative number, got {text:?}")))
}

fn json_line(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string(value).expect("payload serializes");
    s.push('\n');
    s
}

/// Returns the payload and whether it reports errors.
fn run(cli: &Cli) -> Result<(String, bool), Failure> {
    Ok(match &cli.command {
        Command::Parse { source } => {
            let f = parse_function(&read(source)?, &file_stem(source))
                .map_err(|e| Failure::Diagnostics(vec![e.to_diagnostic()]))?;
            let mut s = serde_json::to_string_pretty(&f).expect("AST serializes");
            s.push('\n');
            (s, false)
        }
        Command::Infer { source, infer } => {
            let a = analyze(&read(source)?, &file_stem(source), &infer.options()?)
                .map_err(|e| Failure::Diagnostics(e.diagnostics()))?;
            (a.program.to_string(), false)
        }
        Command::Solve {
            program,
            bind,
            symbolic,
            fuel,
        } => {
            let p = load_program(program)?;
            let b = load_binding(bind)?;
            let text = if *symbolic {
                solve_symbolic(&p, &b).map_err(Failure::error)?.to_string()
            } else {
                format_rational(&evaluate_concrete(&p, &b, *fuel).map_err(Failure::error)?.value)
            };
            (format!("{text}\n"), false)
        }
        Command::Export { program } => (export_interchange(&load_program(program)?).map_err(Failure::error)?, false),
        Command::Validate { script, deployment } => {
            let s = load_script(script)?;
            let (fleet, registry) = load_deployment(deployment)?;
            let diagnostics = validate(&s, &fleet.labels(), &registry.tags());
            let failed = capp::diagnostic::has_errors(&diagnostics);
            (json_line(&diagnostics), failed)
        }
        Command::Schedule {
            script,
            deployment,
            request,
            default_duration_ms,
        } => {
            let s = load_script(script)?;
            let (fleet, registry) = load_deployment(deployment)?;
            let req: InvocationRequest =
                serde_json::from_str(&read(request)?).map_err(|e| Failure::Usage(format!("--request: {e}")))?;
            let mut scheduler = Scheduler::new(s, registry, fleet, cli.seed);
            scheduler.default_duration_ms = duration(default_duration_ms)?;
            let decision = scheduler.decide(&req).map_err(Failure::error)?;
            (json_line(&decision), false)
        }
        Command::Simulate {
            script,
            deployment,
            trace,
            default_duration_ms,
        } => {
            let s = load_script(script)?;
            let (fleet, registry) = load_deployment(deployment)?;
            let requests = parse_trace(&read(trace)?).map_err(Failure::error)?;
            let mut scheduler = Scheduler::new(s, registry, fleet, cli.seed);
            scheduler.default_duration_ms = duration(default_duration_ms)?;
            let log = simulate(&requests, &mut scheduler).map_err(Failure::error)?;
            (write_log(&log), false)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((payload, failed)) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, payload.as_bytes()),
                None => std::io::stdout().write_all(payload.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("{}", Diagnostic::error(0, 0, format!("cannot write output: {e}")).to_json());
                return ExitCode::from(2);
            }
            ExitCode::from(if failed { 1 } else { 0 })
        }
        Err(Failure::Usage(message)) => {
            eprintln!("{}", Diagnostic::error(0, 0, message).to_json());
            ExitCode::from(2)
        }
        Err(Failure::Diagnostics(diagnostics)) => {
            for d in &diagnostics {
                eprintln!("{}", d.to_json());
            }
            ExitCode::from(1)
        }
    }
}
