mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use schedsim::experiments::{
    builtin_scenarios, run_scenario, run_sweep_with_jobs, FailureKind, RunReport, SweepParameter,
    SweepSpec,
};
use schedsim::queue_validator::{simulate_queue, QueueError, ServiceKind, SimSpec};
use schedsim::schedulers::Algorithm;

use output::{Format, QueueRecord, ScenarioRecord};

/// Exit status with a message for stderr.
#[derive(Debug)]
pub struct Exit {
    code: u8,
    message: String,
}

impl Exit {
    pub const SOLVER: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const NOT_CONVERGED: u8 = 4;

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: Self::CONFIG,
            message: message.into(),
        }
    }

    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Exit {
    fn from(e: std::io::Error) -> Self {
        Exit::new(Exit::SOLVER, format!("cannot write output: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "schedsim",
    version,
    about = "Task-slicing scheduler experiments"
)]
struct Cli {
    /// Write results here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Sweep points evaluated in parallel; output order is unaffected.
    #[arg(long, global = true, value_name = "N", default_value_t = 1,
          value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario.
    Run(ScenarioArgs),
    /// Run a scenario over a list of values of one parameter.
    Sweep(SweepArgs),
    /// Simulate a single queue and compare with the analytic mean.
    ValidateQueue(QueueArgs),
    /// List the built-in scenarios.
    ListScenarios {
        /// Print this built-in scenario as a JSON scenario file instead.
        #[arg(long, value_name = "NAME")]
        dump: Option<String>,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Built-in scenario name or path to a JSON scenario file.
    #[arg(long, value_name = "NAME|PATH")]
    scenario: String,

    /// Algorithms to run, overriding the scenario's own list.
    #[arg(long, value_delimiter = ',', value_name = "ps,bs,gs")]
    algo: Option<Vec<Algorithm>>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// load, scheduler_count, node_count or bandwidth (Kbps).
    #[arg(long)]
    param: SweepParameter,

    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with_all = ["from", "to", "steps"])]
    values: Option<Vec<f64>>,

    #[arg(long, requires_all = ["to", "steps"])]
    from: Option<f64>,

    #[arg(long, requires_all = ["from", "steps"])]
    to: Option<f64>,

    /// Number of evenly spaced values from `--from` to `--to` inclusive.
    #[arg(long, requires_all = ["from", "to"])]
    steps: Option<usize>,
}

#[derive(Args, Debug)]
struct QueueArgs {
    #[arg(long)]
    lambda: f64,

    #[arg(long)]
    mu: f64,

    #[arg(long, default_value = "exponential")]
    kind: ServiceKind,

    /// Jobs to simulate, including the warm-up.
    #[arg(long, default_value_t = 1_000_000)]
    count: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCHEDSIM_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(exit) => {
            eprintln!("schedsim: {}", exit.message);
            ExitCode::from(exit.code)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Exit> {
    let format = Format::from(cli.format);
    match &cli.command {
        Command::Run(args) => {
            let scenario = input::load_scenario(&args.scenario, args.algo.as_deref())?;
            input::check_scenario(&scenario)?;
            let report = run_scenario(&scenario);
            finish(cli, format, &[report])
        }
        Command::Sweep(args) => {
            let base =
                input::load_scenario(&args.scenario.scenario, args.scenario.algo.as_deref())?;
            let values = sweep_values(args)?;
            let sweep = SweepSpec::new(base, args.param, values);
            input::check_sweep(&sweep)?;
            let reports = run_sweep_with_jobs(&sweep, usize::from(cli.jobs));
            finish(cli, format, &reports)
        }
        Command::ValidateQueue(args) => validate_queue(cli, format, args),
        Command::ListScenarios { dump } => list_scenarios(cli, format, dump.as_deref()),
    }
}

fn sweep_values(args: &SweepArgs) -> Result<Vec<f64>, Exit> {
    let values = match (&args.values, args.from, args.to, args.steps) {
        (Some(values), ..) => values.clone(),
        (None, Some(from), Some(to), Some(steps)) => grid(from, to, steps)?,
        _ => {
            return Err(Exit::config(
                "give --values or all of --from, --to and --steps",
            ))
        }
    };
    if values.is_empty() {
        return Err(Exit::config("no sweep values"));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Exit::config(format!("sweep value {bad} is not finite")));
    }
    Ok(values)
}

/// `steps` evenly spaced values, rounded to 12 decimals so that grids like
/// 0.1..0.9 print as typed.
fn grid(from: f64, to: f64, steps: usize) -> Result<Vec<f64>, Exit> {
    match steps {
        0 => Err(Exit::config("--steps must be positive")),
        1 if from != to => Err(Exit::config("--steps 1 needs --from equal to --to")),
        1 => Ok(vec![from]),
        _ => Ok((0..steps)
            .map(|k| {
                let v = from + (to - from) * k as f64 / (steps - 1) as f64;
                (v * 1e12).round() / 1e12
            })
            .collect()),
    }
}

/// Writes every record, then picks the exit status from the failures and
/// convergence flags.
fn finish(cli: &Cli, format: Format, reports: &[RunReport]) -> Result<(), Exit> {
    let records: Vec<ScenarioRecord> = reports.iter().flat_map(output::scenario_records).collect();
    output::write(cli.out.as_deref(), format, &records)?;

    let failures: Vec<_> = reports.iter().flat_map(|r| r.failures()).collect();
    if let Some(f) = failures.iter().find(|f| f.kind == FailureKind::Infeasible) {
        return Err(Exit::new(Exit::INFEASIBLE, f.message.clone()));
    }
    if let Some(f) = failures.first() {
        return Err(Exit::new(Exit::SOLVER, f.message.clone()));
    }
    if !reports.iter().all(RunReport::all_converged) {
        return Err(Exit::new(
            Exit::NOT_CONVERGED,
            "some algorithms stopped before converging; results were written",
        ));
    }
    Ok(())
}

fn validate_queue(cli: &Cli, format: Format, args: &QueueArgs) -> Result<(), Exit> {
    let spec =
        SimSpec::new(args.lambda, args.mu, args.kind, args.count, args.seed).map_err(queue_exit)?;
    let analytic = spec.analytic_mean().map_err(queue_exit)?;
    let outcome = simulate_queue(&spec).map_err(queue_exit)?;
    let record = QueueRecord::new(&spec, analytic, &outcome);
    output::write(cli.out.as_deref(), format, &[record])?;
    Ok(())
}

fn queue_exit(e: QueueError) -> Exit {
    match e {
        QueueError::Unstable { .. } => Exit::new(Exit::INFEASIBLE, e.to_string()),
        _ => Exit::config(e.to_string()),
    }
}

fn list_scenarios(cli: &Cli, format: Format, dump: Option<&str>) -> Result<(), Exit> {
    if let Some(name) = dump {
        let scenario = schedsim::experiments::builtin_scenario(name)
            .ok_or_else(|| Exit::config(format!("no built-in scenario named `{name}`")))?;
        return output::write_text(cli.out.as_deref(), &(scenario.to_json() + "\n"))
            .map_err(Exit::from);
    }
    let records: Vec<_> = builtin_scenarios()
        .iter()
        .map(output::ListRecord::new)
        .collect();
    output::write(cli.out.as_deref(), format, &records)?;
    Ok(())
}
