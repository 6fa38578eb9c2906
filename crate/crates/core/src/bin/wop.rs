use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use wop_core::baseline::{run_poc, InitMode, PocConfig};
use wop_core::bench::{
    generate_instance, read_run_log, run_phase1, run_phase2, write_run_log, ClassicalBudget, InstanceSpec, Method,
    Phase1Config, Phase1Report, Phase2Config,
};
use wop_core::model::{check_solution_doc, validate_instance, FeasibilityReport, Instance, SolutionDoc};
use wop_core::postprocess::{run_qi4wop, Qi4wopConfig};
use wop_core::rational::{self, Rational};
use wop_core::solvers::{AnnealingBackend, Backend, ExactBackend, RemoteBackend};

#[derive(Parser)]
#[command(
    name = "wop",
    version,
    about = "Warehouse placement: sampling-based initialization and benchmarks"
)]
struct Cli {
    /// Run seed; overrides any seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, value_enum, default_value_t = BackendKind::Anneal)]
    backend: BackendKind,
    /// JSON config for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Exact,
    Anneal,
    Remote,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance named LX_IY_TZ (plus a witness file next to --out).
    Gen(GenArgs),
    /// Run the sampling pipeline and write the population.
    Solve { instance: PathBuf },
    /// Run initialization plus local search.
    Poc {
        instance: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Check an instance file, or a solution / population file against --instance.
    Validate {
        file: PathBuf,
        #[arg(long)]
        instance: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    locations: usize,
    #[arg(long)]
    items: usize,
    #[arg(long)]
    types: usize,
    /// Total capacity over total item area, e.g. 13/10 or 1.3.
    #[arg(long)]
    fill_ratio: Option<String>,
    #[arg(long)]
    shelf_fraction: Option<String>,
    #[arg(long)]
    stackable_fraction: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Classical,
    Qi4wop,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Feasible-solution throughput of both initializers.
    Phase1 {
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        /// Fixed classical budget in ms.
        #[arg(long, conflicts_with = "equal_time")]
        classical_budget_ms: Option<u64>,
        /// Give the classical initializer the paired sampling run's wall time.
        #[arg(long)]
        equal_time: bool,
        /// Append per-run records here (NDJSON).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Rebuild the report from an existing run log instead of running.
        #[arg(long, conflicts_with_all = ["runs", "classical_budget_ms", "equal_time", "log"])]
        from_log: bool,
    },
    /// Paired end-to-end runs with equalized initial population sizes.
    Phase2 {
        instance: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

/// A usage problem detected after argument parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

enum Outcome {
    Ok,
    Invalid,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_config<T: DeserializeOwned + Default>(cli: &Cli) -> anyhow::Result<T> {
    match &cli.config {
        Some(path) => read_json(path),
        None => Ok(T::default()),
    }
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::from_json(&text).with_context(|| format!("loading instance {}", path.display()))
}

fn emit(cli: &Cli, text: &str) -> anyhow::Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn json_only(cli: &Cli) -> anyhow::Result<()> {
    if cli.format == Format::Csv {
        bail!(Usage("--format csv applies to bench reports only".into()));
    }
    Ok(())
}

fn backend(cli: &Cli, job: &str) -> anyhow::Result<Box<dyn Backend>> {
    Ok(match cli.backend {
        BackendKind::Exact => Box::new(ExactBackend::default()),
        BackendKind::Anneal => Box::new(AnnealingBackend),
        BackendKind::Remote => Box::new(RemoteBackend::from_env(job)?),
    })
}

fn fraction(arg: &Option<String>, default: Rational) -> anyhow::Result<Rational> {
    match arg {
        Some(s) => rational::parse(s).ok_or_else(|| Usage(format!("bad fraction `{s}`")).into()),
        None => Ok(default),
    }
}

fn gen(cli: &Cli, args: &GenArgs) -> anyhow::Result<Outcome> {
    json_only(cli)?;
    let base: InstanceSpec = load_config(cli)?;
    let spec = InstanceSpec {
        num_locations: args.locations,
        num_items: args.items,
        num_types: args.types,
        capacity_fill_ratio: fraction(&args.fill_ratio, base.capacity_fill_ratio)?,
        shelf_fraction: fraction(&args.shelf_fraction, base.shelf_fraction)?,
        stackable_fraction: fraction(&args.stackable_fraction, base.stackable_fraction)?,
        seed: cli.seed.unwrap_or(base.seed),
        ..base
    };
    let generated = generate_instance(&spec)?;
    emit(cli, &generated.instance.to_json())?;
    if let Some(out) = &cli.out {
        let witness = out.with_extension("witness.json");
        let doc = generated.witness.to_doc(&generated.instance);
        fs::write(&witness, serde_json::to_string_pretty(&doc)?)
            .with_context(|| format!("writing {}", witness.display()))?;
    }
    Ok(Outcome::Ok)
}

fn solve(cli: &Cli, path: &Path) -> anyhow::Result<Outcome> {
    json_only(cli)?;
    let instance = load_instance(path)?;
    let mut config: Qi4wopConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        config = config.seeded(seed);
    }
    let backend = backend(cli, instance.name())?;
    let run = run_qi4wop(&instance, &config, backend.as_ref())?;
    log::info!(
        "{} unique feasible solutions from {} samples in {} ms",
        run.population.len(),
        run.samples_returned,
        run.wall_time_ms()
    );
    emit(cli, &run.population.to_json(&instance))?;
    Ok(Outcome::Ok)
}

fn poc(cli: &Cli, path: &Path, mode: Option<ModeArg>) -> anyhow::Result<Outcome> {
    json_only(cli)?;
    let instance = load_instance(path)?;
    let mut config: PocConfig = load_config(cli)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match mode {
        Some(ModeArg::Classical) => config.init_mode = InitMode::Classical,
        Some(ModeArg::Qi4wop) => config.init_mode = InitMode::Qi4wop,
        None => {}
    }
    let backend = backend(cli, instance.name())?;
    let result = run_poc(&instance, &config, backend.as_ref())?;
    emit(cli, &result.to_json(&instance))?;
    Ok(Outcome::Ok)
}

fn emit_phase1(cli: &Cli, report: &Phase1Report) -> anyhow::Result<()> {
    match cli.format {
        Format::Json => emit(cli, &report.to_json()),
        Format::Csv => emit(cli, &report.to_csv()),
    }
}

fn bench(cli: &Cli, command: &BenchCommand) -> anyhow::Result<Outcome> {
    match command {
        BenchCommand::Phase1 {
            instances,
            runs,
            classical_budget_ms,
            equal_time,
            log,
            from_log,
        } => {
            if *from_log {
                let mut records = Vec::new();
                for path in instances {
                    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
                    records.extend(read_run_log(BufReader::new(file))?);
                }
                emit_phase1(cli, &Phase1Report::from_records(&records))?;
                return Ok(Outcome::Ok);
            }
            let mut config: Phase1Config = load_config(cli)?;
            if let Some(seed) = cli.seed {
                config.base_seed = seed;
            }
            if let Some(runs) = runs {
                config.runs = *runs;
            }
            if let Some(ms) = classical_budget_ms {
                config.classical_budget = ClassicalBudget::Fixed(*ms);
            }
            if *equal_time {
                config.classical_budget = ClassicalBudget::MatchQi4wop;
            }
            let loaded = instances
                .iter()
                .map(|p| load_instance(p))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let backend = backend(cli, "phase1")?;
            let (report, records) =
                run_phase1(&loaded, &[Method::Qi4wop, Method::Classical], &config, backend.as_ref())?;
            if let Some(path) = log {
                let file = fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .with_context(|| format!("opening {}", path.display()))?;
                write_run_log(file, &records)?;
            }
            emit_phase1(cli, &report)?;
            Ok(Outcome::Ok)
        }
        BenchCommand::Phase2 {
            instance,
            runs,
            workers,
        } => {
            let instance = load_instance(instance)?;
            let mut config: Phase2Config = load_config(cli)?;
            if let Some(seed) = cli.seed {
                config.base_seed = seed;
            }
            if let Some(runs) = runs {
                config.runs = *runs;
            }
            if let Some(workers) = workers {
                config.workers = *workers;
            }
            let backend = backend(cli, instance.name())?;
            let report = run_phase2(&instance, &config, backend.as_ref())?;
            match cli.format {
                Format::Json => emit(cli, &report.to_json())?,
                Format::Csv => emit(cli, &report.to_csv())?,
            }
            Ok(Outcome::Ok)
        }
    }
}

/// Population files carry their solutions under `solutions`.
#[derive(Deserialize)]
struct PopulationFile {
    solutions: Vec<SolutionDoc>,
}

fn validate(cli: &Cli, file: &Path, instance: Option<&Path>) -> anyhow::Result<Outcome> {
    json_only(cli)?;
    let reports: Vec<FeasibilityReport> = match instance {
        None => vec![validate_instance(&load_instance(file)?)],
        Some(inst_path) => {
            let inst = load_instance(inst_path)?;
            let value: serde_json::Value = read_json(file)?;
            if value.get("solutions").is_some() {
                let population: PopulationFile = serde_json::from_value(value)?;
                population
                    .solutions
                    .iter()
                    .map(|doc| check_solution_doc(doc, &inst))
                    .collect::<wop_core::Result<_>>()?
            } else {
                let doc: SolutionDoc = serde_json::from_value(value)?;
                vec![check_solution_doc(&doc, &inst)?]
            }
        }
    };
    let text = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])?
    } else {
        serde_json::to_string_pretty(&reports)?
    };
    emit(cli, &text)?;
    for (k, r) in reports.iter().enumerate() {
        if !r.feasible {
            eprintln!("#{k}: {r}");
        }
    }
    Ok(if reports.iter().all(|r| r.feasible) {
        Outcome::Ok
    } else {
        Outcome::Invalid
    })
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Gen(args) => gen(cli, args),
        Command::Solve { instance } => solve(cli, instance),
        Command::Poc { instance, mode } => poc(cli, instance, *mode),
        Command::Bench(command) => bench(cli, command),
        Command::Validate { file, instance } => validate(cli, file, instance.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Invalid) => ExitCode::from(1),
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
