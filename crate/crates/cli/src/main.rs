use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hsara::io::{self, from_text, to_text, InstanceDocument, SolutionDocument};
use hsara::pipeline::{benchmark, rows_to_csv, BenchmarkSpec};
use hsara::{CancellationModel, RoutingModel, SchedulingModel, SolverConfig};
use hsara_cli::server::{self, ADDR_ENV, DEFAULT_ADDR, STATIC_DIR_ENV};
use hsara_cli::{random_instance, simulate_request, solve_request, SimulateRequest, DEFAULT_REPLICATIONS};

#[derive(Parser)]
#[command(name = "hsara", version, about = "Home service assignment, routing and appointment scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a case-study or random instance.
    Generate(GenerateArgs),
    /// Solve an instance and write the solution and its report.
    Solve(SolveArgs),
    /// Re-simulate a solution.
    Simulate(SimulateArgs),
    /// Run an experiment grid and write delimited text.
    Benchmark(BenchmarkArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long = "p-c", default_value_t = 0.1)]
    p_c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw every parameter at random (the instance's solver settings go to --config-out).
    #[arg(long)]
    random: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedulingArg {
    Baseline,
    Simulated,
    Both,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Solver configuration document; flags given explicitly override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated subset of distance, capacity, time_windows.
    #[arg(long)]
    routing: Option<String>,
    #[arg(long, value_enum)]
    scheduling: Option<SchedulingArg>,
    /// Cancellation model: 0 (last minute) or 1 (notified).
    #[arg(long)]
    lambda: Option<u8>,
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    solution_out: PathBuf,
    #[arg(long)]
    report_out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = 0)]
    lambda: u8,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report_out: PathBuf,
    /// Also dump the team traces of one replication.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    trace_replication: usize,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Experiment description document; defaults apply to omitted fields.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// Bind address; falls back to $HSARA_ADDR, then 127.0.0.1:8080.
    #[arg(long)]
    addr: Option<String>,
    /// Directory of the built UI bundle; falls back to $HSARA_STATIC_DIR.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Simulate(a) => simulate(a),
        Command::Benchmark(a) => run_benchmark(a),
        Command::Serve(a) => serve(a),
    }
}

fn read_doc<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = io::read_text(path)?;
    from_text(&text).with_context(|| format!("reading {}", path.display()))
}

fn generate(a: GenerateArgs) -> Result<()> {
    if a.random {
        let r = random_instance(a.seed);
        io::write_text(&a.out, &to_text(&r.instance))?;
        if let Some(path) = a.config_out {
            io::write_text(&path, &to_text(&r.config))?;
        }
    } else {
        let inst = io::generate_case_study(a.n, a.p_c, a.seed)?;
        io::save_instance(&inst, &a.out)?;
    }
    Ok(())
}

fn parse_routing(s: &str) -> Result<Vec<RoutingModel>> {
    let models = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t {
            "distance" => Ok(RoutingModel::Distance),
            "capacity" => Ok(RoutingModel::Capacity),
            "time_windows" => Ok(RoutingModel::TimeWindows),
            other => Err(anyhow!("--routing: unknown routing model `{other}`")),
        })
        .collect::<Result<Vec<_>>>()?;
    if models.is_empty() {
        bail!("--routing: at least one routing model is required");
    }
    Ok(models)
}

fn solver_config(a: &SolveArgs) -> Result<SolverConfig> {
    let mut cfg: SolverConfig = match &a.config {
        Some(path) => read_doc(path)?,
        None => SolverConfig::default(),
    };
    if let Some(r) = &a.routing {
        cfg.routing_models = parse_routing(r)?;
    } else if cfg.routing_models.is_empty() {
        bail!("--routing: at least one routing model is required");
    }
    if let Some(s) = a.scheduling {
        cfg.scheduling_model = match s {
            SchedulingArg::Baseline => SchedulingModel::Baseline,
            SchedulingArg::Simulated => SchedulingModel::Simulated,
            SchedulingArg::Both => SchedulingModel::Both,
        };
    }
    if let Some(l) = a.lambda {
        cfg.cancellation_lambda = CancellationModel::try_from(l).map_err(|e| anyhow!("--lambda: {e}"))?;
    }
    if let Some(v) = a.level {
        cfg.metaheuristic_level = v;
    }
    if let Some(v) = a.replications {
        if v == 0 {
            bail!("--replications: must be at least 1");
        }
        cfg.mc_replications = v;
    }
    if let Some(v) = a.iterations {
        if v == 0 {
            bail!("--iterations: must be at least 1");
        }
        cfg.scheduler_iterations = v;
    }
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn solve(a: SolveArgs) -> Result<()> {
    let cfg = solver_config(&a)?;
    let instance = io::load_instance(&a.instance)?;
    let res = solve_request(&instance, &cfg)?;
    io::write_text(&a.solution_out, &to_text(&res.solution))?;
    io::write_text(&a.report_out, &to_text(&res.report))?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let req = SimulateRequest {
        instance: read_doc::<InstanceDocument>(&a.instance)?,
        solution: read_doc::<SolutionDocument>(&a.solution)?,
        cancellation_lambda: CancellationModel::try_from(a.lambda).map_err(|e| anyhow!("--lambda: {e}"))?,
        replications: a.replications,
        seed: a.seed,
    };
    let (report, traces) = simulate_request(req, a.trace_out.as_ref().map(|_| a.trace_replication))?;
    io::write_text(&a.report_out, &to_text(&report))?;
    if let (Some(path), Some(traces)) = (a.trace_out, traces) {
        io::write_text(&path, &to_text(&traces))?;
    }
    Ok(())
}

fn run_benchmark(a: BenchmarkArgs) -> Result<()> {
    let mut spec: BenchmarkSpec = read_doc(&a.spec)?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let rows = benchmark(&spec)?;
    io::write_text(&a.out, &rows_to_csv(&rows))?;
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let addr = a
        .addr
        .or_else(|| std::env::var(ADDR_ENV).ok())
        .unwrap_or_else(|| DEFAULT_ADDR.to_string());
    let static_dir = a.static_dir.or_else(|| std::env::var_os(STATIC_DIR_ENV).map(PathBuf::from));
    let rt = tokio::runtime::Runtime::new()?;
    eprintln!("listening on {addr}");
    rt.block_on(server::serve(&addr, static_dir))
        .with_context(|| format!("serving on {addr}"))
}
