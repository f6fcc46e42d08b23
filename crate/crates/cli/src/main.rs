//! `optigraph` command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use optigraph::io::{export_dot, read_model, solution_to_json, write_model, DotOptions};
use optigraph::library::{build_dcopf_model, build_dynamic_model, generate_grid_network, DynOptConfig};
use optigraph::model::GraphId;
use optigraph::partition::{
    aggregate, apply_partition, balance_bound, make_partition, metrics, partition_heuristic, read_partition_file,
    write_partition_file,
};
use optigraph::qp::{solve_monolithic, Status};
use optigraph::schur::solve_structured;
use optigraph::schwarz::{schwarz_solve, trace_csv};
use optigraph::topology::to_hypergraph;
use optigraph::{Model, SchwarzOptions, Solution, SolverOptions};

#[derive(Parser)]
#[command(name = "optigraph", version, about = "Build, partition and solve graph-structured QPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark model as JSON.
    Build {
        #[command(subcommand)]
        model: BuildModel,
    },
    /// Partition the top-level graph and report the cut.
    Partition(PartitionArgs),
    /// Collapse subgraphs below `--levels` into single nodes.
    Aggregate {
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        levels: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve a model and write the solution document.
    Solve(SolveArgs),
    /// Export the graph structure.
    Export {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportFormat::Dot)]
        format: ExportFormat,
        /// Fill nodes by top-level subgraph.
        #[arg(long)]
        color_partitions: bool,
        /// Show each top-level subgraph as one vertex.
        #[arg(long)]
        aggregated: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BuildModel {
    /// Discrete-time control problem with disturbance `sin t`.
    Dynamic {
        #[arg(long = "T", default_value_t = 100)]
        horizon: usize,
        /// Unused; the model has no random data.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// DC optimal power flow on a synthetic lattice grid.
    DcopfGrid {
        #[arg(long, default_value_t = 8)]
        rows: usize,
        #[arg(long, default_value_t = 8)]
        cols: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    Edgecut,
}

#[derive(Args)]
struct PartitionArgs {
    model: PathBuf,
    #[arg(short = 'k', long = "parts", default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    imbalance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the labels, one per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Use labels from a file instead of the built-in partitioner.
    #[arg(long)]
    from_labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Objective::Edgecut)]
    objective: Objective,
    /// Write the model restructured into one subgraph per part.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Monolithic,
    Schur,
    Schwarz,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Monolithic => "monolithic",
            Method::Schur => "schur",
            Method::Schwarz => "schwarz",
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Monolithic)]
    method: Method,
    /// Partition into this many subgraphs first. Without it, existing subgraphs are used.
    #[arg(long)]
    parts: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    imbalance: f64,
    #[arg(long, default_value_t = 1)]
    overlap: usize,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for Schwarz subproblems (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Schwarz residual trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Errors mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Solve(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<(Model, GraphId)> {
    read_model::<f64>(path).with_context(|| format!("cannot read model {}", path.display()))
}

fn save(model: &Model, g: GraphId, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_model(model, g, p).with_context(|| format!("cannot write {}", p.display())),
        None => emit(None, &optigraph::io::model_to_json(model, g)),
    }
}

fn build(cmd: BuildModel) -> Result<()> {
    match cmd {
        BuildModel::Dynamic { horizon, seed: _, output } => {
            let d = build_dynamic_model::<f64>(&DynOptConfig::sinusoidal(horizon))?;
            save(&d.model, d.graph, output.as_deref())
        }
        BuildModel::DcopfGrid { rows, cols, seed, output } => {
            let net = generate_grid_network::<f64>(rows, cols, seed);
            let d = build_dcopf_model(&net)?;
            save(&d.model, d.graph, output.as_deref())
        }
    }
}

/// Partitions `g` into `k` parts and restructures it.
fn partition_into(model: &mut Model, g: GraphId, k: usize, imbalance: f64, seed: u64) -> Result<()> {
    let (h, refs) = to_hypergraph(model, g);
    let labels = partition_heuristic(&h, k, imbalance, seed)?;
    let p = make_partition(model, g, &labels, &refs)?;
    apply_partition(model, &p)?;
    Ok(())
}

fn partition(args: PartitionArgs) -> Result<()> {
    let Objective::Edgecut = args.objective;
    let (mut model, g) = load(&args.model)?;
    let (h, refs) = to_hypergraph(&model, g);
    let labels = match &args.from_labels {
        Some(path) => read_partition_file(path)?,
        None => partition_heuristic(&h, args.k, args.imbalance, args.seed)?,
    };
    let p = make_partition(&model, g, &labels, &refs)?;
    let m = metrics(&p, &h)?;
    let bound = balance_bound(h.total_vertex_weight(), p.k, args.imbalance);
    if let Some(size) = m.part_sizes.iter().find(|&&s| s > bound) {
        bail!("part size {size} exceeds the balance bound {bound}");
    }
    if let Some(path) = &args.labels {
        write_partition_file(path, &p.labels)?;
    }
    println!(
        "parts {} edge_cut {} connectivity {} imbalance {:.4} sizes {:?}",
        p.k, m.edge_cut, m.connectivity, m.imbalance, m.part_sizes
    );
    if let Some(path) = &args.output {
        apply_partition(&mut model, &p)?;
        save(&model, g, Some(path))?;
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let (mut model, g) = load(&args.model)?;
    if args.trace.is_some() && args.method != Method::Schwarz {
        return Err(anyhow!("--trace is only available with --method schwarz").into());
    }
    if let Some(k) = args.parts {
        partition_into(&mut model, g, k, args.imbalance, args.seed)?;
    }
    let mut ipm = SolverOptions::default();
    if let Some(t) = args.tol {
        ipm.tol = t;
    }
    if let Some(m) = args.max_iter {
        ipm.max_iter = m;
    }
    let outcome: Result<Solution, String> = match args.method {
        Method::Monolithic => solve_monolithic(&model, g, &ipm).map_err(|e| e.to_string()),
        Method::Schur => {
            if model.subgraphs(g).is_empty() {
                solve_structured(&model, g, &ipm).map(|s| s.solution).map_err(|e| e.to_string())
            } else {
                let agg = aggregate(&model, g, 0).context("cannot aggregate subgraphs")?;
                solve_structured(&agg.model, agg.graph, &ipm)
                    .map(|s| agg.map.transport(&s.solution))
                    .map_err(|e| e.to_string())
            }
        }
        Method::Schwarz => {
            if model.subgraphs(g).is_empty() {
                return Err(anyhow!("--method schwarz needs subgraphs; pass --parts").into());
            }
            let mut opts = SchwarzOptions::with_overlap(args.overlap);
            if let Some(t) = args.tol {
                opts.tol = t;
            }
            if let Some(m) = args.max_iter {
                opts.max_iterations = m;
            }
            opts.threads = args.threads;
            match schwarz_solve(&model, g, &opts) {
                Ok(out) => {
                    if let Some(path) = &args.trace {
                        emit(Some(path), &trace_csv(&out.history))?;
                    }
                    Ok(out.solution)
                }
                Err(e) => Err(e.to_string()),
            }
        }
    };
    let solution = outcome.map_err(Failure::Solve)?;
    let text = solution_to_json(&model, &solution, args.method.name());
    if args.output.is_some() {
        emit(args.output.as_deref(), &text)?;
    }
    let objective = solution.objective;
    eprintln!("status {} objective {objective:e} iterations {}", solution.status, solution.iterations);
    if args.output.is_none() {
        print!("{text}");
    }
    if solution.status != Status::Optimal {
        return Err(Failure::Solve(solution.message.unwrap_or_else(|| solution.status.to_string())));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Build { model } => build(model)?,
        Command::Partition(args) => partition(args)?,
        Command::Aggregate { model, levels, output } => {
            let (m, g) = load(&model)?;
            let agg = aggregate(&m, g, levels).map_err(anyhow::Error::from)?;
            save(&agg.model, agg.graph, output.as_deref())?;
        }
        Command::Solve(args) => solve(args)?,
        Command::Export { model, format: ExportFormat::Dot, color_partitions, aggregated, output } => {
            let (m, g) = load(&model)?;
            let dot = export_dot(&m, g, DotOptions { color_by_partition: color_partitions, aggregated })
                .map_err(anyhow::Error::from)?;
            emit(output.as_deref(), &dot)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Solve(msg)) => {
            eprintln!("solve failed: {msg}");
            ExitCode::from(2)
        }
    }
}
