use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use sisi::cascade::{estimate_sd_forward, make_observation, make_observation_with_size, pick_sources};
use sisi::graph::{gen_grid, gen_random_graph, load_edge_list_file};
use sisi::metrics::{detection_rate, f1_score, jaccard_quality};
use sisi::{detect, rng, Algorithm, DetectOptions, DirectedGraph, Error, IdMap, Model, ModelParams, NodeId, Observation, Tau};

#[derive(Parser)]
#[command(name = "sisi", version, about = "Infection source identification on directed graphs")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress (repeat for more detail). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph as an edge list.
    #[command(subcommand)]
    Gen(Gen),
    /// Simulate a cascade and write an observation file.
    Simulate(SimulateArgs),
    /// Detect sources for an observation.
    Detect(DetectArgs),
    /// Run the evaluation protocol and write per-cell means as CSV.
    Benchmark(BenchmarkArgs),
}

#[derive(Subcommand)]
enum Gen {
    /// rows x cols grid, edges both ways between 4-neighbours.
    Grid {
        /// Grid rows.
        #[arg(long)]
        rows: usize,
        /// Grid columns.
        #[arg(long)]
        cols: usize,
        /// Output path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Uniform random directed graph without self-loops or parallel edges.
    Random {
        /// Node count.
        #[arg(long)]
        nodes: usize,
        /// Directed edge count.
        #[arg(long)]
        edges: usize,
        /// Base seed of every random stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Edge-list file, one "src dst" pair per line.
    #[arg(long)]
    graph: PathBuf,
    /// Diffusion model: si or ic.
    #[arg(long, default_value = "si")]
    model: Model,
    /// Per-edge infection probability.
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Number of uniformly chosen sources.
    #[arg(long, default_value_t = 1, conflicts_with = "source_ids")]
    sources: usize,
    /// Explicit source ids (as in the graph file), comma separated.
    #[arg(long, value_delimiter = ',')]
    source_ids: Vec<u64>,
    /// Stop at the first step where at least this many nodes are infected.
    #[arg(long, default_value_t = 1)]
    min_infected: usize,
    /// Run for exactly this many steps ("inf" for no limit) instead.
    #[arg(long, conflicts_with = "min_infected")]
    tau: Option<Tau>,
    /// Give up after this many steps without reaching the size.
    #[arg(long, default_value_t = 1_000_000)]
    tau_cap: u64,
    /// Base seed of every random stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SisiArgs {
    /// Accuracy parameter of the sample threshold.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Failure probability of the sample threshold.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Base seed of every random stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Forward trials per candidate evaluation in greedy and max-degree.
    #[arg(long, default_value_t = 200)]
    trials_per_eval: usize,
    /// Forward trials used to score a baseline's final set.
    #[arg(long, default_value_t = 1000)]
    eval_trials: usize,
    /// Cap on RR sets generated.
    #[arg(long)]
    max_samples: Option<u64>,
    /// Cap on stored RR-set memberships.
    #[arg(long, default_value_t = 50_000_000)]
    max_memberships: u64,
    /// Forward trials for the Jaccard quality ratio (0 to skip).
    #[arg(long, default_value_t = 10_000)]
    qjd_trials: usize,
    /// Leave timings out so output is byte-identical across runs.
    #[arg(long)]
    no_timing: bool,
}

impl SisiArgs {
    fn options(&self) -> DetectOptions {
        DetectOptions {
            epsilon: self.epsilon,
            delta: self.delta,
            seed: self.seed,
            trials_per_eval: self.trials_per_eval,
            eval_trials: self.eval_trials,
            max_samples: self.max_samples,
            max_memberships: Some(self.max_memberships),
        }
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Edge-list file, one "src dst" pair per line.
    #[arg(long)]
    graph: PathBuf,
    /// Observation file written by `simulate`.
    #[arg(long)]
    obs: PathBuf,
    /// sisi, sisi-relax, greedy or max-degree.
    #[arg(long, default_value = "sisi-relax")]
    algo: Algorithm,
    #[command(flatten)]
    common: SisiArgs,
    /// JSON report path; without it the report goes to stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Edge-list file, one "src dst" pair per line.
    #[arg(long)]
    graph: PathBuf,
    /// Diffusion model: si or ic.
    #[arg(long, default_value = "si")]
    model: Model,
    /// Per-edge infection probability.
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Source counts, one table row group each.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,20")]
    sources: Vec<usize>,
    /// Target infection sizes.
    #[arg(long, value_delimiter = ',', default_value = "100,500,1000")]
    sizes: Vec<usize>,
    /// Cascades per (sources, size) cell.
    #[arg(long, default_value_t = 10)]
    cases: usize,
    /// Algorithms to compare.
    #[arg(long, value_delimiter = ',', default_value = "sisi-relax,greedy,max-degree")]
    algos: Vec<String>,
    /// Give up after this many steps without reaching the size.
    #[arg(long, default_value_t = 1_000_000)]
    tau_cap: u64,
    #[command(flatten)]
    common: SisiArgs,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    algorithm: Algorithm,
    sources: Vec<u64>,
    estimated_sd: f64,
    samples_used: u64,
    delta: Option<usize>,
    epsilon_effective: Option<f64>,
    budget_exhausted: bool,
    runtime_ms: Option<f64>,
    f1: Option<f64>,
    detection_rate: Option<f64>,
    q_jd: Option<f64>,
}

type CliResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn write_out(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_graph(path: &Path) -> CliResult<(DirectedGraph, IdMap)> {
    load_edge_list_file(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn cmd_gen(g: Gen) -> CliResult<()> {
    let (graph, out) = match g {
        Gen::Grid { rows, cols, output } => (gen_grid(rows, cols)?, output),
        Gen::Random { nodes, edges, seed, output } => (gen_random_graph(nodes, edges, seed)?, output),
    };
    info!("generated {} nodes, {} edges", graph.node_count(), graph.edge_count());
    write_out(out.as_deref(), &graph.to_edge_list())
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    let (g, ids) = load_graph(&a.graph)?;
    let mut r = rng::from_seed(a.seed);
    let sources = if a.source_ids.is_empty() {
        pick_sources(&g, a.sources, &mut r)?
    } else {
        let mut s = a
            .source_ids
            .iter()
            .map(|&e| ids.internal(e).ok_or_else(|| format!("source {e} is not in the graph")))
            .collect::<std::result::Result<Vec<NodeId>, _>>()?;
        s.sort_unstable();
        s.dedup();
        s
    };
    let obs = match a.tau {
        Some(tau) => make_observation(&g, &sources, ModelParams::new(a.model, a.beta, tau)?, &mut r)?,
        None => make_observation_with_size(&g, &sources, a.model, a.beta, a.min_infected, a.tau_cap, &mut r)?,
    };
    info!("{} infected after tau = {}", obs.k(), obs.params().tau);
    write_out(a.output.as_deref(), &obs.to_text(&ids))
}

fn run_detect(g: &DirectedGraph, obs: &Observation, algo: Algorithm, common: &SisiArgs) -> CliResult<(Report, Vec<NodeId>)> {
    let start = Instant::now();
    let d = detect(g, obs, algo, &common.options())?;
    let runtime = start.elapsed().as_secs_f64() * 1e3;

    let (mut f1, mut rate, mut q_jd) = (None, None, None);
    if let Some(truth) = obs.true_sources() {
        f1 = Some(f1_score(&d.sources, truth)?);
        rate = Some(detection_rate(&d.sources, truth)?);
        if common.qjd_trials > 0 {
            let mut r = rng::stream(common.seed, 1);
            match jaccard_quality(g, &d.sources, truth, obs, common.qjd_trials, &mut r) {
                Ok(q) => q_jd = Some(q),
                Err(Error::Degenerate(msg)) => warn!("jaccard quality undefined: {msg}"),
                Err(e) => return Err(e.into()),
            }
        }
    }
    let report = Report {
        algorithm: algo,
        sources: Vec::new(),
        estimated_sd: d.estimated_sd,
        samples_used: d.samples_used,
        delta: d.delta,
        epsilon_effective: d.epsilon_effective,
        budget_exhausted: d.budget_exhausted,
        runtime_ms: (!common.no_timing).then_some(runtime),
        f1,
        detection_rate: rate,
        q_jd,
    };
    Ok((report, d.sources))
}

fn cmd_detect(a: DetectArgs) -> CliResult<()> {
    let (g, ids) = load_graph(&a.graph)?;
    let obs = Observation::load(&a.obs, &ids).map_err(|e| format!("{}: {e}", a.obs.display()))?;
    let (mut report, sources) = run_detect(&g, &obs, a.algo, &a.common)?;
    report.sources = sources.iter().map(|&v| ids.external(v)).collect();
    if report.budget_exhausted {
        warn!("sampling budget reached before the stopping condition held");
    }
    let json = serde_json::to_string_pretty(&report)? + "\n";
    write_out(a.output.as_deref(), &json)?;
    if a.output.is_some() {
        let list: Vec<String> = report.sources.iter().map(u64::to_string).collect();
        println!("{}: sources {} estimated symmetric difference {:.3}", report.algorithm, list.join(" "), report.estimated_sd);
    }
    Ok(())
}

/// One CSV row: means over the cases of one (source count, size) cell.
#[derive(Serialize)]
struct Row {
    sources: usize,
    target_size: usize,
    algorithm: Algorithm,
    cases: usize,
    mean_infected: f64,
    mean_sd: f64,
    mean_f1: f64,
    mean_detection_rate: f64,
    mean_q_jd: Option<f64>,
    mean_runtime_ms: Option<f64>,
}

#[derive(Default)]
struct Cell {
    cases: usize,
    infected: f64,
    sd: f64,
    f1: f64,
    rate: f64,
    q_jd: f64,
    q_cases: usize,
    runtime: f64,
}

fn cmd_benchmark(a: BenchmarkArgs) -> CliResult<()> {
    if a.algos.iter().all(|s| s.trim().is_empty()) {
        return Err("no algorithms given".into());
    }
    let algos = a.algos.iter().map(|s| s.trim().parse::<Algorithm>()).collect::<sisi::Result<Vec<_>>>()?;
    if a.cases == 0 || a.sources.is_empty() || a.sizes.is_empty() {
        return Err("need at least one case, source count and size".into());
    }
    let (g, _) = load_graph(&a.graph)?;
    let mut csv = csv::Writer::from_writer(Vec::new());
    let mut cell_id = 0u64;
    for &count in &a.sources {
        for &size in &a.sizes {
            cell_id += 1;
            let mut cells: Vec<Cell> = algos.iter().map(|_| Cell::default()).collect();
            for case in 0..a.cases {
                let mut r = rng::stream(a.common.seed, cell_id << 32 | case as u64);
                let mut attempt = 0;
                let obs = loop {
                    attempt += 1;
                    let sources = pick_sources(&g, count, &mut r)?;
                    match make_observation_with_size(&g, &sources, a.model, a.beta, size, a.tau_cap, &mut r) {
                        Ok(o) => break o,
                        Err(Error::Degenerate(msg)) if attempt < 100 => info!("redrawing sources: {msg}"),
                        Err(e) => return Err(e.into()),
                    }
                };
                let eval_seed = rng::split_base(&mut r);
                for (cell, &algo) in cells.iter_mut().zip(&algos) {
                    let common = SisiArgs { seed: eval_seed, ..a.common.clone() };
                    let (rep, sources) = run_detect(&g, &obs, algo, &common)?;
                    let sd = estimate_sd_forward(&g, &sources, &obs, a.common.eval_trials, &mut rng::from_seed(eval_seed))?;
                    cell.cases += 1;
                    cell.infected += obs.k() as f64;
                    cell.sd += sd.mean;
                    cell.f1 += rep.f1.unwrap_or(0.0);
                    cell.rate += rep.detection_rate.unwrap_or(0.0);
                    if let Some(q) = rep.q_jd {
                        cell.q_jd += q;
                        cell.q_cases += 1;
                    }
                    cell.runtime += rep.runtime_ms.unwrap_or(0.0);
                }
                info!("sources {count} size {size} case {} done", case + 1);
            }
            for (cell, &algo) in cells.iter().zip(&algos) {
                let n = cell.cases as f64;
                csv.serialize(Row {
                    sources: count,
                    target_size: size,
                    algorithm: algo,
                    cases: cell.cases,
                    mean_infected: cell.infected / n,
                    mean_sd: cell.sd / n,
                    mean_f1: cell.f1 / n,
                    mean_detection_rate: cell.rate / n,
                    mean_q_jd: (cell.q_cases > 0).then(|| cell.q_jd / cell.q_cases as f64),
                    mean_runtime_ms: (!a.common.no_timing).then(|| cell.runtime / n),
                })?;
            }
        }
    }
    let bytes = csv.into_inner().map_err(|e| e.to_string())?;
    write_out(a.output.as_deref(), &String::from_utf8(bytes)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Gen(g) => cmd_gen(g),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
