//! `mrf-bench`: command-line driver for the benchmark pipeline. Every stage
//! (generate, sample, infer, evaluate) reads and writes the shared file
//! formats, so stages can be run independently or as the full `run` pipeline.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mrf_bench::aggregate;
use mrf_bench::config::{parse_method_list, ExperimentConfig, L1Rule, MethodSettings, NetworkType};
use mrf_bench::experiment::{
    self, draw_model, generate_network, run_experiment, run_replicate, sampler_seed, ResultsTable,
};
use mrf_bench_core::eval::{pr_curve, rank_edges};
use mrf_bench_core::model::{Graph, IsingModel};
use mrf_bench_core::pairwise::{mutual_information_matrix, ScoreMatrix};
use mrf_bench_core::sampler::{build_srbm, gibbs_sample, Dataset};

#[derive(Parser)]
#[command(name = "mrf-bench", version, about = "Structure-learning benchmark for binary pairwise Markov networks")]
struct Cli {
    /// Worker threads; falls back to MRF_BENCH_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground-truth graph and model.
    Generate(GenerateArgs),
    /// Sample a dataset from a model with the block-Gibbs sampler.
    Sample(SampleArgs),
    /// Run structure-learning methods on a dataset.
    Infer(InferArgs),
    /// Evaluate a score matrix against a true graph.
    Evaluate(EvaluateArgs),
    /// Run the full pipeline from a config file.
    Run(RunArgs),
    /// Aggregate a results table into per-cell summaries.
    Aggregate(AggregateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// grid, scale_free, or small_world.
    #[arg(long)]
    network: String,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replicate index; stage outputs match `run`'s rep_<i> artifacts.
    #[arg(long, default_value_t = 0)]
    replicate: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    m0: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 0.25)]
    p: f64,
}

#[derive(Args)]
struct SampleArgs {
    /// Path to a model.json file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replicate: usize,
    #[arg(long, default_value_t = 2000)]
    burn_in: usize,
    #[arg(long, default_value_t = 50)]
    thinning: usize,
    /// csv or packed.
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    /// Dataset file (headerless 0/1 CSV, or the packed binary format).
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated list from {mi, clr, aracne, nd, plml1, plmdca}.
    #[arg(long)]
    methods: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    grid_size: usize,
    #[arg(long, default_value_t = 0.95)]
    nd_beta: f64,
    #[arg(long, default_value_t = 0.0)]
    aracne_tolerance: f64,
    /// max or min.
    #[arg(long, default_value = "max")]
    l1_rule: String,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Score matrix CSV.
    #[arg(long)]
    scores: PathBuf,
    /// True graph in edge-list text format.
    #[arg(long)]
    graph: PathBuf,
    /// Where to write the precision-recall curve CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config method list (comma separated).
    #[arg(long)]
    methods: Option<String>,
    /// Run a single replicate instead of the whole batch.
    #[arg(long)]
    replicate: Option<usize>,
}

#[derive(Args)]
struct AggregateArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn init_threads(cli_threads: Option<usize>) -> Result<()> {
    let threads = match cli_threads {
        Some(t) => Some(t),
        None => match std::env::var("MRF_BENCH_THREADS") {
            Ok(value) => Some(value.parse().context("bad MRF_BENCH_THREADS")?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            bail!("thread count must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("thread pool already initialized")?;
    }
    Ok(())
}

fn read_dataset(path: &PathBuf) -> Result<Dataset> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    if bytes.starts_with(b"SRBM") {
        Ok(Dataset::from_packed(&bytes)?)
    } else {
        Ok(Dataset::from_csv(&String::from_utf8(bytes).context("dataset is not UTF-8")?)?)
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let network = NetworkType::parse(&args.network)?;
    let mut cfg = ExperimentConfig::new(
        network,
        args.d,
        1,
        args.replicate + 1,
        args.seed,
        vec![mrf_bench::config::Method::Mi],
        args.out.clone(),
    );
    cfg.settings.sf_m0 = args.m0;
    cfg.settings.sf_m = args.m;
    cfg.settings.sw_k = args.k;
    cfg.settings.sw_p = args.p;
    cfg.validate()?;
    let graph = generate_network(&cfg, args.replicate)?;
    let model = draw_model(&cfg, args.replicate, &graph);
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("graph.txt"), graph.to_text())?;
    fs::write(args.out.join("model.json"), model.to_json())?;
    println!(
        "wrote graph.txt ({} nodes, {} edges) and model.json to {}",
        graph.d(),
        graph.n_edges(),
        args.out.display()
    );
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let model = IsingModel::from_json(&fs::read_to_string(&args.model)?)?;
    let seed = sampler_seed(args.seed, args.replicate);
    let data = gibbs_sample(&build_srbm(&model), args.n, args.burn_in, args.thinning, seed, false)?;
    match args.format.as_str() {
        "csv" => fs::write(&args.out, data.to_csv())?,
        "packed" => fs::write(&args.out, data.to_packed())?,
        other => bail!("unknown format `{other}` (csv, packed)"),
    }
    println!("wrote {} samples over {} variables to {}", data.n(), data.d(), args.out.display());
    Ok(())
}

fn cmd_infer(args: InferArgs) -> Result<()> {
    let methods = parse_method_list(&args.methods)?;
    let data = read_dataset(&args.data)?;
    let settings = MethodSettings {
        grid_size: args.grid_size,
        nd_beta: args.nd_beta,
        aracne_tolerance: args.aracne_tolerance,
        l1_rule: match args.l1_rule.as_str() {
            "max" => L1Rule::Max,
            "min" => L1Rule::Min,
            other => bail!("unknown l1 rule `{other}` (max, min)"),
        },
        ..MethodSettings::default()
    };
    fs::create_dir_all(&args.out)?;
    let mi = if methods.iter().any(mrf_bench::config::Method::uses_mi) {
        let start = std::time::Instant::now();
        let matrix = mutual_information_matrix(&data)?;
        Some((matrix, start.elapsed().as_secs_f64()))
    } else {
        None
    };
    for method in methods {
        let (scores, secs, mi_secs) = experiment::score_method(&settings, method, &data, mi.as_ref())?;
        fs::write(args.out.join(format!("scores_{}.csv", method.name())), scores.to_csv())?;
        fs::write(
            args.out.join(format!("edges_{}.txt", method.name())),
            rank_edges(&scores).to_text(),
        )?;
        println!("{}: scored in {:.3} s (mi step {:.3} s)", method.name(), secs, mi_secs);
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let scores = ScoreMatrix::from_csv(&fs::read_to_string(&args.scores)?)?;
    let graph = Graph::from_text(&fs::read_to_string(&args.graph)?)?;
    let curve = pr_curve(&rank_edges(&scores), &graph)?;
    if let Some(out) = args.out {
        fs::write(&out, curve.to_csv())?;
        println!("wrote curve to {}", out.display());
    }
    println!("auc={} rc090={}", curve.auc(), curve.rc090());
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(methods) = args.methods {
        cfg.methods = parse_method_list(&methods)?;
    }
    cfg.validate()?;

    let table = match args.replicate {
        Some(r) => {
            if r >= cfg.replicates {
                bail!("replicate {r} out of range (config has {})", cfg.replicates);
            }
            fs::create_dir_all(&cfg.output_dir)?;
            let table = run_replicate(&cfg, r)?;
            print!("{}", table.to_csv());
            table
        }
        None => {
            let table = run_experiment(&cfg)?;
            println!(
                "wrote {} result rows to {}",
                table.rows.len(),
                cfg.output_dir.join("results.csv").display()
            );
            table
        }
    };
    if !table.failures.is_empty() {
        for failure in &table.failures {
            eprintln!("FAILED: {failure}");
        }
        bail!("{} replicate/method failures", table.failures.len());
    }
    Ok(())
}

fn cmd_aggregate(args: AggregateArgs) -> Result<()> {
    let table = ResultsTable::from_csv(&fs::read_to_string(&args.results)?)?;
    let summary = aggregate::aggregate(&table)?;
    fs::write(&args.out, aggregate::to_csv(&summary))?;
    println!("wrote {} summary rows to {}", summary.len(), args.out.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    init_threads(cli.threads)?;
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Infer(args) => cmd_infer(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Run(args) => cmd_run(args),
        Command::Aggregate(args) => cmd_aggregate(args),
    }
}
