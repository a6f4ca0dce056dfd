use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chart2mermaid::imaging::CannyParams;
use chart2mermaid::metrics::Level;
use chart2mermaid::pipeline::compare::write_comparison;
use chart2mermaid::pipeline::noise::write_noise;
use chart2mermaid::pipeline::sweep::write_sweep;
use chart2mermaid::pipeline::{
    compare, convert, evaluate, noise_report_for, sweep, write_results, Backend, DatasetManifest,
    PipelineError, Results, RunConfig, SweepPlan,
};
use chart2mermaid::stats::DeltaMode;
use chart2mermaid::vlm::{Condition, API_KEY_ENV};

#[derive(Parser)]
#[command(
    name = "chart2mermaid",
    version,
    about = "Convert flowchart images to Mermaid code and score the results",
    after_help = format!("Live endpoints read the bearer token from ${API_KEY_ENV}.")
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Preprocess, extract edges, generate and repair Mermaid code for every manifest entry.
    Convert(RunArgs),
    /// Score converted output against ground truth; writes results.json and summary.csv.
    Evaluate(RunArgs),
    /// Paired statistics between two evaluated conditions; writes stats.json and stats.txt.
    Compare(CompareArgs),
    /// Two-stage Canny configuration search. Configurations are ranked by
    /// global micro node F1 + edge F1; equal keys go to the configuration
    /// evaluated first (lower index).
    Sweep(RunArgs),
    /// Background noise sigma and colour instability for every manifest image.
    NoiseReport(NoiseArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Dataset manifest (JSON or CSV).
    #[arg(long)]
    manifest: PathBuf,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// baseline or edgeflow.
    #[arg(long, value_parser = parse_condition)]
    condition: Option<Condition>,
    #[arg(long)]
    runs: Option<u32>,
    /// Canny thresholds and aperture as low,high,aperture.
    #[arg(long, value_parser = parse_canny)]
    canny: Option<CannyParams>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixture directory; replaces the live endpoint.
    #[arg(long)]
    mock: Option<PathBuf>,
    /// Chat-completions URL.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Model id for syntax repair (defaults to --model).
    #[arg(long)]
    fixer_model: Option<String>,
    /// Flowcharts converted concurrently.
    #[arg(long)]
    concurrency: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    /// Improved condition: a results.json path or a label under --out.
    #[arg(long, default_value = "edgeflow")]
    a: String,
    /// Reference condition: a results.json path or a label under --out.
    #[arg(long, default_value = "baseline")]
    b: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Cliff's delta from within-pair signs instead of all cross pairs.
    #[arg(long)]
    within_pair: bool,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    s.parse().map_err(|e: chart2mermaid::vlm::VlmError| e.to_string())
}

fn parse_canny(s: &str) -> Result<CannyParams, String> {
    CannyParams::parse_triple(s).map_err(|e| e.to_string())
}

fn load_config(args: &RunArgs) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = args.condition {
        cfg.condition = c;
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(c) = &args.canny {
        cfg.canny = Some(c.clone());
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    if let Some(m) = &args.mock {
        cfg.mock = Some(m.clone());
    }
    if let Some(e) = &args.endpoint {
        cfg.endpoint.url = Some(e.clone());
    }
    if let Some(m) = &args.model {
        cfg.endpoint.model = Some(m.clone());
    }
    if let Some(m) = &args.fixer_model {
        cfg.fixer.model = Some(m.clone());
    }
    if let Some(n) = args.concurrency {
        cfg.concurrency = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_global(results: &Results) {
    println!("{} ({} runs per flowchart)", results.condition, results.runs);
    for level in Level::ALL {
        let s = results.global_level(level);
        println!(
            "  {:<5} P {:>7.2}%  R {:>7.2}%  F1 {:>7.2}%",
            level.as_str(),
            s.precision * 100.0,
            s.recall * 100.0,
            s.f1 * 100.0
        );
    }
}

fn resolve_results(arg: &str, out: &Path) -> Result<Results, PipelineError> {
    let p = Path::new(arg);
    if p.is_file() {
        Results::load(p)
    } else {
        Results::load(&out.join(arg).join("results.json"))
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Convert(args) => {
            let cfg = load_config(&args)?;
            let manifest = DatasetManifest::load(&args.manifest)?;
            let backend = Backend::from_config(&cfg)?;
            let s = convert(&manifest, &cfg, &backend, None)?;
            println!(
                "{}: {} valid, {} invalid, {} failed ({} flowcharts x {} runs) -> {}",
                s.label,
                s.valid,
                s.invalid,
                s.failed,
                s.entries.len(),
                s.runs,
                cfg.out.join(&s.label).display()
            );
        }
        Command::Evaluate(args) => {
            let cfg = load_config(&args)?;
            let manifest = DatasetManifest::load(&args.manifest)?;
            let label = cfg.label(None);
            let results = evaluate(&manifest, &cfg.out, &label)?;
            write_results(&cfg.out.join(&label), &results)?;
            print_global(&results);
        }
        Command::Compare(args) => {
            let a = resolve_results(&args.a, &args.out)?;
            let b = resolve_results(&args.b, &args.out)?;
            let mode = if args.within_pair {
                DeltaMode::WithinPair
            } else {
                DeltaMode::AllPairs
            };
            let c = compare(&a, &b, mode)?;
            write_comparison(&args.out, &c)?;
            print!("{}", chart2mermaid::pipeline::render_stats_txt(&c));
        }
        Command::Sweep(args) => {
            let mut cfg = load_config(&args)?;
            cfg.condition = Condition::EdgeFlow;
            let manifest = DatasetManifest::load(&args.manifest)?;
            let backend = Backend::from_config(&cfg)?;
            let report = sweep(&manifest, &cfg, &backend, &SweepPlan::default())?;
            write_sweep(&cfg.out, &report)?;
            print!("{}", chart2mermaid::pipeline::sweep::render_sweep_txt(&report));
        }
        Command::NoiseReport(args) => {
            let manifest = DatasetManifest::load(&args.manifest)?;
            let summary = noise_report_for(&manifest);
            write_noise(&args.out, &summary)?;
            print!("{}", chart2mermaid::pipeline::noise::render_noise_txt(&summary));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
