//! `uuv-sim`: run, compare and sweep underwater vehicle tracking
//! controllers, and render traces.

mod config;
mod plot;
mod report;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use uuv_hybrid::metrics::run_metrics;
use uuv_hybrid::sim::{run, ControllerVariant, SimConfig, SimTrace, PRESETS};

use config::{parse_assignment, resolve, set_dotted, CliOverrides, Resolved, RunConfig};
use report::{CompareDocument, MetricsDocument, SweepDocument, SweepPoint, METRICS_SCHEMA_VERSION};

/// Output directory used when neither `--out` nor the config file sets one.
const DEFAULT_OUT_DIR: &str = "uuv-out";

#[derive(Parser)]
#[command(name = "uuv-sim", version, about = "Underwater vehicle tracking-control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write trace.csv, metrics.json and plot.svg.
    Run(RunArgs),
    /// Run several controllers on one scenario and rank them by chattering.
    Compare(CompareArgs),
    /// Vary one configuration key over a list of values.
    Sweep(SweepArgs),
    /// Render a trace CSV as SVG.
    Plot(PlotArgs),
    /// List the scenario presets, or print one as a resolved config.
    Presets(PresetsArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// Scenario preset (see `uuv-sim presets`).
    #[arg(long, short = 'p')]
    preset: Option<String>,
    /// Seed of the noise streams; requires a noisy scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Override a configuration key, e.g. `--set scenario.duration=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, short = 'o', env = "UUV_SIM_OUT")]
    out: Option<PathBuf>,
    /// Parallel simulations (default: all cores).
    #[arg(long, short = 'j')]
    workers: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Controller variant, e.g. `bio_bs+bio_smc`.
    #[arg(long)]
    controller: Option<ControllerVariant>,
    #[arg(long)]
    no_csv: bool,
    #[arg(long)]
    no_svg: bool,
    #[arg(long)]
    no_metrics: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// `all` or a comma-separated list of variants.
    #[arg(long, default_value = "all")]
    controllers: String,
    /// Also write each run's trace as `<controller>.csv`.
    #[arg(long)]
    traces: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    controller: Option<ControllerVariant>,
    /// Dotted configuration key to vary.
    #[arg(long)]
    param: String,
    /// Comma-separated values, e.g. `1,2,4`.
    #[arg(long, conflicts_with = "range", required_unless_present = "range")]
    values: Option<String>,
    /// Evenly spaced values `start:stop:count`.
    #[arg(long)]
    range: Option<String>,
}

#[derive(Args)]
struct PlotArgs {
    /// Trace CSV written by `run`.
    trace: PathBuf,
    /// Output SVG (default: the trace path with an .svg extension).
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PresetsArgs {
    /// Print this preset's fully resolved configuration as TOML.
    #[arg(long)]
    show: Option<String>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Presets(args) => cmd_presets(args),
    }
}

fn load(common: &Common, controller: Option<ControllerVariant>) -> Result<(Resolved, PathBuf)> {
    let file = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let set = common.set.iter().map(|s| parse_assignment(s)).collect::<Result<Vec<_>>>()?;
    let cli = CliOverrides {
        preset: common.preset.clone(),
        controller,
        seed: common.seed,
        set,
    };
    let resolved = resolve(&file, &cli)?;
    let out = common
        .out
        .clone()
        .or_else(|| resolved.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok((resolved, out))
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    builder.build().context("starting worker pool")
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn simulate(cfg: &SimConfig) -> Result<SimTrace> {
    run(cfg).with_context(|| format!("simulating {}", cfg.scenario.controller))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (resolved, out) = load(&args.common, args.controller)?;
    let export = config::Export {
        csv: resolved.export.csv && !args.no_csv,
        svg: resolved.export.svg && !args.no_svg,
        metrics: resolved.export.metrics && !args.no_metrics,
    };
    let trace = simulate(&resolved.sim)?;
    let metrics = run_metrics(&trace, &resolved.metrics);

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write(&out.join("config.json"), serde_json::to_string_pretty(&resolved.sim)? + "\n")?;
    if export.csv {
        write(&out.join("trace.csv"), trace.to_csv_string())?;
    }
    if export.metrics {
        let doc = MetricsDocument::new(&resolved.sim, resolved.metrics, metrics.clone());
        write(&out.join("metrics.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    }
    if export.svg {
        write(&out.join("plot.svg"), plot::render(&trace))?;
    }
    print!("{}", report::metrics_table(&metrics));
    println!("wrote {}", out.display());
    Ok(())
}

fn parse_controllers(spec: &str) -> Result<Vec<ControllerVariant>> {
    if spec.trim() == "all" {
        return Ok(ControllerVariant::ALL.to_vec());
    }
    let list = spec
        .split(',')
        .map(|s| s.trim().parse::<ControllerVariant>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    if list.is_empty() {
        bail!("no controllers given");
    }
    Ok(list)
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let variants = parse_controllers(&args.controllers)?;
    let (resolved, out) = load(&args.common, Some(variants[0]))?;
    let configs: Vec<SimConfig> = variants
        .iter()
        .map(|&v| {
            let mut cfg = resolved.sim.clone();
            cfg.scenario.controller = v;
            cfg
        })
        .collect();
    let traces = pool(args.common.workers)?.install(|| configs.par_iter().map(simulate).collect::<Result<Vec<_>>>())?;
    let metrics = traces.iter().map(|t| run_metrics(t, &resolved.metrics)).collect();
    let ranked = report::rank(metrics);

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    if args.traces {
        for trace in &traces {
            let name = trace.config.scenario.controller.to_string().replace('+', "_");
            write(&out.join(format!("{name}.csv")), trace.to_csv_string())?;
        }
    }
    let doc = CompareDocument {
        schema_version: METRICS_SCHEMA_VERSION,
        seed: resolved.sim.scenario.seed(),
        config: resolved.sim.clone(),
        metrics_config: resolved.metrics,
        runs: ranked.clone(),
    };
    write(&out.join("compare.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    print!("{}", report::compare_table(&ranked));
    println!("wrote {}", out.display());
    Ok(())
}

fn sweep_values(args: &SweepArgs) -> Result<Vec<toml::Value>> {
    if let Some(list) = &args.values {
        return Ok(list.split(',').map(|v| parse_assignment(&format!("v={}", v.trim())).map(|a| a.1)).collect::<Result<_>>()?);
    }
    let range = args.range.as_deref().unwrap_or_default();
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, count] = parts[..] else {
        bail!("--range must be start:stop:count, got `{range}`");
    };
    let start: f64 = start.trim().parse().context("--range start")?;
    let stop: f64 = stop.trim().parse().context("--range stop")?;
    let count: usize = count.trim().parse().context("--range count")?;
    if count < 2 {
        bail!("--range count must be at least 2");
    }
    Ok((0..count)
        .map(|i| toml::Value::Float(start + (stop - start) * i as f64 / (count - 1) as f64))
        .collect())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let (resolved, out) = load(&args.common, args.controller)?;
    let values = sweep_values(&args)?;
    let base = serde_json::to_value(&resolved.sim)?;
    let mut configs = Vec::with_capacity(values.len());
    for value in &values {
        let mut tree = base.clone();
        set_dotted(&mut tree, &args.param, serde_json::to_value(value)?)?;
        let cfg: SimConfig = serde_json::from_value(tree).with_context(|| format!("{} = {value}", args.param))?;
        cfg.validate().with_context(|| format!("{} = {value}", args.param))?;
        configs.push(cfg);
    }
    let traces = pool(args.common.workers)?.install(|| configs.par_iter().map(simulate).collect::<Result<Vec<_>>>())?;
    let points: Vec<SweepPoint> = values
        .iter()
        .zip(&traces)
        .map(|(value, trace)| {
            Ok(SweepPoint {
                value: serde_json::to_value(value)?,
                metrics: run_metrics(trace, &resolved.metrics),
            })
        })
        .collect::<Result<_>>()?;

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let doc = SweepDocument {
        schema_version: METRICS_SCHEMA_VERSION,
        seed: resolved.sim.scenario.seed(),
        parameter: args.param.clone(),
        config: resolved.sim.clone(),
        metrics_config: resolved.metrics,
        points: points.clone(),
    };
    write(&out.join("sweep.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    print!("{}", report::sweep_table(&args.param, &points));
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let file = fs::File::open(&args.trace).with_context(|| format!("opening {}", args.trace.display()))?;
    let trace = SimTrace::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", args.trace.display()))?;
    let output = args.output.unwrap_or_else(|| args.trace.with_extension("svg"));
    write(&output, plot::render(&trace))?;
    println!("wrote {}", output.display());
    Ok(())
}

fn cmd_presets(args: PresetsArgs) -> Result<()> {
    match args.show {
        Some(name) => {
            let cfg = SimConfig::preset(&name, ControllerVariant::default())?;
            print!("{}", toml::to_string_pretty(&cfg).context("formatting preset")?);
        }
        None => {
            for (name, description) in PRESETS {
                println!("{name:<14} {description}");
            }
        }
    }
    Ok(())
}
