use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use archmap::analysis::{
    compare, conditions_present, default_comparisons, f1_values, parse_comparison, running_series, summarize, Condition, SelectOptions,
    PLOT_HEADER, STATS_HEADER, SUMMARY_HEADER,
};
use archmap::attract::count::{CountParams, WeightProfile};
use archmap::attract::{AfConfig, AfKind, DEFAULT_NB_THRESHOLD};
use archmap::experiment::{read_results, run_batch, BatchOptions, InitialSize, InitialSpec, RecallMode, RunConfig};
use archmap::gaopt::{optimize_weights, round_weights, GaConfig};
use archmap::hugme::{run_hugme, ITERATION_LOG_HEADER};
use archmap::model::{edge_conformance, load_model, Conformance, MappingState, Origin, SystemModel};
use archmap::synth::{generate, Naming, SynthConfig};
use archmap::{svg, Error, Result};

#[derive(Parser)]
#[command(name = "archmap", version, about = "Map source-code entities to architectural modules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map the orphans of one model from an initial set.
    Map(MapArgs),
    /// Run a seeded batch of mapping experiments into a results CSV.
    Experiment(ExperimentArgs),
    /// Search dependency-type weights for the counting function.
    Optimize(OptimizeArgs),
    /// Compare conditions in a results CSV and emit tables and plot data.
    Analyze(AnalyzeArgs),
    /// Write a synthetic model with a known ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    af: AfKind,
    /// Add dependency-derived terms (text-based functions only).
    #[arg(long)]
    cda: bool,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    #[arg(long, default_value_t = DEFAULT_NB_THRESHOLD)]
    threshold: f64,
    /// Weight file, or `reference:<system>`.
    #[arg(long)]
    weights: Option<String>,
    /// `ground:<fraction>` or `file:<path>`.
    #[arg(long)]
    initial: InitialSpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mapping CSV destination; standard output by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    model: PathBuf,
    /// Functions to run, comma separated or repeated; all four by default.
    #[arg(long, value_delimiter = ',')]
    af: Vec<AfKind>,
    #[arg(long, default_value_t = 100)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; the available parallelism by default.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Weight file, or `reference:<system>`, for the counting function.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, default_value_t = DEFAULT_NB_THRESHOLD)]
    threshold: f64,
    /// Draw the initial-set fraction from `lo:hi` instead of the full range.
    #[arg(long, value_name = "LO:HI")]
    initial_range: Option<String>,
    /// Recall counts correct (default) or all automatic mappings.
    #[arg(long, default_value = "correct", value_parser = ["correct", "performed"])]
    recall: String,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Fitness evaluations.
    #[arg(long, default_value_t = 320)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    #[arg(long)]
    threads: Option<usize>,
    /// Weight file to write; the trace goes next to it as `<stem>.trace.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    results: PathBuf,
    /// `a:b` with conditions such as `nb`, `nb+cda`, `nb-cda`; repeatable.
    #[arg(long)]
    compare: Vec<String>,
    /// Keep the better half of each 5% segment of counting-function runs.
    #[arg(long)]
    ca_filter: bool,
    /// Running-median window width on the initial-set fraction.
    #[arg(long, default_value_t = 0.1)]
    window: f64,
    #[arg(long, default_value = "analysis")]
    out: PathBuf,
    /// Also render SVG plots.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    entities: usize,
    #[arg(long, default_value_t = 5)]
    modules: usize,
    /// Share of name words borrowed from other modules.
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    /// Ignore modules when naming entities.
    #[arg(long)]
    random_names: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code != 0 && !e.to_string().contains("Usage:") {
                eprintln!("\n{}", usage_for(std::env::args().nth(1)));
            }
            return ExitCode::from(code as u8);
        }
    };
    let outcome = match cli.command {
        Command::Map(a) => cmd_map(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}

fn usage_for(subcommand: Option<String>) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let usage = subcommand
        .and_then(|name| cmd.find_subcommand_mut(&name).map(|sub| sub.render_usage()))
        .unwrap_or_else(|| Cli::command().render_usage());
    usage.to_string()
}

fn load_weights(spec: &str) -> Result<WeightProfile> {
    match spec.strip_prefix("reference:") {
        Some(system) => WeightProfile::reference(system)
            .map(|w| w.coarse())
            .ok_or_else(|| Error::InvalidArgument(format!("no reference weights for '{system}'"))),
        None => WeightProfile::load(spec),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.into(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn cmd_map(a: MapArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let cfg = match a.af {
        AfKind::Count => {
            if a.cda {
                return Err(Error::InvalidArgument("--cda applies to ir, lsi and nb only".into()));
            }
            let weights = match &a.weights {
                Some(w) => load_weights(w)?,
                None => {
                    eprintln!("warning: no --weights given, assuming unit weights");
                    WeightProfile::unit()
                }
            };
            AfConfig::Count(CountParams::new(a.phi, a.omega, weights)?)
        }
        AfKind::Ir => AfConfig::Ir { cda: a.cda },
        AfKind::Lsi => AfConfig::Lsi { cda: a.cda },
        AfKind::Nb => AfConfig::Nb {
            cda: a.cda,
            threshold: a.threshold,
        },
    };
    cfg.validate()?;
    let initial = a.initial.resolve(&model, a.seed)?;
    let outcome = run_hugme(&model, initial, &cfg)?;
    let csv = mapping_csv(&model, &outcome.state);
    match &a.out {
        Some(path) => write_file(path, &csv)?,
        None => io::stdout().write_all(csv.as_bytes()).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        })?,
    }

    let mut counts = [0u64; 4];
    for edge in model.edges() {
        let slot = match edge_conformance(&outcome.state, edge, model.architecture()) {
            Conformance::Convergent => 0,
            Conformance::Divergent => 1,
            Conformance::Internal => 2,
            Conformance::Unknown => 3,
        };
        counts[slot] += u64::from(edge.count);
    }
    eprintln!(
        "{}: {} initial, {} auto-mapped, {} unmapped",
        model.name(),
        outcome.state.count_with_origin(Origin::Initial),
        outcome.state.count_with_origin(Origin::Auto),
        model.entity_count() - outcome.state.mapped_count()
    );
    eprintln!(
        "dependencies: convergent={} divergent={} internal={} unknown={}",
        counts[0], counts[1], counts[2], counts[3]
    );
    eprintln!("{ITERATION_LOG_HEADER}");
    for record in &outcome.log {
        eprintln!("{record}");
    }
    Ok(())
}

/// `entity,module,origin,confidence`; confidence is the winning attraction
/// of automatic mappings.
fn mapping_csv(model: &SystemModel, state: &MappingState) -> String {
    let mut out = String::from("entity,module,origin,confidence\n");
    for e in 0..model.entity_count() {
        let id = csv_field(&model.entity(e).id);
        let line = match state.assignment(e) {
            Some(asg) => {
                let module = csv_field(model.architecture().module_name(asg.module));
                let confidence = match (asg.origin, state.last_attraction(e)) {
                    (Origin::Auto, Some(values)) => values[asg.module].to_string(),
                    _ => String::new(),
                };
                format!("{id},{module},{},{confidence}\n", asg.origin.as_str())
            }
            None => format!("{id},,unmapped,\n"),
        };
        out += &line;
    }
    out
}

fn parse_range(s: &str) -> Result<InitialSize> {
    let bad = || Error::InvalidArgument(format!("--initial-range '{s}' is not of the form lo:hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok(InitialSize::Fraction(lo, hi))
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let afs = if a.af.is_empty() { AfKind::ALL.to_vec() } else { a.af };
    let mut cfg = RunConfig::new(afs, a.seed, a.runs);
    if let Some(w) = &a.weights {
        cfg = cfg.with_weights(load_weights(w)?);
    }
    cfg.threshold = a.threshold;
    if let Some(r) = &a.initial_range {
        cfg.initial_size = parse_range(r)?;
    }
    cfg.recall = if a.recall == "performed" {
        RecallMode::Performed
    } else {
        RecallMode::Correct
    };
    let summary = run_batch(
        &model,
        &cfg,
        &a.out,
        BatchOptions {
            threads: a.threads,
            stop_after: None,
        },
    )?;
    if summary.resumed_from > 0 {
        eprintln!("resumed after repetition {}", summary.resumed_from);
    }
    eprintln!("{} rows written to {}", summary.rows, a.out.display());
    Ok(())
}

fn cmd_optimize(a: OptimizeArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let cfg = GaConfig {
        phi: a.phi,
        omega: a.omega,
        ..GaConfig::default()
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = a.threads {
        if n == 0 {
            return Err(Error::InvalidArgument("thread count must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let result = pool.install(|| optimize_weights(&model, a.budget, a.seed, &cfg))?;
    let weights = round_weights(&result.best);
    write_file(&a.out, &weights.to_json_string())?;

    let stem = a
        .out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "weights".into());
    let trace_path = a.out.with_file_name(format!("{stem}.trace.csv"));
    let mut trace = String::from("generation,best_fitness\n");
    for (g, f) in result.trace.iter().enumerate() {
        trace += &format!("{g},{f}\n");
    }
    write_file(&trace_path, &trace)?;
    eprintln!(
        "best fitness {} after {} generations; weights written to {}",
        result.best_fitness,
        result.trace.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let rows = read_results(&a.results)?;
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!("{} holds no results", a.results.display())));
    }
    if !(a.window > 0.0 && a.window < 1.0) {
        return Err(Error::InvalidArgument(format!("window must lie in (0, 1), got {}", a.window)));
    }
    let opts = SelectOptions { ca_filter: a.ca_filter };
    let comparisons: Vec<(Condition, Condition)> = if a.compare.is_empty() {
        default_comparisons(&rows)
    } else {
        a.compare.iter().map(|c| parse_comparison(c)).collect::<Result<_>>()?
    };
    let mut stats = format!("{STATS_HEADER}\n");
    for (x, y) in comparisons {
        stats += &format!("{}\n", compare(&rows, x, y, opts)?);
    }

    let mut summary = format!("{SUMMARY_HEADER}\n");
    for row in summarize(&rows, opts) {
        summary += &format!("{row}\n");
    }

    let present = conditions_present(&rows);
    let mut plot = format!("{PLOT_HEADER}\n");
    let mut series = Vec::new();
    for &cond in &present {
        let points = running_series(&rows, cond, a.window, opts)?;
        for p in &points {
            plot += &format!("{},{},{},{},{cond}\n", p.fraction, p.median, p.p25, p.p75);
        }
        series.push((cond, points));
    }

    write_file(&a.out.join("stats.csv"), &stats)?;
    write_file(&a.out.join("summary.csv"), &summary)?;
    write_file(&a.out.join("plot.csv"), &plot)?;
    if a.svg {
        let lines: Vec<(String, _)> = series
            .into_iter()
            .filter(|(c, _)| c.cda.is_none())
            .map(|(c, p)| (c.af.label().to_owned(), p))
            .collect();
        write_file(
            &a.out.join("running_median.svg"),
            &svg::running_median_chart("Median F1 by initial set size", &lines),
        )?;
        let boxes: Vec<(String, Vec<f64>)> = present.iter().map(|&c| (c.to_string(), f1_values(&rows, c, opts))).collect();
        write_file(&a.out.join("f1_box.svg"), &svg::box_chart("F1 per condition", &boxes))?;
    }
    print!("{stats}");
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.noise) {
        return Err(Error::InvalidArgument(format!("--noise {} lies outside [0, 1]", a.noise)));
    }
    let model = generate(&SynthConfig {
        entities: a.entities,
        modules: a.modules,
        naming: if a.random_names { Naming::Random } else { Naming::ModuleConsistent },
        name_noise: a.noise,
        seed: a.seed,
        ..SynthConfig::default()
    })?;
    model.save(&a.out)?;
    eprintln!(
        "{}: {} entities, {} modules, {} dependencies",
        a.out.display(),
        model.entity_count(),
        model.module_count(),
        model.dependency_count()
    );
    Ok(())
}
