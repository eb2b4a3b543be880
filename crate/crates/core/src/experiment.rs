//! Seeded mapping experiments: random initial sets, random parameters, one
//! engine run per attraction function, metrics, and CSV persistence.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attract::count::{CountParams, WeightProfile};
use crate::attract::{AfConfig, AfKind, Corpus, DEFAULT_NB_THRESHOLD};
use crate::error::{Error, Result};
use crate::hugme::run_hugme_with;
use crate::model::{MappingState, Origin, SystemModel};

/// Exact column order of result files.
pub const RESULTS_HEADER: &str = "system,af,run_id,seed,use_cda,omega,phi,threshold,initial_size,\
initial_fraction,orphans,auto_mapped,correct,unmapped,iterations,precision,recall,f1";

/// The random source of one repetition: the master seed selects the key,
/// the repetition index selects the stream.
pub fn repetition_rng(seed: u64, repetition: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repetition);
    rng
}

/// How many entities the initial set holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSize {
    /// Uniform over `[|M|, |E| - 1]`.
    Uniform,
    /// A fraction of `|E|` drawn uniformly from the range, clamped to the
    /// uniform bounds.
    Fraction(f64, f64),
}

/// Draws a ground-truth-consistent initial mapping that covers every module.
pub fn generate_initial_mapping(model: &SystemModel, size: InitialSize, rng: &mut impl Rng) -> Result<MappingState> {
    let (entities, modules) = (model.entity_count(), model.module_count());
    if entities < modules {
        return Err(Error::Precondition(format!("{entities} entities cannot cover {modules} modules")));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); modules];
    for (e, &m) in model.ground_truth_all().iter().enumerate() {
        members[m].push(e);
    }
    if let Some(m) = members.iter().position(Vec::is_empty) {
        return Err(Error::Precondition(format!(
            "no entity belongs to module '{}' in the ground truth",
            model.architecture().module_name(m)
        )));
    }
    let upper = (entities - 1).max(modules);
    let n = match size {
        InitialSize::Uniform => rng.random_range(modules..=upper),
        InitialSize::Fraction(lo, hi) => {
            let f = if hi > lo { rng.random_range(lo..hi) } else { lo };
            ((f * entities as f64).round() as usize).clamp(modules, upper)
        }
    };
    let mut state = MappingState::new(model);
    let mut chosen = vec![false; entities];
    for (m, list) in members.iter().enumerate() {
        let e = list[rng.random_range(0..list.len())];
        state.assign(e, m, Origin::Initial)?;
        chosen[e] = true;
    }
    let pool: Vec<usize> = (0..entities).filter(|&e| !chosen[e]).collect();
    for i in sample(rng, pool.len(), n - modules) {
        let e = pool[i];
        state.assign(e, model.ground_truth(e), Origin::Initial)?;
    }
    Ok(state)
}

/// Where a single mapping run takes its initial set from.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    /// A random ground-truth subset of this fraction of the entities,
    /// covering every module.
    Ground(f64),
    /// Lines of `entity` (mapped per the ground truth) or `entity,module`.
    /// Blank lines and lines starting with `#` are skipped.
    File(PathBuf),
}

impl FromStr for InitialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(f) = s.strip_prefix("ground:") {
            let f: f64 = f.parse().map_err(|_| Error::InvalidArgument(format!("'{f}' is not a fraction")))?;
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidArgument(format!("initial fraction {f} lies outside [0, 1]")));
            }
            Ok(InitialSpec::Ground(f))
        } else if let Some(p) = s.strip_prefix("file:") {
            Ok(InitialSpec::File(PathBuf::from(p)))
        } else {
            Err(Error::InvalidArgument(format!(
                "initial set '{s}' must be ground:<fraction> or file:<path>"
            )))
        }
    }
}

impl InitialSpec {
    /// Builds the initial mapping. Random draws use stream 0 of `seed`.
    pub fn resolve(&self, model: &SystemModel, seed: u64) -> Result<MappingState> {
        match self {
            InitialSpec::Ground(f) => generate_initial_mapping(model, InitialSize::Fraction(*f, *f), &mut repetition_rng(seed, 0)),
            InitialSpec::File(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                parse_initial_mapping(model, &text).map_err(|e| e.context(path.display().to_string()))
            }
        }
    }
}

/// Parses an explicit initial set (see [`InitialSpec::File`]).
pub fn parse_initial_mapping(model: &SystemModel, text: &str) -> Result<MappingState> {
    let mut state = MappingState::new(model);
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| Error::InvalidArgument(format!("line {}: {msg}", n + 1));
        let (entity, module) = match line.split_once(',') {
            Some((e, m)) => (e.trim(), Some(m.trim())),
            None => (line, None),
        };
        let e = model
            .entity_index(entity)
            .ok_or_else(|| bad(format!("unknown entity '{entity}'")))?;
        let m = match module {
            Some(name) => model
                .architecture()
                .module_index(name)
                .ok_or_else(|| bad(format!("unknown module '{name}'")))?,
            None => model.ground_truth(e),
        };
        state
            .assign(e, m, Origin::Initial)
            .map_err(|_| bad(format!("entity '{entity}' listed twice")))?;
    }
    Ok(state)
}

/// Fixed parts of the parameter sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingConfig {
    pub weights: WeightProfile,
    pub threshold: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            weights: WeightProfile::unit(),
            threshold: DEFAULT_NB_THRESHOLD,
        }
    }
}

/// Random parameters: phi and omega uniform on `[0, 1)` for the counting
/// function, a fair coin for the dependency-term switch of the others.
pub fn sample_params(af: AfKind, fixed: &SamplingConfig, rng: &mut impl Rng) -> AfConfig {
    match af {
        AfKind::Count => {
            let omega = rng.random::<f64>();
            let phi = rng.random::<f64>();
            AfConfig::Count(CountParams {
                phi,
                omega,
                weights: fixed.weights,
            })
        }
        AfKind::Ir => AfConfig::Ir { cda: rng.random_bool(0.5) },
        AfKind::Lsi => AfConfig::Lsi { cda: rng.random_bool(0.5) },
        AfKind::Nb => AfConfig::Nb {
            cda: rng.random_bool(0.5),
            threshold: fixed.threshold,
        },
    }
}

/// What recall divides into the orphan count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallMode {
    /// Correct automatic mappings.
    #[default]
    Correct,
    /// All automatic mappings.
    Performed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    /// Entities outside the initial set.
    pub orphans: usize,
    pub auto_mapped: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn compute_metrics(final_state: &MappingState, initial: &MappingState, model: &SystemModel, recall: RecallMode) -> Metrics {
    let orphans = (0..model.entity_count()).filter(|&e| !initial.is_mapped(e)).count();
    let mut auto_mapped = 0;
    let mut correct = 0;
    for e in 0..model.entity_count() {
        if let Some(a) = final_state.assignment(e).filter(|a| a.origin == Origin::Auto) {
            auto_mapped += 1;
            if a.module == model.ground_truth(e) {
                correct += 1;
            }
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(correct, auto_mapped);
    let recall = match recall {
        RecallMode::Correct => ratio(correct, orphans),
        RecallMode::Performed => ratio(auto_mapped, orphans),
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics {
        orphans,
        auto_mapped,
        correct,
        precision,
        recall,
        f1,
    }
}

/// One row of a results file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub system: String,
    pub af: AfKind,
    pub run_id: u64,
    pub seed: u64,
    pub use_cda: Option<bool>,
    pub omega: Option<f64>,
    pub phi: Option<f64>,
    pub threshold: Option<f64>,
    pub initial_size: usize,
    pub initial_fraction: f64,
    pub orphans: usize,
    pub auto_mapped: usize,
    pub correct: usize,
    pub unmapped: usize,
    pub iterations: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Everything that determines a batch's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub afs: Vec<AfKind>,
    pub seed: u64,
    pub repetitions: u64,
    pub initial_size: InitialSize,
    pub weights: [f64; 11],
    pub threshold: f64,
    pub recall: RecallMode,
}

impl RunConfig {
    pub fn new(afs: Vec<AfKind>, seed: u64, repetitions: u64) -> Self {
        RunConfig {
            afs,
            seed,
            repetitions,
            initial_size: InitialSize::Uniform,
            weights: *WeightProfile::unit().values(),
            threshold: DEFAULT_NB_THRESHOLD,
            recall: RecallMode::Correct,
        }
    }

    pub fn with_weights(mut self, weights: WeightProfile) -> Self {
        self.weights = *weights.values();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("at least one repetition is required".into()));
        }
        if self.afs.is_empty() {
            return Err(Error::InvalidArgument("no attraction function selected".into()));
        }
        if let InitialSize::Fraction(lo, hi) = self.initial_size {
            if !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) {
                return Err(Error::InvalidArgument(format!("invalid initial fraction range {lo}..{hi}")));
            }
        }
        self.sampling().map(|_| ())
    }

    fn sampling(&self) -> Result<SamplingConfig> {
        let cfg = SamplingConfig {
            weights: WeightProfile::new(self.weights)?,
            threshold: self.threshold,
        };
        AfConfig::Nb {
            cda: false,
            threshold: cfg.threshold,
        }
        .validate()?;
        Ok(cfg)
    }
}

/// Runs every configured function against one shared initial mapping.
pub fn run_repetition(corpus: &Corpus, model: &SystemModel, cfg: &RunConfig, repetition: u64) -> Result<Vec<RunResult>> {
    let sampling = cfg.sampling()?;
    let mut rng = repetition_rng(cfg.seed, repetition);
    let initial = generate_initial_mapping(model, cfg.initial_size, &mut rng)?;
    let params: Vec<AfConfig> = cfg.afs.iter().map(|&af| sample_params(af, &sampling, &mut rng)).collect();
    let initial_size = initial.mapped_count();
    params
        .iter()
        .enumerate()
        .map(|(i, af)| {
            let outcome = run_hugme_with(corpus, model, initial.clone(), af).map_err(|e| e.context(format!("repetition {repetition}")))?;
            let m = compute_metrics(&outcome.state, &initial, model, cfg.recall);
            Ok(RunResult {
                system: model.name().to_owned(),
                af: af.kind(),
                run_id: repetition * cfg.afs.len() as u64 + i as u64,
                seed: cfg.seed,
                use_cda: af.use_cda(),
                omega: af.count_params().map(|p| p.omega),
                phi: af.count_params().map(|p| p.phi),
                threshold: af.threshold(),
                initial_size,
                initial_fraction: initial_size as f64 / model.entity_count() as f64,
                orphans: m.orphans,
                auto_mapped: m.auto_mapped,
                correct: m.correct,
                unmapped: m.orphans - m.auto_mapped,
                iterations: outcome.iterations(),
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BatchOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
    /// Stop (leaving the resume marker) once this many repetitions are on
    /// disk. Used to exercise resumption.
    pub stop_after: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchSummary {
    pub rows: u64,
    pub resumed_from: u64,
    pub complete: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct ResumeMarker {
    system: String,
    entities: usize,
    config: RunConfig,
    next_repetition: u64,
    bytes: u64,
}

pub fn resume_marker_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".resume");
    PathBuf::from(name)
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::InvalidArgument("thread count must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

/// All rows of a batch, in repetition order, without touching the disk.
pub fn run_batch_collect(model: &SystemModel, cfg: &RunConfig, threads: Option<usize>) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let corpus = Corpus::new(model);
    let rows: Result<Vec<Vec<RunResult>>> = thread_pool(threads)?.install(|| {
        (0..cfg.repetitions)
            .into_par_iter()
            .map(|r| run_repetition(&corpus, model, cfg, r))
            .collect()
    });
    Ok(rows?.into_iter().flatten().collect())
}

fn write_rows(out: &mut BufWriter<File>, rows: &[RunResult], header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    out.write_all(&bytes).map_err(|e| Error::io("results", e))
}

/// Runs a batch into `out`. A `<out>.resume` marker is kept while the
/// batch is unfinished; a later call with the same configuration continues
/// after the last completed repetition. A marker left by a different
/// configuration is rejected.
pub fn run_batch(model: &SystemModel, cfg: &RunConfig, out: &Path, options: BatchOptions) -> Result<BatchSummary> {
    cfg.validate()?;
    let pool = thread_pool(options.threads)?;
    let corpus = Corpus::new(model);
    let marker_path = resume_marker_path(out);
    let mut marker = ResumeMarker {
        system: model.name().to_owned(),
        entities: model.entity_count(),
        config: cfg.clone(),
        next_repetition: 0,
        bytes: 0,
    };
    if let Ok(text) = fs::read_to_string(&marker_path) {
        let previous: ResumeMarker = serde_json::from_str(&text).map_err(|e| Error::from(e).context(marker_path.display().to_string()))?;
        if previous.system != marker.system || previous.entities != marker.entities || previous.config != marker.config {
            return Err(Error::InvalidArgument(format!(
                "{} belongs to a different experiment; remove it to start over",
                marker_path.display()
            )));
        }
        marker.next_repetition = previous.next_repetition;
        marker.bytes = previous.bytes;
    }
    let resumed_from = marker.next_repetition;
    let file = if resumed_from > 0 {
        let mut f = OpenOptions::new().write(true).open(out).map_err(|e| Error::io(out, e))?;
        f.set_len(marker.bytes).map_err(|e| Error::io(out, e))?;
        f.seek(SeekFrom::End(0)).map_err(|e| Error::io(out, e))?;
        f
    } else {
        File::create(out).map_err(|e| Error::io(out, e))?
    };
    let mut writer = BufWriter::new(file);
    let save_marker = |m: &ResumeMarker| -> Result<()> {
        let text = serde_json::to_string_pretty(m).expect("marker serializes");
        fs::write(&marker_path, text).map_err(|e| Error::io(&marker_path, e))
    };
    save_marker(&marker)?;

    let chunk = (pool.current_num_threads() as u64 * 4).max(8);
    let end = match options.stop_after {
        Some(n) => cfg.repetitions.min(n),
        None => cfg.repetitions,
    };
    let mut rows = 0;
    while marker.next_repetition < end {
        let start = marker.next_repetition;
        let stop = (start + chunk).min(end);
        let results: Result<Vec<Vec<RunResult>>> = pool.install(|| {
            (start..stop)
                .into_par_iter()
                .map(|r| run_repetition(&corpus, model, cfg, r))
                .collect()
        });
        let results: Vec<RunResult> = results?.into_iter().flatten().collect();
        write_rows(&mut writer, &results, start == 0)?;
        writer.flush().map_err(|e| Error::io(out, e))?;
        rows += results.len() as u64;
        marker.next_repetition = stop;
        marker.bytes = writer.get_ref().metadata().map_err(|e| Error::io(out, e))?.len();
        save_marker(&marker)?;
    }
    let complete = marker.next_repetition == cfg.repetitions;
    if complete {
        fs::remove_file(&marker_path).map_err(|e| Error::io(&marker_path, e))?;
    }
    Ok(BatchSummary {
        rows,
        resumed_from,
        complete,
    })
}

/// Reads a results file written by [`run_batch`].
pub fn read_results(path: &Path) -> Result<Vec<RunResult>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != RESULTS_HEADER {
        return Err(Error::InvalidArgument(format!(
            "{}: not a results file (unexpected header)",
            path.display()
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::from(e).context(path.display().to_string())))
        .collect()
}
