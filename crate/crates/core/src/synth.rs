//! Synthetic systems with a known ground truth, for demos and for exercising
//! the attraction functions at desk scale.
//!
//! Modules form a layered architecture where each module may use the next
//! two below it. Dependencies conform to that architecture. Entity names are
//! either drawn from a vocabulary specific to the entity's module or from the
//! pooled vocabulary of all modules.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Dependency, DependencyType, Entity, EntityNames, SystemModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Naming {
    /// Names come mostly from the module's own vocabulary.
    ModuleConsistent,
    /// Names ignore the module.
    Random,
}

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub entities: usize,
    pub modules: usize,
    pub naming: Naming,
    /// Share of name words taken from a foreign module under consistent
    /// naming.
    pub name_noise: f64,
    /// Share of dependencies that stay within a module.
    pub intra_share: f64,
    pub min_dependencies: usize,
    pub max_dependencies: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            entities: 200,
            modules: 5,
            naming: Naming::ModuleConsistent,
            name_noise: 0.3,
            intra_share: 0.6,
            min_dependencies: 1,
            max_dependencies: 6,
            seed: 1,
        }
    }
}

const MODULE_NAMES: [&str; 8] = [
    "Presentation",
    "Workflow",
    "Domain",
    "Persistence",
    "Platform",
    "Reporting",
    "Security",
    "Messaging",
];

const WORDS: [&[&str]; 8] = [
    &[
        "view", "panel", "dialog", "button", "window", "render", "layout", "widget", "menu", "theme", "canvas", "toolbar",
    ],
    &[
        "task",
        "process",
        "schedule",
        "queue",
        "step",
        "approval",
        "route",
        "trigger",
        "pipeline",
        "job",
        "state",
        "transition",
    ],
    &[
        "customer", "order", "invoice", "product", "account", "contract", "price", "discount", "catalog", "payment", "ledger", "basket",
    ],
    &[
        "repository",
        "table",
        "query",
        "record",
        "column",
        "schema",
        "transaction",
        "cursor",
        "index",
        "migration",
        "entity",
        "store",
    ],
    &[
        "thread", "socket", "buffer", "stream", "memory", "clock", "file", "channel", "native", "signal", "device", "kernel",
    ],
    &[
        "report",
        "chart",
        "export",
        "summary",
        "metric",
        "template",
        "column",
        "print",
        "statistic",
        "aggregate",
        "excel",
        "figure",
    ],
    &[
        "token",
        "credential",
        "cipher",
        "role",
        "permission",
        "session",
        "login",
        "secret",
        "audit",
        "certificate",
        "policy",
        "hash",
    ],
    &[
        "message",
        "topic",
        "publish",
        "subscriber",
        "envelope",
        "broker",
        "event",
        "header",
        "payload",
        "dispatch",
        "mailbox",
        "relay",
    ],
];

const COMMON: [&str; 10] = [
    "manager", "factory", "helper", "util", "handler", "service", "default", "abstract", "base", "impl",
];

/// Relative frequency of each dependency type, in declaration order.
const TYPE_WEIGHTS: [u32; DependencyType::COUNT] = [3, 4, 10, 8, 6, 8, 20, 6, 4, 6, 2];

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
        .unwrap_or_default()
}

fn pick_type(rng: &mut impl Rng) -> DependencyType {
    let total: u32 = TYPE_WEIGHTS.iter().sum();
    let mut x = rng.random_range(0..total);
    for (i, w) in TYPE_WEIGHTS.iter().enumerate() {
        if x < *w {
            return DependencyType::ALL[i];
        }
        x -= w;
    }
    unreachable!("weights cover the range")
}

pub fn generate(cfg: &SynthConfig) -> Result<SystemModel> {
    if !(1..=MODULE_NAMES.len()).contains(&cfg.modules) {
        return Err(Error::InvalidArgument(format!(
            "module count must lie in 1..={}",
            MODULE_NAMES.len()
        )));
    }
    if cfg.entities < cfg.modules {
        return Err(Error::InvalidArgument("need at least one entity per module".into()));
    }
    if cfg.min_dependencies > cfg.max_dependencies {
        return Err(Error::InvalidArgument("dependency range is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let modules: Vec<String> = MODULE_NAMES[..cfg.modules].iter().map(|s| s.to_string()).collect();
    let allowed: Vec<(usize, usize)> = (0..cfg.modules)
        .flat_map(|a| (a + 1..cfg.modules.min(a + 3)).map(move |b| (a, b)))
        .collect();
    let home: Vec<usize> = (0..cfg.entities).map(|e| e % cfg.modules).collect();

    let word = |rng: &mut ChaCha8Rng, module: usize| -> &'static str {
        let source = match cfg.naming {
            Naming::ModuleConsistent if !rng.random_bool(cfg.name_noise) => module,
            _ => rng.random_range(0..cfg.modules),
        };
        WORDS[source].choose(rng).expect("word lists are nonempty")
    };
    let mut entities = Vec::with_capacity(cfg.entities);
    for (e, &m) in home.iter().enumerate() {
        let mut class = capitalize(word(&mut rng, m)) + &capitalize(word(&mut rng, m));
        if rng.random_bool(0.3) {
            class += &capitalize(COMMON.choose(&mut rng).expect("nonempty"));
        }
        let package = format!("org.example.{}", word(&mut rng, m));
        let methods = (0..rng.random_range(1..=4))
            .map(|_| {
                format!(
                    "{}{}",
                    ["get", "set", "load", "update", "create"].choose(&mut rng).expect("nonempty"),
                    capitalize(word(&mut rng, m))
                )
            })
            .collect();
        let identifiers = (0..rng.random_range(1..=4)).map(|_| word(&mut rng, m).to_string()).collect();
        entities.push(Entity {
            id: format!("{package}.{class}#{e}"),
            names: EntityNames {
                package: Some(package),
                file: Some(format!("{class}.java")),
                methods,
                identifiers,
                strings: Vec::new(),
            },
        });
    }

    let mut by_module: Vec<Vec<usize>> = vec![Vec::new(); cfg.modules];
    for (e, &m) in home.iter().enumerate() {
        by_module[m].push(e);
    }
    let mut dependencies = Vec::new();
    for (e, &m) in home.iter().enumerate() {
        let targets: Vec<usize> = allowed.iter().filter(|(a, _)| *a == m).map(|(_, b)| *b).collect();
        for _ in 0..rng.random_range(cfg.min_dependencies..=cfg.max_dependencies) {
            let module = if targets.is_empty() || rng.random_bool(cfg.intra_share) {
                m
            } else {
                *targets.choose(&mut rng).expect("nonempty")
            };
            let to = *by_module[module].choose(&mut rng).expect("every module has entities");
            if to == e {
                continue;
            }
            dependencies.push(Dependency {
                from: entities[e].id.clone(),
                to: entities[to].id.clone(),
                kind: pick_type(&mut rng),
                count: rng.random_range(1..=3),
            });
        }
    }
    let name = match cfg.naming {
        Naming::ModuleConsistent => format!("synthetic-{}", cfg.seed),
        Naming::Random => format!("synthetic-random-names-{}", cfg.seed),
    };
    let ground_truth = home
        .iter()
        .enumerate()
        .map(|(e, &m)| (entities[e].id.clone(), modules[m].clone()))
        .collect();
    SystemModel::new(
        name,
        entities,
        dependencies,
        modules.clone(),
        allowed.iter().map(|&(a, b)| (modules[a].clone(), modules[b].clone())).collect(),
        ground_truth,
    )
}
