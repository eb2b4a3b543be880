//! Source-code model, intended architecture, and mapping state.
//!
//! A [`SystemModel`] is immutable once constructed. Entities and modules are
//! addressed by dense indices internally; string ids only appear at the file
//! boundary and in user-facing output.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eleven kinds of dependency extracted from compiled code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DependencyType {
    Extends,
    Implements,
    Field,
    Argument,
    Returns,
    LocalVar,
    MethodCall,
    ConstructorCall,
    OwnFieldUse,
    FieldUse,
    Throws,
}

impl DependencyType {
    pub const COUNT: usize = 11;

    pub const ALL: [DependencyType; Self::COUNT] = [
        DependencyType::Extends,
        DependencyType::Implements,
        DependencyType::Field,
        DependencyType::Argument,
        DependencyType::Returns,
        DependencyType::LocalVar,
        DependencyType::MethodCall,
        DependencyType::ConstructorCall,
        DependencyType::OwnFieldUse,
        DependencyType::FieldUse,
        DependencyType::Throws,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DependencyType::Extends => "Extends",
            DependencyType::Implements => "Implements",
            DependencyType::Field => "Field",
            DependencyType::Argument => "Argument",
            DependencyType::Returns => "Returns",
            DependencyType::LocalVar => "LocalVar",
            DependencyType::MethodCall => "MethodCall",
            DependencyType::ConstructorCall => "ConstructorCall",
            DependencyType::OwnFieldUse => "OwnFieldUse",
            DependencyType::FieldUse => "FieldUse",
            DependencyType::Throws => "Throws",
        }
    }

    /// Position in [`DependencyType::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for DependencyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DependencyType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DependencyType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown dependency type `{s}`")))
    }
}

/// Raw name strings of an entity, grouped by where they were found.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntityNames {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub package: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub methods: Vec<String>,
    pub identifiers: Vec<String>,
    pub strings: Vec<String>,
}

impl EntityNames {
    /// All raw names, in source-kind order.
    pub fn all(&self) -> impl Iterator<Item = &str> {
        self.package
            .iter()
            .chain(self.file.iter())
            .chain(self.methods.iter())
            .chain(self.identifiers.iter())
            .chain(self.strings.iter())
            .map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entity {
    pub id: String,
    #[serde(default)]
    pub names: EntityNames,
}

impl Entity {
    pub fn new(id: impl Into<String>) -> Self {
        Entity {
            id: id.into(),
            names: EntityNames::default(),
        }
    }

    pub fn with_file(mut self, file: impl Into<String>) -> Self {
        self.names.file = Some(file.into());
        self
    }
}

fn one() -> u32 {
    1
}

/// A dependency as written in a model file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dependency {
    pub from: String,
    pub to: String,
    #[serde(rename = "type")]
    pub kind: DependencyType,
    #[serde(default = "one")]
    pub count: u32,
}

/// A validated dependency between two entity indices. `(from, to, kind)` is
/// unique within a model; repeated dependencies are folded into `count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: DependencyType,
    pub count: u32,
}

/// Modules of the intended architecture and the directed dependencies
/// allowed between them. A module may always depend on itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchitectureModel {
    modules: Vec<String>,
    index: HashMap<String, usize>,
    allowed: Vec<(usize, usize)>,
    matrix: Vec<bool>,
}

impl ArchitectureModel {
    pub fn new<S: AsRef<str>>(modules: &[S], allowed: &[(S, S)]) -> Result<Self> {
        let mut problems = Vec::new();
        let arch = Self::build(
            modules.iter().map(|m| m.as_ref().to_owned()).collect(),
            allowed
                .iter()
                .map(|(a, b)| (a.as_ref().to_owned(), b.as_ref().to_owned()))
                .collect(),
            &mut problems,
        );
        if problems.is_empty() {
            Ok(arch)
        } else {
            Err(Error::Validation(problems))
        }
    }

    fn build(modules: Vec<String>, allowed: Vec<(String, String)>, problems: &mut Vec<String>) -> Self {
        if modules.is_empty() {
            problems.push("architecture declares no modules".into());
        }
        let mut index = HashMap::new();
        for (i, m) in modules.iter().enumerate() {
            if m.is_empty() {
                problems.push(format!("module #{i} has an empty name"));
            }
            if index.insert(m.clone(), i).is_some() {
                problems.push(format!("module `{m}` declared more than once"));
            }
        }
        let n = modules.len();
        let mut matrix = vec![false; n * n];
        let mut pairs = Vec::new();
        for (from, to) in &allowed {
            match (index.get(from), index.get(to)) {
                (Some(&a), Some(&b)) => {
                    if !matrix[a * n + b] {
                        matrix[a * n + b] = true;
                        pairs.push((a, b));
                    }
                }
                _ => {
                    for name in [from, to] {
                        if !index.contains_key(name) {
                            problems.push(format!("allowed dependency {from} -> {to} references unknown module `{name}`"));
                        }
                    }
                }
            }
        }
        pairs.sort_unstable();
        ArchitectureModel {
            modules,
            index,
            allowed: pairs,
            matrix,
        }
    }

    pub fn modules(&self) -> &[String] {
        &self.modules
    }

    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }

    pub fn module_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn module_name(&self, module: usize) -> &str {
        &self.modules[module]
    }

    /// Explicitly listed allowed pairs, sorted, without implicit self-pairs.
    pub fn allowed(&self) -> &[(usize, usize)] {
        &self.allowed
    }

    pub fn is_allowed(&self, from: usize, to: usize) -> bool {
        from == to || self.matrix[from * self.modules.len() + to]
    }
}

/// A complete system: entities, their dependencies, the intended
/// architecture, and the ground-truth mapping.
#[derive(Clone, Debug)]
pub struct SystemModel {
    name: String,
    entities: Vec<Entity>,
    entity_index: HashMap<String, usize>,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
    architecture: ArchitectureModel,
    ground_truth: Vec<usize>,
}

impl PartialEq for SystemModel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.entities == other.entities
            && self.edges == other.edges
            && self.architecture == other.architecture
            && self.ground_truth == other.ground_truth
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleRecord {
    name: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AllowedRecord {
    from: String,
    to: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingRecord {
    entity: String,
    module: String,
}

/// On-disk layout of a model file.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct ModelFile {
    name: String,
    entities: Vec<Entity>,
    #[serde(default)]
    dependencies: Vec<Dependency>,
    modules: Vec<ModuleRecord>,
    #[serde(default)]
    allowed: Vec<AllowedRecord>,
    ground_truth: Vec<MappingRecord>,
}

impl SystemModel {
    /// Validates and assembles a model. All violations are collected into a
    /// single [`Error::Validation`].
    pub fn new(
        name: impl Into<String>,
        entities: Vec<Entity>,
        dependencies: Vec<Dependency>,
        modules: Vec<String>,
        allowed: Vec<(String, String)>,
        ground_truth: Vec<(String, String)>,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        let architecture = ArchitectureModel::build(modules, allowed, &mut problems);

        let mut entity_index = HashMap::with_capacity(entities.len());
        for (i, e) in entities.iter().enumerate() {
            if e.id.is_empty() {
                problems.push(format!("entity #{i} has an empty id"));
            } else if entity_index.insert(e.id.clone(), i).is_some() {
                problems.push(format!("entity `{}` declared more than once", e.id));
            }
        }

        let mut merged: BTreeMap<(usize, usize, DependencyType), u64> = BTreeMap::new();
        for d in &dependencies {
            let from = entity_index.get(&d.from);
            let to = entity_index.get(&d.to);
            if from.is_none() {
                problems.push(format!(
                    "dependency {} -> {} ({}): unknown entity `{}`",
                    d.from, d.to, d.kind, d.from
                ));
            }
            if to.is_none() {
                problems.push(format!("dependency {} -> {} ({}): unknown entity `{}`", d.from, d.to, d.kind, d.to));
            }
            if d.from == d.to {
                problems.push(format!("dependency {} -> {} ({}): self-dependency", d.from, d.to, d.kind));
            }
            if d.count == 0 {
                problems.push(format!("dependency {} -> {} ({}): count must be >= 1", d.from, d.to, d.kind));
            }
            if let (Some(&f), Some(&t)) = (from, to) {
                if f != t && d.count > 0 {
                    *merged.entry((f, t, d.kind)).or_default() += u64::from(d.count);
                }
            }
        }
        let mut edges = Vec::with_capacity(merged.len());
        for ((from, to, kind), count) in merged {
            match u32::try_from(count) {
                Ok(count) => edges.push(Edge { from, to, kind, count }),
                Err(_) => problems.push(format!(
                    "dependency {} -> {} ({kind}): merged count overflows",
                    entities[from].id, entities[to].id
                )),
            }
        }

        let mut truth = vec![None; entities.len()];
        for (entity, module) in &ground_truth {
            let Some(&e) = entity_index.get(entity) else {
                problems.push(format!("ground truth maps unknown entity `{entity}`"));
                continue;
            };
            let Some(m) = architecture.module_index(module) else {
                problems.push(format!("ground truth maps `{entity}` to undeclared module `{module}`"));
                continue;
            };
            match truth[e] {
                Some(prev) if prev != m => problems.push(format!(
                    "ground truth maps `{entity}` to both `{}` and `{module}`",
                    architecture.module_name(prev)
                )),
                _ => truth[e] = Some(m),
            }
        }
        let missing: Vec<&str> = truth
            .iter()
            .zip(&entities)
            .filter(|(t, _)| t.is_none())
            .map(|(_, e)| e.id.as_str())
            .collect();
        if !missing.is_empty() {
            let shown: Vec<&str> = missing.iter().take(10).copied().collect();
            problems.push(format!(
                "ground truth is not total: {} entit{} unmapped ({}{})",
                missing.len(),
                if missing.len() == 1 { "y" } else { "ies" },
                shown.join(", "),
                if missing.len() > shown.len() { ", ..." } else { "" }
            ));
        }

        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }

        let mut incident = vec![Vec::new(); entities.len()];
        for (i, e) in edges.iter().enumerate() {
            incident[e.from].push(i);
            incident[e.to].push(i);
        }

        Ok(SystemModel {
            name: name.into(),
            entities,
            entity_index,
            edges,
            incident,
            architecture,
            ground_truth: truth.into_iter().map(|t| t.unwrap_or_default()).collect(),
        })
    }

    pub fn from_json_str(json: &str, origin: &Path) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(json).map_err(|e| {
            let line = e.line();
            Error::Parse {
                path: origin.to_path_buf(),
                line,
                column: e.column(),
                message: e.to_string(),
                text: json.lines().nth(line.saturating_sub(1)).unwrap_or("").chars().take(120).collect(),
            }
        })?;
        Self::new(
            file.name,
            file.entities,
            file.dependencies,
            file.modules.into_iter().map(|m| m.name).collect(),
            file.allowed.into_iter().map(|a| (a.from, a.to)).collect(),
            file.ground_truth.into_iter().map(|g| (g.entity, g.module)).collect(),
        )
    }

    pub fn to_json_string(&self) -> String {
        let file = ModelFile {
            name: self.name.clone(),
            entities: self.entities.clone(),
            dependencies: self.dependencies(),
            modules: self
                .architecture
                .modules()
                .iter()
                .map(|name| ModuleRecord { name: name.clone() })
                .collect(),
            allowed: self
                .architecture
                .allowed()
                .iter()
                .map(|&(a, b)| AllowedRecord {
                    from: self.architecture.module_name(a).to_owned(),
                    to: self.architecture.module_name(b).to_owned(),
                })
                .collect(),
            ground_truth: self
                .ground_truth
                .iter()
                .enumerate()
                .map(|(e, &m)| MappingRecord {
                    entity: self.entities[e].id.clone(),
                    module: self.architecture.module_name(m).to_owned(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn entity(&self, index: usize) -> &Entity {
        &self.entities[index]
    }

    pub fn entity_index(&self, id: &str) -> Option<usize> {
        self.entity_index.get(id).copied()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn module_count(&self) -> usize {
        self.architecture.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Indices into [`SystemModel::edges`] of every edge touching `entity`.
    pub fn incident_edges(&self, entity: usize) -> impl Iterator<Item = &Edge> {
        self.incident[entity].iter().map(|&i| &self.edges[i])
    }

    /// Dependency count with multiplicity.
    pub fn dependency_count(&self) -> u64 {
        self.edges.iter().map(|e| u64::from(e.count)).sum()
    }

    /// Dependencies in file form.
    pub fn dependencies(&self) -> Vec<Dependency> {
        self.edges
            .iter()
            .map(|e| Dependency {
                from: self.entities[e.from].id.clone(),
                to: self.entities[e.to].id.clone(),
                kind: e.kind,
                count: e.count,
            })
            .collect()
    }

    pub fn architecture(&self) -> &ArchitectureModel {
        &self.architecture
    }

    pub fn ground_truth(&self, entity: usize) -> usize {
        self.ground_truth[entity]
    }

    pub fn ground_truth_all(&self) -> &[usize] {
        &self.ground_truth
    }
}

/// Reads and validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<SystemModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SystemModel::from_json_str(&text, path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Initial,
    Auto,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Initial => "initial",
            Origin::Auto => "auto",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub module: usize,
    pub origin: Origin,
}

/// Partial entity-to-module assignment. Assignments are write-once.
#[derive(Clone, Debug, PartialEq)]
pub struct MappingState {
    assignment: Vec<Option<Assignment>>,
    last_attraction: Vec<Option<Vec<f64>>>,
    module_count: usize,
    mapped: usize,
}

impl MappingState {
    pub fn new(model: &SystemModel) -> Self {
        Self::with_sizes(model.entity_count(), model.module_count())
    }

    pub fn with_sizes(entities: usize, modules: usize) -> Self {
        MappingState {
            assignment: vec![None; entities],
            last_attraction: vec![None; entities],
            module_count: modules,
            mapped: 0,
        }
    }

    pub fn assign(&mut self, entity: usize, module: usize, origin: Origin) -> Result<()> {
        if entity >= self.assignment.len() {
            return Err(Error::InvalidArgument(format!("entity index {entity} out of range")));
        }
        if module >= self.module_count {
            return Err(Error::InvalidArgument(format!("module index {module} is not declared")));
        }
        if let Some(prev) = self.assignment[entity] {
            return Err(Error::Precondition(format!(
                "entity {entity} is already mapped ({}) to module {}",
                prev.origin.as_str(),
                prev.module
            )));
        }
        self.assignment[entity] = Some(Assignment { module, origin });
        self.mapped += 1;
        Ok(())
    }

    pub fn assignment(&self, entity: usize) -> Option<Assignment> {
        self.assignment[entity]
    }

    pub fn module_of(&self, entity: usize) -> Option<usize> {
        self.assignment[entity].map(|a| a.module)
    }

    pub fn is_mapped(&self, entity: usize) -> bool {
        self.assignment[entity].is_some()
    }

    pub fn mapped_count(&self) -> usize {
        self.mapped
    }

    pub fn count_with_origin(&self, origin: Origin) -> usize {
        self.assignment.iter().flatten().filter(|a| a.origin == origin).count()
    }

    pub fn entity_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn module_count(&self) -> usize {
        self.module_count
    }

    pub fn unmapped(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignment.iter().enumerate().filter(|(_, a)| a.is_none()).map(|(i, _)| i)
    }

    pub fn mapped_to(&self, module: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.is_some_and(|a| a.module == module))
            .map(|(i, _)| i)
    }

    pub fn record_attraction(&mut self, entity: usize, values: Vec<f64>) {
        self.last_attraction[entity] = Some(values);
    }

    pub fn last_attraction(&self, entity: usize) -> Option<&[f64]> {
        self.last_attraction[entity].as_deref()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Conformance {
    Internal,
    Convergent,
    Divergent,
    Unknown,
}

/// Classifies an implementation dependency against the intended
/// architecture under the current mapping.
pub fn edge_conformance(state: &MappingState, edge: &Edge, arch: &ArchitectureModel) -> Conformance {
    match (state.module_of(edge.from), state.module_of(edge.to)) {
        (Some(a), Some(b)) if a == b => Conformance::Internal,
        (Some(a), Some(b)) if arch.is_allowed(a, b) => Conformance::Convergent,
        (Some(_), Some(_)) => Conformance::Divergent,
        _ => Conformance::Unknown,
    }
}
