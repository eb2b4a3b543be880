//! Attraction functions and the per-iteration machinery that evaluates them
//! against a frozen mapping state.

pub mod count;
pub mod nb;
pub mod textsim;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cda::{cda_hypothetical_terms_with, cda_module_terms_with};
use crate::error::{Error, Result};
use crate::hugme::{select_candidate_meansd, select_candidate_threshold};
use crate::model::{DependencyType, MappingState, SystemModel};
use crate::textgen::{entity_document, module_document_from, module_name_document, TermDoc};

use count::{count_attractions, filter_orphans_omega, CountParams};
use nb::{train_nb, NbModel};
use textsim::{IrIndex, LsiIndex};

/// Interned term. Text terms come first; dependency terms follow in a block
/// computed from (source module, type, target module).
pub type TermId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AfKind {
    Count,
    Ir,
    Lsi,
    Nb,
}

impl AfKind {
    pub const ALL: [AfKind; 4] = [AfKind::Count, AfKind::Ir, AfKind::Lsi, AfKind::Nb];

    /// Short identifier used on the command line and in result files.
    pub fn id(self) -> &'static str {
        match self {
            AfKind::Count => "count",
            AfKind::Ir => "ir",
            AfKind::Lsi => "lsi",
            AfKind::Nb => "nb",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AfKind::Count => "CountAttract",
            AfKind::Ir => "IRAttract",
            AfKind::Lsi => "LSIAttract",
            AfKind::Nb => "NBAttract",
        }
    }

    pub fn is_textual(self) -> bool {
        self != AfKind::Count
    }
}

impl fmt::Display for AfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for AfKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AfKind::ALL
            .into_iter()
            .find(|k| k.id().eq_ignore_ascii_case(s) || k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown attraction function '{s}' (expected count, ir, lsi or nb)")))
    }
}

impl Serialize for AfKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for AfKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Default probability threshold of the naive Bayes selection rule.
pub const DEFAULT_NB_THRESHOLD: f64 = 0.9;

/// An attraction function with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AfConfig {
    Count(CountParams),
    Ir { cda: bool },
    Lsi { cda: bool },
    Nb { cda: bool, threshold: f64 },
}

impl AfConfig {
    pub fn nb(cda: bool) -> Self {
        AfConfig::Nb {
            cda,
            threshold: DEFAULT_NB_THRESHOLD,
        }
    }

    pub fn kind(&self) -> AfKind {
        match self {
            AfConfig::Count(_) => AfKind::Count,
            AfConfig::Ir { .. } => AfKind::Ir,
            AfConfig::Lsi { .. } => AfKind::Lsi,
            AfConfig::Nb { .. } => AfKind::Nb,
        }
    }

    /// `None` for the counting function, which has no such switch.
    pub fn use_cda(&self) -> Option<bool> {
        match *self {
            AfConfig::Count(_) => None,
            AfConfig::Ir { cda } | AfConfig::Lsi { cda } | AfConfig::Nb { cda, .. } => Some(cda),
        }
    }

    pub fn count_params(&self) -> Option<&CountParams> {
        match self {
            AfConfig::Count(p) => Some(p),
            _ => None,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match *self {
            AfConfig::Nb { threshold, .. } => Some(threshold),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AfConfig::Count(p) => CountParams::new(p.phi, p.omega, p.weights).map(|_| ()),
            AfConfig::Nb { threshold, .. } if !(threshold > 0.0 && threshold <= 1.0) => {
                Err(Error::InvalidArgument(format!("threshold must lie in (0, 1], got {threshold}")))
            }
            _ => Ok(()),
        }
    }
}

/// Term documents of one model with interned terms, computed once and
/// shared by every run on that model.
#[derive(Clone, Debug)]
pub struct Corpus {
    terms: Vec<String>,
    entity_docs: Vec<TermDoc<TermId>>,
    entity_occurrences: Vec<TermDoc<TermId>>,
    name_docs: Vec<TermDoc<TermId>>,
    modules: usize,
}

impl Corpus {
    pub fn new(model: &SystemModel) -> Self {
        let mut ids: HashMap<String, TermId> = HashMap::new();
        let mut terms = Vec::new();
        let mut intern = |doc: TermDoc| -> TermDoc<TermId> {
            doc.map_terms(|t| {
                *ids.entry(t.clone()).or_insert_with(|| {
                    terms.push(t.clone());
                    (terms.len() - 1) as TermId
                })
            })
        };
        let entity_docs: Vec<TermDoc<TermId>> = model.entities().iter().map(|e| intern(entity_document(e))).collect();
        let name_docs = model
            .architecture()
            .modules()
            .iter()
            .map(|m| intern(module_name_document(m)))
            .collect();
        let entity_occurrences = entity_docs.iter().map(TermDoc::occurrences).collect();
        Corpus {
            terms,
            entity_docs,
            entity_occurrences,
            name_docs,
            modules: model.module_count(),
        }
    }

    pub fn text_term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn entity_doc(&self, entity: usize) -> &TermDoc<TermId> {
        &self.entity_docs[entity]
    }

    pub fn cda_id(&self, source: usize, kind: DependencyType, target: usize) -> TermId {
        let offset = (source * DependencyType::COUNT + kind.index()) * self.modules + target;
        (self.terms.len() + offset) as TermId
    }

    /// Text of an interned term, rebuilding dependency terms from their id.
    pub fn term_text(&self, id: TermId, model: &SystemModel) -> String {
        let id = id as usize;
        if let Some(t) = self.terms.get(id) {
            return t.clone();
        }
        let offset = id - self.terms.len();
        let target = offset % self.modules;
        let rest = offset / self.modules;
        let arch = model.architecture();
        crate::cda::cda_term(
            arch.module_name(rest / DependencyType::COUNT),
            DependencyType::ALL[rest % DependencyType::COUNT],
            arch.module_name(target),
        )
    }

    pub fn cda_module_docs(&self, model: &SystemModel, state: &MappingState) -> Vec<TermDoc<TermId>> {
        cda_module_terms_with(model, state, |a, k, b| self.cda_id(a, k, b))
    }

    /// Module documents, with dependency terms when `cda` holds.
    pub fn module_docs(&self, model: &SystemModel, state: &MappingState, cda: bool) -> Vec<TermDoc<TermId>> {
        let cda_docs = cda.then(|| self.cda_module_docs(model, state));
        (0..self.modules)
            .map(|m| module_document_from(m, state, &self.entity_docs, &self.name_docs[m], cda_docs.as_ref().map(|d| &d[m])))
            .collect()
    }

    /// Naive Bayes training documents: every mapped entity, the module name
    /// and the dependency terms each contribute their distinct terms once.
    pub fn nb_training_docs(&self, model: &SystemModel, state: &MappingState, cda: bool) -> Vec<TermDoc<TermId>> {
        let cda_docs = cda.then(|| self.cda_module_docs(model, state));
        (0..self.modules)
            .map(|m| {
                let mut doc = self.name_docs[m].occurrences();
                for e in state.mapped_to(m) {
                    doc.merge(&self.entity_occurrences[e]);
                }
                if let Some(d) = &cda_docs {
                    doc.merge(&d[m].occurrences());
                }
                doc
            })
            .collect()
    }

    /// The orphan's document, extended by the dependency terms it would
    /// produce if mapped to `hypothesis`.
    pub fn orphan_doc(&self, orphan: usize, hypothesis: Option<usize>, model: &SystemModel, state: &MappingState) -> TermDoc<TermId> {
        let mut doc = self.entity_docs[orphan].clone();
        if let Some(m) = hypothesis {
            doc.merge(&cda_hypothetical_terms_with(orphan, m, model, state, |a, k, b| {
                self.cda_id(a, k, b)
            }));
        }
        doc
    }
}

enum Prepared {
    Count(CountParams),
    Ir(IrIndex<TermId>),
    Lsi(LsiIndex<TermId>),
    Nb(NbModel<TermId>, f64),
}

/// An attraction function initialized from one mapping state.
pub struct Attractor<'a> {
    corpus: &'a Corpus,
    model: &'a SystemModel,
    state: &'a MappingState,
    cda: bool,
    prepared: Prepared,
}

impl<'a> Attractor<'a> {
    pub fn new(cfg: &AfConfig, corpus: &'a Corpus, model: &'a SystemModel, state: &'a MappingState) -> Result<Self> {
        cfg.validate()?;
        if cfg.kind().is_textual() {
            if let Some(m) = (0..model.module_count()).find(|&m| state.mapped_to(m).next().is_none()) {
                return Err(Error::Precondition(format!(
                    "{} needs at least one mapped entity per module; '{}' has none",
                    cfg.kind().label(),
                    model.architecture().module_name(m)
                )));
            }
        }
        let cda = cfg.use_cda().unwrap_or(false);
        let prepared = match *cfg {
            AfConfig::Count(p) => Prepared::Count(p),
            AfConfig::Ir { .. } => Prepared::Ir(IrIndex::new(corpus.module_docs(model, state, cda))),
            AfConfig::Lsi { .. } => Prepared::Lsi(LsiIndex::new(&corpus.module_docs(model, state, cda))?),
            AfConfig::Nb { threshold, .. } => Prepared::Nb(train_nb(&corpus.nb_training_docs(model, state, cda))?, threshold),
        };
        Ok(Attractor {
            corpus,
            model,
            state,
            cda,
            prepared,
        })
    }

    /// Entities considered in this iteration: the omega-filtered unmapped
    /// entities for dependency counting, every unmapped entity otherwise.
    pub fn orphans(&self) -> Vec<usize> {
        match &self.prepared {
            Prepared::Count(p) => filter_orphans_omega(self.model, self.state, p),
            _ => self.state.unmapped().collect(),
        }
    }

    pub fn attractions(&self, orphan: usize) -> Vec<f64> {
        let modules = self.model.module_count();
        let doc = |m: usize| self.corpus.orphan_doc(orphan, self.cda.then_some(m), self.model, self.state);
        match &self.prepared {
            Prepared::Count(p) => count_attractions(orphan, self.model, self.state, p),
            Prepared::Ir(index) if self.cda => (0..modules).map(|m| index.similarity(m, &doc(m))).collect(),
            Prepared::Ir(index) => {
                let q = self.corpus.entity_doc(orphan);
                (0..modules).map(|m| index.similarity(m, q)).collect()
            }
            Prepared::Lsi(index) if self.cda => (0..modules).map(|m| index.similarity(m, &index.fold_in(&doc(m)))).collect(),
            Prepared::Lsi(index) => {
                let q = index.fold_in(self.corpus.entity_doc(orphan));
                (0..modules).map(|m| index.similarity(m, &q)).collect()
            }
            Prepared::Nb(model, _) if self.cda => (0..modules).map(|m| model.classify(&doc(m))[m]).collect(),
            Prepared::Nb(model, _) => model.classify(self.corpus.entity_doc(orphan)),
        }
    }

    /// The module the orphan gets mapped to, if any.
    pub fn select(&self, attractions: &[f64]) -> Option<usize> {
        match self.prepared {
            Prepared::Nb(_, threshold) => select_candidate_threshold(attractions, threshold),
            _ => select_candidate_meansd(attractions),
        }
    }
}

fn attract_once(cfg: AfConfig, orphan: usize, model: &SystemModel, state: &MappingState) -> Result<Vec<f64>> {
    if state.is_mapped(orphan) {
        return Err(Error::Precondition(format!(
            "entity '{}' is already mapped",
            model.entity(orphan).id
        )));
    }
    let corpus = Corpus::new(model);
    Ok(Attractor::new(&cfg, &corpus, model, state)?.attractions(orphan))
}

/// Vector-space attraction of one orphan to every module.
pub fn ir_attract(orphan: usize, model: &SystemModel, state: &MappingState, use_cda: bool) -> Result<Vec<f64>> {
    attract_once(AfConfig::Ir { cda: use_cda }, orphan, model, state)
}

/// Latent-semantic attraction of one orphan to every module.
pub fn lsi_attract(orphan: usize, model: &SystemModel, state: &MappingState, use_cda: bool) -> Result<Vec<f64>> {
    attract_once(AfConfig::Lsi { cda: use_cda }, orphan, model, state)
}

/// Naive Bayes attraction of one orphan to every module.
pub fn nb_attract(orphan: usize, model: &SystemModel, state: &MappingState, use_cda: bool) -> Result<Vec<f64>> {
    attract_once(AfConfig::nb(use_cda), orphan, model, state)
}
