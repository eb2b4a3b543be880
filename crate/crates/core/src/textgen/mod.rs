//! Term generation: identifier splitting, stemming, length filtering, and
//! the entity and module documents built from the resulting terms.

mod porter;

use std::collections::BTreeMap;

pub use porter::stem;

use crate::model::{Entity, MappingState, SystemModel};

/// Shortest term kept after stemming.
pub const MIN_TERM_LEN: usize = 3;

/// A multiset of terms. Ordered so that every traversal is deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermDoc<T: Ord = String> {
    counts: BTreeMap<T, u32>,
}

impl<T: Ord> Default for TermDoc<T> {
    fn default() -> Self {
        TermDoc { counts: BTreeMap::new() }
    }
}

impl<T: Ord + Clone> TermDoc<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: T, n: u32) {
        if n > 0 {
            *self.counts.entry(term).or_insert(0) += n;
        }
    }

    pub fn insert(&mut self, term: T) {
        self.add(term, 1);
    }

    /// Multiset sum.
    pub fn merge(&mut self, other: &TermDoc<T>) {
        for (t, &n) in &other.counts {
            self.add(t.clone(), n);
        }
    }

    pub fn count(&self, term: &T) -> u32 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn contains(&self, term: &T) -> bool {
        self.counts.contains_key(term)
    }

    /// Total number of term occurrences.
    pub fn total(&self) -> u64 {
        self.counts.values().map(|&n| u64::from(n)).sum()
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn max_count(&self) -> u32 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, u32)> {
        self.counts.iter().map(|(t, &n)| (t, n))
    }

    pub fn terms(&self) -> impl Iterator<Item = &T> {
        self.counts.keys()
    }

    /// Same terms, each counted once.
    pub fn occurrences(&self) -> TermDoc<T> {
        TermDoc {
            counts: self.counts.keys().map(|t| (t.clone(), 1)).collect(),
        }
    }

    pub fn map_terms<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> TermDoc<U> {
        let mut out = TermDoc::new();
        for (t, &n) in &self.counts {
            out.add(f(t), n);
        }
        out
    }
}

impl<T: Ord + Clone> FromIterator<T> for TermDoc<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut doc = TermDoc::new();
        for t in iter {
            doc.insert(t);
        }
        doc
    }
}

impl<'a> FromIterator<&'a str> for TermDoc<String> {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        iter.into_iter().map(str::to_owned).collect()
    }
}

/// Splits one identifier at camelCase, kebab-case and snake_case boundaries.
///
/// The original string comes first, followed by the sub-tokens in order. An
/// identifier with no boundary yields only itself. Runs of capitals stay
/// together (`HTTPServer` gives `HTTP`, `Server`); digits stay attached to the
/// preceding letters.
pub fn split_identifier(raw: &str) -> Vec<String> {
    if raw.is_empty() {
        return Vec::new();
    }
    let mut subs: Vec<&str> = Vec::new();
    for piece in raw.split(['-', '_']).filter(|p| !p.is_empty()) {
        let chars: Vec<(usize, char)> = piece.char_indices().collect();
        let mut start = 0;
        for w in 1..chars.len() {
            let (at, c) = chars[w];
            let prev = chars[w - 1].1;
            let lower_to_upper = c.is_uppercase() && (prev.is_lowercase() || prev.is_ascii_digit());
            let acronym_end = c.is_uppercase() && prev.is_uppercase() && chars.get(w + 1).is_some_and(|&(_, next)| next.is_lowercase());
            if lower_to_upper || acronym_end {
                subs.push(&piece[start..at]);
                start = at;
            }
        }
        subs.push(&piece[start..]);
    }
    let mut out = vec![raw.to_owned()];
    if !(subs.len() == 1 && subs[0] == raw) {
        out.extend(subs.into_iter().map(str::to_owned));
    }
    out
}

/// Full term pipeline for one raw name string: split into words on anything
/// that is not alphanumeric, `-` or `_`; split each word as an identifier;
/// lowercase; stem; drop terms shorter than [`MIN_TERM_LEN`].
pub fn make_terms(raw: &str) -> Vec<String> {
    raw.split(|c: char| !(c.is_alphanumeric() || c == '-' || c == '_'))
        .flat_map(split_identifier)
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .map(|t| stem(&t.to_lowercase()))
        .filter(|t| t.chars().count() >= MIN_TERM_LEN)
        .collect()
}

pub fn entity_document(entity: &Entity) -> TermDoc {
    let mut doc = TermDoc::new();
    for raw in entity.names.all() {
        for t in make_terms(raw) {
            doc.insert(t);
        }
    }
    doc
}

/// Terms of a module name. Added once per module document.
pub fn module_name_document(name: &str) -> TermDoc {
    make_terms(name).into_iter().collect()
}

/// Module document over precomputed per-entity documents.
pub fn module_document_from<T: Ord + Clone>(
    module: usize,
    state: &MappingState,
    entity_docs: &[TermDoc<T>],
    name_doc: &TermDoc<T>,
    cda: Option<&TermDoc<T>>,
) -> TermDoc<T> {
    let mut doc = name_doc.clone();
    for e in state.mapped_to(module) {
        doc.merge(&entity_docs[e]);
    }
    if let Some(cda) = cda {
        doc.merge(cda);
    }
    doc
}

/// Module name terms, plus the documents of every entity mapped to the
/// module, plus the module's CDA terms when given.
pub fn module_document(module: usize, state: &MappingState, model: &SystemModel, cda: Option<&TermDoc>) -> TermDoc {
    let mut doc = module_name_document(model.architecture().module_name(module));
    for e in state.mapped_to(module) {
        doc.merge(&entity_document(model.entity(e)));
    }
    if let Some(cda) = cda {
        doc.merge(cda);
    }
    doc
}
