//! Multinomial naive Bayes over term occurrence, with Laplace smoothing and
//! uniform priors.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::textgen::TermDoc;

/// Additive smoothing constant.
pub const ALPHA: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct NbModel<T: Ord = String> {
    /// Training count of each vocabulary term, per module.
    counts: BTreeMap<T, Vec<u32>>,
    /// Log-denominator `ln(total_m + α|V|)` per module.
    log_norm: Vec<f64>,
    log_prior: f64,
}

/// Trains on one document per module. The counts in each document are taken
/// as given; see [`crate::attract::Corpus::nb_training_docs`] for the
/// occurrence-based documents used by the mapping engine.
pub fn train_nb<T: Ord + Clone>(docs: &[TermDoc<T>]) -> Result<NbModel<T>> {
    if docs.is_empty() {
        return Err(Error::Precondition("naive Bayes needs at least one module".into()));
    }
    let modules = docs.len();
    let mut counts: BTreeMap<T, Vec<u32>> = BTreeMap::new();
    for (m, doc) in docs.iter().enumerate() {
        for (t, n) in doc.iter() {
            counts.entry(t.clone()).or_insert_with(|| vec![0; modules])[m] += n;
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let v = counts.len() as f64;
    let log_norm = docs.iter().map(|d| (d.total() as f64 + ALPHA * v).ln()).collect();
    Ok(NbModel {
        counts,
        log_norm,
        log_prior: -(modules as f64).ln(),
    })
}

impl<T: Ord + Clone> NbModel<T> {
    pub fn module_count(&self) -> usize {
        self.log_norm.len()
    }

    pub fn vocabulary_len(&self) -> usize {
        self.counts.len()
    }

    pub fn contains(&self, term: &T) -> bool {
        self.counts.contains_key(term)
    }

    /// `ln P(t | m)`; `None` for terms outside the vocabulary.
    pub fn log_likelihood(&self, term: &T, module: usize) -> Option<f64> {
        self.counts
            .get(term)
            .map(|c| (f64::from(c[module]) + ALPHA).ln() - self.log_norm[module])
    }

    /// Posterior over modules. Each distinct in-vocabulary term of `doc`
    /// counts once.
    pub fn classify(&self, doc: &TermDoc<T>) -> Vec<f64> {
        let mut log_post = vec![self.log_prior; self.module_count()];
        for t in doc.terms() {
            if let Some(c) = self.counts.get(t) {
                for (m, lp) in log_post.iter_mut().enumerate() {
                    *lp += (f64::from(c[m]) + ALPHA).ln() - self.log_norm[m];
                }
            }
        }
        let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + log_post.iter().map(|lp| (lp - max).exp()).sum::<f64>().ln();
        log_post.iter().map(|lp| (lp - lse).exp()).collect()
    }
}
