//! The iterative mapping loop and its candidate-selection rules.

use std::fmt;

use rayon::prelude::*;

use crate::attract::{AfConfig, Attractor, Corpus};
use crate::error::Result;
use crate::model::{MappingState, Origin, SystemModel};

pub use crate::attract::AfKind;

/// Attraction values of one orphan, aligned with the module list.
#[derive(Clone, Debug, PartialEq)]
pub struct AttractionVector {
    pub orphan: usize,
    pub values: Vec<f64>,
}

fn unique_above(values: &[f64], bound: f64) -> Option<usize> {
    let mut above = values.iter().enumerate().filter(|(_, &v)| v > bound);
    match (above.next(), above.next()) {
        (Some((i, _)), None) => Some(i),
        _ => None,
    }
}

/// The single value more than one population standard deviation above the
/// mean, or failing that the single value above the mean.
pub fn select_candidate_meansd(values: &[f64]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    unique_above(values, mean + sd).or_else(|| unique_above(values, mean))
}

/// The unique maximum, provided it exceeds `threshold`.
pub fn select_candidate_threshold(values: &[f64], threshold: f64) -> Option<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_nan() || max <= threshold {
        return None;
    }
    let mut at_max = values.iter().enumerate().filter(|(_, &v)| v == max);
    match (at_max.next(), at_max.next()) {
        (Some((i, _)), None) => Some(i),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub orphans: usize,
    pub mapped: usize,
    /// Entities mapped automatically so far, this iteration included.
    pub cumulative: usize,
}

impl fmt::Display for IterationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.iteration, self.orphans, self.mapped, self.cumulative)
    }
}

pub const ITERATION_LOG_HEADER: &str = "iter,orphans,mapped_this_iter,cumulative_mapped";

#[derive(Clone, Debug)]
pub struct HugmeOutcome {
    pub state: MappingState,
    pub log: Vec<IterationRecord>,
}

impl HugmeOutcome {
    pub fn iterations(&self) -> usize {
        self.log.len()
    }

    /// Size of the first iteration's orphan set.
    pub fn initial_orphans(&self) -> usize {
        self.log.first().map_or(0, |r| r.orphans)
    }
}

pub fn run_hugme(model: &SystemModel, initial: MappingState, cfg: &AfConfig) -> Result<HugmeOutcome> {
    run_hugme_with(&Corpus::new(model), model, initial, cfg)
}

/// Runs the loop until an iteration maps nothing. Each iteration computes
/// every orphan's attractions against the state as it was at the start of
/// the iteration, then applies all selections.
pub fn run_hugme_with(corpus: &Corpus, model: &SystemModel, initial: MappingState, cfg: &AfConfig) -> Result<HugmeOutcome> {
    let mut state = initial;
    let mut log = Vec::new();
    let mut cumulative = 0;
    loop {
        let iteration = log.len() + 1;
        let decisions: Vec<(AttractionVector, Option<usize>)> = {
            let attractor = Attractor::new(cfg, corpus, model, &state)
                .map_err(|e| e.context(format!("{} iteration {iteration}", cfg.kind().label())))?;
            let orphans = attractor.orphans();
            let evaluate = |o: usize| {
                let values = attractor.attractions(o);
                let choice = attractor.select(&values);
                (AttractionVector { orphan: o, values }, choice)
            };
            if orphans.len() > 16 {
                orphans.into_par_iter().map(evaluate).collect()
            } else {
                orphans.into_iter().map(evaluate).collect()
            }
        };
        let orphans = decisions.len();
        let mut mapped = 0;
        for (av, choice) in decisions {
            if let Some(m) = choice {
                state.assign(av.orphan, m, Origin::Auto)?;
                mapped += 1;
            }
            state.record_attraction(av.orphan, av.values);
        }
        cumulative += mapped;
        log.push(IterationRecord {
            iteration,
            orphans,
            mapped,
            cumulative,
        });
        if mapped == 0 {
            return Ok(HugmeOutcome { state, log });
        }
    }
}
