//! Genetic search for dependency-type weights of the counting attraction
//! function.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::attract::count::{coarse_level, CountParams, WeightProfile};
use crate::attract::{AfConfig, Corpus};
use crate::error::{Error, Result};
use crate::experiment::{compute_metrics, generate_initial_mapping, repetition_rng, InitialSize, RecallMode};
use crate::hugme::run_hugme_with;
use crate::model::{DependencyType, MappingState, SystemModel};

pub type Genome = [f64; DependencyType::COUNT];

#[derive(Clone, Debug, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub tournament: usize,
    /// Probability of taking each gene from the first parent.
    pub crossover: f64,
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    pub elitism: usize,
    /// Initial-set fractions of the fitness panel.
    pub panel_fractions: Vec<f64>,
    /// Initial sets drawn per panel fraction.
    pub panel_repeats: usize,
    pub phi: f64,
    pub omega: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 32,
            tournament: 3,
            crossover: 0.5,
            mutation_rate: 0.2,
            mutation_sigma: 0.1,
            elitism: 1,
            panel_fractions: (1..=9).map(|i| f64::from(i) / 10.0).collect(),
            panel_repeats: 1,
            phi: 0.5,
            omega: 0.5,
        }
    }
}

impl GaConfig {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("genetic search: {what}")));
        if self.population < 2 {
            return bad("population must hold at least two genomes");
        }
        if self.tournament == 0 || self.tournament > self.population {
            return bad("tournament size must lie in 1..=population");
        }
        if self.elitism >= self.population {
            return bad("elitism must be smaller than the population");
        }
        if self.panel_fractions.is_empty() || self.panel_repeats == 0 {
            return bad("fitness panel is empty");
        }
        if ![self.crossover, self.mutation_rate, self.phi, self.omega]
            .iter()
            .all(|p| (0.0..=1.0).contains(p))
            || self.mutation_sigma.is_nan()
            || self.mutation_sigma < 0.0
        {
            return bad("probabilities and thresholds must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Initial mappings shared by every fitness evaluation of one search.
pub struct FitnessPanel<'a> {
    model: &'a SystemModel,
    corpus: Corpus,
    initials: Vec<MappingState>,
    phi: f64,
    omega: f64,
}

impl<'a> FitnessPanel<'a> {
    pub fn new(model: &'a SystemModel, cfg: &GaConfig, seed: u64) -> Result<Self> {
        let mut initials = Vec::new();
        let mut stream = 1;
        for &f in &cfg.panel_fractions {
            for _ in 0..cfg.panel_repeats {
                let mut rng = repetition_rng(seed, stream);
                stream += 1;
                initials.push(generate_initial_mapping(model, InitialSize::Fraction(f, f), &mut rng)?);
            }
        }
        Ok(FitnessPanel {
            model,
            corpus: Corpus::new(model),
            initials,
            phi: cfg.phi,
            omega: cfg.omega,
        })
    }

    /// Mean F1 of the counting function over the panel.
    pub fn fitness(&self, genome: &Genome) -> Result<f64> {
        let cfg = AfConfig::Count(CountParams::new(self.phi, self.omega, WeightProfile::new(*genome)?)?);
        let mut total = 0.0;
        for initial in &self.initials {
            let out = run_hugme_with(&self.corpus, self.model, initial.clone(), &cfg)?;
            total += compute_metrics(&out.state, initial, self.model, RecallMode::Correct).f1;
        }
        Ok(total / self.initials.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimization {
    pub best: Genome,
    pub best_fitness: f64,
    /// Best fitness after each generation, the random start included.
    pub trace: Vec<f64>,
}

/// Runs `budget / population` generations. The first population contains
/// the all-ones genome and random genomes.
pub fn optimize_weights(model: &SystemModel, budget: usize, seed: u64, cfg: &GaConfig) -> Result<Optimization> {
    cfg.validate()?;
    if budget < cfg.population {
        return Err(Error::InvalidArgument(format!(
            "budget of {budget} evaluations is below the population size {}",
            cfg.population
        )));
    }
    let panel = FitnessPanel::new(model, cfg, seed)?;
    let generations = budget / cfg.population;
    let mut rng = repetition_rng(seed, 0);
    let normal = Normal::new(0.0, cfg.mutation_sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut population: Vec<Genome> = (0..cfg.population)
        .map(|i| {
            if i == 0 {
                [1.0; DependencyType::COUNT]
            } else {
                std::array::from_fn(|_| rng.random::<f64>())
            }
        })
        .collect();
    let mut scored = evaluate(&panel, population)?;
    let mut trace = vec![scored[0].1];

    for _ in 1..generations {
        let mut next: Vec<Genome> = scored.iter().take(cfg.elitism).map(|(g, _)| *g).collect();
        while next.len() < cfg.population {
            let a = tournament(&scored, cfg.tournament, &mut rng);
            let b = tournament(&scored, cfg.tournament, &mut rng);
            let mut child: Genome = std::array::from_fn(|i| if rng.random_bool(cfg.crossover) { a[i] } else { b[i] });
            for gene in child.iter_mut() {
                if rng.random_bool(cfg.mutation_rate) {
                    *gene = (*gene + normal.sample(&mut rng)).clamp(0.0, 1.0);
                }
            }
            next.push(child);
        }
        population = next;
        scored = evaluate(&panel, population)?;
        trace.push(scored[0].1);
    }
    Ok(Optimization {
        best: scored[0].0,
        best_fitness: scored[0].1,
        trace,
    })
}

/// Genomes with their fitness, best first; ties keep population order.
fn evaluate(panel: &FitnessPanel, population: Vec<Genome>) -> Result<Vec<(Genome, f64)>> {
    let fitness: Result<Vec<f64>> = population.par_iter().map(|g| panel.fitness(g)).collect();
    let mut scored: Vec<(Genome, f64)> = population.into_iter().zip(fitness?).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scored)
}

fn tournament(scored: &[(Genome, f64)], size: usize, rng: &mut impl Rng) -> Genome {
    // `scored` is sorted, so the lowest drawn index wins.
    let winner = (0..size)
        .map(|_| rng.random_range(0..scored.len()))
        .min()
        .expect("tournament size > 0");
    scored[winner].0
}

/// Nearest coarse level per weight, midpoints rounding up.
pub fn round_weights(genome: &Genome) -> WeightProfile {
    WeightProfile::new(genome.map(coarse_level)).expect("coarse levels lie in [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        let mut g = [0.0; 11];
        g[0] = 0.57;
        g[1] = 0.92;
        g[2] = 0.125;
        g[3] = 0.375;
        let w = round_weights(&g);
        assert_eq!(&w.values()[..4], &[0.5, 1.0, 0.25, 0.5]);
        assert_eq!(round_weights(w.values()), w);
        assert!(w.is_coarse());
    }

    #[test]
    fn budget_below_population_is_rejected() {
        let model = crate::experiment::tests::fixture(10, 2);
        assert!(optimize_weights(&model, 10, 1, &GaConfig::default()).is_err());
    }
}
