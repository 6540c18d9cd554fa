//! Real-valued genetic algorithm shared by weight learning and simulator tuning.
//!
//! Tournament selection, uniform crossover and per-gene Gaussian mutation
//! clamped to the search box. Elites are carried over with their fitness, so
//! the best fitness per generation never increases. Every offspring draws
//! from its own random stream derived from `(seed, generation, index)`, which
//! makes runs independent of how fitness evaluations are scheduled.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    /// Generation 0 (the initial population) counts as the first generation.
    pub max_generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub mutation_scale: f64,
    /// Mutation scale is multiplied by this factor every generation.
    pub mutation_decay: f64,
    pub elitism_count: usize,
    pub tournament_size: usize,
    pub seed: u64,
    pub plateau_generations: usize,
    pub plateau_epsilon: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 64,
            max_generations: 300,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_scale: 0.1,
            mutation_decay: 1.0,
            elitism_count: 2,
            tournament_size: 3,
            seed: 0,
            plateau_generations: 30,
            plateau_epsilon: 1e-4,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Configuration(msg));
        if self.population_size < 2 {
            return fail(format!("population size must be at least 2, got {}", self.population_size));
        }
        if self.max_generations < 1 {
            return fail("at least one generation is required".into());
        }
        for (name, rate) in [
            ("crossover rate", self.crossover_rate),
            ("mutation rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return fail(format!("{name} must lie in [0, 1], got {rate}"));
            }
        }
        if !(self.mutation_scale >= 0.0 && self.mutation_scale.is_finite()) {
            return fail(format!("mutation scale must be non-negative, got {}", self.mutation_scale));
        }
        if !(self.mutation_decay > 0.0 && self.mutation_decay <= 1.0) {
            return fail(format!("mutation decay must lie in (0, 1], got {}", self.mutation_decay));
        }
        if self.elitism_count >= self.population_size {
            return fail(format!(
                "elitism count {} must be below the population size {}",
                self.elitism_count, self.population_size
            ));
        }
        if self.tournament_size < 1 {
            return fail("tournament size must be at least 1".into());
        }
        if !(self.plateau_epsilon >= 0.0) {
            return fail("plateau epsilon must be non-negative".into());
        }
        Ok(())
    }
}

/// A point in the search box.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    pub values: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl Genome {
    pub fn within_bounds(&self) -> bool {
        self.values
            .iter()
            .zip(&self.bounds)
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxGenerations,
    Plateau,
    /// Fitness reached zero.
    Solved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub best: Genome,
    pub best_fitness: f64,
    /// Best fitness of each generation, starting with the initial population.
    pub history: Vec<f64>,
    /// Best genome of each generation.
    pub best_per_generation: Vec<Vec<f64>>,
    pub stop_reason: StopReason,
}

fn validate_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::Configuration("search space has no dimensions".into()));
    }
    for (i, (lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Configuration(format!(
                "gene {i}: bounds [{lo}, {hi}] must be finite with low <= high"
            )));
        }
    }
    Ok(())
}

fn stream_rng(seed: u64, generation: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | index as u64);
    rng
}

#[derive(Debug, Clone)]
struct Individual {
    genes: Vec<f64>,
    fitness: f64,
}

fn tournament<'a>(pop: &'a [Individual], size: usize, rng: &mut ChaCha8Rng) -> &'a Individual {
    let mut best = &pop[rng.gen_range(0..pop.len())];
    for _ in 1..size {
        let challenger = &pop[rng.gen_range(0..pop.len())];
        if challenger.fitness < best.fitness {
            best = challenger;
        }
    }
    best
}

/// Minimise `fitness` over the box `bounds`.
///
/// `fitness` receives the genes and the generation index; it may depend on the
/// generation (e.g. resampled scenarios) but must be deterministic. Non-finite
/// fitness values are treated as the worst possible. `initial` genomes seed
/// the first generation (clamped to the box); the rest are drawn uniformly.
pub fn ga_optimize<F>(
    fitness: F,
    bounds: &[(f64, f64)],
    config: &GaConfig,
    initial: &[Vec<f64>],
) -> Result<GaResult>
where
    F: Fn(&[f64], usize) -> f64 + Sync,
{
    config.validate()?;
    validate_bounds(bounds)?;
    if let Some(g) = initial.iter().find(|g| g.len() != bounds.len()) {
        return Err(Error::Configuration(format!(
            "initial genome has {} genes, expected {}",
            g.len(),
            bounds.len()
        )));
    }
    let evaluate = |genes: &[f64], generation: usize| {
        let f = fitness(genes, generation);
        if f.is_nan() {
            f64::INFINITY
        } else {
            f
        }
    };
    let clamp = |genes: &mut [f64]| {
        for (v, (lo, hi)) in genes.iter_mut().zip(bounds) {
            *v = v.clamp(*lo, *hi);
        }
    };

    let mut population: Vec<Individual> = (0..config.population_size)
        .into_par_iter()
        .map(|i| {
            let mut genes = match initial.get(i) {
                Some(g) => g.clone(),
                None => {
                    let mut rng = stream_rng(config.seed, 0, i);
                    bounds
                        .iter()
                        .map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
                        .collect()
                }
            };
            clamp(&mut genes);
            let fitness = evaluate(&genes, 0);
            Individual { genes, fitness }
        })
        .collect();

    let mut history = Vec::new();
    let mut best_per_generation = Vec::new();
    let mut generation = 0;
    let stop_reason = loop {
        // Stable sort keeps ties in index order.
        population.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
        history.push(population[0].fitness);
        best_per_generation.push(population[0].genes.clone());

        if population[0].fitness <= 0.0 {
            break StopReason::Solved;
        }
        if history.len() > config.plateau_generations && config.plateau_generations > 0 {
            let then = history[history.len() - 1 - config.plateau_generations];
            if then - population[0].fitness < config.plateau_epsilon {
                break StopReason::Plateau;
            }
        }
        if generation + 1 >= config.max_generations {
            break StopReason::MaxGenerations;
        }
        generation += 1;

        let scale = config.mutation_scale * config.mutation_decay.powi(generation as i32);
        let parents = &population;
        let offspring: Vec<Individual> = (config.elitism_count..config.population_size)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(config.seed, generation, i);
                let a = tournament(parents, config.tournament_size, &mut rng);
                let b = tournament(parents, config.tournament_size, &mut rng);
                let mut genes = if rng.gen_bool(config.crossover_rate) {
                    a.genes
                        .iter()
                        .zip(&b.genes)
                        .map(|(x, y)| if rng.gen_bool(0.5) { *x } else { *y })
                        .collect()
                } else {
                    a.genes.clone()
                };
                for (v, (lo, hi)) in genes.iter_mut().zip(bounds) {
                    if rng.gen_bool(config.mutation_rate) {
                        let sd = scale * (hi - lo);
                        if sd > 0.0 {
                            *v += Normal::new(0.0, sd).expect("positive sd").sample(&mut rng);
                        }
                    }
                }
                clamp(&mut genes);
                let fitness = evaluate(&genes, generation);
                Individual { genes, fitness }
            })
            .collect();
        population.truncate(config.elitism_count);
        population.extend(offspring);
    };

    let best = &population[0];
    Ok(GaResult {
        best: Genome {
            values: best.genes.clone(),
            bounds: bounds.to_vec(),
        },
        best_fitness: best.fitness,
        history,
        best_per_generation,
        stop_reason,
    })
}
