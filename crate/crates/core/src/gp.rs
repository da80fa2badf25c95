//! The outer evolutionary loop over model structures.
//!
//! Each generation carries the best genotype forward unchanged (with its
//! cached fitness, since scoring is stochastic) and fills the rest of the
//! population by tournament selection followed by a single random draw that
//! picks copy, subtree mutation, or crossover. The mutation share adapts to
//! the parent's fitness; crossover takes the remainder.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::PatientSeries;
use crate::error::{Error, Result};
use crate::fitness::{evaluate_genotype, FitnessConfig, FitnessReport};
use crate::model::{random_genotype, random_tree, ModelGenotype, StateSchema};
use crate::seed;
use crate::stats;

/// Settings for structure evolution. Everything about fitting and scoring a
/// single candidate lives in the nested [`FitnessConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub population: usize,
    pub generations: usize,
    /// Probability of drawing an operator node while depth budget remains.
    pub p_op: f64,
    pub tournament_size: usize,
    /// Probability of copying the selected parent unchanged.
    pub p_copy: f64,
    /// Merge attempts per tree position before a tree-level crossover fails.
    pub crossover_tries: usize,
    /// Depth cap for every tree ever created (a lone leaf has depth 1).
    pub max_depth: usize,
    /// Size of the shared parameter pool trees may reference.
    pub lambda_max: usize,
    pub fitness: FitnessConfig,
    pub master_seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            population: 50,
            generations: 50,
            p_op: 0.5,
            tournament_size: 3,
            p_copy: 0.1,
            crossover_tries: 3,
            max_depth: 6,
            lambda_max: 7,
            fitness: FitnessConfig::default(),
            master_seed: 0,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config("population must be at least 2".into()));
        }
        if self.tournament_size == 0 {
            return Err(Error::Config("tournament size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_op) {
            return Err(Error::Config("p_op must lie in [0, 1]".into()));
        }
        // The copy and mutation shares must leave room for crossover even at
        // the maximum adaptive mutation rate of 0.3.
        if !(0.0..=0.7).contains(&self.p_copy) {
            return Err(Error::Config("copy probability must lie in [0, 0.7]".into()));
        }
        if self.crossover_tries == 0 {
            return Err(Error::Config("crossover needs at least one merge attempt".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("depth cap must be at least 1".into()));
        }
        self.fitness.validate()
    }
}

/// Fitness summary of one generation; generation 0 is the initial population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    /// Structure key of the generation's best genotype.
    pub best_id: String,
}

/// Result of one evolution run.
#[derive(Clone, Debug)]
pub struct EvolveOutcome {
    pub best: Arc<ModelGenotype>,
    pub report: Arc<FitnessReport>,
    pub trace: Vec<GenerationStats>,
}

/// Mutation probability for a parent with fitness `f` when the best fitness
/// in the population is `f_max`: 0.1 + 0.2 * (1 - f / f_max), computed in a
/// form that is exact at the ratios 1, 1/2 and 0. A non-positive `f_max`
/// (nothing has scored yet) yields the maximum rate.
pub fn mutation_probability(f: f64, f_max: f64) -> f64 {
    if f_max <= 0.0 {
        return 0.3;
    }
    let r = (f / f_max).clamp(0.0, 1.0);
    ((3.0 - 2.0 * r) / 10.0).clamp(0.1, 0.3)
}

/// Draws `t` members uniformly with replacement and returns the index of the
/// fittest draw; ties go to a uniform choice among the tied draws.
pub fn tournament_select<R: Rng>(fitness: &[f64], t: usize, rng: &mut R) -> usize {
    assert!(!fitness.is_empty(), "tournament over an empty population");
    assert!(t >= 1, "tournament needs at least one draw");
    let mut drawn: Vec<usize> = (0..t).map(|_| rng.gen_range(0..fitness.len())).collect();
    let best = drawn.iter().map(|&i| fitness[i]).fold(f64::NEG_INFINITY, f64::max);
    drawn.retain(|&i| fitness[i] == best);
    drawn[rng.gen_range(0..drawn.len())]
}

/// Replaces one uniformly chosen subtree of one uniformly chosen tree with a
/// fresh random tree whose depth budget keeps the whole tree within
/// `max_depth`. The replacement is redrawn (bounded) until it differs from
/// the subtree it replaces, so the child differs from the parent in exactly
/// one tree.
pub fn mutate<R: Rng>(
    parent: &ModelGenotype,
    cfg: &GpConfig,
    schema: &StateSchema,
    rng: &mut R,
) -> ModelGenotype {
    let mut trees = parent.trees().to_vec();
    let slot = rng.gen_range(0..trees.len());
    let mutated = {
        let tree = &trees[slot];
        let node = rng.gen_range(0..tree.node_count());
        let depth = tree.depth_of_node(node);
        debug_assert!(depth <= cfg.max_depth, "parent exceeds the depth cap");
        let budget = cfg.max_depth + 1 - depth;
        let old = tree.subtree(node);
        let mut replacement = random_tree(budget, schema, cfg.lambda_max, cfg.p_op, rng);
        for _ in 0..32 {
            if replacement != *old {
                break;
            }
            replacement = random_tree(budget, schema, cfg.lambda_max, cfg.p_op, rng);
        }
        tree.replaced(node, replacement)
    };
    trees[slot] = mutated;
    ModelGenotype::new(trees, cfg.lambda_max, schema).expect("replacement refs stay in range")
}

/// Child of two parents: a fair coin picks vector-level or tree-level
/// recombination. Returns `None` when tree-level merging cannot fit the depth
/// cap within the attempt budget; the caller then reselects parents.
pub fn crossover<R: Rng>(
    a: &ModelGenotype,
    b: &ModelGenotype,
    cfg: &GpConfig,
    schema: &StateSchema,
    rng: &mut R,
) -> Option<ModelGenotype> {
    if rng.gen_bool(0.5) {
        Some(vector_cross(a, b, cfg, schema, rng))
    } else {
        tree_cross(a, b, cfg, schema, rng)
    }
}

/// Vector-level crossover: each position copies one parent's tree, chosen by
/// a fair coin. Always succeeds.
pub fn vector_cross<R: Rng>(
    a: &ModelGenotype,
    b: &ModelGenotype,
    cfg: &GpConfig,
    schema: &StateSchema,
    rng: &mut R,
) -> ModelGenotype {
    let trees = a
        .trees()
        .iter()
        .zip(b.trees())
        .map(|(ta, tb)| if rng.gen_bool(0.5) { ta.clone() } else { tb.clone() })
        .collect();
    ModelGenotype::new(trees, cfg.lambda_max, schema).expect("parent refs are valid")
}

/// Tree-level crossover: at every position, the subtree at a uniform point of
/// the first parent's tree is substituted by the subtree at a uniform point
/// of the second parent's. Each position gets `crossover_tries` attempts to
/// land within the depth cap; exhausting them fails the whole crossover.
pub fn tree_cross<R: Rng>(
    a: &ModelGenotype,
    b: &ModelGenotype,
    cfg: &GpConfig,
    schema: &StateSchema,
    rng: &mut R,
) -> Option<ModelGenotype> {
    let mut trees = Vec::with_capacity(a.trees().len());
    for (ta, tb) in a.trees().iter().zip(b.trees()) {
        let mut merged = None;
        for _ in 0..cfg.crossover_tries {
            let ia = rng.gen_range(0..ta.node_count());
            let ib = rng.gen_range(0..tb.node_count());
            let candidate = ta.replaced(ia, tb.subtree(ib).clone());
            if candidate.depth() <= cfg.max_depth {
                merged = Some(candidate);
                break;
            }
        }
        trees.push(merged?);
    }
    Some(ModelGenotype::new(trees, cfg.lambda_max, schema).expect("parent refs are valid"))
}

/// Runs the full evolutionary loop and returns the best genotype, its fitness
/// report, and the per-generation trace. Only training and validation
/// segments of the cohort are read; test segments stay untouched.
/// Deterministic given the master seed.
pub fn evolve(
    cfg: &GpConfig,
    schema: &StateSchema,
    patients: &[PatientSeries],
) -> Result<EvolveOutcome> {
    cfg.validate()?;
    if patients.is_empty() {
        return Err(Error::Config("evolution needs at least one patient".into()));
    }
    let targets = schema.target_indices().to_vec();
    let mut rng = seed::rng(seed::mix(cfg.master_seed, &[seed::hash_str("gp-loop")]));
    let mut cache: HashMap<String, Arc<FitnessReport>> = HashMap::new();

    let mut population: Vec<Arc<ModelGenotype>> = Vec::with_capacity(cfg.population);
    let mut keys: HashSet<String> = HashSet::new();
    for _ in 0..cfg.population {
        let mut genotype = random_genotype(schema, cfg.lambda_max, cfg.max_depth, cfg.p_op, &mut rng);
        // Resample duplicates a bounded number of times, then accept.
        for _ in 0..20 {
            if !keys.contains(&genotype.structure_key()) {
                break;
            }
            genotype = random_genotype(schema, cfg.lambda_max, cfg.max_depth, cfg.p_op, &mut rng);
        }
        keys.insert(genotype.structure_key());
        population.push(Arc::new(genotype));
    }

    evaluate_population(&population, patients, &targets, cfg, &mut cache)?;
    let mut fitness = cached_fitness(&population, &cache);
    let mut trace = vec![generation_stats(0, &population, &fitness)];

    for generation in 1..=cfg.generations {
        let elite = best_index(&fitness);
        let f_max = fitness[elite];
        let mut next: Vec<Arc<ModelGenotype>> = Vec::with_capacity(cfg.population);
        next.push(Arc::clone(&population[elite]));
        while next.len() < cfg.population {
            let parent_idx = tournament_select(&fitness, cfg.tournament_size, &mut rng);
            let parent = &population[parent_idx];
            let p_m = mutation_probability(fitness[parent_idx], f_max);
            let u: f64 = rng.gen();
            let child = if u < cfg.p_copy {
                Arc::clone(parent)
            } else if u < cfg.p_copy + p_m {
                Arc::new(mutate(parent, cfg, schema, &mut rng))
            } else {
                let mut produced = None;
                let mut first = Arc::clone(parent);
                for round in 0..=10 {
                    if round > 0 {
                        first = Arc::clone(
                            &population[tournament_select(&fitness, cfg.tournament_size, &mut rng)],
                        );
                    }
                    let second = Arc::clone(
                        &population[tournament_select(&fitness, cfg.tournament_size, &mut rng)],
                    );
                    if let Some(child) = crossover(&first, &second, cfg, schema, &mut rng) {
                        produced = Some(Arc::new(child));
                        break;
                    }
                }
                // Every reselection round failed; copy the last first parent.
                produced.unwrap_or(first)
            };
            next.push(child);
        }
        population = next;
        evaluate_population(&population, patients, &targets, cfg, &mut cache)?;
        fitness = cached_fitness(&population, &cache);
        trace.push(generation_stats(generation, &population, &fitness));
    }

    let best_idx = best_index(&fitness);
    let best = Arc::clone(&population[best_idx]);
    let report = Arc::clone(&cache[&best.structure_key()]);
    Ok(EvolveOutcome { best, report, trace })
}

/// Scores every genotype not yet in the cache. Distinct structures are scored
/// in parallel; per-genotype seeds depend only on the master seed, the
/// structure, and the patient, so results are schedule-free.
fn evaluate_population(
    population: &[Arc<ModelGenotype>],
    patients: &[PatientSeries],
    targets: &[usize],
    cfg: &GpConfig,
    cache: &mut HashMap<String, Arc<FitnessReport>>,
) -> Result<()> {
    let mut missing: Vec<(String, Arc<ModelGenotype>)> = Vec::new();
    let mut seen = HashSet::new();
    for genotype in population {
        let key = genotype.structure_key();
        if !cache.contains_key(&key) && seen.insert(key.clone()) {
            missing.push((key, Arc::clone(genotype)));
        }
    }
    let reports: Vec<(String, Result<FitnessReport>)> = missing
        .into_par_iter()
        .map(|(key, genotype)| {
            let report =
                evaluate_genotype(&genotype, patients, targets, &cfg.fitness, cfg.master_seed);
            (key, report)
        })
        .collect();
    for (key, report) in reports {
        cache.insert(key, Arc::new(report?));
    }
    Ok(())
}

fn cached_fitness(
    population: &[Arc<ModelGenotype>],
    cache: &HashMap<String, Arc<FitnessReport>>,
) -> Vec<f64> {
    population.iter().map(|g| cache[&g.structure_key()].total).collect()
}

/// Index of the highest fitness; the lowest index wins ties.
fn best_index(fitness: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fitness.iter().enumerate() {
        if f > fitness[best] {
            best = i;
        }
    }
    best
}

fn generation_stats(
    generation: usize,
    population: &[Arc<ModelGenotype>],
    fitness: &[f64],
) -> GenerationStats {
    let best = best_index(fitness);
    let mut sorted = fitness.to_vec();
    sorted.sort_by(f64::total_cmp);
    GenerationStats {
        generation,
        best: fitness[best],
        p25: stats::quantile_sorted(&sorted, 0.25),
        median: stats::quantile_sorted(&sorted, 0.5),
        p75: stats::quantile_sorted(&sorted, 0.75),
        best_id: population[best].structure_key(),
    }
}
