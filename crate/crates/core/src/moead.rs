//! Decomposition-based multi-objective search (MOEA/D with Tchebycheff
//! aggregation) plus the external archive of best individuals per tree count.
//!
//! Generations run as three phases behind a barrier: parent selection draws
//! from the generation-start population (serial), offspring construction and
//! evaluation run in parallel, and replacement / ideal-point / archive
//! updates are applied serially in subproblem order. Results are therefore
//! independent of thread scheduling.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gp::{init_population, Individual};
use crate::neighbors::NeighborModel;
use crate::objectives::{evaluate, ObjectiveVector};
use crate::rng;
use crate::variation::{vary, VariationConfig};

/// Weighted Tchebycheff aggregation toward the ideal point. Zero weights are
/// floored at 1e-6 so no objective is ever fully ignored at simplex corners.
pub fn tchebycheff(values: [f64; 2], lambda: [f64; 2], ideal: [f64; 2]) -> f64 {
    let floor = |w: f64| if w == 0.0 { 1e-6 } else { w };
    let a = floor(lambda[0]) * (values[0] - ideal[0]).abs();
    let b = floor(lambda[1]) * (values[1] - ideal[1]).abs();
    a.max(b)
}

#[derive(Debug, Clone)]
pub struct MoeadConfig {
    pub population: usize,
    pub generations: usize,
    /// Neighborhood size T: how many nearest weight vectors mate and accept
    /// replacements.
    pub neighborhood: usize,
    /// At most this many neighbors are replaced per offspring.
    pub replacement_cap: usize,
    /// Probability that mating draws from the neighborhood rather than the
    /// whole population; 1.0 gives strict-neighborhood mating.
    pub p_neighborhood_mating: f64,
    pub seed: u64,
    pub snapshot_every: usize,
    pub variation: VariationConfig,
}

impl MoeadConfig {
    pub fn new(seed: u64, variation: VariationConfig) -> MoeadConfig {
        MoeadConfig {
            population: 100,
            generations: 1000,
            neighborhood: 20,
            replacement_cap: 2,
            p_neighborhood_mating: 0.9,
            seed,
            snapshot_every: 100,
            variation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidConfig("population must be at least 2".into()));
        }
        if self.neighborhood < 2 {
            return Err(Error::InvalidConfig("neighborhood size must be at least 2".into()));
        }
        if self.replacement_cap < 1 {
            return Err(Error::InvalidConfig("replacement cap must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_neighborhood_mating) {
            return Err(Error::InvalidConfig("mating probability must lie in [0,1]".into()));
        }
        self.variation.validate()
    }
}

/// Best individual seen at one tree count.
#[derive(Debug, Clone)]
pub struct ArchiveEntry {
    pub individual: Individual,
    pub objectives: ObjectiveVector,
    pub generation: usize,
    pub seed: u64,
}

/// Keyed by raw tree count; holds the lowest-cost individual per t. The
/// exported view applies a dominance filter so reported fronts are mutually
/// non-dominated.
#[derive(Debug, Clone, Default)]
pub struct ParetoArchive {
    entries: BTreeMap<usize, ArchiveEntry>,
}

impl ParetoArchive {
    pub fn new() -> ParetoArchive {
        ParetoArchive::default()
    }

    /// Keeps the individual if it is the best seen at its tree count.
    /// Returns true when the archive changed.
    pub fn offer(&mut self, individual: &Individual, objectives: ObjectiveVector, generation: usize, seed: u64) -> bool {
        let t = objectives.raw_t;
        match self.entries.get(&t) {
            Some(existing) if existing.objectives.f_cost <= objectives.f_cost => false,
            _ => {
                self.entries.insert(
                    t,
                    ArchiveEntry { individual: individual.clone(), objectives, generation, seed },
                );
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All kept entries in ascending tree count, before dominance filtering.
    pub fn entries(&self) -> impl Iterator<Item = &ArchiveEntry> {
        self.entries.values()
    }

    /// The non-dominated front in ascending tree count. An entry survives
    /// only if its cost is strictly below every entry at a smaller tree
    /// count, which makes the exported costs strictly decreasing.
    pub fn export(&self) -> Vec<&ArchiveEntry> {
        let mut front = Vec::new();
        let mut best_cost = f64::INFINITY;
        for entry in self.entries.values() {
            if entry.objectives.f_cost < best_cost {
                best_cost = entry.objectives.f_cost;
                front.push(entry);
            }
        }
        front
    }
}

/// Archive front captured at a snapshot generation.
#[derive(Debug, Clone)]
pub struct FrontSnapshot {
    pub generation: usize,
    pub entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub archive: ParetoArchive,
    pub final_population: Vec<Individual>,
    pub snapshots: Vec<FrontSnapshot>,
    pub ideal: [f64; 2],
    pub offspring_evaluations: usize,
    pub wall_seconds: f64,
}

fn uniform_weights(p: usize) -> Vec<[f64; 2]> {
    (0..p)
        .map(|j| {
            let w = j as f64 / (p - 1) as f64;
            [w, 1.0 - w]
        })
        .collect()
}

fn build_neighborhoods(weights: &[[f64; 2]], t: usize) -> Vec<Vec<usize>> {
    let p = weights.len();
    let size = t.min(p);
    (0..p)
        .map(|i| {
            let mut by_dist: Vec<(f64, usize)> = (0..p)
                .map(|j| {
                    let dx = weights[i][0] - weights[j][0];
                    let dy = weights[i][1] - weights[j][1];
                    (dx * dx + dy * dy, j)
                })
                .collect();
            by_dist.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            by_dist.into_iter().take(size).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Draws two distinct indices from `pool_len` options.
fn pick_two<R: Rng>(pool_len: usize, rng: &mut R) -> (usize, usize) {
    let first = rng.gen_range(0..pool_len);
    let mut second = rng.gen_range(0..pool_len - 1);
    if second >= first {
        second += 1;
    }
    (first, second)
}

/// Runs the full optimization loop and returns the archive, the final
/// population, and run statistics. Deterministic in (config, dataset).
pub fn run(d: &Dataset, nm: &NeighborModel, config: &MoeadConfig) -> Result<RunResult> {
    config.validate()?;
    let started = Instant::now();
    let p = config.population;
    let t_max = config.variation.t_max;
    let weights = uniform_weights(p);
    let neighborhoods = build_neighborhoods(&weights, config.neighborhood);

    let mut population = {
        let mut init_rng = rng::stream(config.seed, "init");
        init_population(p, t_max, d.num_features(), &mut init_rng)
    };
    let objectives: Result<Vec<ObjectiveVector>> =
        population.par_iter().map(|ind| evaluate(ind, d, nm, t_max)).collect();
    let mut objectives = objectives?;
    for (ind, obj) in population.iter_mut().zip(&objectives) {
        ind.set_objectives(*obj);
    }

    let mut ideal = [f64::INFINITY; 2];
    for obj in &objectives {
        ideal[0] = ideal[0].min(obj.f_trees);
        ideal[1] = ideal[1].min(obj.f_cost);
    }

    let mut archive = ParetoArchive::new();
    for (ind, obj) in population.iter().zip(&objectives) {
        archive.offer(ind, *obj, 0, config.seed);
    }

    let mut snapshots = Vec::new();
    let snapshot = |archive: &ParetoArchive, generation: usize| FrontSnapshot {
        generation,
        entries: archive.export().iter().map(|e| (e.objectives.raw_t, e.objectives.f_cost)).collect(),
    };
    snapshots.push(snapshot(&archive, 0));

    let mut offspring_evaluations = 0usize;
    for g in 1..=config.generations {
        // Phase 1 (serial): parent selection against the generation-start
        // population. Each subproblem owns a derived rng that later drives
        // its variation, so draw order is fixed regardless of threading.
        let jobs: Vec<(usize, Individual, Individual, rand_chacha::ChaCha8Rng)> = (0..p)
            .map(|i| {
                let mut sub_rng = rng::indexed_stream(config.seed, &format!("g{g}"), i as u64);
                let use_neighborhood = sub_rng.gen::<f64>() < config.p_neighborhood_mating;
                let (x, y) = if use_neighborhood {
                    let pool = &neighborhoods[i];
                    let (a, b) = pick_two(pool.len(), &mut sub_rng);
                    (pool[a], pool[b])
                } else {
                    pick_two(p, &mut sub_rng)
                };
                (i, population[x].clone(), population[y].clone(), sub_rng)
            })
            .collect();

        // Phase 2 (parallel): one offspring per subproblem, evaluated.
        let evaluated: Result<Vec<(usize, Individual, ObjectiveVector)>> = jobs
            .into_par_iter()
            .map(|(i, parent_a, parent_b, mut sub_rng)| {
                let mut child = vary(&parent_a, &parent_b, &config.variation, &mut sub_rng);
                let obj = evaluate(&child, d, nm, t_max)?;
                child.set_objectives(obj);
                Ok((i, child, obj))
            })
            .collect();
        let mut evaluated = evaluated?;
        evaluated.sort_unstable_by_key(|(i, _, _)| *i);
        offspring_evaluations += p;

        // Phase 3 (serial, in subproblem order): ideal point, neighborhood
        // replacement capped at n_r, archive.
        for (i, child, obj) in &evaluated {
            ideal[0] = ideal[0].min(obj.f_trees);
            ideal[1] = ideal[1].min(obj.f_cost);
            let mut replaced = 0usize;
            for &j in &neighborhoods[*i] {
                if replaced >= config.replacement_cap {
                    break;
                }
                let incumbent = objectives[j];
                let child_score = tchebycheff(obj.values(), weights[j], ideal);
                let incumbent_score = tchebycheff(incumbent.values(), weights[j], ideal);
                if child_score < incumbent_score {
                    population[j] = child.clone();
                    population[j].set_objectives(*obj);
                    objectives[j] = *obj;
                    replaced += 1;
                }
            }
            archive.offer(child, *obj, g, config.seed);
        }

        if config.snapshot_every > 0 && g % config.snapshot_every == 0 {
            snapshots.push(snapshot(&archive, g));
        }
    }

    if snapshots.last().map(|s| s.generation) != Some(config.generations) {
        snapshots.push(snapshot(&archive, config.generations));
    }

    Ok(RunResult {
        archive,
        final_population: population,
        snapshots,
        ideal,
        offspring_evaluations,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}
